#include <doctest.h>

#include <array>
#include <cmath>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "generators.hpp"
#include "nanoguide/dynamics.hpp"

using namespace nanoguide;

namespace {

constexpr double kGamma = units::kTwoPi * 30.0;  // rad/us for 30 MHz

LiouvilleProblem problem(double rabi, double detuning, double gamma = kGamma,
                         double gamma_phi = 0.0) {
  LiouvilleProblem p;
  p.gamma = gamma;
  p.gamma_phi = gamma_phi;
  p.drives.push_back({rabi, detuning});
  return p;
}

// Optical Bloch equations in real variables (rho_ee, Re rho_eg, Im rho_eg),
// integrated with an adaptive Dormand-Prince stepper.
struct Bloch {
  double rabi, detuning, gamma, gamma_phi;
  void operator()(const std::array<double, 3>& x, std::array<double, 3>& dx, double) const {
    const double pe = x[0];
    const double re = x[1];
    const double im = x[2];
    const double g2 = 0.5 * gamma + gamma_phi;
    dx[0] = -rabi * im - gamma * pe;
    // d rho_eg/dt = i D rho_eg - i (W/2)(1 - 2 pe) - g2 rho_eg
    dx[1] = -detuning * im - g2 * re;
    dx[2] = detuning * re - 0.5 * rabi * (1.0 - 2.0 * pe) - g2 * im;
  }
};

std::array<double, 3> integrate_bloch(const Bloch& sys, double t_end) {
  using namespace boost::numeric::odeint;
  std::array<double, 3> x{0.0, 0.0, 0.0};
  integrate_adaptive(make_controlled<runge_kutta_dopri5<std::array<double, 3>>>(1e-13, 1e-13), sys,
                     x, 0.0, t_end, t_end * 1e-5);
  return x;
}

// Scaling-and-squaring Taylor exponential, independent of the library routine.
Superoperator taylor_expm(const Superoperator& a) {
  const double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
  int squarings = 0;
  double scaled = norm;
  while (scaled > 0.1) {
    scaled /= 2.0;
    ++squarings;
  }
  const Superoperator b = a / std::pow(2.0, squarings);
  Superoperator term = Superoperator::Identity();
  Superoperator sum = Superoperator::Identity();
  for (int k = 1; k <= 20; ++k) {
    term = term * b / static_cast<double>(k);
    sum += term;
  }
  for (int s = 0; s < squarings; ++s) sum = sum * sum;
  return sum;
}

double analytic_g2(double rabi, double gamma, double tau) {
  const double mu = std::sqrt(rabi * rabi - gamma * gamma / 16.0);
  return 1.0 - std::exp(-0.75 * gamma * tau) *
                   (std::cos(mu * tau) + 0.75 * gamma / mu * std::sin(mu * tau));
}

}  // namespace

TEST_CASE("free decay is exponential") {
  const auto l = build_liouvillian(problem(0.0, 0.0));
  std::vector<double> times;
  for (int i = 0; i <= 40; ++i) times.push_back(i * 0.01);
  for (auto method : {Integrator::exact, Integrator::rk4}) {
    const auto traj = evolve(l, DensityMatrix::excited(), times, {method, 0.0});
    for (std::size_t i = 0; i < times.size(); ++i) {
      CHECK(traj[i].excited_population() ==
            doctest::Approx(std::exp(-kGamma * times[i])).epsilon(1e-10));
    }
  }
}

TEST_CASE("undriven steady state is the ground state") {
  const auto rho = steady_state(build_liouvillian(problem(0.0, 12.0)));
  CHECK(rho.ground_population() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::abs(rho.coherence_eg()) < 1e-14);
}

TEST_CASE("strong resonant drive saturates at one half") {
  const auto rho = steady_state(build_liouvillian(problem(1e4 * kGamma, 0.0)));
  CHECK(rho.excited_population() == doctest::Approx(0.5).epsilon(1e-7));
}

TEST_CASE("steady state matches the saturation formula and a long-time ODE run") {
  const double rabi = kGamma;
  const auto rho = steady_state(build_liouvillian(problem(rabi, 0.0)));
  const double formula = saturated_excited_population(rabi, 0.0, kGamma);
  CHECK(formula == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(std::abs(rho.excited_population() - formula) < 1e-12);
  const auto x = integrate_bloch({rabi, 0.0, kGamma, 0.0}, 60.0 / kGamma);
  CHECK(std::abs(x[0] - formula) < 1e-8);
  CHECK(std::abs(x[2] - rho.coherence_eg().imag()) < 1e-8);
}

TEST_CASE("detuned, dephased steady states match the ODE oracle") {
  testing::Gen gen(31);
  for (int trial = 0; trial < 15; ++trial) {
    const double rabi = gen.uniform(0.0, 3.0) * kGamma;
    const double det = gen.uniform(-3.0, 3.0) * kGamma;
    const double gphi = gen.coin() ? 0.0 : gen.uniform(0.0, 1.0) * kGamma;
    const auto rho = steady_state(build_liouvillian(problem(rabi, det, kGamma, gphi)));
    const auto x = integrate_bloch({rabi, det, kGamma, gphi}, 60.0 / kGamma);
    CHECK(std::abs(x[0] - rho.excited_population()) < 1e-8);
    CHECK(std::abs(x[1] - rho.coherence_eg().real()) < 1e-8);
    CHECK(std::abs(x[2] - rho.coherence_eg().imag()) < 1e-8);
    if (gphi == 0.0) {
      CHECK(std::abs(rho.excited_population() - saturated_excited_population(rabi, det, kGamma)) <
            1e-12);
    }
  }
}

TEST_CASE("steady state equals long-time evolution") {
  testing::Gen gen(32);
  for (int trial = 0; trial < 30; ++trial) {
    const double rabi = gen.uniform(0.0, 4.0) * kGamma;
    const double det = gen.uniform(-4.0, 4.0) * kGamma;
    const auto l = build_liouvillian(problem(rabi, det));
    const auto ss = steady_state(l);
    const std::vector<double> t{50.0 / kGamma};
    const auto late = evolve(l, DensityMatrix::ground(), t).back();
    CHECK((late.matrix() - ss.matrix()).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((l * ss.vec()).norm() <= 1e-10 * std::max(1.0, l.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("exact propagation matches an independent Taylor exponential") {
  testing::Gen gen(33);
  for (int trial = 0; trial < 20; ++trial) {
    const auto l = build_liouvillian(problem(gen.uniform(0.0, 3.0) * kGamma,
                                             gen.uniform(-3.0, 3.0) * kGamma, kGamma,
                                             gen.uniform(0.0, 0.5) * kGamma));
    const double t = gen.uniform(0.0, 10.0) / kGamma;
    const std::vector<double> times{t};
    const VecState v = evolve(l, DensityMatrix::ground(), times).back().vec();
    const VecState w = taylor_expm(l * t) * DensityMatrix::ground().vec();
    CHECK((v - w).norm() < 1e-12);
  }
}

TEST_CASE("RK4 and exact propagation agree to 1e-8") {
  testing::Gen gen(34);
  for (int trial = 0; trial < 8; ++trial) {
    const auto l = build_liouvillian(
        problem(gen.uniform(0.0, 3.0) * kGamma, gen.uniform(-3.0, 3.0) * kGamma));
    std::vector<double> times;
    for (int i = 0; i <= 20; ++i) times.push_back(i * 0.5 / kGamma);
    const auto a = evolve(l, DensityMatrix::ground(), times, {Integrator::exact, 0.0});
    const auto b = evolve(l, DensityMatrix::ground(), times, {Integrator::rk4, 0.0});
    for (std::size_t i = 0; i < times.size(); ++i) {
      CHECK((a[i].matrix() - b[i].matrix()).cwiseAbs().maxCoeff() < 1e-8);
    }
  }
}

TEST_CASE("closed system Rabi oscillation has period 2 pi / rabi") {
  const double rabi = 2.0;
  const auto l = build_liouvillian(problem(rabi, 0.0, 0.0));
  std::vector<double> times;
  for (int i = 0; i <= 64; ++i) times.push_back(i * (2.0 * std::numbers::pi / rabi) / 16.0);
  const auto traj = evolve(l, DensityMatrix::ground(), times);
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double s = std::sin(0.5 * rabi * times[i]);
    CHECK(std::abs(traj[i].excited_population() - s * s) < 1e-12);
  }
  CHECK(std::abs(traj[16].excited_population()) < 1e-12);
  CHECK(std::abs(traj[8].excited_population() - 1.0) < 1e-12);
}

TEST_CASE("trajectories stay trace-one, Hermitian and positive") {
  testing::Gen gen(35);
  for (int trial = 0; trial < 20; ++trial) {
    const auto l = build_liouvillian(problem(gen.uniform(0.0, 5.0) * kGamma,
                                             gen.uniform(-5.0, 5.0) * kGamma, kGamma,
                                             gen.uniform(0.0, 1.0) * kGamma));
    std::vector<double> times;
    for (int i = 0; i <= 50; ++i) times.push_back(i * 0.3 / kGamma);
    const auto rho0 = gen.coin() ? DensityMatrix::ground() : DensityMatrix::excited();
    for (auto method : {Integrator::exact, Integrator::rk4}) {
      for (const auto& rho : evolve(l, rho0, times, {method, 0.0})) {
        CHECK(std::abs(rho.trace() - 1.0) <= 1e-10);
        CHECK(rho.hermiticity_error() <= 1e-10);
        CHECK(rho.min_eigenvalue() >= -1e-10);
      }
    }
  }
}

TEST_CASE("g2 antibunches and factorizes at long delay") {
  testing::Gen gen(36);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = problem(gen.uniform(0.05, 4.0) * kGamma, gen.uniform(-3.0, 3.0) * kGamma);
    const std::vector<double> taus{0.0, 60.0 / kGamma};
    const auto g = g2(p, taus);
    CHECK(g[0] == 0.0);
    CHECK(std::abs(g[1] - 1.0) < 1e-6);
  }
}

TEST_CASE("g2 from quantum regression matches the resonant closed form") {
  const double rabi = 0.9 * kGamma;
  std::vector<double> taus;
  for (int i = 0; i <= 400; ++i) taus.push_back(i * 20.0 / kGamma / 400.0);
  const auto g = g2(problem(rabi, 0.0), taus);
  double gmax = 0.0;
  for (std::size_t i = 0; i < taus.size(); ++i) {
    CHECK(std::abs(g[i] - analytic_g2(rabi, kGamma, taus[i])) < 1e-6);
    CHECK(g[i] >= 0.0);
    gmax = std::max(gmax, g[i]);
  }
  CHECK(gmax > 1.0);
}

TEST_CASE("g2 is non-negative for random drives") {
  testing::Gen gen(37);
  std::vector<double> taus;
  for (int i = 0; i <= 100; ++i) taus.push_back(i * 0.1 / kGamma);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = problem(gen.uniform(0.01, 5.0) * kGamma, gen.uniform(-4.0, 4.0) * kGamma, kGamma,
                           gen.uniform(0.0, 1.0) * kGamma);
    for (double v : g2(p, taus)) CHECK(v >= -1e-12);
  }
}

TEST_CASE("resonant_g2 matches the closed form on both sides of critical damping") {
  testing::Gen gen(38);
  for (int trial = 0; trial < 200; ++trial) {
    const double gamma = gen.uniform(0.5, 3.0);
    const double rabi = gen.uniform(0.0, 4.0) * gamma;
    const double tau = gen.uniform(0.0, 20.0) / gamma;
    const double v = resonant_g2(rabi, gamma, tau).value;
    if (rabi > 0.3 * gamma) {
      CHECK(std::abs(v - analytic_g2(rabi, gamma, tau)) < 1e-12);
    }
    if (rabi < 0.2 * gamma) {
      const double q = std::sqrt(gamma * gamma / 16.0 - rabi * rabi);
      const double ref =
          1.0 - std::exp(-0.75 * gamma * tau) *
                    (std::cosh(q * tau) + 0.75 * gamma / q * std::sinh(q * tau));
      CHECK(std::abs(v - ref) < 1e-10);
    }
  }
  // Critical damping z = 0 and its neighbourhood stay continuous.
  const double gamma = 1.0;
  const double tau = 3.0;
  const double crit = resonant_g2(0.25, gamma, tau).value;
  CHECK(std::abs(resonant_g2(0.25 + 1e-9, gamma, tau).value - crit) < 1e-8);
  CHECK(std::abs(resonant_g2(0.25 - 1e-9, gamma, tau).value - crit) < 1e-8);
  CHECK(crit == doctest::Approx(1.0 - std::exp(-0.75 * tau) * (1.0 + 0.75 * tau)).epsilon(1e-12));
}

TEST_CASE("resonant_g2 zero-drive limit is an exponential recovery") {
  for (double tau : {0.0, 0.3, 1.0, 4.0, 12.0}) {
    const double e = 1.0 - std::exp(-0.5 * tau);
    CHECK(resonant_g2(0.0, 1.0, tau).value == doctest::Approx(e * e).epsilon(1e-12));
  }
}

TEST_CASE("resonant_g2 gradient matches finite differences") {
  testing::Gen gen(39);
  for (int trial = 0; trial < 200; ++trial) {
    const double gamma = gen.uniform(0.5, 3.0);
    const double rabi = gen.uniform(0.01, 3.0) * gamma;
    const double tau = gen.uniform(0.0, 15.0) / gamma;
    const auto p = resonant_g2(rabi, gamma, tau);
    const double h = 1e-6;
    const double dr = (resonant_g2(rabi + h, gamma, tau).value -
                       resonant_g2(rabi - h, gamma, tau).value) / (2.0 * h);
    const double dg = (resonant_g2(rabi, gamma + h, tau).value -
                       resonant_g2(rabi, gamma - h, tau).value) / (2.0 * h);
    CHECK(std::abs(p.d_rabi - dr) <= 1e-4 * std::max(1.0, std::abs(dr)));
    CHECK(std::abs(p.d_gamma - dg) <= 1e-4 * std::max(1.0, std::abs(dg)));
  }
}

TEST_CASE("dynamics input validation") {
  LiouvilleProblem two = problem(1.0, 0.0);
  two.drives.push_back({0.1, 2.0});
  CHECK_THROWS_AS(build_liouvillian(two), ValidationError);
  const std::vector<double> taus{0.0, 1.0};
  CHECK_THROWS_AS(g2(problem(1.0, 0.0, 0.0), taus), ValidationError);
  CHECK_THROWS_AS(g2(problem(0.0, 0.0), taus), ValidationError);
  CHECK_THROWS_AS(steady_state(build_liouvillian(problem(1.0, 0.0, 0.0))), NumericalError);
  CHECK_THROWS_AS(steady_state(build_liouvillian(problem(0.0, 0.0, 0.0))), NumericalError);
  const std::vector<double> unsorted{0.2, 0.1};
  CHECK_THROWS_AS(evolve(build_liouvillian(problem(1.0, 0.0)), DensityMatrix::ground(), unsorted),
                  ValidationError);
  LiouvilleProblem bad = problem(-1.0, 0.0);
  CHECK_THROWS_AS(bad.check(), ValidationError);
  bad = problem(1.0, 0.0, kGamma, -0.1);
  CHECK_THROWS_AS(bad.check(), ValidationError);
}

TEST_CASE("driven problem resolves Rabi units against gamma0") {
  Emitter e;
  e.gamma0_mhz = 30.0;
  const auto p = LiouvilleProblem::driven(e, {RabiFrequency::in_gamma0(0.9), 15.0});
  CHECK(p.gamma == doctest::Approx(kGamma));
  CHECK(p.drives[0].rabi == doctest::Approx(0.9 * kGamma));
  CHECK(p.drives[0].detuning == doctest::Approx(units::angular(15.0)));
}
