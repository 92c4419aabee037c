#include "nanoguide/dynamics.hpp"

#include <algorithm>
#include <cmath>

#include <unsupported/Eigen/MatrixFunctions>

namespace nanoguide {

using cd = std::complex<double>;

namespace {

constexpr cd kI{0.0, 1.0};

Eigen::Matrix2cd lowering() {
  Eigen::Matrix2cd s = Eigen::Matrix2cd::Zero();
  s(0, 1) = 1.0;
  return s;
}

Eigen::Matrix2cd excited_projector() {
  Eigen::Matrix2cd p = Eigen::Matrix2cd::Zero();
  p(1, 1) = 1.0;
  return p;
}

Superoperator kron(const Eigen::Matrix2cd& a, const Eigen::Matrix2cd& b) {
  Superoperator out;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) out.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
  return out;
}

Superoperator dissipator(const Eigen::Matrix2cd& c) {
  const Eigen::Matrix2cd id = Eigen::Matrix2cd::Identity();
  const Eigen::Matrix2cd cdc = c.adjoint() * c;
  return kron(c.conjugate(), c) - 0.5 * kron(id, cdc) - 0.5 * kron(cdc.transpose(), id);
}

double inf_norm(const Superoperator& l) { return l.cwiseAbs().rowwise().sum().maxCoeff(); }

// RK4 applied to a linear system is the degree-4 Taylor polynomial of exp(hL).
Superoperator rk4_propagator(const Superoperator& l, double h) {
  const Superoperator a = h * l;
  const Superoperator a2 = a * a;
  return Superoperator::Identity() + a + a2 / 2.0 + a2 * a / 6.0 + a2 * a2 / 24.0;
}

}  // namespace

DensityMatrix DensityMatrix::excited() {
  Eigen::Matrix2cd m = Eigen::Matrix2cd::Zero();
  m(1, 1) = 1.0;
  return DensityMatrix(m);
}

DensityMatrix DensityMatrix::from_vec(const VecState& v) {
  Eigen::Matrix2cd m;
  m(0, 0) = v(0);
  m(1, 0) = v(1);
  m(0, 1) = v(2);
  m(1, 1) = v(3);
  return DensityMatrix(m);
}

VecState DensityMatrix::vec() const {
  VecState v;
  v << m_(0, 0), m_(1, 0), m_(0, 1), m_(1, 1);
  return v;
}

double DensityMatrix::hermiticity_error() const {
  return (m_ - m_.adjoint()).cwiseAbs().maxCoeff();
}

double DensityMatrix::min_eigenvalue() const {
  const Eigen::Matrix2cd h = 0.5 * (m_ + m_.adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

LiouvilleProblem LiouvilleProblem::driven(const Emitter& e, const DriveField& pump,
                                          double gamma_phi_mhz) {
  validate(e);
  LiouvilleProblem p;
  p.gamma = e.decay_rate();
  p.gamma_phi = units::angular(gamma_phi_mhz);
  p.drives.push_back({pump.rabi.to_angular(e.gamma0_mhz), units::angular(pump.detuning_mhz)});
  p.check();
  return p;
}

void LiouvilleProblem::check() const {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw ValidationError("gamma must be >= 0");
  if (!(gamma_phi >= 0.0) || !std::isfinite(gamma_phi)) {
    throw ValidationError("gamma_phi must be >= 0");
  }
  if (drives.empty() || drives.size() > 2) throw ValidationError("expected one or two drives");
  for (const auto& d : drives) {
    if (!(d.rabi >= 0.0) || !std::isfinite(d.rabi) || !std::isfinite(d.detuning)) {
      throw ValidationError("drive Rabi frequency must be >= 0 and finite");
    }
  }
}

Superoperator commutator_superoperator(const Eigen::Matrix2cd& h) {
  const Eigen::Matrix2cd id = Eigen::Matrix2cd::Identity();
  return -kI * (kron(id, h) - kron(h.transpose(), id));
}

Superoperator build_liouvillian(const LiouvilleProblem& p) {
  p.check();
  if (p.drives.size() != 1) {
    throw ValidationError("build_liouvillian takes a single drive; use pump_probe for two tones");
  }
  const Drive& d = p.drives.front();
  const Eigen::Matrix2cd s = lowering();
  const Eigen::Matrix2cd h = -d.detuning * excited_projector() + 0.5 * d.rabi * (s + s.adjoint());

  Superoperator l = commutator_superoperator(h);
  l += p.gamma * dissipator(s);
  // Collapse operator sqrt(2 gamma_phi) |e><e| damps rho_eg at gamma_phi.
  l += 2.0 * p.gamma_phi * dissipator(excited_projector());
  return l;
}

DensityMatrix steady_state(const Superoperator& l) {
  const double scale = std::max(inf_norm(l), 1e-300);
  Superoperator m = l / scale;
  m.row(0) << 1.0, 0.0, 0.0, 1.0;
  VecState rhs = VecState::Zero();
  rhs(0) = 1.0;

  Eigen::FullPivLU<Superoperator> lu(m);
  lu.setThreshold(1e-12);
  if (lu.rank() < 4) throw NumericalError("steady state is not unique (degenerate generator)");
  const VecState v = lu.solve(rhs);

  const double residual = (l * v).norm();
  if (!(residual <= 1e-10 * std::max(1.0, scale))) {
    throw NumericalError("steady-state residual too large");
  }
  Eigen::Matrix2cd rho = DensityMatrix::from_vec(v).matrix();
  return DensityMatrix(0.5 * (rho + rho.adjoint()));
}

std::vector<DensityMatrix> evolve(const Superoperator& l, const DensityMatrix& rho0,
                                  std::span<const double> times, const EvolveOptions& opts) {
  if (!std::is_sorted(times.begin(), times.end())) throw ValidationError("times must be sorted");
  if (!times.empty() && !(times.front() >= 0.0)) throw ValidationError("times must be >= 0");

  std::vector<DensityMatrix> out;
  out.reserve(times.size());
  VecState v = rho0.vec();

  if (opts.method == Integrator::exact) {
    double t_prev = 0.0;
    for (double t : times) {
      const double dt = t - t_prev;
      if (dt > 0.0) v = (l * dt).exp() * v;
      out.push_back(DensityMatrix::from_vec(v));
      t_prev = t;
    }
    return out;
  }

  const double norm = inf_norm(l);
  const double h_max = opts.max_step > 0.0 ? opts.max_step : (norm > 0.0 ? 1e-3 / norm : 1.0);
  const Superoperator full = rk4_propagator(l, h_max);
  double t_prev = 0.0;
  for (double t : times) {
    const double dt = t - t_prev;
    if (dt > 0.0) {
      const auto n_full = static_cast<long long>(std::floor(dt / h_max));
      for (long long k = 0; k < n_full; ++k) v = full * v;
      const double rest = dt - static_cast<double>(n_full) * h_max;
      if (rest > 0.0) v = rk4_propagator(l, rest) * v;
    }
    out.push_back(DensityMatrix::from_vec(v));
    t_prev = t;
  }
  return out;
}

std::vector<double> g2(const LiouvilleProblem& p, std::span<const double> taus,
                       const EvolveOptions& opts) {
  p.check();
  if (!(p.gamma > 0.0)) throw ValidationError("g2 needs gamma > 0");
  const Superoperator l = build_liouvillian(p);
  const double pe_ss = steady_state(l).excited_population();
  if (!(pe_ss > 0.0)) throw ValidationError("g2 is undefined without excitation");

  const auto traj = evolve(l, DensityMatrix::ground(), taus, opts);
  std::vector<double> out(traj.size());
  std::transform(traj.begin(), traj.end(), out.begin(),
                 [pe_ss](const DensityMatrix& r) { return r.excited_population() / pe_ss; });
  return out;
}

double saturated_excited_population(double rabi, double detuning, double gamma) {
  const double s = rabi * rabi;
  return 0.25 * s / (detuning * detuning + 0.25 * gamma * gamma + 0.5 * s);
}

G2Point resonant_g2(double rabi, double gamma, double tau) {
  // g2 = 1 - D (C + a S) with D = exp(-a tau), a = 3 gamma / 4, z = rabi^2 - gamma^2/16,
  // C = cos(sqrt(z) tau) and S = sin(sqrt(z) tau)/sqrt(z). C and S are entire in z;
  // we carry the damped products DC, DS and D dS/dz directly so that the
  // overdamped branch never forms exp(+q tau) on its own.
  const double a = 0.75 * gamma;
  const double z = rabi * rabi - gamma * gamma / 16.0;
  const double w = z * tau * tau;
  const double damp = std::exp(-a * tau);

  double dc = 0.0;   // D * C
  double ds = 0.0;   // D * S
  double dsz = 0.0;  // D * dS/dz
  if (std::abs(w) < 1e-2) {
    const double c = 1.0 - w / 2.0 + w * w / 24.0 - w * w * w / 720.0 + w * w * w * w / 40320.0;
    const double s =
        tau * (1.0 - w / 6.0 + w * w / 120.0 - w * w * w / 5040.0 + w * w * w * w / 362880.0);
    const double sz = tau * tau * tau *
                      (-1.0 / 6.0 + w / 60.0 - w * w / 1680.0 + w * w * w / 90720.0);
    dc = damp * c;
    ds = damp * s;
    dsz = damp * sz;
  } else {
    if (z > 0.0) {
      const double mu = std::sqrt(z);
      dc = damp * std::cos(mu * tau);
      ds = damp * std::sin(mu * tau) / mu;
    } else {
      const double q = std::sqrt(-z);
      const double grow = std::exp((q - a) * tau);
      const double decay = std::exp(-(q + a) * tau);
      dc = 0.5 * (grow + decay);
      ds = 0.5 * (grow - decay) / q;
    }
    dsz = (tau * dc - ds) / (2.0 * z);
  }
  const double dcz = -0.5 * tau * ds;

  G2Point out;
  out.value = 1.0 - (dc + a * ds);
  const double d_dz = -(dcz + a * dsz);
  const double d_da = tau * (dc + a * ds) - ds;
  out.d_rabi = d_dz * 2.0 * rabi;
  out.d_gamma = 0.75 * d_da + d_dz * (-gamma / 8.0);
  return out;
}

}  // namespace nanoguide
