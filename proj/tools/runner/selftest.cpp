#include "runner/selftest.hpp"

#include <chrono>
#include <cmath>
#include <complex>
#include <fmt/format.h>
#include <functional>
#include <optional>
#include <ostream>

#include "nanoguide/dynamics.hpp"
#include "nanoguide/linear_scattering.hpp"
#include "nanoguide/photostream.hpp"
#include "nanoguide/pump_probe.hpp"

namespace nanoguide::runner {

namespace {

struct Outcome {
  bool passed;
  std::string detail;
};

Emitter lifetime_emitter(double lifetime_ns, double scale) {
  Emitter e;
  e.gamma0_mhz = lifetime_to_linewidth(lifetime_ns) * scale;
  return e;
}

Outcome analytic_g2(double c) {
  const double gamma = units::us_to_ns(1.0) / 5.0;
  LiouvilleProblem p;
  p.gamma = gamma * (1.0 + c);
  p.drives.push_back({0.9 * gamma, 0.0});
  std::vector<double> taus(201);
  for (std::size_t i = 0; i < taus.size(); ++i) taus[i] = units::ns_to_us(0.5 * static_cast<double>(i));
  const auto g = g2(p, taus);
  double worst = 0.0;
  for (std::size_t i = 0; i < taus.size(); ++i) {
    worst = std::max(worst, std::abs(g[i] - resonant_g2(0.9 * gamma, gamma, taus[i]).value));
  }
  return {worst <= 1e-6 && std::abs(g[0]) <= 1e-12, fmt::format("max |dg2| = {:.2e}", worst)};
}

Outcome linear_limit(double c) {
  Emitter e;
  e.beta = 0.074;
  e.alpha = 0.5;
  Emitter lib = e;
  lib.gamma0_mhz *= 1.0 + c;
  const DressedEmitter d(lib, {RabiFrequency::in_gamma0(1e-3), 0.0});
  double worst = 0.0;
  for (int i = -200; i <= 200; ++i) {
    const double delta = 0.05 * i * e.gamma0_mhz;
    worst = std::max(worst, std::abs(d.probe_transmission(delta) - transmission_amplitude(e, delta)));
  }
  return {worst <= 1e-6, fmt::format("max |dt| = {:.2e}", worst)};
}

Outcome two_tone(double c) {
  struct Tuple {
    double rabi, detuning, delta;
  };
  const Tuple tuples[] = {{1.4, 0.0, 21.0}, {0.6, 15.0, -40.0}, {2.6, -10.0, 75.0}};
  double worst = 0.0;
  for (const auto& t : tuples) {
    Emitter e;
    e.beta = 0.074;
    e.alpha = 0.5;
    Emitter lib = e;
    lib.gamma0_mhz *= 1.0 + c;
    const DriveField pump{RabiFrequency::in_mhz(t.rabi * e.gamma0_mhz), t.detuning};
    const auto a = DressedEmitter(lib, pump).probe_transmission(t.delta);
    const auto b = two_tone_probe_transmission(e, pump, t.delta);
    worst = std::max(worst, std::abs(a - b));
  }
  return {worst <= 1e-4, fmt::format("max |dt| = {:.2e} over 3 tuples", worst)};
}

Outcome expm_vs_rk4(double c) {
  const LiouvilleProblem p = LiouvilleProblem::driven(lifetime_emitter(5.0, 1.0), {RabiFrequency::in_gamma0(2.0), 10.0});
  LiouvilleProblem q = p;
  q.gamma *= 1.0 + c;
  std::vector<double> times(50);
  for (std::size_t i = 0; i < times.size(); ++i) times[i] = 0.002 * static_cast<double>(i);
  const auto exact = evolve(build_liouvillian(p), DensityMatrix::ground(), times);
  const auto rk4 = evolve(build_liouvillian(q), DensityMatrix::ground(), times, {Integrator::rk4});
  double worst = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) worst = std::max(worst, (exact[i].matrix() - rk4[i].matrix()).norm());
  return {worst <= 1e-8, fmt::format("max |drho| = {:.2e}", worst)};
}

Outcome montecarlo(double c, std::size_t emissions, unsigned threads) {
  Emitter e = lifetime_emitter(5.0, 1.0 + c);
  e.beta = 1.0;
  e.alpha = 0.5;
  e.fwd_fraction = 0.57;
  const DriveField drive{RabiFrequency::in_gamma0(0.9), 0.0};
  const LiouvilleProblem lib = LiouvilleProblem::driven(e, drive);
  const LiouvilleProblem ref = LiouvilleProblem::driven(lifetime_emitter(5.0, 1.0), drive);

  const double rate_per_ns = units::ns_to_us(lib.gamma) * steady_state(build_liouvillian(lib)).excited_population();
  constexpr std::size_t kTrajectories = 8;
  const double duration = static_cast<double>(emissions) / rate_per_ns / kTrajectories;
  const auto streams = simulate_trajectories(lib, e, duration, kTrajectories, 20240611, threads);
  std::optional<CoincidenceHistogram> hist;
  double right = 0.0;
  double left = 0.0;
  for (const auto& s : streams) {
    for (const auto& r : s) {
      right += r.port == Port::right;
      left += r.port == Port::left;
    }
    auto h = cross_correlate(select_times(s, Port::left), select_times(s, Port::right), 1.0, 100.0, duration);
    if (hist) {
      *hist += h;
    } else {
      hist = std::move(h);
    }
  }
  const auto g = hist->normalized();
  const auto sigma = hist->normalized_sigma();
  std::size_t ok = 0;
  for (std::size_t i = 0; i < hist->bins(); ++i) {
    double model = 0.0;
    for (int s = 0; s < 8; ++s) {
      const double tau = std::abs(hist->edges_ns[i] + (s + 0.5) / 8.0);
      const double us = units::ns_to_us(tau);
      model += g2(ref, std::span<const double>(&us, 1))[0] / 8.0;
    }
    if (std::abs(g[i] - model) <= 3.0 * sigma[i]) ++ok;
  }
  const double frac = static_cast<double>(ok) / static_cast<double>(hist->bins());
  const double n = right + left;
  const double z = std::abs(right / n - 0.57) / std::sqrt(0.57 * 0.43 / n);
  return {frac >= 0.95 && z <= 3.0,
          fmt::format("{:.1f}% of bins within 3 sigma, right fraction {:.4f} (z = {:.2f})", 100.0 * frac,
                      right / n, z)};
}

}  // namespace

std::vector<SuiteResult> run_selftest(const SelftestOptions& opts) {
  const double c = opts.corruption;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> suites = {
      {"analytic_g2", [c] { return analytic_g2(c); }},
      {"linear_limit", [c] { return linear_limit(c); }},
      {"two_tone_vs_resolvent", [c] { return two_tone(c); }},
      {"expm_vs_rk4", [c] { return expm_vs_rk4(c); }},
      {"montecarlo_vs_master_equation",
       [c, &opts] { return montecarlo(c, opts.montecarlo_emissions, opts.threads); }},
  };
  std::vector<SuiteResult> out;
  for (const auto& [name, fn] : suites) {
    const auto t0 = std::chrono::steady_clock::now();
    SuiteResult r;
    r.name = name;
    try {
      const Outcome o = fn();
      r.passed = o.passed;
      r.detail = o.detail;
    } catch (const std::exception& e) {
      r.passed = false;
      r.detail = std::string("threw: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.push_back(std::move(r));
  }
  return out;
}

int report_selftest(const std::vector<SuiteResult>& results, std::ostream& os) {
  bool all = true;
  for (const auto& r : results) {
    os << fmt::format("{} {} ({}, {:.2f} s)\n", r.passed ? "PASS" : "FAIL", r.name, r.detail, r.seconds);
    all = all && r.passed;
  }
  return all ? 0 : 1;
}

}  // namespace nanoguide::runner
