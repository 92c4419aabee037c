#include "nanoguide/pump_probe.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/tools/minima.hpp>

#include "nanoguide/parallel.hpp"

namespace nanoguide {

using cd = std::complex<double>;

namespace {

constexpr cd kI{0.0, 1.0};

Eigen::Matrix2cd lowering() {
  Eigen::Matrix2cd s = Eigen::Matrix2cd::Zero();
  s(0, 1) = 1.0;
  return s;
}

// Trace functional of a column-major vectorized 2x2 matrix.
Eigen::Matrix<cd, 1, 4> trace_row() {
  Eigen::Matrix<cd, 1, 4> t;
  t << 1.0, 0.0, 0.0, 1.0;
  return t;
}

}  // namespace

DressedEmitter::DressedEmitter(const Emitter& e, const DriveField& pump, double gamma_phi_mhz)
    : emitter_(e), pump_(pump) {
  const LiouvilleProblem p = LiouvilleProblem::driven(e, pump, gamma_phi_mhz);
  l_ = build_liouvillian(p);
  rho_ss_ = steady_state(l_);

  // First-order probe source: the e^{-i delta t} part of -i[V(t), rho_ss] with
  // V = (Omega_p/2)(sigma e^{i delta t} + sigma^dag e^{-i delta t}), per unit Omega_p.
  const Eigen::Matrix2cd sd = lowering().adjoint();
  const Eigen::Matrix2cd& rho = rho_ss_.matrix();
  const Eigen::Matrix2cd src = 0.5 * kI * (sd * rho - rho * sd);
  source_ = DensityMatrix(src).vec();

  // L has a zero eigenvalue; the rank-one border gamma * rho_ss * tr(.) lifts it
  // to gamma without touching the traceless subspace in which the response
  // lives. This keeps the solve regular at delta_pp = 0.
  bordered_ = l_ + p.gamma * rho_ss_.vec() * trace_row();
}

cd DressedEmitter::probe_coherence(double delta_pp_mhz) const {
  const Superoperator m =
      bordered_ + kI * units::angular(delta_pp_mhz) * Superoperator::Identity();
  Eigen::PartialPivLU<Superoperator> lu(m);
  const VecState x = lu.solve(source_);
  if (!x.allFinite()) throw NumericalError("probe resolvent is singular");
  return x(1);
}

cd DressedEmitter::probe_transmission(double delta_pp_mhz) const {
  return 1.0 - kI * emitter_.coherent_coupling() * emitter_.decay_rate() *
                   probe_coherence(delta_pp_mhz);
}

bool probe_is_weak(const PumpProbeScan& scan) {
  return scan.probe_rabi.to_mhz(scan.emitter.gamma0_mhz) <= 0.2 * scan.emitter.gamma0_mhz;
}

cd probe_response(const PumpProbeScan& scan, double delta_pp_mhz) {
  return DressedEmitter(scan.emitter, scan.pump, scan.gamma_phi_mhz)
      .probe_transmission(delta_pp_mhz);
}

std::vector<cd> probe_response(const PumpProbeScan& scan) {
  const DressedEmitter dressed(scan.emitter, scan.pump, scan.gamma_phi_mhz);
  std::vector<cd> out(scan.pp_grid.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = dressed.probe_transmission(scan.pp_grid[i]);
  return out;
}

cd pump_scatter_field(const PumpProbeScan& scan) {
  const double u = 2.0 * scan.pump.detuning_mhz / scan.emitter.gamma0_mhz;
  return scan.pump_scatter_amp / cd(1.0, -u);
}

double raw_detected(const PumpProbeScan& scan, double delta_pp_mhz) {
  return std::norm(probe_response(scan, delta_pp_mhz) + pump_scatter_field(scan));
}

double calibrate_pump_scatter(const PumpProbeScan& scan, double plateau) {
  const double far = std::abs(scan.pp_grid.start()) > std::abs(scan.pp_grid.stop())
                         ? scan.pp_grid.start()
                         : scan.pp_grid.stop();
  const cd t = probe_response(scan, far);
  PumpProbeScan unit = scan;
  unit.pump_scatter_amp = 1.0;
  const cd w = pump_scatter_field(unit);
  // |t + s w|^2 = plateau for real s >= 0.
  const double a = std::norm(w);
  const double b = (t * std::conj(w)).real();
  const double disc = b * b - a * (std::norm(t) - plateau);
  if (disc < 0.0) throw ValidationError("plateau is not reachable with a real scatter amplitude");
  const double s = (-b + std::sqrt(disc)) / a;
  if (s < 0.0) throw ValidationError("plateau needs a negative scatter amplitude");
  return s;
}

std::complex<double> two_tone_probe_transmission(const Emitter& e, const DriveField& pump,
                                                 double delta_pp_mhz, const TwoToneOptions& opts) {
  if (delta_pp_mhz == 0.0) {
    throw ValidationError("two-tone extraction needs a nonzero pump-probe detuning");
  }
  const LiouvilleProblem p = LiouvilleProblem::driven(e, pump);
  const Superoperator l0 = build_liouvillian(p);
  const double gamma = p.gamma;
  const double probe_rabi = opts.probe_rabi_gamma0 * gamma;
  const double delta = units::angular(delta_pp_mhz);

  const Eigen::Matrix2cd s = lowering();
  const Superoperator up = commutator_superoperator(0.5 * probe_rabi * s);            // e^{+i delta t}
  const Superoperator down = commutator_superoperator(0.5 * probe_rabi * s.adjoint());  // e^{-i delta t}

  const double fastest = std::max({gamma, p.drives[0].rabi, std::abs(p.drives[0].detuning),
                                   std::abs(delta)});
  const double period = units::kTwoPi / std::abs(delta);
  const auto n_periods =
      static_cast<long long>(std::max(1.0, std::ceil(opts.window / gamma / period)));
  long long steps_per_period = opts.steps_per_period;
  steps_per_period = std::max(steps_per_period,
                              static_cast<long long>(std::ceil(period * fastest / 0.02)));
  const double h = period / static_cast<double>(steps_per_period);
  const auto settle_steps = static_cast<long long>(std::ceil(opts.settle / gamma / h));

  auto rhs = [&](double t, const VecState& v) -> VecState {
    const cd ph = std::polar(1.0, delta * t);
    return (l0 + ph * up + std::conj(ph) * down) * v;
  };
  auto step = [&](double t, VecState& v) {
    const VecState k1 = rhs(t, v);
    const VecState k2 = rhs(t + 0.5 * h, v + 0.5 * h * k1);
    const VecState k3 = rhs(t + 0.5 * h, v + 0.5 * h * k2);
    const VecState k4 = rhs(t + h, v + h * k3);
    v += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  };

  VecState v = steady_state(l0).vec();
  long long n = 0;
  for (; n < settle_steps; ++n) step(static_cast<double>(n) * h, v);

  // Rectangle rule over whole periods is exact for every harmonic below Nyquist,
  // so the static part and the e^{+i delta t} mixing term drop out.
  cd acc = 0.0;
  const long long window_steps = n_periods * steps_per_period;
  for (long long k = 0; k < window_steps; ++k, ++n) {
    const double t = static_cast<double>(n) * h;
    acc += v(1) * std::polar(1.0, delta * t);
    step(t, v);
  }
  const cd coherence = acc / static_cast<double>(window_steps) / probe_rabi;
  return 1.0 - kI * e.coherent_coupling() * gamma * coherence;
}

namespace {

// Distance in delta_pp beyond which the dressed response has no features.
double feature_extent_mhz(double rabi_mhz, double pump_detuning_mhz) {
  return std::hypot(rabi_mhz, pump_detuning_mhz);
}

std::vector<std::size_t> wing_indices(const SpectralGrid& grid) {
  const std::size_t n = grid.size();
  const std::size_t wing = std::max<std::size_t>(1, (n + 19) / 20);
  if (2 * wing >= n) throw ValidationError("grid too short for a wing baseline");
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < wing; ++i) {
    idx.push_back(i);
    idx.push_back(n - 1 - i);
  }
  return idx;
}

}  // namespace

void check_wing_clearance(const SpectralGrid& pp_grid, double gamma0_mhz, double pump_rabi_mhz,
                          std::span<const double> pump_detunings_mhz) {
  const auto wing_idx = wing_indices(pp_grid);
  for (double detuning : pump_detunings_mhz) {
    const double extent = feature_extent_mhz(pump_rabi_mhz, detuning);
    for (std::size_t i : wing_idx) {
      if (std::abs(pp_grid[i]) - extent < 20.0 * gamma0_mhz) {
        throw ValidationError("pump-probe grid too narrow for a clean wing baseline");
      }
    }
  }
}

Eigen::MatrixXd normalize_probe(const TransmissionMap& map) {
  const std::size_t n = map.pp_grid.size();
  const auto n_rows = map.pump_detunings_mhz.size();
  if (static_cast<std::size_t>(map.raw.rows()) != n_rows ||
      static_cast<std::size_t>(map.raw.cols()) != n) {
    throw ValidationError("map shape does not match its axes");
  }
  check_wing_clearance(map.pp_grid, map.gamma0_mhz, map.pump_rabi_mhz, map.pump_detunings_mhz);
  const auto wing_idx = wing_indices(map.pp_grid);

  Eigen::MatrixXd out(map.raw.rows(), map.raw.cols());
  for (std::size_t row = 0; row < n_rows; ++row) {
    std::vector<double> wing_vals;
    for (std::size_t i : wing_idx) {
      wing_vals.push_back(map.raw(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(i)));
    }
    std::sort(wing_vals.begin(), wing_vals.end());
    const std::size_t m = wing_vals.size();
    const double baseline =
        m % 2 == 1 ? wing_vals[m / 2] : 0.5 * (wing_vals[m / 2 - 1] + wing_vals[m / 2]);
    if (!(baseline > 0.0)) throw NumericalError("non-positive wing baseline");
    out.row(static_cast<Eigen::Index>(row)) = map.raw.row(static_cast<Eigen::Index>(row)) / baseline;
  }
  return out;
}

TransmissionMap build_transmission_map(const PumpProbeScan& scan,
                                       std::span<const double> pump_detunings_mhz,
                                       unsigned threads) {
  validate(scan.emitter);
  TransmissionMap map{std::vector<double>(pump_detunings_mhz.begin(), pump_detunings_mhz.end()),
                      scan.pp_grid,
                      scan.emitter.gamma0_mhz,
                      scan.pump.rabi.to_mhz(scan.emitter.gamma0_mhz),
                      Eigen::MatrixXd(pump_detunings_mhz.size(), scan.pp_grid.size()),
                      {}};
  parallel_for(pump_detunings_mhz.size(), threads, [&](std::size_t row) {
    PumpProbeScan s = scan;
    s.pump.detuning_mhz = pump_detunings_mhz[row];
    const DressedEmitter dressed(s.emitter, s.pump, s.gamma_phi_mhz);
    const cd scatter = pump_scatter_field(s);
    for (std::size_t i = 0; i < s.pp_grid.size(); ++i) {
      map.raw(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(i)) =
          std::norm(dressed.probe_transmission(s.pp_grid[i]) + scatter);
    }
  });
  map.coherent = normalize_probe(map);
  return map;
}

double on_resonance_attenuation(const Emitter& e, const RabiFrequency& pump_rabi) {
  return 1.0 - std::norm(DressedEmitter(e, {pump_rabi, 0.0}).probe_transmission(0.0));
}

namespace {

struct Extremum {
  double at = 0.0;
  double value = 0.0;
};

// Minimum of f on [lo, hi]: coarse scan, then Brent on the bracketing cell.
template <class F>
Extremum minimize_on(F&& f, double lo, double hi, std::size_t coarse) {
  const double step = (hi - lo) / static_cast<double>(coarse - 1);
  std::size_t best = 0;
  double best_val = f(lo);
  for (std::size_t i = 1; i < coarse; ++i) {
    const double v = f(lo + static_cast<double>(i) * step);
    if (v < best_val) {
      best_val = v;
      best = i;
    }
  }
  const double a = lo + static_cast<double>(best > 0 ? best - 1 : 0) * step;
  const double b = lo + static_cast<double>(std::min(best + 1, coarse - 1)) * step;
  const auto [x, fx] = boost::math::tools::brent_find_minima(f, a, b, 40);
  if (fx < best_val) return {x, fx};
  return {lo + static_cast<double>(best) * step, best_val};
}

}  // namespace

std::vector<GainAttenuationPoint> gain_attenuation_summary(const Emitter& e,
                                                           std::span<const double> pump_rabi_gamma0,
                                                           double jitter_mhz,
                                                           const SummaryOptions& opts) {
  validate(e);
  if (!(jitter_mhz >= 0.0)) throw ValidationError("jitter must be >= 0");
  if (opts.jitter_samples == 0 || opts.jitter_samples % 2 == 0) {
    throw ValidationError("jitter_samples must be odd");
  }
  if (opts.coarse_points < 3) throw ValidationError("coarse_points must be >= 3");

  const std::size_t n_off = jitter_mhz > 0.0 ? opts.jitter_samples : 1;
  const std::size_t n_pump = pump_rabi_gamma0.size();
  // attenuation / gain for every (pump, offset) pair
  std::vector<Extremum> att(n_pump * n_off), gain(n_pump * n_off);

  parallel_for(n_pump * n_off, opts.threads, [&](std::size_t idx) {
    const std::size_t ip = idx / n_off;
    const std::size_t io = idx % n_off;
    const double offset =
        n_off == 1 ? 0.0
                   : -jitter_mhz + 2.0 * jitter_mhz * static_cast<double>(io) /
                                       static_cast<double>(n_off - 1);
    Emitter shifted = e;
    shifted.f0_mhz += offset;
    const RabiFrequency rabi = RabiFrequency::in_gamma0(pump_rabi_gamma0[ip]);
    const DressedEmitter dressed(shifted, {rabi, opts.pump_detuning_mhz - offset});
    const double span = 6.0 * e.gamma0_mhz + 2.0 * rabi.to_mhz(e.gamma0_mhz) +
                        std::abs(opts.pump_detuning_mhz) + jitter_mhz;
    auto transmission = [&](double d) { return std::norm(dressed.probe_transmission(d)); };
    const Extremum lo = minimize_on(transmission, -span, span, opts.coarse_points);
    const Extremum hi =
        minimize_on([&](double d) { return -transmission(d); }, -span, span, opts.coarse_points);
    att[idx] = {lo.at, 1.0 - lo.value};
    gain[idx] = {hi.at, std::max(0.0, -hi.value - 1.0)};
  });

  std::vector<GainAttenuationPoint> out(n_pump);
  for (std::size_t ip = 0; ip < n_pump; ++ip) {
    const std::size_t nominal = ip * n_off + n_off / 2;
    GainAttenuationPoint& pt = out[ip];
    pt.pump_rabi_gamma0 = pump_rabi_gamma0[ip];
    pt.attenuation = att[nominal].value;
    pt.attenuation_at_mhz = att[nominal].at;
    pt.gain = gain[nominal].value;
    pt.gain_at_mhz = gain[nominal].at;
    pt.attenuation_min = pt.attenuation_max = pt.attenuation;
    pt.gain_min = pt.gain_max = pt.gain;
    for (std::size_t io = 0; io < n_off; ++io) {
      const std::size_t k = ip * n_off + io;
      pt.attenuation_min = std::min(pt.attenuation_min, att[k].value);
      pt.attenuation_max = std::max(pt.attenuation_max, att[k].value);
      pt.gain_min = std::min(pt.gain_min, gain[k].value);
      pt.gain_max = std::max(pt.gain_max, gain[k].value);
    }
  }
  return out;
}

}  // namespace nanoguide
