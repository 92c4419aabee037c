#include "runner/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <ostream>
#include <sstream>

#include "nanoguide/dynamics.hpp"

namespace nanoguide::runner {

namespace {

constexpr Kind kAllKinds[] = {Kind::linear_spectrum, Kind::cascade, Kind::stark_map,
                              Kind::g2, Kind::montecarlo, Kind::pump_probe_map,
                              Kind::pump_probe_summary, Kind::fit};

// Optional emitter fields a kind accepts; the linewidth is always accepted.
enum EmitterField : unsigned {
  kF0 = 1u << 0,
  kBeta = 1u << 1,
  kAlpha = 1u << 2,
  kFwd = 1u << 3,
};

std::string key_from_message(const std::string& msg, const std::string& fallback) {
  const auto space = msg.find(' ');
  const std::string head = msg.substr(0, space);
  if (head == "emitter.gamma0") return "emitter.gamma0_mhz";
  return head.starts_with("emitter.") ? head : fallback;
}

Emitter parse_emitter(const Config& c, unsigned fields, const Emitter& base = {}) {
  Emitter e = base;
  const auto gamma0 = c.find_double("emitter.gamma0_mhz");
  const auto lifetime = c.find_double("emitter.lifetime_ns");
  if (gamma0 && lifetime) {
    throw ConfigError("emitter.lifetime_ns", "give emitter.gamma0_mhz or emitter.lifetime_ns, not both");
  }
  if (lifetime) {
    if (!(*lifetime > 0.0)) throw ConfigError("emitter.lifetime_ns", "must be positive");
    e.gamma0_mhz = lifetime_to_linewidth(*lifetime);
  } else if (gamma0) {
    e.gamma0_mhz = *gamma0;
  }
  if (fields & kF0) e.f0_mhz = c.get_double("emitter.f0_mhz", e.f0_mhz);
  if (fields & kBeta) e.beta = c.get_double("emitter.beta", e.beta);
  if (fields & kAlpha) e.alpha = c.get_double("emitter.alpha", e.alpha);
  if (fields & kFwd) e.fwd_fraction = c.get_double("emitter.fwd_fraction", e.fwd_fraction);
  try {
    validate(e);
  } catch (const ValidationError& x) {
    throw ConfigError(key_from_message(x.what(), "emitter.gamma0_mhz"), x.what());
  }
  return e;
}

double parse_dephasing(const Config& c) {
  const double g = c.get_double("emitter.gamma_phi_mhz", 0.0);
  if (g < 0.0) throw ConfigError("emitter.gamma_phi_mhz", "must be non-negative");
  return g;
}

RabiFrequency parse_rabi(const Config& c, const std::string& section,
                         std::optional<double> default_gamma0 = std::nullopt) {
  const auto in_gamma0 = c.find_double(section + ".rabi_gamma0");
  const auto in_mhz = c.find_double(section + ".rabi_mhz");
  if (in_gamma0 && in_mhz) {
    throw ConfigError(section + ".rabi_mhz", "give rabi_gamma0 or rabi_mhz, not both");
  }
  const std::string key = section + (in_mhz ? ".rabi_mhz" : ".rabi_gamma0");
  const std::optional<double> value = in_mhz ? in_mhz : (in_gamma0 ? in_gamma0 : default_gamma0);
  if (!value) throw ConfigError(key, "required key is missing");
  if (*value < 0.0) throw ConfigError(key, "must be non-negative");
  return in_mhz ? RabiFrequency::in_mhz(*value) : RabiFrequency::in_gamma0(*value);
}

DriveField parse_drive(const Config& c, const std::string& section) {
  DriveField d;
  d.rabi = parse_rabi(c, section);
  d.detuning_mhz = c.get_double(section + ".detuning_mhz", 0.0);
  return d;
}

SpectralGrid parse_grid(const Config& c, const std::string& section) {
  const double start = c.get_double(section + ".start_mhz");
  const double stop = c.get_double(section + ".stop_mhz");
  const auto points = c.get_count(section + ".points");
  if (points < 2) throw ConfigError(section + ".points", "need at least 2 points");
  if (!(stop > start)) throw ConfigError(section + ".stop_mhz", "must exceed start_mhz");
  return SpectralGrid(start, stop, static_cast<std::size_t>(points));
}

// Either an explicit "values" list or start/stop/points with the given unit suffix.
std::vector<double> parse_axis(const Config& c, const std::string& section, const std::string& unit) {
  if (c.has(section + ".values")) {
    for (const char* k : {".start_", ".stop_"}) {
      if (c.has(section + k + unit)) {
        throw ConfigError(section + k + unit, "give either values or start/stop/points");
      }
    }
    if (c.has(section + ".points")) throw ConfigError(section + ".points", "give either values or start/stop/points");
    return c.get_list(section + ".values");
  }
  const double start = c.get_double(section + ".start_" + unit);
  const double stop = c.get_double(section + ".stop_" + unit);
  const auto points = c.get_count(section + ".points");
  if (points < 2) throw ConfigError(section + ".points", "need at least 2 points");
  if (!(stop > start)) throw ConfigError(section + ".stop_" + unit, "must exceed start_" + unit);
  std::vector<double> v(static_cast<std::size_t>(points));
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = start + (stop - start) * static_cast<double>(i) / static_cast<double>(v.size() - 1);
  }
  return v;
}

Port parse_port_key(const Config& c, const std::string& key, std::string_view fallback) {
  const std::string s = c.get_string(key, fallback);
  try {
    return parse_port(s);
  } catch (const ValidationError&) {
    throw ConfigError(key, fmt::format("unknown port '{}' (left, right, free_space)", s));
  }
}

LinearSpectrumParams parse_linear(const Config& c) {
  return {parse_emitter(c, kF0 | kBeta | kAlpha), parse_grid(c, "grid")};
}

CascadeParams parse_cascade(const Config& c) {
  const Emitter proto = parse_emitter(c, kAlpha);
  const auto f0 = c.get_list("cascade.f0_mhz");
  const auto beta = c.get_list("cascade.beta");
  const std::vector<double> pos =
      c.has("cascade.position_um") ? c.get_list("cascade.position_um") : std::vector<double>(f0.size(), 0.0);
  const double phase = c.get_double("cascade.phase_per_um", 0.0);
  if (beta.size() != 1 && beta.size() != f0.size()) {
    throw ConfigError("cascade.beta", "needs one value or one per emitter");
  }
  if (pos.size() != f0.size()) throw ConfigError("cascade.position_um", "needs one value per emitter");
  CascadeParams p{{}, {}, parse_grid(c, "grid")};
  for (std::size_t k = 0; k < f0.size(); ++k) {
    Emitter e = proto;
    e.f0_mhz = f0[k];
    e.beta = beta.size() == 1 ? beta[0] : beta[k];
    e.position_um = pos[k];
    try {
      validate(e);
    } catch (const ValidationError& x) {
      throw ConfigError("cascade.beta", x.what());
    }
    p.emitters.push_back(e);
  }
  try {
    p.segments = segments_from_positions(p.emitters, phase);
  } catch (const ValidationError& x) {
    throw ConfigError("cascade.position_um", x.what());
  }
  return p;
}

StarkMapParams parse_stark_map(const Config& c) {
  EnsembleSpec spec;
  spec.prototype = parse_emitter(c, kF0);
  spec.count = static_cast<std::size_t>(c.get_count("ensemble.count"));
  spec.center_spread_ghz = c.get_double("ensemble.center_spread_ghz", 0.0);
  spec.typical_slope_ghz_per_v = c.get_double("ensemble.typical_slope_ghz_per_v", spec.typical_slope_ghz_per_v);
  spec.slope_spread_ghz_per_v = c.get_double("ensemble.slope_spread_ghz_per_v", spec.slope_spread_ghz_per_v);
  spec.quadratic_ghz_per_v2 = c.get_double("ensemble.quadratic_ghz_per_v2", 0.0);
  if (spec.center_spread_ghz < 0.0) throw ConfigError("ensemble.center_spread_ghz", "must be non-negative");
  if (spec.slope_spread_ghz_per_v < 0.0) {
    throw ConfigError("ensemble.slope_spread_ghz_per_v", "must be non-negative");
  }
  return {spec, parse_axis(c, "voltage", "v"), parse_grid(c, "grid")};
}

G2Params parse_g2(const Config& c) {
  G2Params p;
  p.emitter = parse_emitter(c, 0);
  p.gamma_phi_mhz = parse_dephasing(c);
  p.drive = parse_drive(c, "drive");
  p.taus_ns = parse_axis(c, "tau", "ns");
  if (p.taus_ns.front() < 0.0) throw ConfigError("tau.start_ns", "delays must be non-negative");
  if (!std::is_sorted(p.taus_ns.begin(), p.taus_ns.end())) throw ConfigError("tau.values", "must be sorted");
  return p;
}

MonteCarloParams parse_montecarlo(const Config& c) {
  MonteCarloParams p;
  p.emitter = parse_emitter(c, kBeta | kAlpha | kFwd);
  p.gamma_phi_mhz = parse_dephasing(c);
  p.drive = parse_drive(c, "drive");
  p.duration_ns = c.get_double("montecarlo.duration_ns");
  p.trajectories = static_cast<std::size_t>(c.get_count("montecarlo.trajectories", 1));
  p.bin_width_ns = c.get_double("montecarlo.bin_width_ns", 1.0);
  p.max_tau_ns = c.get_double("montecarlo.max_tau_ns", 100.0);
  p.start_port = parse_port_key(c, "montecarlo.start_port", "left");
  p.stop_port = parse_port_key(c, "montecarlo.stop_port", "right");
  const std::string channel = c.get_string("montecarlo.channel", "red_shifted");
  if (channel != "all") {
    try {
      p.channel = parse_channel(channel);
    } catch (const ValidationError&) {
      throw ConfigError("montecarlo.channel", fmt::format("unknown channel '{}' (zpl, red_shifted, all)", channel));
    }
  }
  if (!(p.duration_ns > 0.0)) throw ConfigError("montecarlo.duration_ns", "must be positive");
  if (p.trajectories == 0) throw ConfigError("montecarlo.trajectories", "must be at least 1");
  if (!(p.bin_width_ns > 0.0)) throw ConfigError("montecarlo.bin_width_ns", "must be positive");
  if (!(p.max_tau_ns >= p.bin_width_ns)) throw ConfigError("montecarlo.max_tau_ns", "must be at least one bin");
  if (!(p.duration_ns > p.max_tau_ns)) throw ConfigError("montecarlo.duration_ns", "must exceed max_tau_ns");
  if (c.has_section("detector")) {
    DetectorModel d;
    d.dead_time_ns = c.get_double("detector.dead_time_ns", 0.0);
    d.dark_rate_per_ns = c.get_double("detector.dark_rate_per_ns", 0.0);
    d.jitter_sigma_ns = c.get_double("detector.jitter_sigma_ns", 0.0);
    if (d.dead_time_ns < 0.0) throw ConfigError("detector.dead_time_ns", "must be non-negative");
    if (d.dark_rate_per_ns < 0.0) throw ConfigError("detector.dark_rate_per_ns", "must be non-negative");
    if (d.jitter_sigma_ns < 0.0) throw ConfigError("detector.jitter_sigma_ns", "must be non-negative");
    p.detector = d;
  }
  return p;
}

PumpProbeMapParams parse_pump_probe_map(const Config& c) {
  PumpProbeScan scan{parse_emitter(c, kBeta | kAlpha), {}, RabiFrequency::in_gamma0(0.1),
                     parse_grid(c, "grid"), {0.0, 0.0}, parse_dephasing(c)};
  scan.pump.rabi = parse_rabi(c, "pump");
  scan.probe_rabi = parse_rabi(c, "probe", 0.1);
  if (!probe_is_weak(scan)) throw ConfigError("probe.rabi_gamma0", "probe is not weak compared with the pump and linewidth");
  PumpProbeMapParams p{scan, parse_axis(c, "pump_detuning", "mhz"), c.find_double("probe.scatter_plateau")};
  if (p.scatter_plateau && !(*p.scatter_plateau > 0.0)) {
    throw ConfigError("probe.scatter_plateau", "must be positive");
  }
  try {
    check_wing_clearance(scan.pp_grid, scan.emitter.gamma0_mhz, scan.pump.rabi.to_mhz(scan.emitter.gamma0_mhz),
                         p.pump_detunings_mhz);
  } catch (const ValidationError& x) {
    throw ConfigError("grid.stop_mhz", std::string(x.what()) + "; widen grid.start_mhz/grid.stop_mhz");
  }
  return p;
}

PumpProbeSummaryParams parse_summary(const Config& c) {
  PumpProbeSummaryParams p;
  p.emitter = parse_emitter(c, kBeta | kAlpha);
  p.rabi_gamma0 = c.get_list("summary.rabi_gamma0");
  for (double r : p.rabi_gamma0) {
    if (r < 0.0) throw ConfigError("summary.rabi_gamma0", "must be non-negative");
  }
  p.jitter_mhz = c.get_double("summary.jitter_mhz", 0.0);
  if (p.jitter_mhz < 0.0) throw ConfigError("summary.jitter_mhz", "must be non-negative");
  p.options.pump_detuning_mhz = c.get_double("summary.pump_detuning_mhz", 0.0);
  p.options.jitter_samples = static_cast<std::size_t>(c.get_count("summary.jitter_samples", p.options.jitter_samples));
  p.options.coarse_points = static_cast<std::size_t>(c.get_count("summary.coarse_points", p.options.coarse_points));
  if (p.options.jitter_samples < 1) throw ConfigError("summary.jitter_samples", "must be at least 1");
  if (p.options.coarse_points < 3) throw ConfigError("summary.coarse_points", "must be at least 3");
  return p;
}

FitParams parse_fit(const Config& c) {
  FitParams p;
  const std::string model = c.get_string("fit.model");
  try {
    p.model = parse_fit_model(model);
  } catch (const ValidationError&) {
    throw ConfigError("fit.model", fmt::format("unknown model '{}' (lorentzian, g2, stark)", model));
  }
  p.input = c.get_string("fit.input");
  if (p.input.is_relative()) p.input = c.directory() / p.input;
  if (p.model == FitModel::lorentzian) {
    p.peaks = static_cast<std::size_t>(c.get_count("fit.peaks", 1));
    if (p.peaks < 1 || p.peaks > 3) throw ConfigError("fit.peaks", "must be 1, 2 or 3");
  }
  if (p.model == FitModel::stark) {
    p.degree = static_cast<int>(c.get_count("fit.degree", 1));
    if (p.degree < 1 || p.degree > 2) throw ConfigError("fit.degree", "must be 1 or 2");
    p.noise_sigma_mhz = c.get_double("fit.noise_sigma_mhz", 0.0);
    if (p.noise_sigma_mhz < 0.0) throw ConfigError("fit.noise_sigma_mhz", "must be non-negative");
  }
  return p;
}

Table linear_table(const ScatterResponse& resp) {
  Table t;
  t.columns = {{"probe_mhz", "MHz"}, {"transmission", "1"}, {"reflection", "1"}, {"t_re", "1"},
               {"t_im", "1"},        {"r_re", "1"},         {"r_im", "1"}};
  double t_min = 1.0;
  for (std::size_t i = 0; i < resp.grid.size(); ++i) {
    const double tt = std::norm(resp.t[i]);
    t_min = std::min(t_min, tt);
    t.add_row({resp.grid[i], tt, std::norm(resp.r[i]), resp.t[i].real(), resp.t[i].imag(),
               resp.r[i].real(), resp.r[i].imag()});
  }
  t.add_meta("min_transmission", t_min);
  return t;
}

Table run_linear(const LinearSpectrumParams& p) {
  Table t = linear_table(single_emitter_response(p.emitter, p.grid));
  t.add_meta("extinction_on_resonance", 1.0 - std::norm(transmission_amplitude(p.emitter, p.emitter.f0_mhz)));
  return t;
}

Table run_cascade(const CascadeParams& p) {
  Table t = linear_table(cascade_response(p.emitters, p.segments, p.grid));
  t.add_meta("emitters", static_cast<double>(p.emitters.size()));
  return t;
}

Table run_stark_map(const StarkMapParams& p, std::uint64_t seed) {
  EnsembleSpec spec = p.ensemble;
  spec.seed = seed;
  const Ensemble ens = Ensemble::generate(spec);
  const Eigen::MatrixXd m = excitation_map(ens, p.voltages, p.grid, spec.prototype.gamma0_mhz);
  Table t;
  t.columns = {{"voltage_v", "V"}, {"probe_mhz", "MHz"}, {"intensity", "1"}};
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index k = 0; k < m.cols(); ++k) {
      t.add_row({p.voltages[static_cast<std::size_t>(r)], p.grid[static_cast<std::size_t>(k)], m(r, k)});
    }
  }
  t.add_meta("emitters", static_cast<double>(ens.emitters.size()));
  return t;
}

Table run_g2(const G2Params& p) {
  const LiouvilleProblem prob = LiouvilleProblem::driven(p.emitter, p.drive, p.gamma_phi_mhz);
  std::vector<double> us(p.taus_ns.size());
  std::transform(p.taus_ns.begin(), p.taus_ns.end(), us.begin(), units::ns_to_us);
  const std::vector<double> g = g2(prob, us);
  const bool analytic = p.drive.detuning_mhz == 0.0 && p.gamma_phi_mhz == 0.0;
  Table t;
  t.columns = {{"tau_ns", "ns"}, {"g2", "1"}};
  if (analytic) t.columns.push_back({"g2_analytic", "1"});
  const double rabi = prob.drives[0].rabi;
  for (std::size_t i = 0; i < us.size(); ++i) {
    std::vector<Cell> row{p.taus_ns[i], g[i]};
    if (analytic) row.emplace_back(resonant_g2(rabi, prob.gamma, us[i]).value);
    t.add_row(std::move(row));
  }
  t.add_meta("rabi_gamma0", p.drive.rabi.to_mhz(p.emitter.gamma0_mhz) / p.emitter.gamma0_mhz);
  t.add_meta("lifetime_ns", linewidth_to_lifetime(p.emitter.gamma0_mhz));
  return t;
}

// Bin-averaged quantum-regression g2 over |tau| in [lo, hi].
double bin_model(const LiouvilleProblem& prob, double lo_ns, double hi_ns) {
  constexpr int kSamples = 8;
  double sum = 0.0;
  for (int s = 0; s < kSamples; ++s) {
    const double tau = std::abs(lo_ns + (hi_ns - lo_ns) * (s + 0.5) / kSamples);
    const double us = units::ns_to_us(tau);
    sum += g2(prob, std::span<const double>(&us, 1))[0];
  }
  return sum / kSamples;
}

Table run_montecarlo(const MonteCarloParams& p, std::uint64_t seed, unsigned threads) {
  const LiouvilleProblem prob = LiouvilleProblem::driven(p.emitter, p.drive, p.gamma_phi_mhz);
  const auto streams = simulate_trajectories(prob, p.emitter, p.duration_ns, p.trajectories, seed, threads);
  std::optional<CoincidenceHistogram> hist;
  std::size_t photons = 0;
  std::size_t right = 0;
  std::size_t left = 0;
  for (std::size_t k = 0; k < streams.size(); ++k) {
    PhotonStream s = streams[k];
    if (p.detector) s = apply_detector(s, *p.detector, p.duration_ns, seed ^ (0x9E3779B97F4A7C15ULL * (k + 1)));
    for (const auto& r : s) {
      ++photons;
      if (r.port == Port::right) ++right;
      if (r.port == Port::left) ++left;
    }
    const auto a = select_times(s, p.start_port, p.channel);
    CoincidenceHistogram h;
    if (p.start_port == p.stop_port) {
      h = auto_correlate(a, p.bin_width_ns, p.max_tau_ns, p.duration_ns);
    } else {
      h = cross_correlate(a, select_times(s, p.stop_port, p.channel), p.bin_width_ns, p.max_tau_ns,
                          p.duration_ns);
    }
    if (hist) {
      *hist += h;
    } else {
      hist = std::move(h);
    }
  }
  const auto g = hist->normalized();
  const auto sigma = hist->normalized_sigma();
  Table t;
  t.columns = {{"tau_ns", "ns"}, {"counts", "1"}, {"expected", "1"},
               {"g2", "1"},      {"g2_sigma", "1"}, {"g2_model", "1"}};
  for (std::size_t i = 0; i < hist->bins(); ++i) {
    t.add_row({hist->center(i), hist->counts[i], hist->expected[i], g[i], sigma[i],
               bin_model(prob, hist->edges_ns[i], hist->edges_ns[i + 1])});
  }
  t.add_meta("photons", static_cast<double>(photons));
  t.add_meta("photons_right", static_cast<double>(right));
  t.add_meta("photons_left", static_cast<double>(left));
  t.add_meta("right_fraction",
             right + left > 0 ? static_cast<double>(right) / static_cast<double>(right + left) : 0.0);
  return t;
}

Table run_pump_probe_map(const PumpProbeMapParams& p, unsigned threads) {
  PumpProbeScan scan = p.scan;
  if (p.scatter_plateau) {
    PumpProbeScan resonant = scan;
    resonant.pump.detuning_mhz = 0.0;
    scan.pump_scatter_amp = calibrate_pump_scatter(resonant, *p.scatter_plateau);
  }
  const TransmissionMap map = build_transmission_map(scan, p.pump_detunings_mhz, threads);
  Table t;
  t.columns = {{"pump_detuning_mhz", "MHz"}, {"delta_pp_mhz", "MHz"}, {"raw", "1"}, {"normalized", "1"},
               {"probe_transmission", "1"}};
  for (Eigen::Index r = 0; r < map.raw.rows(); ++r) {
    PumpProbeScan row = scan;
    row.pump.detuning_mhz = p.pump_detunings_mhz[static_cast<std::size_t>(r)];
    const DressedEmitter dressed(row.emitter, row.pump, row.gamma_phi_mhz);
    for (Eigen::Index k = 0; k < map.raw.cols(); ++k) {
      const double dpp = map.pp_grid[static_cast<std::size_t>(k)];
      t.add_row({row.pump.detuning_mhz, dpp, map.raw(r, k), map.coherent(r, k),
                 std::norm(dressed.probe_transmission(dpp))});
    }
  }
  t.add_meta("pump_rabi_mhz", map.pump_rabi_mhz);
  t.add_meta("scatter_amplitude", scan.pump_scatter_amp.real());
  return t;
}

Table run_summary(const PumpProbeSummaryParams& p, unsigned threads) {
  SummaryOptions opts = p.options;
  opts.threads = threads;
  const auto points = gain_attenuation_summary(p.emitter, p.rabi_gamma0, p.jitter_mhz, opts);
  Table t;
  t.columns = {{"rabi_gamma0", "Gamma0"},    {"attenuation", "1"},     {"attenuation_at_mhz", "MHz"},
               {"gain", "1"},                {"gain_at_mhz", "MHz"},   {"attenuation_min", "1"},
               {"attenuation_max", "1"},     {"gain_min", "1"},        {"gain_max", "1"}};
  for (const auto& q : points) {
    t.add_row({q.pump_rabi_gamma0, q.attenuation, q.attenuation_at_mhz, q.gain, q.gain_at_mhz,
               q.attenuation_min, q.attenuation_max, q.gain_min, q.gain_max});
  }
  t.add_meta("jitter_mhz", p.jitter_mhz);
  return t;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::ios_base::failure("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string_view to_string(Kind k) {
  switch (k) {
    case Kind::linear_spectrum: return "linear_spectrum";
    case Kind::cascade: return "cascade";
    case Kind::stark_map: return "stark_map";
    case Kind::g2: return "g2";
    case Kind::montecarlo: return "montecarlo";
    case Kind::pump_probe_map: return "pump_probe_map";
    case Kind::pump_probe_summary: return "pump_probe_summary";
    case Kind::fit: return "fit";
  }
  return "unknown";
}

Kind parse_kind(std::string_view s) {
  for (Kind k : kAllKinds) {
    if (to_string(k) == s) return k;
  }
  std::string names;
  for (Kind k : kAllKinds) names += (names.empty() ? "" : ", ") + std::string(to_string(k));
  throw ConfigError("experiment.kind", fmt::format("unknown kind '{}' ({})", s, names));
}

FitModel parse_fit_model(std::string_view s) {
  if (s == "lorentzian") return FitModel::lorentzian;
  if (s == "g2") return FitModel::g2;
  if (s == "stark") return FitModel::stark;
  throw ValidationError(fmt::format("unknown fit model '{}'", s));
}

ExperimentConfig parse_experiment(const Config& cfg) {
  const Kind kind = parse_kind(cfg.get_string("experiment.kind"));
  const std::uint64_t seed = cfg.get_count("experiment.seed", 0);
  const std::filesystem::path output = cfg.get_string("experiment.output");
  ExperimentParams params = [&]() -> ExperimentParams {
    switch (kind) {
      case Kind::linear_spectrum: return parse_linear(cfg);
      case Kind::cascade: return parse_cascade(cfg);
      case Kind::stark_map: return parse_stark_map(cfg);
      case Kind::g2: return parse_g2(cfg);
      case Kind::montecarlo: return parse_montecarlo(cfg);
      case Kind::pump_probe_map: return parse_pump_probe_map(cfg);
      case Kind::pump_probe_summary: return parse_summary(cfg);
      case Kind::fit: return parse_fit(cfg);
    }
    throw ConfigError("experiment.kind", "unhandled kind");
  }();
  cfg.reject_unread();
  return {kind, seed, output, hash_hex(fnv1a64(cfg.canonical({"experiment.output"}))), std::move(params)};
}

Table run_fit(const FitParams& p, const XYData& data) {
  FitResult fit;
  switch (p.model) {
    case FitModel::lorentzian: fit = fit_lorentzian(data.x, data.y, p.peaks); break;
    case FitModel::g2: fit = fit_g2(data.x, data.y); break;
    case FitModel::stark: fit = fit_stark_slope(data.x, data.y, p.degree, p.noise_sigma_mhz); break;
  }
  if (!fit.converged) {
    std::string flags;
    for (const auto& f : fit.flags) flags += (flags.empty() ? "" : " ") + f;
    throw NumericalError("fit did not converge (" + flags + ")");
  }
  Table t;
  t.columns = {{"parameter", "-"}, {"value", "-"}, {"sigma", "-"}};
  for (std::size_t i = 0; i < fit.names.size(); ++i) t.add_row({fit.names[i], fit.values[i], fit.sigmas[i]});
  std::string flags;
  for (const auto& f : fit.flags) flags += (flags.empty() ? "" : ";") + f;
  t.add_meta("residual_norm", fit.residual_norm);
  t.add_meta("iterations", static_cast<double>(fit.iterations));
  t.add_meta("flags", flags.empty() ? "none" : flags);
  return t;
}

Table run_experiment(const ExperimentConfig& exp, unsigned threads) {
  return std::visit(
      [&](const auto& p) -> Table {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, LinearSpectrumParams>) return run_linear(p);
        if constexpr (std::is_same_v<P, CascadeParams>) return run_cascade(p);
        if constexpr (std::is_same_v<P, StarkMapParams>) return run_stark_map(p, exp.seed);
        if constexpr (std::is_same_v<P, G2Params>) return run_g2(p);
        if constexpr (std::is_same_v<P, MonteCarloParams>) return run_montecarlo(p, exp.seed, threads);
        if constexpr (std::is_same_v<P, PumpProbeMapParams>) return run_pump_probe_map(p, threads);
        if constexpr (std::is_same_v<P, PumpProbeSummaryParams>) return run_summary(p, threads);
        if constexpr (std::is_same_v<P, FitParams>) {
          const std::string bytes = read_file(p.input);
          std::istringstream in(bytes);
          Table t = run_fit(p, read_xy_csv(in));
          t.add_meta("input_hash", hash_hex(fnv1a64(bytes)));
          return t;
        }
      },
      exp.params);
}

int run_config(const RunRequest& req, std::ostream& out, std::ostream& err) {
  try {
    Config cfg = Config::load(req.config);
    if (req.seed) cfg.set("experiment.seed", std::to_string(*req.seed));
    if (req.output) cfg.set("experiment.output", req.output->string());
    const ExperimentConfig exp = parse_experiment(cfg);
    const Table table = run_experiment(exp, req.threads);

    const ArtifactInfo info{std::string(to_string(exp.kind)), exp.config_hash, exp.seed};
    std::ostringstream csv;
    write_csv(csv, table, info);
    const std::string bytes = csv.str();
    if (exp.output.has_parent_path()) std::filesystem::create_directories(exp.output.parent_path());
    std::ofstream f(exp.output, std::ios::binary);
    f << bytes;
    if (!f) throw std::ios_base::failure("cannot write " + exp.output.string());
    std::filesystem::path manifest = exp.output;
    manifest += ".manifest";
    std::ofstream m(manifest, std::ios::binary);
    write_manifest(m, info, exp.output.filename().string(), bytes, table.rows.size());
    if (!m) throw std::ios_base::failure("cannot write " + manifest.string());
    out << "wrote " << exp.output.string() << " (" << table.rows.size() << " rows, config "
        << exp.config_hash << ")\n";
    return 0;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  } catch (const OutOfModelError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const ValidationError& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace nanoguide::runner
