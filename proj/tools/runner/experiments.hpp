#pragma once

// Typed experiment descriptions parsed from a Config, and their execution.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "nanoguide/core.hpp"
#include "nanoguide/inference.hpp"
#include "nanoguide/linear_scattering.hpp"
#include "nanoguide/photostream.hpp"
#include "nanoguide/pump_probe.hpp"
#include "nanoguide/stark.hpp"
#include "runner/config.hpp"
#include "runner/table.hpp"

namespace nanoguide::runner {

enum class Kind {
  linear_spectrum,
  cascade,
  stark_map,
  g2,
  montecarlo,
  pump_probe_map,
  pump_probe_summary,
  fit,
};

std::string_view to_string(Kind k);
Kind parse_kind(std::string_view s);

struct LinearSpectrumParams {
  Emitter emitter;
  SpectralGrid grid;
};

struct CascadeParams {
  std::vector<Emitter> emitters;
  std::vector<GuideSegment> segments;
  SpectralGrid grid;
};

struct StarkMapParams {
  EnsembleSpec ensemble;
  std::vector<double> voltages;
  SpectralGrid grid;
};

struct G2Params {
  Emitter emitter;
  DriveField drive;
  double gamma_phi_mhz = 0.0;
  std::vector<double> taus_ns;
};

struct MonteCarloParams {
  Emitter emitter;
  DriveField drive;
  double gamma_phi_mhz = 0.0;
  double duration_ns = 0.0;
  std::size_t trajectories = 1;
  double bin_width_ns = 1.0;
  double max_tau_ns = 100.0;
  Port start_port = Port::left;
  Port stop_port = Port::right;
  std::optional<Channel> channel;
  std::optional<DetectorModel> detector;
};

struct PumpProbeMapParams {
  PumpProbeScan scan;
  std::vector<double> pump_detunings_mhz;
  std::optional<double> scatter_plateau;
};

struct PumpProbeSummaryParams {
  Emitter emitter;
  std::vector<double> rabi_gamma0;
  double jitter_mhz = 0.0;
  SummaryOptions options;
};

enum class FitModel { lorentzian, g2, stark };

struct FitParams {
  FitModel model = FitModel::lorentzian;
  std::filesystem::path input;
  std::size_t peaks = 1;
  int degree = 1;
  double noise_sigma_mhz = 0.0;
};

FitModel parse_fit_model(std::string_view s);

using ExperimentParams =
    std::variant<LinearSpectrumParams, CascadeParams, StarkMapParams, G2Params, MonteCarloParams,
                 PumpProbeMapParams, PumpProbeSummaryParams, FitParams>;

struct ExperimentConfig {
  Kind kind = Kind::linear_spectrum;
  std::uint64_t seed = 0;
  std::filesystem::path output;
  std::string config_hash;
  ExperimentParams params;
};

/// Validates every key and value; nothing is computed. Throws ConfigError.
ExperimentConfig parse_experiment(const Config& cfg);

/// Runs a parsed experiment. Core ValidationError/NumericalError propagate.
Table run_experiment(const ExperimentConfig& exp, unsigned threads);

/// Runs a fit of one model to two-column data.
Table run_fit(const FitParams& params, const XYData& data);

struct RunRequest {
  std::filesystem::path config;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> output;
  unsigned threads = 1;
};

/// Exit codes: 0 success, 1 I/O failure, 2 invalid configuration, 3 numerical failure.
int run_config(const RunRequest& req, std::ostream& out, std::ostream& err);

}  // namespace nanoguide::runner
