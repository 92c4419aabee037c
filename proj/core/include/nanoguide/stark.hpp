#pragma once

// DC Stark tuning of individual molecules and inhomogeneous ensembles.

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "nanoguide/core.hpp"

namespace nanoguide {

/// f0 + 1000 (a V + b V^2), MHz.
double shifted_frequency(const Emitter& e, double volts);

struct EnsembleSpec {
  std::size_t count = 0;
  /// Standard deviation of the zero-field line centers (GHz).
  double center_spread_ghz = 0.0;
  /// |a| is drawn from N(typical_slope, slope_spread) folded at zero; the sign
  /// is random.
  double typical_slope_ghz_per_v = 0.5;
  double slope_spread_ghz_per_v = 0.15;
  double quadratic_ghz_per_v2 = 0.0;
  /// Shared by every member.
  Emitter prototype{};
  std::uint64_t seed = 0;
};

struct Ensemble {
  std::vector<Emitter> emitters;
  double center_spread_ghz = 0.0;
  std::uint64_t seed = 0;

  /// Draws a reproducible ensemble; the same spec yields bit-identical members.
  static Ensemble generate(const EnsembleSpec& spec);
};

/// Fluorescence excitation signal: rows are voltages, columns grid points, each
/// molecule contributing a unit-height Lorentzian of the given FWHM at its
/// shifted frequency.
Eigen::MatrixXd excitation_map(const Ensemble& ens, std::span<const double> voltages,
                               const SpectralGrid& grid, double linewidth_mhz);

struct PairAlignment {
  enum class Status { aligned, not_alignable, always_aligned };
  Status status = Status::not_alignable;
  /// Sorted voltages inside the requested range where the lines coincide.
  std::vector<double> voltages;
  /// Common frequency (MHz) at each voltage.
  std::vector<double> frequencies_mhz;
};

/// Voltages in [v_min, v_max] where the two molecules are degenerate.
PairAlignment align_pair(const Emitter& e1, const Emitter& e2, double v_min, double v_max);

}  // namespace nanoguide
