#pragma once

// Parameter recovery: Lorentzian line fits, g2 fits, Stark-slope regression and
// the extinction -> beta inversion.

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nanoguide/core.hpp"
#include "nanoguide/least_squares.hpp"

namespace nanoguide {

/// Input implies a parameter outside the physical model (e.g. beta > 1).
class OutOfModelError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

struct FitResult {
  std::vector<std::string> names;
  std::vector<double> values;
  /// One standard error per parameter.
  std::vector<double> sigmas;
  double residual_norm = 0.0;
  bool converged = false;
  int iterations = 0;
  /// Diagnostics such as "no_signal" or "large_residual".
  std::vector<std::string> flags;

  [[nodiscard]] double value(std::string_view name) const;
  [[nodiscard]] double sigma(std::string_view name) const;
  [[nodiscard]] bool has_flag(std::string_view flag) const;
};

/// `name = value` lines, one parameter per line plus fit diagnostics.
void write_key_value(std::ostream& os, const FitResult& fit);
std::string csv_header(const FitResult& fit);
std::string csv_row(const FitResult& fit);

/// Sum of n_peaks Lorentzians plus a constant baseline,
///   y = baseline + sum_k amplitude_k / (1 + (2 (x - center_k) / fwhm_k)^2),
/// with amplitude negative for dips. Parameters are named center_k, fwhm_k,
/// amplitude_k (k from 1, ordered by center) and baseline.
FitResult fit_lorentzian(std::span<const double> x, std::span<const double> y,
                         std::size_t n_peaks);

/// Resonant two-level g2 model; taus in ns. Reports rabi_gamma0 (Rabi frequency
/// over the decay rate, i.e. in units of the lifetime-limited linewidth) and
/// lifetime_ns. As the Rabi frequency goes to zero the model relaxes to the
/// exponential recovery (1 - exp(-tau / 2 T1))^2.
FitResult fit_g2(std::span<const double> taus_ns, std::span<const double> g2_values);

/// Polynomial regression of line centers (MHz) against voltage. Reports f0_mhz,
/// a_ghz_per_v and b_ghz_per_v2 (zero for degree 1). A degree-1 fit flags
/// "large_residual" when a quadratic term is statistically evident, or when the
/// rms residual exceeds 3 noise_sigma_mhz (if given).
FitResult fit_stark_slope(std::span<const double> voltages, std::span<const double> centers_mhz,
                          int degree = 1, double noise_sigma_mhz = 0.0);

/// Inverts the on-resonance extinction 1 - (1 - alpha beta)^2.
double extinction_to_beta(double depth, double alpha);

/// Residual models behind the fitters, with analytic Jacobians. Lorentzian
/// parameters are [baseline, (center, fwhm, amplitude) per peak]; g2 parameters
/// are [rabi, gamma] in rad/ns and 1/ns. The spans must outlive the problem.
LeastSquaresProblem lorentzian_problem(std::span<const double> x, std::span<const double> y,
                                       std::size_t n_peaks);
LeastSquaresProblem g2_problem(std::span<const double> taus_ns, std::span<const double> g2_values);

struct XYData {
  std::vector<double> x;
  std::vector<double> y;
};

/// Two-column numeric CSV. Blank lines, `#` comments and one non-numeric header
/// row are skipped.
XYData read_xy_csv(std::istream& is);

}  // namespace nanoguide
