#pragma once

// Shared domain types and unit conventions.
//
// Units at every public boundary:
//   frequency, detuning, linewidth  -> MHz (ordinary frequency)
//   Stark coefficients              -> GHz/V, GHz/V^2
//   lifetimes, photon time tags     -> ns
//   positions                       -> um
// Dynamics kernels work with angular rates in rad/us (2*pi * MHz value) and
// times in us; the helpers in `units` are the only place that conversion lives.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace nanoguide {

/// Thrown when an input violates a documented precondition.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a numerical routine cannot produce a trustworthy answer.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace units {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// MHz -> rad/us.
constexpr double angular(double mhz) { return kTwoPi * mhz; }
/// rad/us -> MHz.
constexpr double ordinary(double rad_per_us) { return rad_per_us / kTwoPi; }

constexpr double ns_to_us(double ns) { return ns * 1e-3; }
constexpr double us_to_ns(double us) { return us * 1e3; }
constexpr double ghz_to_mhz(double ghz) { return ghz * 1e3; }

}  // namespace units

struct StarkCoefficients {
  double a_ghz_per_v = 0.0;
  double b_ghz_per_v2 = 0.0;
};

/// One molecule coupled to the guide.
///
/// `beta` is the total guided fraction (both directions); `fwd_fraction` splits
/// it between the right and left ports. `alpha` is the zero-phonon-line
/// branching factor, so the coherent coupling seen by a weak probe is
/// alpha * beta.
struct Emitter {
  double f0_mhz = 0.0;
  double gamma0_mhz = 30.0;
  double beta = 0.0;
  double alpha = 1.0;
  double fwd_fraction = 0.5;
  StarkCoefficients stark{};
  double position_um = 0.0;

  [[nodiscard]] double coherent_coupling() const { return alpha * beta; }
  /// Population decay rate in rad/us for a lifetime-limited line.
  [[nodiscard]] double decay_rate() const { return units::angular(gamma0_mhz); }
};

/// Throws ValidationError naming the first offending field.
void validate(const Emitter& e);

/// Uniform detuning axis with inclusive endpoints.
class SpectralGrid {
 public:
  SpectralGrid(double start_mhz, double stop_mhz, std::size_t n_points);

  [[nodiscard]] double start() const { return start_; }
  [[nodiscard]] double stop() const { return stop_; }
  [[nodiscard]] std::size_t size() const { return n_; }
  [[nodiscard]] double step() const { return (stop_ - start_) / static_cast<double>(n_ - 1); }
  [[nodiscard]] double operator[](std::size_t i) const;
  [[nodiscard]] std::vector<double> values() const;

  friend bool operator==(const SpectralGrid&, const SpectralGrid&) = default;

 private:
  double start_;
  double stop_;
  std::size_t n_;
};

/// Rabi frequency tagged with the unit it was specified in. Values in units of
/// the linewidth are resolved against an emitter's gamma0 exactly once.
class RabiFrequency {
 public:
  enum class Unit { gamma0, mhz };

  static RabiFrequency in_gamma0(double value) { return {value, Unit::gamma0}; }
  static RabiFrequency in_mhz(double value) { return {value, Unit::mhz}; }

  [[nodiscard]] double value() const { return value_; }
  [[nodiscard]] Unit unit() const { return unit_; }
  [[nodiscard]] double to_mhz(double gamma0_mhz) const {
    return unit_ == Unit::gamma0 ? value_ * gamma0_mhz : value_;
  }
  /// rad/us.
  [[nodiscard]] double to_angular(double gamma0_mhz) const {
    return units::angular(to_mhz(gamma0_mhz));
  }

 private:
  RabiFrequency(double value, Unit unit);
  double value_;
  Unit unit_;
};

/// A coherent drive: strength plus drive-minus-emitter detuning.
struct DriveField {
  RabiFrequency rabi = RabiFrequency::in_gamma0(0.0);
  double detuning_mhz = 0.0;
};

/// Lifetime-limited FWHM, 1/(2 pi T1), in MHz for a lifetime in ns.
double lifetime_to_linewidth(double lifetime_ns);
/// Inverse of lifetime_to_linewidth.
double linewidth_to_lifetime(double linewidth_mhz);

/// Resonant scattering cross section of an ideal two-level dipole, 3 lambda^2 / (2 pi).
double ideal_cross_section(double wavelength);

/// Seeded engine for one of several independent streams derived from a master
/// seed. The derivation goes through std::seed_seq, whose algorithm is fixed by
/// the standard, so streams are reproducible across runs.
std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream = 0);

/// Uniform double in [0, 1) from the top 53 bits of one engine draw.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace nanoguide
