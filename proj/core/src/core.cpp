#include "nanoguide/core.hpp"

#include <limits>

namespace nanoguide {

namespace {

void require_unit_interval(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw ValidationError(std::string("emitter.") + name + " must lie in [0, 1], got " +
                          std::to_string(v));
  }
}

void require_finite(double v, const char* name) {
  if (!std::isfinite(v)) {
    throw ValidationError(std::string("emitter.") + name + " must be finite");
  }
}

}  // namespace

void validate(const Emitter& e) {
  require_finite(e.f0_mhz, "f0");
  if (!(e.gamma0_mhz > 0.0) || !std::isfinite(e.gamma0_mhz)) {
    throw ValidationError("emitter.gamma0 must be positive and finite, got " +
                          std::to_string(e.gamma0_mhz));
  }
  require_unit_interval(e.beta, "beta");
  require_unit_interval(e.alpha, "alpha");
  require_unit_interval(e.fwd_fraction, "fwd_fraction");
  require_finite(e.stark.a_ghz_per_v, "stark_a");
  require_finite(e.stark.b_ghz_per_v2, "stark_b");
  require_finite(e.position_um, "position");
}

SpectralGrid::SpectralGrid(double start_mhz, double stop_mhz, std::size_t n_points)
    : start_(start_mhz), stop_(stop_mhz), n_(n_points) {
  if (n_points < 2) throw ValidationError("grid needs at least 2 points");
  if (!std::isfinite(start_mhz) || !std::isfinite(stop_mhz) || !(stop_mhz > start_mhz)) {
    throw ValidationError("grid must be finite and strictly increasing");
  }
}

double SpectralGrid::operator[](std::size_t i) const {
  // Pin the last point to stop exactly; interior points come from the start.
  if (i + 1 == n_) return stop_;
  return start_ + static_cast<double>(i) * step();
}

std::vector<double> SpectralGrid::values() const {
  std::vector<double> out(n_);
  for (std::size_t i = 0; i < n_; ++i) out[i] = (*this)[i];
  return out;
}

RabiFrequency::RabiFrequency(double value, Unit unit) : value_(value), unit_(unit) {
  if (!(value >= 0.0) || !std::isfinite(value)) {
    throw ValidationError("Rabi frequency must be non-negative and finite");
  }
}

double lifetime_to_linewidth(double lifetime_ns) {
  if (!(lifetime_ns > 0.0)) throw ValidationError("lifetime must be positive");
  // 1 / (2 pi T1[ns]) is in GHz.
  return 1e3 / (units::kTwoPi * lifetime_ns);
}

double linewidth_to_lifetime(double linewidth_mhz) {
  if (!(linewidth_mhz > 0.0)) throw ValidationError("linewidth must be positive");
  return 1e3 / (units::kTwoPi * linewidth_mhz);
}

double ideal_cross_section(double wavelength) {
  if (!(wavelength > 0.0) || !std::isfinite(wavelength)) {
    throw ValidationError("wavelength must be positive");
  }
  return 3.0 * wavelength * wavelength / units::kTwoPi;
}

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace nanoguide
