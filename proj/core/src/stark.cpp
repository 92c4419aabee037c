#include "nanoguide/stark.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace nanoguide {

double shifted_frequency(const Emitter& e, double volts) {
  if (!std::isfinite(volts)) throw ValidationError("voltage must be finite");
  return e.f0_mhz +
         units::ghz_to_mhz(e.stark.a_ghz_per_v * volts + e.stark.b_ghz_per_v2 * volts * volts);
}

Ensemble Ensemble::generate(const EnsembleSpec& spec) {
  if (!(spec.center_spread_ghz >= 0.0)) throw ValidationError("center spread must be >= 0");
  if (!(spec.slope_spread_ghz_per_v >= 0.0)) throw ValidationError("slope spread must be >= 0");
  validate(spec.prototype);

  Ensemble ens{{}, spec.center_spread_ghz, spec.seed};
  ens.emitters.reserve(spec.count);
  auto rng = make_engine(spec.seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  for (std::size_t k = 0; k < spec.count; ++k) {
    Emitter e = spec.prototype;
    e.f0_mhz = spec.prototype.f0_mhz + units::ghz_to_mhz(spec.center_spread_ghz * unit(rng));
    const double magnitude =
        std::abs(spec.typical_slope_ghz_per_v + spec.slope_spread_ghz_per_v * unit(rng));
    const double sign = uniform01(rng) < 0.5 ? -1.0 : 1.0;
    e.stark = {sign * magnitude, spec.quadratic_ghz_per_v2};
    ens.emitters.push_back(e);
  }
  return ens;
}

Eigen::MatrixXd excitation_map(const Ensemble& ens, std::span<const double> voltages,
                               const SpectralGrid& grid, double linewidth_mhz) {
  if (!(linewidth_mhz > 0.0)) throw ValidationError("linewidth must be positive");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(voltages.size()),
                                              static_cast<Eigen::Index>(grid.size()));
  const double half = 0.5 * linewidth_mhz;
  for (std::size_t iv = 0; iv < voltages.size(); ++iv) {
    for (const auto& e : ens.emitters) {
      const double center = shifted_frequency(e, voltages[iv]);
      for (std::size_t i = 0; i < grid.size(); ++i) {
        const double u = (grid[i] - center) / half;
        out(static_cast<Eigen::Index>(iv), static_cast<Eigen::Index>(i)) += 1.0 / (1.0 + u * u);
      }
    }
  }
  return out;
}

PairAlignment align_pair(const Emitter& e1, const Emitter& e2, double v_min, double v_max) {
  if (!std::isfinite(v_min) || !std::isfinite(v_max) || v_min > v_max) {
    throw ValidationError("voltage range must be a finite interval");
  }
  // f1 - f2 = c0 + c1 V + c2 V^2 in MHz.
  const double c0 = e1.f0_mhz - e2.f0_mhz;
  const double c1 = units::ghz_to_mhz(e1.stark.a_ghz_per_v - e2.stark.a_ghz_per_v);
  const double c2 = units::ghz_to_mhz(e1.stark.b_ghz_per_v2 - e2.stark.b_ghz_per_v2);
  auto diff = [&](double v) { return c0 + v * (c1 + v * c2); };

  PairAlignment out;
  if (c2 == 0.0 && c1 == 0.0) {
    out.status = c0 == 0.0 ? PairAlignment::Status::always_aligned
                           : PairAlignment::Status::not_alignable;
    return out;
  }

  std::vector<double> roots;
  if (c2 == 0.0) {
    roots.push_back(-c0 / c1);
  } else {
    const double disc = c1 * c1 - 4.0 * c2 * c0;
    if (disc >= 0.0) {
      // Cancellation-free pair of roots.
      const double q = -0.5 * (c1 + std::copysign(std::sqrt(disc), c1));
      if (q != 0.0) {
        roots.push_back(q / c2);
        roots.push_back(c0 / q);
      } else {
        roots.push_back(0.0);
      }
    }
  }

  for (double& v : roots) {
    // Two Newton polish steps against the exact polynomial.
    for (int it = 0; it < 2; ++it) {
      const double slope = c1 + 2.0 * c2 * v;
      if (slope != 0.0) v -= diff(v) / slope;
    }
  }
  std::sort(roots.begin(), roots.end());
  roots.erase(std::unique(roots.begin(), roots.end()), roots.end());

  for (double v : roots) {
    if (v < v_min || v > v_max) continue;
    out.voltages.push_back(v);
    out.frequencies_mhz.push_back(0.5 * (shifted_frequency(e1, v) + shifted_frequency(e2, v)));
  }
  out.status = out.voltages.empty() ? PairAlignment::Status::not_alignable
                                    : PairAlignment::Status::aligned;
  return out;
}

}  // namespace nanoguide
