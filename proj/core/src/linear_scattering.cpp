#include "nanoguide/linear_scattering.hpp"

#include <algorithm>
#include <limits>

namespace nanoguide {

namespace {

// Scattering matrix of a guide two-port. t_lr carries light entering from the
// left out to the right; r_l reflects light entering from the left.
struct TwoPort {
  cplx t_lr;
  cplx t_rl;
  cplx r_l;
  cplx r_r;
};

TwoPort symmetric(cplx t, cplx r) { return {t, t, r, r}; }

TwoPort propagation(double phase) {
  const cplx p = std::polar(1.0, phase);
  return {p, p, 0.0, 0.0};
}

// Redheffer star product: `a` on the left, `b` on the right.
TwoPort chain(const TwoPort& a, const TwoPort& b) {
  const cplx denom = 1.0 - a.r_r * b.r_l;
  if (denom == 0.0) {
    // Only two perfect mirrors facing each other (|r| = 1, t = 0) get here.
    // The cavity between them is sealed off, so each outer mirror reflects on
    // its own and nothing is transmitted.
    return {0.0, 0.0, a.r_l, b.r_r};
  }
  return {
      a.t_lr * b.t_lr / denom,
      b.t_rl * a.t_rl / denom,
      a.r_l + a.t_rl * b.r_l * a.t_lr / denom,
      b.r_r + b.t_lr * a.r_r * b.t_rl / denom,
  };
}

}  // namespace

cplx reflection_amplitude(const Emitter& e, double probe_mhz) {
  const double detuning = probe_mhz - e.f0_mhz;
  return -e.coherent_coupling() / cplx(1.0, -2.0 * detuning / e.gamma0_mhz);
}

cplx transmission_amplitude(const Emitter& e, double probe_mhz) {
  return 1.0 + reflection_amplitude(e, probe_mhz);
}

ScatterResponse single_emitter_response(const Emitter& e, const SpectralGrid& grid) {
  validate(e);
  ScatterResponse out{grid, std::vector<cplx>(grid.size()), std::vector<cplx>(grid.size())};
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const cplx r = reflection_amplitude(e, grid[i]);
    out.r[i] = r;
    out.t[i] = 1.0 + r;
  }
  return out;
}

ScatterResponse cascade_response(std::span<const Emitter> emitters,
                                 std::span<const GuideSegment> segments,
                                 const SpectralGrid& grid) {
  if (emitters.empty()) throw ValidationError("cascade needs at least one emitter");
  if (segments.size() + 1 != emitters.size()) {
    throw ValidationError("cascade needs exactly one segment between consecutive emitters");
  }
  for (const auto& e : emitters) validate(e);
  for (std::size_t k = 1; k < emitters.size(); ++k) {
    if (!(emitters[k].position_um > emitters[k - 1].position_um)) {
      throw ValidationError("cascade emitter positions must be strictly increasing");
    }
  }
  for (const auto& s : segments) {
    if (!(s.length_um >= 0.0) || !std::isfinite(s.phase_per_um)) {
      throw ValidationError("segment length must be non-negative and phase finite");
    }
  }

  if (emitters.size() == 1) return single_emitter_response(emitters.front(), grid);

  ScatterResponse out{grid, std::vector<cplx>(grid.size()), std::vector<cplx>(grid.size())};
  std::vector<TwoPort> hops;
  hops.reserve(segments.size());
  for (const auto& s : segments) hops.push_back(propagation(s.phase()));

  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double f = grid[i];
    TwoPort total = symmetric(transmission_amplitude(emitters[0], f),
                              reflection_amplitude(emitters[0], f));
    for (std::size_t k = 1; k < emitters.size(); ++k) {
      total = chain(total, hops[k - 1]);
      total = chain(total, symmetric(transmission_amplitude(emitters[k], f),
                                     reflection_amplitude(emitters[k], f)));
    }
    out.t[i] = total.t_lr;
    out.r[i] = total.r_l;
  }
  return out;
}

std::vector<GuideSegment> segments_from_positions(std::span<const Emitter> emitters,
                                                  double phase_per_um) {
  std::vector<GuideSegment> out;
  for (std::size_t k = 1; k < emitters.size(); ++k) {
    out.push_back({emitters[k].position_um - emitters[k - 1].position_um, phase_per_um});
  }
  return out;
}

std::vector<double> extinction_spectrum(const ScatterResponse& resp) {
  std::vector<double> out(resp.t.size());
  std::transform(resp.t.begin(), resp.t.end(), out.begin(),
                 [](cplx t) { return std::clamp(1.0 - std::norm(t), 0.0, 1.0); });
  return out;
}

PeakShape locate_peak(const SpectralGrid& grid, std::span<const double> values) {
  if (values.size() != grid.size()) throw ValidationError("values do not match grid");
  const auto it = std::max_element(values.begin(), values.end());
  const auto peak = static_cast<std::size_t>(it - values.begin());
  PeakShape out{*it, grid[peak], std::numeric_limits<double>::quiet_NaN()};
  const double half = 0.5 * out.height;
  if (!(half > 0.0)) return out;

  auto crossing = [&](std::size_t lo, std::size_t hi) {
    // values[lo] and values[hi] straddle the half level.
    const double frac = (half - values[lo]) / (values[hi] - values[lo]);
    return grid[lo] + frac * (grid[hi] - grid[lo]);
  };

  std::size_t left = peak;
  while (left > 0 && values[left] > half) --left;
  std::size_t right = peak;
  while (right + 1 < values.size() && values[right] > half) ++right;
  if (values[left] > half || values[right] > half) return out;
  out.fwhm_mhz = crossing(right, right - 1) - crossing(left, left + 1);
  return out;
}

}  // namespace nanoguide
