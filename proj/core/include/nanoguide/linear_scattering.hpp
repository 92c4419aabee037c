#pragma once

// Weak-probe scattering of single emitters and emitter chains in the guide.

#include <complex>
#include <span>
#include <vector>

#include "nanoguide/core.hpp"

namespace nanoguide {

using cplx = std::complex<double>;

/// Complex transmission and reflection amplitudes sampled on a grid.
/// Whatever is missing from |t|^2 + |r|^2 is lost to unguided or red-shifted
/// channels.
struct ScatterResponse {
  SpectralGrid grid;
  std::vector<cplx> t;
  std::vector<cplx> r;
};

/// Free propagation between two emitters.
struct GuideSegment {
  double length_um = 0.0;
  double phase_per_um = 0.0;

  [[nodiscard]] double phase() const { return length_um * phase_per_um; }
};

/// r(d) = -alpha beta / (1 - 2 i d / gamma0) for probe-minus-emitter detuning d.
cplx reflection_amplitude(const Emitter& e, double probe_mhz);
/// t = 1 + r.
cplx transmission_amplitude(const Emitter& e, double probe_mhz);

ScatterResponse single_emitter_response(const Emitter& e, const SpectralGrid& grid);

/// Chain of emitters ordered along the guide, separated by `segments`
/// (segments.size() == emitters.size() - 1).
ScatterResponse cascade_response(std::span<const Emitter> emitters,
                                 std::span<const GuideSegment> segments,
                                 const SpectralGrid& grid);

/// Segments whose lengths are the gaps between consecutive emitter positions.
std::vector<GuideSegment> segments_from_positions(std::span<const Emitter> emitters,
                                                  double phase_per_um);

/// 1 - |t|^2 per grid point, clamped to [0, 1].
std::vector<double> extinction_spectrum(const ScatterResponse& resp);

struct PeakShape {
  double height = 0.0;
  double location_mhz = 0.0;
  /// Width between linearly interpolated half-maximum crossings; NaN if the
  /// peak is not bracketed by the grid.
  double fwhm_mhz = 0.0;
};

/// Height, location and FWHM of the largest value in a sampled curve.
PeakShape locate_peak(const SpectralGrid& grid, std::span<const double> values);

}  // namespace nanoguide
