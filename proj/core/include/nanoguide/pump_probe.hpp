#pragma once

// Weak-probe transmission through a molecule dressed by a strong pump.
//
// Detuning conventions (all MHz): the pump detuning is pump - molecule and the
// pump-probe detuning delta_pp is probe - pump. The probe is treated to first
// order: its coherence is obtained from the resolvent of the pump-only
// Liouvillian, and the conversion to a transmission amplitude is fixed so that
// a vanishing pump reproduces the linear single-emitter response exactly.

#include <complex>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "nanoguide/core.hpp"
#include "nanoguide/dynamics.hpp"

namespace nanoguide {

class DressedEmitter {
 public:
  DressedEmitter(const Emitter& e, const DriveField& pump, double gamma_phi_mhz = 0.0);

  /// Probe coherence <sigma> at the probe frequency per unit probe Rabi
  /// frequency (angular), i.e. the first-order response.
  [[nodiscard]] std::complex<double> probe_coherence(double delta_pp_mhz) const;
  /// Probe transmission amplitude t_p = 1 - i alpha beta gamma * coherence.
  [[nodiscard]] std::complex<double> probe_transmission(double delta_pp_mhz) const;

  [[nodiscard]] const DensityMatrix& pump_steady_state() const { return rho_ss_; }
  [[nodiscard]] const Superoperator& liouvillian() const { return l_; }
  [[nodiscard]] const Emitter& emitter() const { return emitter_; }
  [[nodiscard]] const DriveField& pump() const { return pump_; }

 private:
  Emitter emitter_;
  DriveField pump_;
  Superoperator l_;
  Superoperator bordered_;
  DensityMatrix rho_ss_;
  VecState source_;
};

struct PumpProbeScan {
  Emitter emitter;
  DriveField pump;
  RabiFrequency probe_rabi = RabiFrequency::in_gamma0(0.1);
  SpectralGrid pp_grid{-300.0, 300.0, 601};
  /// Complex amplitude of pump light scattered into the guide, relative to the
  /// probe field at the detector, for a resonant pump.
  std::complex<double> pump_scatter_amp{0.0, 0.0};
  double gamma_phi_mhz = 0.0;
};

/// Probes much above 0.2 gamma0 leave the first-order regime.
bool probe_is_weak(const PumpProbeScan& scan);

std::complex<double> probe_response(const PumpProbeScan& scan, double delta_pp_mhz);
std::vector<std::complex<double>> probe_response(const PumpProbeScan& scan);

/// Directly scattered pump field at the detector: pump_scatter_amp weighted by
/// the complex Lorentzian of the pump-molecule detuning.
std::complex<double> pump_scatter_field(const PumpProbeScan& scan);

/// |t_p + E_scatter|^2, detected power relative to the bare probe.
double raw_detected(const PumpProbeScan& scan, double delta_pp_mhz);

/// Real, non-negative pump_scatter_amp that puts the far-detuned raw signal at
/// `plateau` (e.g. 1.05).
double calibrate_pump_scatter(const PumpProbeScan& scan, double plateau);

struct TwoToneOptions {
  /// Probe Rabi frequency used for the simulation, in units of gamma0.
  double probe_rabi_gamma0 = 1e-3;
  /// Settling time before extraction, in units of 1/gamma.
  double settle = 40.0;
  /// Minimum extraction window, in units of 1/gamma (rounded up to whole periods).
  double window = 20.0;
  /// Integration steps per probe beat period (lower bound).
  int steps_per_period = 400;
};

/// Independent check of probe_transmission: integrates the master equation with
/// both tones present and Fourier-extracts the coherence at the probe frequency.
/// delta_pp must be nonzero.
std::complex<double> two_tone_probe_transmission(const Emitter& e, const DriveField& pump,
                                                 double delta_pp_mhz,
                                                 const TwoToneOptions& opts = {});

struct TransmissionMap {
  std::vector<double> pump_detunings_mhz;  // rows
  SpectralGrid pp_grid;                    // columns
  double gamma0_mhz = 0.0;
  double pump_rabi_mhz = 0.0;
  Eigen::MatrixXd raw;
  Eigen::MatrixXd coherent;
};

/// Raw detected power over (pump detuning, delta_pp), normalized per row.
/// The scan's own pump detuning is ignored in favour of the row values.
TransmissionMap build_transmission_map(const PumpProbeScan& scan,
                                       std::span<const double> pump_detunings_mhz,
                                       unsigned threads = 1);

/// Divides each row of map.raw by the median of its wing points (the outer 5%
/// of the grid on each side). Throws ValidationError if any wing point lies
/// within 20 gamma0 of the dressed-state features.
Eigen::MatrixXd normalize_probe(const TransmissionMap& map);

/// The wing test of normalize_probe on its own, so a scan can be rejected
/// before it is computed.
void check_wing_clearance(const SpectralGrid& pp_grid, double gamma0_mhz, double pump_rabi_mhz,
                          std::span<const double> pump_detunings_mhz);

/// 1 - |t_p(0)|^2 for a resonant pump.
double on_resonance_attenuation(const Emitter& e, const RabiFrequency& pump_rabi);

struct SummaryOptions {
  /// Nominal pump - molecule detuning.
  double pump_detuning_mhz = 0.0;
  /// Molecule offsets sampled uniformly in [-jitter, jitter] (odd, >= 1).
  std::size_t jitter_samples = 9;
  /// Coarse delta_pp samples before local refinement.
  std::size_t coarse_points = 801;
  unsigned threads = 1;
};

struct GainAttenuationPoint {
  double pump_rabi_gamma0 = 0.0;
  /// Largest 1 - |t_p|^2 over delta_pp and where it occurs.
  double attenuation = 0.0;
  double attenuation_at_mhz = 0.0;
  /// Largest |t_p|^2 - 1 over delta_pp, clipped at 0, and where it occurs.
  double gain = 0.0;
  double gain_at_mhz = 0.0;
  /// Envelope over molecular offsets within +-jitter.
  double attenuation_min = 0.0;
  double attenuation_max = 0.0;
  double gain_min = 0.0;
  double gain_max = 0.0;
};

std::vector<GainAttenuationPoint> gain_attenuation_summary(const Emitter& e,
                                                           std::span<const double> pump_rabi_gamma0,
                                                           double jitter_mhz,
                                                           const SummaryOptions& opts = {});

}  // namespace nanoguide
