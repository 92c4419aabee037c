#pragma once

// Driven two-level open system in the rotating frame of the pump.
//
// Basis |g> = 0, |e> = 1, lowering operator sigma = |g><e|. Density matrices are
// vectorized column-major, vec = (rho_gg, rho_eg, rho_ge, rho_ee), so that
// vec(A rho B) = (B^T kron A) vec(rho). Rates are angular (rad/us) and times are
// in us throughout this header.

#include <complex>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "nanoguide/core.hpp"

namespace nanoguide {

using Superoperator = Eigen::Matrix<std::complex<double>, 4, 4>;
using VecState = Eigen::Matrix<std::complex<double>, 4, 1>;

class DensityMatrix {
 public:
  DensityMatrix() : m_(Eigen::Matrix2cd::Zero()) { m_(0, 0) = 1.0; }
  explicit DensityMatrix(const Eigen::Matrix2cd& m) : m_(m) {}

  static DensityMatrix ground() { return DensityMatrix(); }
  static DensityMatrix excited();
  static DensityMatrix from_vec(const VecState& v);

  [[nodiscard]] const Eigen::Matrix2cd& matrix() const { return m_; }
  [[nodiscard]] VecState vec() const;

  [[nodiscard]] double ground_population() const { return m_(0, 0).real(); }
  [[nodiscard]] double excited_population() const { return m_(1, 1).real(); }
  /// <e|rho|g> = <sigma>.
  [[nodiscard]] std::complex<double> coherence_eg() const { return m_(1, 0); }
  [[nodiscard]] std::complex<double> trace() const { return m_.trace(); }

  /// Largest deviation from Hermiticity, |rho - rho^dagger|_max.
  [[nodiscard]] double hermiticity_error() const;
  /// Smallest eigenvalue of the Hermitian part.
  [[nodiscard]] double min_eigenvalue() const;

 private:
  Eigen::Matrix2cd m_;
};

/// Angular drive parameters: Rabi frequency and drive-minus-emitter detuning.
struct Drive {
  double rabi = 0.0;
  double detuning = 0.0;
};

struct LiouvilleProblem {
  /// Population decay rate (rad/us).
  double gamma = 0.0;
  /// Extra decay of the optical coherence beyond gamma/2 (rad/us).
  double gamma_phi = 0.0;
  /// drives[0] is the pump and sets the frame; drives[1], if present, a probe.
  std::vector<Drive> drives;

  /// Lifetime-limited emitter under one drive, resolving Rabi units once.
  static LiouvilleProblem driven(const Emitter& e, const DriveField& pump,
                                 double gamma_phi_mhz = 0.0);

  void check() const;
};

/// Generator of d vec(rho)/dt for a single (pump) drive. Throws ValidationError
/// for two drives: the two-tone problem has no static rotating frame.
Superoperator build_liouvillian(const LiouvilleProblem& p);

/// Vectorized -i[H, .] for an arbitrary 2x2 Hamiltonian.
Superoperator commutator_superoperator(const Eigen::Matrix2cd& h);

/// Solves L rho = 0 with unit trace. Throws NumericalError when the null space
/// is degenerate (e.g. gamma = 0).
DensityMatrix steady_state(const Superoperator& l);

enum class Integrator { exact, rk4 };

struct EvolveOptions {
  Integrator method = Integrator::exact;
  /// RK4 step bound; 0 picks 1e-3 of the fastest rate in the generator.
  double max_step = 0.0;
};

/// State at each requested time (sorted, non-negative, in us).
std::vector<DensityMatrix> evolve(const Superoperator& l, const DensityMatrix& rho0,
                                  std::span<const double> times,
                                  const EvolveOptions& opts = {});

/// Normalized intensity correlation via quantum regression:
/// g2(tau) = rho_ee(tau | rho(0) = ground) / rho_ee(steady state).
std::vector<double> g2(const LiouvilleProblem& p, std::span<const double> taus,
                       const EvolveOptions& opts = {});

/// Closed-form steady-state excited population for gamma_phi = 0:
/// (rabi^2/4) / (detuning^2 + gamma^2/4 + rabi^2/2).
double saturated_excited_population(double rabi, double detuning, double gamma);

struct G2Point {
  double value = 0.0;
  double d_rabi = 0.0;
  double d_gamma = 0.0;
};

/// Resonant, lifetime-limited g2 in closed form with its gradient:
/// 1 - exp(-3 gamma tau / 4) [cos(mu tau) + (3 gamma / 4 mu) sin(mu tau)],
/// mu^2 = rabi^2 - gamma^2/16, continued analytically through mu^2 <= 0.
/// Any consistent rate/time units.
G2Point resonant_g2(double rabi, double gamma, double tau);

}  // namespace nanoguide
