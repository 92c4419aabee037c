#include "nanoguide/inference.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "nanoguide/dynamics.hpp"
#include "nanoguide/least_squares.hpp"

namespace nanoguide {

namespace {

std::size_t index_of(const FitResult& fit, std::string_view name) {
  const auto it = std::find(fit.names.begin(), fit.names.end(), name);
  if (it == fit.names.end()) throw ValidationError("fit has no parameter '" + std::string(name) + "'");
  return static_cast<std::size_t>(it - fit.names.begin());
}

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(12) << v;
  return os.str();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void require_increasing(std::span<const double> x) {
  for (std::size_t i = 1; i < x.size(); ++i) {
    if (!(x[i] > x[i - 1])) throw ValidationError("x must be strictly increasing");
  }
}

}  // namespace

double FitResult::value(std::string_view name) const { return values[index_of(*this, name)]; }
double FitResult::sigma(std::string_view name) const { return sigmas[index_of(*this, name)]; }
bool FitResult::has_flag(std::string_view flag) const {
  return std::find(flags.begin(), flags.end(), flag) != flags.end();
}

void write_key_value(std::ostream& os, const FitResult& fit) {
  for (std::size_t i = 0; i < fit.names.size(); ++i) {
    os << fit.names[i] << " = " << format_double(fit.values[i]) << '\n';
    os << fit.names[i] << "_sigma = " << format_double(fit.sigmas[i]) << '\n';
  }
  os << "residual_norm = " << format_double(fit.residual_norm) << '\n';
  os << "converged = " << (fit.converged ? "true" : "false") << '\n';
  os << "iterations = " << fit.iterations << '\n';
  os << "flags = ";
  for (std::size_t i = 0; i < fit.flags.size(); ++i) os << (i ? ";" : "") << fit.flags[i];
  os << '\n';
}

std::string csv_header(const FitResult& fit) {
  std::string out;
  for (const auto& n : fit.names) out += n + "," + n + "_sigma,";
  return out + "residual_norm,converged,iterations,flags";
}

std::string csv_row(const FitResult& fit) {
  std::string out;
  for (std::size_t i = 0; i < fit.names.size(); ++i) {
    out += format_double(fit.values[i]) + "," + format_double(fit.sigmas[i]) + ",";
  }
  out += format_double(fit.residual_norm) + "," + (fit.converged ? "true" : "false") + "," +
         std::to_string(fit.iterations) + ",";
  for (std::size_t i = 0; i < fit.flags.size(); ++i) out += (i ? ";" : "") + fit.flags[i];
  return out;
}

// --- Lorentzian -------------------------------------------------------------

LeastSquaresProblem lorentzian_problem(std::span<const double> x, std::span<const double> y,
                                       std::size_t n_peaks) {
  LeastSquaresProblem prob;
  prob.n_residuals = static_cast<Eigen::Index>(x.size());
  prob.evaluate = [x, y, n_peaks](const Eigen::VectorXd& p, Eigen::VectorXd& r,
                                  Eigen::MatrixXd* jac) {
    for (std::size_t k = 0; k < n_peaks; ++k) {
      if (!(p(3 * static_cast<Eigen::Index>(k) + 2) > 0.0)) {
        r.setConstant(std::numeric_limits<double>::infinity());
        return;
      }
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
      const auto row = static_cast<Eigen::Index>(i);
      double model = p(0);
      if (jac) (*jac)(row, 0) = 1.0;
      for (std::size_t k = 0; k < n_peaks; ++k) {
        const auto c = 3 * static_cast<Eigen::Index>(k) + 1;
        const double center = p(c);
        const double width = p(c + 1);
        const double amp = p(c + 2);
        const double u = 2.0 * (x[i] - center) / width;
        const double l = 1.0 / (1.0 + u * u);
        model += amp * l;
        if (jac) {
          (*jac)(row, c) = amp * l * l * 4.0 * u / width;
          (*jac)(row, c + 1) = amp * l * l * 2.0 * u * u / width;
          (*jac)(row, c + 2) = l;
        }
      }
      r(row) = model - y[i];
    }
  };
  return prob;
}

namespace {

struct Extremum {
  std::size_t index;
  double magnitude;
};

// Local extrema of |dev|, largest first; ties keep grid order.
std::vector<Extremum> prominent_extrema(const std::vector<double>& dev) {
  std::vector<Extremum> out;
  const std::size_t n = dev.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double a = std::abs(dev[i]);
    const bool left_ok = i == 0 || a >= std::abs(dev[i - 1]);
    const bool right_ok = i + 1 == n || a > std::abs(dev[i + 1]);
    if (left_ok && right_ok && a > 0.0) out.push_back({i, a});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Extremum& l, const Extremum& r) { return l.magnitude > r.magnitude; });
  return out;
}

double half_width_estimate(std::span<const double> x, const std::vector<double>& dev,
                           std::size_t peak) {
  const double half = 0.5 * std::abs(dev[peak]);
  std::size_t lo = peak;
  while (lo > 0 && std::abs(dev[lo]) > half) --lo;
  std::size_t hi = peak;
  while (hi + 1 < dev.size() && std::abs(dev[hi]) > half) ++hi;
  const double min_width = 2.0 * (x.back() - x.front()) / static_cast<double>(x.size() - 1);
  return std::max(x[hi] - x[lo], min_width);
}

}  // namespace

FitResult fit_lorentzian(std::span<const double> x, std::span<const double> y,
                         std::size_t n_peaks) {
  if (n_peaks < 1) throw ValidationError("n_peaks must be >= 1");
  if (x.size() != y.size()) throw ValidationError("x and y differ in length");
  if (x.size() < 3 * n_peaks + 2) throw ValidationError("too few points for the requested peaks");
  require_increasing(x);

  FitResult fit;
  for (std::size_t k = 1; k <= n_peaks; ++k) {
    for (const char* stem : {"center_", "fwhm_", "amplitude_"}) {
      fit.names.push_back(stem + std::to_string(k));
    }
  }
  fit.names.push_back("baseline");

  const double base0 = median(std::vector<double>(y.begin(), y.end()));
  std::vector<double> dev(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) dev[i] = y[i] - base0;
  const auto extrema = prominent_extrema(dev);
  const double scale = std::max(1.0, std::abs(base0));
  if (extrema.empty() || extrema.front().magnitude <= 1e-12 * scale) {
    const double mid = 0.5 * (x.front() + x.back());
    for (std::size_t k = 0; k < n_peaks; ++k) {
      fit.values.insert(fit.values.end(), {mid, 0.0, 0.0});
    }
    fit.values.push_back(base0);
    fit.sigmas.assign(fit.values.size(), 0.0);
    fit.residual_norm = std::sqrt(std::inner_product(dev.begin(), dev.end(), dev.begin(), 0.0));
    fit.flags.push_back("no_signal");
    return fit;
  }

  // Start sets: the n strongest extrema, then up to two variants swapping the
  // weakest member for the next candidates.
  std::vector<std::vector<std::size_t>> starts;
  const std::size_t avail = std::min<std::size_t>(extrema.size(), n_peaks + 2);
  {
    std::vector<std::size_t> first;
    for (std::size_t k = 0; k < std::min(n_peaks, extrema.size()); ++k) first.push_back(k);
    starts.push_back(first);
    for (std::size_t j = first.size(); j < avail && starts.size() < 3; ++j) {
      auto alt = first;
      alt.back() = j;
      starts.push_back(alt);
    }
  }

  const auto prob = lorentzian_problem(x, y, n_peaks);
  LmReport best;
  bool have_best = false;
  for (const auto& set : starts) {
    Eigen::VectorXd p0(static_cast<Eigen::Index>(3 * n_peaks + 1));
    p0(0) = base0;
    std::size_t filled = 0;
    for (std::size_t member : set) {
      const std::size_t idx = extrema[member].index;
      const auto c = 3 * static_cast<Eigen::Index>(filled) + 1;
      p0(c) = x[idx];
      p0(c + 1) = half_width_estimate(x, dev, idx);
      p0(c + 2) = dev[idx];
      ++filled;
    }
    // Fewer extrema than peaks: split the strongest feature symmetrically.
    for (std::size_t k = filled; k < n_peaks; ++k) {
      const auto src = 1;
      const auto c = 3 * static_cast<Eigen::Index>(k) + 1;
      const double w = p0(src + 1);
      const double sign = k % 2 == 0 ? 1.0 : -1.0;
      p0(c) = p0(src) + sign * 0.5 * w * static_cast<double>((k + 1) / 2);
      p0(c + 1) = w;
      p0(c + 2) = 0.5 * p0(src + 2);
    }
    const LmReport rep = levenberg_marquardt(prob, p0);
    if (!have_best || rep.cost < best.cost) {
      best = rep;
      have_best = true;
    }
  }

  // Order peaks by center.
  std::vector<std::size_t> order(n_peaks);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return best.params(3 * static_cast<Eigen::Index>(a) + 1) <
           best.params(3 * static_cast<Eigen::Index>(b) + 1);
  });
  const Eigen::MatrixXd cov = parameter_covariance(best);
  for (std::size_t k : order) {
    for (Eigen::Index j = 1; j <= 3; ++j) {
      const auto c = 3 * static_cast<Eigen::Index>(k) + j;
      fit.values.push_back(best.params(c));
      fit.sigmas.push_back(std::sqrt(std::max(0.0, cov(c, c))));
    }
  }
  fit.values.push_back(best.params(0));
  fit.sigmas.push_back(std::sqrt(std::max(0.0, cov(0, 0))));
  fit.residual_norm = best.residuals.norm();
  fit.converged = best.converged;
  fit.iterations = best.iterations;
  if (!fit.converged) fit.flags.push_back("not_converged");
  return fit;
}

// --- g2 ---------------------------------------------------------------------

LeastSquaresProblem g2_problem(std::span<const double> taus, std::span<const double> g2v) {
  LeastSquaresProblem prob;
  prob.n_residuals = static_cast<Eigen::Index>(taus.size());
  prob.evaluate = [taus, g2v](const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd* jac) {
    if (!(p(0) >= 0.0) || !(p(1) > 0.0)) {
      r.setConstant(std::numeric_limits<double>::infinity());
      return;
    }
    for (std::size_t i = 0; i < taus.size(); ++i) {
      const auto row = static_cast<Eigen::Index>(i);
      const G2Point g = resonant_g2(p(0), p(1), std::abs(taus[i]));
      r(row) = g.value - g2v[i];
      if (jac) {
        (*jac)(row, 0) = g.d_rabi;
        (*jac)(row, 1) = g.d_gamma;
      }
    }
  };
  return prob;
}

namespace {

// Rough decay-rate scale: after antibunching the weak-drive form reaches 1/2
// at gamma tau ~ 2.46.
double gamma_estimate(std::span<const double> taus, std::span<const double> g2v) {
  for (std::size_t i = 0; i < taus.size(); ++i) {
    if (g2v[i] >= 0.5 && taus[i] > 0.0) return 2.46 / std::abs(taus[i]);
  }
  return 4.0 / std::max(std::abs(taus.back()), 1e-12);
}

}  // namespace

FitResult fit_g2(std::span<const double> taus_ns, std::span<const double> g2_values) {
  if (taus_ns.size() != g2_values.size()) throw ValidationError("taus and g2 differ in length");
  if (taus_ns.size() < 4) throw ValidationError("too few points for a g2 fit");
  for (double t : taus_ns) {
    if (!std::isfinite(t)) throw ValidationError("taus must be finite");
  }

  const auto prob = g2_problem(taus_ns, g2_values);
  const double gamma0 = gamma_estimate(taus_ns, g2_values);
  LmReport best;
  bool have_best = false;
  for (double gamma_scale : {1.0, 0.5, 2.0}) {
    for (double rabi_ratio : {0.9, 0.3, 2.0}) {
      Eigen::Vector2d p0(rabi_ratio * gamma0 * gamma_scale, gamma0 * gamma_scale);
      const LmReport rep = levenberg_marquardt(prob, p0);
      if (!have_best || rep.cost < best.cost) {
        best = rep;
        have_best = true;
      }
    }
  }

  const double rabi = best.params(0);
  const double gamma = best.params(1);
  const Eigen::MatrixXd cov = parameter_covariance(best);
  // Delta method for rabi/gamma and 1/gamma.
  Eigen::Matrix2d d;
  d << 1.0 / gamma, -rabi / (gamma * gamma), 0.0, -1.0 / (gamma * gamma);
  const Eigen::Matrix2d out_cov = d * cov * d.transpose();

  FitResult fit;
  fit.names = {"rabi_gamma0", "lifetime_ns"};
  fit.values = {rabi / gamma, 1.0 / gamma};
  fit.sigmas = {std::sqrt(std::max(0.0, out_cov(0, 0))), std::sqrt(std::max(0.0, out_cov(1, 1)))};
  fit.residual_norm = best.residuals.norm();
  fit.converged = best.converged;
  fit.iterations = best.iterations;
  if (!fit.converged) fit.flags.push_back("not_converged");
  if (rabi < 0.25 * gamma) fit.flags.push_back("overdamped");
  return fit;
}

// --- Stark ------------------------------------------------------------------

namespace {

struct PolyFit {
  Eigen::VectorXd coef;
  Eigen::VectorXd sigma;
  double rss = 0.0;
};

PolyFit polyfit(std::span<const double> v, std::span<const double> f, int degree) {
  const auto n = static_cast<Eigen::Index>(v.size());
  Eigen::MatrixXd x(n, degree + 1);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double pw = 1.0;
    for (int k = 0; k <= degree; ++k) {
      x(i, k) = pw;
      pw *= v[static_cast<std::size_t>(i)];
    }
    y(i) = f[static_cast<std::size_t>(i)];
  }
  const auto qr = x.colPivHouseholderQr();
  if (qr.rank() < degree + 1) throw ValidationError("voltages do not determine the polynomial");
  PolyFit out;
  out.coef = qr.solve(y);
  out.rss = (x * out.coef - y).squaredNorm();
  const double dof = static_cast<double>(n - (degree + 1));
  const double s2 = dof > 0.0 ? out.rss / dof : 0.0;
  const Eigen::MatrixXd xtx_inv = (x.transpose() * x).inverse();
  out.sigma = (s2 * xtx_inv.diagonal()).cwiseMax(0.0).cwiseSqrt();
  return out;
}

}  // namespace

FitResult fit_stark_slope(std::span<const double> voltages, std::span<const double> centers_mhz,
                          int degree, double noise_sigma_mhz) {
  if (degree < 1 || degree > 2) throw ValidationError("Stark fit degree must be 1 or 2");
  if (voltages.size() != centers_mhz.size()) throw ValidationError("voltages and centers differ");
  if (voltages.size() < static_cast<std::size_t>(degree) + 1) {
    throw ValidationError("too few points for the Stark fit");
  }

  const PolyFit pf = polyfit(voltages, centers_mhz, degree);
  FitResult fit;
  fit.names = {"f0_mhz", "a_ghz_per_v", "b_ghz_per_v2"};
  fit.values = {pf.coef(0), pf.coef(1) * 1e-3, degree == 2 ? pf.coef(2) * 1e-3 : 0.0};
  fit.sigmas = {pf.sigma(0), pf.sigma(1) * 1e-3, degree == 2 ? pf.sigma(2) * 1e-3 : 0.0};
  fit.residual_norm = std::sqrt(pf.rss);
  fit.converged = true;

  const auto n = static_cast<double>(voltages.size());
  const double rms = std::sqrt(pf.rss / n);
  bool large = noise_sigma_mhz > 0.0 && rms > 3.0 * noise_sigma_mhz;
  if (degree == 1 && voltages.size() > 3) {
    const PolyFit quad = polyfit(voltages, centers_mhz, 2);
    double scale = 1.0;
    for (double c : centers_mhz) scale = std::max(scale, std::abs(c));
    const bool above_rounding = rms > 1e-9 * scale;
    const bool quadratic_evident =
        quad.sigma(2) == 0.0 ? quad.coef(2) != 0.0 : std::abs(quad.coef(2)) > 5.0 * quad.sigma(2);
    large = large || (above_rounding && quadratic_evident);
  }
  if (large) fit.flags.push_back("large_residual");
  return fit;
}

double extinction_to_beta(double depth, double alpha) {
  if (!(depth >= 0.0 && depth <= 1.0)) throw ValidationError("depth must lie in [0, 1]");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ValidationError("alpha must lie in (0, 1]");
  const double beta = (1.0 - std::sqrt(1.0 - depth)) / alpha;
  if (beta > 1.0 + 1e-12) {
    throw OutOfModelError("extinction depth implies beta > 1 for this alpha");
  }
  return std::min(beta, 1.0);
}

XYData read_xy_csv(std::istream& is) {
  XYData out;
  std::string line;
  std::size_t lineno = 0;
  bool header_allowed = true;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw ValidationError("csv line " + std::to_string(lineno) + ": expected two columns");
    }
    try {
      std::size_t used_x = 0;
      std::size_t used_y = 0;
      const std::string xs = line.substr(0, comma);
      const std::string ys = line.substr(comma + 1);
      const double xv = std::stod(xs, &used_x);
      const double yv = std::stod(ys, &used_y);
      if (xs.find_first_not_of(" \t", used_x) != std::string::npos ||
          ys.find_first_not_of(" \t", used_y) != std::string::npos) {
        throw std::invalid_argument("trailing characters");
      }
      out.x.push_back(xv);
      out.y.push_back(yv);
      header_allowed = false;
    } catch (const std::exception&) {
      if (!header_allowed) {
        throw ValidationError("csv line " + std::to_string(lineno) + ": not numeric");
      }
      header_allowed = false;
    }
  }
  return out;
}

}  // namespace nanoguide
