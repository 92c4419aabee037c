#include "nanoguide/photostream.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <complex>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <string>

#include "nanoguide/parallel.hpp"

namespace nanoguide {

using cd = std::complex<double>;

std::string_view to_string(Port p) {
  switch (p) {
    case Port::left: return "left";
    case Port::right: return "right";
    case Port::free_space: return "free_space";
  }
  return "?";
}

std::string_view to_string(Channel c) {
  return c == Channel::zpl ? "zpl" : "red_shifted";
}

Port parse_port(std::string_view s) {
  if (s == "left") return Port::left;
  if (s == "right") return Port::right;
  if (s == "free_space") return Port::free_space;
  throw ValidationError("unknown port '" + std::string(s) + "'");
}

Channel parse_channel(std::string_view s) {
  if (s == "zpl") return Channel::zpl;
  if (s == "red_shifted") return Channel::red_shifted;
  throw ValidationError("unknown channel '" + std::string(s) + "'");
}

namespace {

// No-jump evolution psi(t) = exp(A t) psi0 with A = -i H_eff, in closed form:
// exp(A t) = e^{m t} [cosh(q t) I + sinh(q t)/q (A - m I)], m = tr A / 2.
class NoJumpPropagator {
 public:
  NoJumpPropagator(double rabi, double detuning, double kappa) : kappa_(kappa) {
    a_ << 0.0, cd(0.0, -0.5 * rabi), cd(0.0, -0.5 * rabi), cd(-0.5 * kappa, detuning);
    m_ = 0.5 * (a_(0, 0) + a_(1, 1));
    const cd half_diff = 0.5 * (a_(0, 0) - a_(1, 1));
    q_ = std::sqrt(half_diff * half_diff + a_(0, 1) * a_(1, 0));
    shifted_ = a_ - m_ * Eigen::Matrix2cd::Identity();
  }

  // Returns psi(t) for psi0 = basis state `from` (0 = g, 1 = e).
  [[nodiscard]] Eigen::Vector2cd evolve(int from, double t) const {
    cd c;
    cd s;
    const cd qt = q_ * t;
    if (std::abs(qt) < 1e-6) {
      const cd base = std::exp(m_ * t);
      c = base * (1.0 + 0.5 * qt * qt);
      s = base * t * (1.0 + qt * qt / 6.0);
    } else {
      const cd plus = std::exp((m_ + q_) * t);
      const cd minus = std::exp((m_ - q_) * t);
      c = 0.5 * (plus + minus);
      s = 0.5 * (plus - minus) / q_;
    }
    Eigen::Vector2cd psi = s * shifted_.col(from);
    psi(from) += c;
    return psi;
  }

  [[nodiscard]] double kappa() const { return kappa_; }

 private:
  Eigen::Matrix2cd a_;
  Eigen::Matrix2cd shifted_;
  cd m_;
  cd q_;
  double kappa_;
};

// Waiting time tau with survival S(tau) = u, or nullopt if none occurs before
// `horizon`.
std::optional<double> waiting_time(const NoJumpPropagator& prop, int from, double u,
                                   double horizon) {
  auto survival = [&](double t) { return prop.evolve(from, t).squaredNorm(); };
  double lo = 0.0;
  double hi = 1.0 / prop.kappa();
  while (survival(hi) > u) {
    lo = hi;
    if (lo > horizon) return std::nullopt;
    hi *= 2.0;
  }
  double t = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const Eigen::Vector2cd psi = prop.evolve(from, t);
    const double f = psi.squaredNorm() - u;
    if (f > 0.0) {
      lo = t;
    } else {
      hi = t;
    }
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) break;
    const double slope = -prop.kappa() * std::norm(psi(1));
    double next = slope < 0.0 ? t - f / slope : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == t) break;
    t = next;
  }
  if (t > horizon) return std::nullopt;
  return t;
}

}  // namespace

PhotonStream simulate_stream(const LiouvilleProblem& p, const Emitter& e, double duration_ns,
                             std::uint64_t seed, const StreamOptions& opts) {
  p.check();
  validate(e);
  if (p.drives.size() != 1) throw ValidationError("simulate_stream takes a single drive");
  if (!(p.gamma > 0.0)) throw ValidationError("simulate_stream needs gamma > 0");
  if (!(duration_ns > 0.0)) throw ValidationError("duration must be positive");

  const Drive& d = p.drives.front();
  const double kappa = p.gamma + 2.0 * p.gamma_phi;
  const NoJumpPropagator prop(d.rabi, d.detuning, kappa);
  const double photon_share = p.gamma / kappa;
  const double duration_us = units::ns_to_us(duration_ns);

  auto rng = make_engine(seed, opts.trajectory);
  PhotonStream out;
  int state = opts.start_excited ? 1 : 0;
  double now = 0.0;  // us
  for (;;) {
    const double u = 1.0 - uniform01(rng);  // (0, 1]
    const auto tau = waiting_time(prop, state, u, duration_us - now);
    if (!tau) break;
    now += *tau;
    if (now > duration_us) break;
    if (photon_share >= 1.0 || uniform01(rng) < photon_share) {
      PhotonRecord rec;
      rec.time_ns = units::us_to_ns(now);
      if (uniform01(rng) < e.beta) {
        rec.port = uniform01(rng) < e.fwd_fraction ? Port::right : Port::left;
      } else {
        rec.port = Port::free_space;
      }
      rec.channel = uniform01(rng) < e.alpha ? Channel::zpl : Channel::red_shifted;
      out.push_back(rec);
      state = 0;
    } else {
      state = 1;  // dephasing jump projects onto |e>
    }
  }
  return out;
}

std::vector<PhotonStream> simulate_trajectories(const LiouvilleProblem& p, const Emitter& e,
                                                double duration_ns, std::size_t count,
                                                std::uint64_t seed, unsigned threads) {
  std::vector<PhotonStream> out(count);
  parallel_for(count, threads, [&](std::size_t k) {
    out[k] = simulate_stream(p, e, duration_ns, seed, {false, static_cast<std::uint64_t>(k)});
  });
  return out;
}

PhotonStream apply_detector(const PhotonStream& s, const DetectorModel& m, double duration_ns,
                            std::uint64_t seed) {
  if (!(m.dead_time_ns >= 0.0) || !(m.dark_rate_per_ns >= 0.0) || !(m.jitter_sigma_ns >= 0.0)) {
    throw ValidationError("detector parameters must be non-negative");
  }
  auto rng = make_engine(seed, 0xd37ec7);
  PhotonStream events = s;

  if (m.dark_rate_per_ns > 0.0) {
    std::exponential_distribution<double> gap(m.dark_rate_per_ns);
    for (Port port : {Port::left, Port::right, Port::free_space}) {
      for (double t = gap(rng); t < duration_ns; t += gap(rng)) {
        events.push_back({t, port, m.dark_channel});
      }
    }
  }
  if (m.jitter_sigma_ns > 0.0) {
    std::normal_distribution<double> jitter(0.0, m.jitter_sigma_ns);
    for (auto& ev : events) ev.time_ns += jitter(rng);
  }
  std::stable_sort(events.begin(), events.end(),
                   [](const PhotonRecord& a, const PhotonRecord& b) { return a.time_ns < b.time_ns; });

  if (m.dead_time_ns > 0.0) {
    std::array<double, 3> last{-std::numeric_limits<double>::infinity(),
                               -std::numeric_limits<double>::infinity(),
                               -std::numeric_limits<double>::infinity()};
    PhotonStream kept;
    for (const auto& ev : events) {
      double& prev = last[static_cast<std::size_t>(ev.port)];
      if (ev.time_ns - prev >= m.dead_time_ns) {
        kept.push_back(ev);
        prev = ev.time_ns;
      }
    }
    events = std::move(kept);
  }
  return events;
}

std::vector<double> select_times(const PhotonStream& s, Port port, std::optional<Channel> channel) {
  std::vector<double> out;
  for (const auto& r : s) {
    if (r.port == port && (!channel || r.channel == *channel)) out.push_back(r.time_ns);
  }
  return out;
}

std::vector<double> CoincidenceHistogram::normalized() const {
  std::vector<double> out(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    out[i] = expected[i] > 0.0 ? counts[i] / expected[i] : std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

std::vector<double> CoincidenceHistogram::normalized_sigma() const {
  std::vector<double> out(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    out[i] = expected[i] > 0.0 ? std::sqrt(std::max(counts[i], 1.0)) / expected[i]
                               : std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

CoincidenceHistogram& CoincidenceHistogram::operator+=(const CoincidenceHistogram& other) {
  if (counts.empty() && edges_ns.empty()) {
    *this = other;
    return *this;
  }
  if (other.edges_ns != edges_ns) throw ValidationError("histogram edges differ");
  for (std::size_t i = 0; i < counts.size(); ++i) {
    counts[i] += other.counts[i];
    expected[i] += other.expected[i];
  }
  empty_input = empty_input && other.empty_input;
  return *this;
}

namespace {

CoincidenceHistogram make_histogram(double bin_width_ns, double max_tau_ns) {
  if (!(bin_width_ns > 0.0) || !(max_tau_ns > 0.0)) {
    throw ValidationError("bin width and max delay must be positive");
  }
  const auto n = static_cast<std::size_t>(std::llround(2.0 * max_tau_ns / bin_width_ns));
  if (n == 0) throw ValidationError("max delay shorter than one bin");
  CoincidenceHistogram h;
  h.edges_ns.resize(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    h.edges_ns[i] = -max_tau_ns + static_cast<double>(i) * bin_width_ns;
  }
  h.counts.assign(n, 0.0);
  h.expected.assign(n, 0.0);
  return h;
}

// Integral of (T - |tau|) / T^2 over [a, b].
double overlap_weight(double a, double b, double t) {
  auto signed_sq = [](double x) { return std::copysign(x * x, x); };
  const double abs_integral = 0.5 * (signed_sq(b) - signed_sq(a));
  return (t * (b - a) - abs_integral) / (t * t);
}

void fill_expected(CoincidenceHistogram& h, double pairs, double t) {
  for (std::size_t i = 0; i < h.bins(); ++i) {
    h.expected[i] = pairs * overlap_weight(h.edges_ns[i], h.edges_ns[i + 1], t);
  }
}

void accumulate(CoincidenceHistogram& h, std::span<const double> starts,
                std::span<const double> stops, bool same_stream) {
  const double lo = h.edges_ns.front();
  const double width = h.edges_ns[1] - h.edges_ns[0];
  const auto n = static_cast<long long>(h.bins());
  std::size_t first = 0;
  for (std::size_t i = 0; i < starts.size(); ++i) {
    const double t0 = starts[i];
    while (first < stops.size() && stops[first] - t0 < lo) ++first;
    for (std::size_t j = first; j < stops.size(); ++j) {
      if (same_stream && j == i) continue;
      const auto bin = static_cast<long long>(std::floor((stops[j] - t0 - lo) / width));
      if (bin >= n) break;
      if (bin >= 0) h.counts[static_cast<std::size_t>(bin)] += 1.0;
    }
  }
}

}  // namespace

CoincidenceHistogram cross_correlate(std::span<const double> left, std::span<const double> right,
                                     double bin_width_ns, double max_tau_ns, double duration_ns) {
  if (!std::is_sorted(left.begin(), left.end()) || !std::is_sorted(right.begin(), right.end())) {
    throw ValidationError("time lists must be sorted");
  }
  CoincidenceHistogram h = make_histogram(bin_width_ns, max_tau_ns);
  if (left.empty() || right.empty()) {
    h.empty_input = true;
    return h;
  }
  double t = duration_ns;
  if (!(t > 0.0)) t = std::max(left.back(), right.back()) - std::min(left.front(), right.front());
  if (!(t > max_tau_ns)) {
    h.empty_input = true;
    return h;
  }
  accumulate(h, left, right, false);
  fill_expected(h, static_cast<double>(left.size()) * static_cast<double>(right.size()), t);
  return h;
}

CoincidenceHistogram auto_correlate(std::span<const double> times, double bin_width_ns,
                                    double max_tau_ns, double duration_ns) {
  if (!std::is_sorted(times.begin(), times.end())) throw ValidationError("times must be sorted");
  CoincidenceHistogram h = make_histogram(bin_width_ns, max_tau_ns);
  if (times.size() < 2) {
    h.empty_input = true;
    return h;
  }
  double t = duration_ns > 0.0 ? duration_ns : times.back() - times.front();
  if (!(t > max_tau_ns)) {
    h.empty_input = true;
    return h;
  }
  accumulate(h, times, times, true);
  const auto n = static_cast<double>(times.size());
  fill_expected(h, n * (n - 1.0), t);
  return h;
}

void write_stream(std::ostream& os, const PhotonStream& s) {
  std::array<char, 64> buf{};
  for (const auto& r : s) {
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), r.time_ns);
    os.write(buf.data(), res.ptr - buf.data());
    os << '\t' << to_string(r.port) << '\t' << to_string(r.channel) << '\n';
  }
}

PhotonStream read_stream(std::istream& is) {
  PhotonStream out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto tab1 = line.find('\t');
    const auto tab2 = tab1 == std::string::npos ? tab1 : line.find('\t', tab1 + 1);
    if (tab2 == std::string::npos) {
      throw ValidationError("photon stream line " + std::to_string(lineno) + ": expected 3 fields");
    }
    PhotonRecord r;
    const char* begin = line.data();
    const auto res = std::from_chars(begin, begin + tab1, r.time_ns);
    if (res.ec != std::errc() || res.ptr != begin + tab1 || !std::isfinite(r.time_ns)) {
      throw ValidationError("photon stream line " + std::to_string(lineno) + ": bad time");
    }
    r.port = parse_port(std::string_view(line).substr(tab1 + 1, tab2 - tab1 - 1));
    r.channel = parse_channel(std::string_view(line).substr(tab2 + 1));
    if (!out.empty() && r.time_ns < out.back().time_ns) {
      throw ValidationError("photon stream line " + std::to_string(lineno) + ": times not sorted");
    }
    out.push_back(r);
  }
  return out;
}

}  // namespace nanoguide
