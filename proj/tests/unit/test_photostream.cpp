#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <vector>

#include "generators.hpp"
#include "nanoguide/photostream.hpp"

using namespace nanoguide;

namespace {

constexpr double kLifetimeNs = 5.0;

Emitter emitter(double beta, double alpha, double fwd) {
  Emitter e;
  e.gamma0_mhz = lifetime_to_linewidth(kLifetimeNs);
  e.beta = beta;
  e.alpha = alpha;
  e.fwd_fraction = fwd;
  return e;
}

LiouvilleProblem drive(const Emitter& e, double rabi_gamma0, double det_mhz = 0.0,
                       double gamma_phi_mhz = 0.0) {
  return LiouvilleProblem::driven(e, {RabiFrequency::in_gamma0(rabi_gamma0), det_mhz},
                                  gamma_phi_mhz);
}

std::vector<double> poisson_times(double rate, double duration, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> gap(rate);
  std::vector<double> out;
  for (double t = gap(rng); t < duration; t += gap(rng)) out.push_back(t);
  return out;
}

double within_sigmas(double observed, double expected, double sigma) {
  return std::abs(observed - expected) / sigma;
}

}  // namespace

TEST_CASE("undriven excited emitter emits exactly one photon") {
  const Emitter e = emitter(0.3, 0.5, 0.5);
  const auto p = drive(e, 0.0);
  double sum = 0.0;
  const int n = 20000;
  for (int k = 0; k < n; ++k) {
    const auto s = simulate_stream(p, e, 1000.0, 99, {true, static_cast<std::uint64_t>(k)});
    REQUIRE(s.size() == 1);
    sum += s[0].time_ns;
  }
  const double mean = sum / n;
  CHECK(within_sigmas(mean, kLifetimeNs, kLifetimeNs / std::sqrt(n)) < 4.0);
}

TEST_CASE("waiting times reproduce exponential decay quantiles") {
  const Emitter e = emitter(0.3, 0.5, 0.5);
  const auto p = drive(e, 0.0);
  std::vector<double> t;
  for (int k = 0; k < 4000; ++k) {
    t.push_back(simulate_stream(p, e, 1000.0, 3, {true, static_cast<std::uint64_t>(k)})[0].time_ns);
  }
  std::sort(t.begin(), t.end());
  // Kolmogorov-Smirnov distance against 1 - exp(-t / T1).
  double ks = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double cdf = 1.0 - std::exp(-t[i] / kLifetimeNs);
    ks = std::max({ks, std::abs(cdf - static_cast<double>(i) / 4000.0),
                   std::abs(cdf - static_cast<double>(i + 1) / 4000.0)});
  }
  CHECK(ks < 1.63 / std::sqrt(4000.0));
}

TEST_CASE("right:left split follows the forward fraction") {
  const Emitter e = emitter(1.0, 0.5, 0.57);
  const auto s = simulate_stream(drive(e, 1.0), e, 2e6, 7);
  const auto right = static_cast<double>(select_times(s, Port::right).size());
  const auto left = static_cast<double>(select_times(s, Port::left).size());
  CHECK(select_times(s, Port::free_space).empty());
  const double n = right + left;
  CHECK(n > 1e5);
  CHECK(within_sigmas(right / n, 0.57, std::sqrt(0.57 * 0.43 / n)) < 3.0);
}

TEST_CASE("port and channel statistics follow beta, fwd_fraction and alpha") {
  testing::Gen gen(61);
  for (int trial = 0; trial < 5; ++trial) {
    const Emitter e =
        emitter(gen.uniform(0.05, 0.95), gen.uniform(0.05, 0.95), gen.uniform(0.05, 0.95));
    const auto s = simulate_stream(drive(e, gen.uniform(0.3, 2.0)), e, 2e5, 100 + trial);
    const auto n = static_cast<double>(s.size());
    const auto right = static_cast<double>(select_times(s, Port::right).size());
    const auto left = static_cast<double>(select_times(s, Port::left).size());
    double zpl = 0.0;
    for (const auto& r : s) zpl += r.channel == Channel::zpl ? 1.0 : 0.0;
    const double guided = right + left;
    CHECK(within_sigmas(guided / n, e.beta, std::sqrt(e.beta * (1 - e.beta) / n)) < 3.0);
    CHECK(within_sigmas(right / guided, e.fwd_fraction,
                        std::sqrt(e.fwd_fraction * (1 - e.fwd_fraction) / guided)) < 3.0);
    CHECK(within_sigmas(zpl / n, e.alpha, std::sqrt(e.alpha * (1 - e.alpha) / n)) < 3.0);
  }
}

TEST_CASE("mean emission rate equals gamma times the steady excited population") {
  const Emitter e = emitter(0.5, 0.5, 0.5);
  for (double gphi : {0.0, 10.0}) {
    const auto p = drive(e, 1.0, 5.0, gphi);
    const double duration = 4e5;
    const auto s = simulate_stream(p, e, duration, 17);
    const double rate = static_cast<double>(s.size()) / duration;  // per ns
    const double expected =
        units::ns_to_us(p.gamma) * steady_state(build_liouvillian(p)).excited_population();
    CHECK(std::abs(rate / expected - 1.0) < 0.02);
  }
}

TEST_CASE("streams are sorted and bit-reproducible") {
  const Emitter e = emitter(0.4, 0.5, 0.57);
  const auto p = drive(e, 0.9);
  const auto a = simulate_stream(p, e, 5e4, 2024);
  const auto b = simulate_stream(p, e, 5e4, 2024);
  const auto c = simulate_stream(p, e, 5e4, 2025);
  CHECK(a == b);
  CHECK(a != c);
  for (std::size_t i = 1; i < a.size(); ++i) CHECK(a[i].time_ns >= a[i - 1].time_ns);
  CHECK(a.back().time_ns <= 5e4);

  const auto seq = simulate_trajectories(p, e, 1e4, 6, 5, 1);
  const auto par = simulate_trajectories(p, e, 1e4, 6, 5, 3);
  CHECK(seq == par);
  CHECK(seq[0] == simulate_stream(p, e, 1e4, 5, {false, 0}));
  CHECK(seq[0] != seq[1]);
}

TEST_CASE("independent Poisson streams give a flat cross-correlation") {
  const double duration = 1e6;
  const auto left = poisson_times(0.05, duration, 1);
  const auto right = poisson_times(0.05, duration, 2);
  const auto h = cross_correlate(left, right, 2.0, 100.0, duration);
  CHECK(h.bins() == 100);
  const auto g = h.normalized();
  const auto sig = h.normalized_sigma();
  int outliers = 0;
  double mean = 0.0;
  for (std::size_t i = 0; i < h.bins(); ++i) {
    if (std::abs(g[i] - 1.0) > 3.0 * sig[i]) ++outliers;
    mean += g[i] / static_cast<double>(h.bins());
  }
  CHECK(outliers <= 3);
  CHECK(std::abs(mean - 1.0) < 0.01);
}

TEST_CASE("auto-correlation excludes self pairs") {
  const std::vector<double> t{0.0, 1.0, 3.0};
  const auto h = auto_correlate(t, 1.0, 4.0, 100.0);
  // Pairs: +-1, +-2, +-3
  const double total = std::accumulate(h.counts.begin(), h.counts.end(), 0.0);
  CHECK(total == 6.0);
  const std::vector<double> expected{0, 1, 1, 1, 0, 1, 1, 1};
  CHECK(h.counts == expected);
}

TEST_CASE("cross-correlation bins signed delays right minus left") {
  const std::vector<double> left{10.0};
  const std::vector<double> right{7.5, 12.2};
  const auto h = cross_correlate(left, right, 1.0, 5.0, 1000.0);
  CHECK(h.counts[2] == 1.0);  // -2.5 in [-3, -2)
  CHECK(h.counts[7] == 1.0);  // +2.2 in [2, 3)
  CHECK(h.center(7) == doctest::Approx(2.5));
}

TEST_CASE("empty inputs give an empty flagged histogram") {
  const std::vector<double> none;
  const std::vector<double> some{1.0, 2.0};
  const auto h = cross_correlate(none, some, 1.0, 10.0);
  CHECK(h.empty_input);
  CHECK(h.bins() == 20);
  CHECK(std::accumulate(h.counts.begin(), h.counts.end(), 0.0) == 0.0);
  CHECK(auto_correlate(none, 1.0, 10.0).empty_input);
  const std::vector<double> unsorted{2.0, 1.0};
  CHECK_THROWS_AS(cross_correlate(unsorted, some, 1.0, 10.0), ValidationError);
}

TEST_CASE("histogram merging is associative and order independent") {
  std::vector<CoincidenceHistogram> parts;
  for (std::uint64_t k = 0; k < 4; ++k) {
    parts.push_back(cross_correlate(poisson_times(0.1, 1e4, 10 + k),
                                    poisson_times(0.1, 1e4, 20 + k), 1.0, 20.0, 1e4));
  }
  CoincidenceHistogram a;
  for (const auto& p : parts) a += p;
  CoincidenceHistogram b;
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) b += *it;
  CoincidenceHistogram left = parts[0];
  left += parts[1];
  CoincidenceHistogram right = parts[2];
  right += parts[3];
  left += right;
  CHECK(a.counts == b.counts);
  CHECK(a.counts == left.counts);
  for (std::size_t i = 0; i < a.bins(); ++i) {
    CHECK(a.expected[i] == doctest::Approx(b.expected[i]).epsilon(1e-14));
  }
  CoincidenceHistogram other =
      cross_correlate(poisson_times(0.1, 1e4, 1), poisson_times(0.1, 1e4, 2), 2.0, 20.0, 1e4);
  CHECK_THROWS_AS(a += other, ValidationError);
}

TEST_CASE("simulated cross-port histogram follows g2 at reduced statistics") {
  Emitter e = emitter(1.0, 0.5, 0.57);
  const auto p = drive(e, 0.9);
  const auto trajectories = simulate_trajectories(p, e, 2e5, 8, 77, 2);
  CoincidenceHistogram h;
  for (const auto& s : trajectories) {
    h += cross_correlate(select_times(s, Port::left, Channel::red_shifted),
                         select_times(s, Port::right, Channel::red_shifted), 1.0, 100.0, 2e5);
  }
  std::vector<double> model(h.bins());
  for (std::size_t i = 0; i < h.bins(); ++i) {
    // Bin average of g2(|tau|) from 8 midpoint samples.
    for (int k = 0; k < 8; ++k) {
      const double tau = h.edges_ns[i] + (k + 0.5) / 8.0 * (h.edges_ns[i + 1] - h.edges_ns[i]);
      const std::vector<double> at{units::ns_to_us(std::abs(tau))};
      model[i] += g2(p, at)[0] / 8.0;
    }
  }
  const auto g = h.normalized();
  int good = 0;
  for (std::size_t i = 0; i < h.bins(); ++i) {
    const double sigma = std::sqrt(std::max(model[i] * h.expected[i], 1.0)) / h.expected[i];
    if (std::abs(g[i] - model[i]) <= 3.0 * sigma) ++good;
  }
  CHECK(good >= 0.95 * static_cast<double>(h.bins()));
  CHECK(g[100] < 0.2);  // antibunching at the first positive-delay bin
}

TEST_CASE("default detector leaves the stream unchanged") {
  const Emitter e = emitter(0.5, 0.5, 0.5);
  const auto s = simulate_stream(drive(e, 1.0), e, 1e4, 4);
  CHECK(apply_detector(s, {}, 1e4, 1) == s);
}

TEST_CASE("dead time, dark counts and jitter") {
  const Emitter e = emitter(1.0, 0.5, 0.5);
  const auto s = simulate_stream(drive(e, 2.0), e, 1e5, 8);
  DetectorModel dead;
  dead.dead_time_ns = 20.0;
  const auto d = apply_detector(s, dead, 1e5, 1);
  CHECK(d.size() < s.size());
  for (Port port : {Port::left, Port::right}) {
    const auto t = select_times(d, port);
    for (std::size_t i = 1; i < t.size(); ++i) CHECK(t[i] - t[i - 1] >= 20.0);
  }

  DetectorModel dark;
  dark.dark_rate_per_ns = 1e-3;
  const PhotonStream nothing;
  const auto dc = apply_detector(nothing, dark, 1e6, 2);
  const auto per_port = static_cast<double>(select_times(dc, Port::left).size());
  CHECK(within_sigmas(per_port, 1e3, std::sqrt(1e3)) < 4.0);

  DetectorModel jit;
  jit.jitter_sigma_ns = 0.5;
  const auto j = apply_detector(s, jit, 1e5, 3);
  CHECK(j.size() == s.size());
  for (std::size_t i = 1; i < j.size(); ++i) CHECK(j[i].time_ns >= j[i - 1].time_ns);
  DetectorModel bad;
  bad.dead_time_ns = -1.0;
  CHECK_THROWS_AS(apply_detector(s, bad, 1e5, 3), ValidationError);
}

TEST_CASE("photon stream text round trip") {
  const Emitter e = emitter(0.4, 0.5, 0.57);
  const auto s = simulate_stream(drive(e, 0.9), e, 2e3, 5);
  std::stringstream ss;
  write_stream(ss, s);
  CHECK(read_stream(ss) == s);

  std::istringstream bad("1.0\tleft\tzpl\n0.5\tright\tzpl\n");
  CHECK_THROWS_AS(read_stream(bad), ValidationError);
  std::istringstream garbage("abc\tleft\tzpl\n");
  CHECK_THROWS_AS(read_stream(garbage), ValidationError);
  std::istringstream port("1.0\tup\tzpl\n");
  CHECK_THROWS_AS(read_stream(port), ValidationError);
  std::istringstream comment("# header\n2.5\tfree_space\tred_shifted\n");
  const auto one = read_stream(comment);
  REQUIRE(one.size() == 1);
  CHECK(one[0] == PhotonRecord{2.5, Port::free_space, Channel::red_shifted});
}

TEST_CASE("simulate_stream input validation") {
  const Emitter e = emitter(0.4, 0.5, 0.57);
  auto p = drive(e, 0.9);
  CHECK_THROWS_AS(simulate_stream(p, e, 0.0, 1), ValidationError);
  p.drives.push_back({0.1, 0.0});
  CHECK_THROWS_AS(simulate_stream(p, e, 10.0, 1), ValidationError);
}
