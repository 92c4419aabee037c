#pragma once

// Photon emission records from quantum-jump trajectories and start-stop
// coincidence histograms built from them.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "nanoguide/core.hpp"
#include "nanoguide/dynamics.hpp"

namespace nanoguide {

enum class Port { left, right, free_space };
enum class Channel { zpl, red_shifted };

std::string_view to_string(Port p);
std::string_view to_string(Channel c);
Port parse_port(std::string_view s);
Channel parse_channel(std::string_view s);

struct PhotonRecord {
  double time_ns = 0.0;
  Port port = Port::free_space;
  Channel channel = Channel::red_shifted;

  friend bool operator==(const PhotonRecord&, const PhotonRecord&) = default;
};

using PhotonStream = std::vector<PhotonRecord>;

struct StreamOptions {
  bool start_excited = false;
  /// Selects an independent RNG stream derived from the master seed.
  std::uint64_t trajectory = 0;
};

/// One quantum-jump trajectory of duration `duration_ns`.
///
/// Waiting times between jumps are drawn by inverting the exact no-jump survival
/// probability of the 2x2 effective Hamiltonian, so there is no time-step
/// error. Each emission is routed to a guided port with probability beta (right
/// with probability fwd_fraction, else left) or to free space, and labelled zpl
/// with probability alpha, else red-shifted. Pure dephasing, when present,
/// enters as an extra jump channel that emits nothing.
PhotonStream simulate_stream(const LiouvilleProblem& p, const Emitter& e, double duration_ns,
                             std::uint64_t seed, const StreamOptions& opts = {});

/// `count` independent trajectories, trajectory k on RNG stream k.
std::vector<PhotonStream> simulate_trajectories(const LiouvilleProblem& p, const Emitter& e,
                                                double duration_ns, std::size_t count,
                                                std::uint64_t seed, unsigned threads = 1);

struct DetectorModel {
  double dead_time_ns = 0.0;
  /// Dark counts per ns, per port.
  double dark_rate_per_ns = 0.0;
  /// Gaussian timing jitter (standard deviation); no default is assumed.
  double jitter_sigma_ns = 0.0;
  Channel dark_channel = Channel::red_shifted;
};

/// Adds dark counts and timing jitter, then applies per-port dead time.
/// A default-constructed model leaves the stream unchanged.
PhotonStream apply_detector(const PhotonStream& s, const DetectorModel& m, double duration_ns,
                            std::uint64_t seed);

/// Times of records at `port` (and `channel`, if given), in stream order.
std::vector<double> select_times(const PhotonStream& s, Port port,
                                 std::optional<Channel> channel = std::nullopt);

struct CoincidenceHistogram {
  /// bins + 1 edges, symmetric about zero delay (right minus left).
  std::vector<double> edges_ns;
  std::vector<double> counts;
  /// Coincidences expected per bin for uncorrelated streams of the same rates.
  std::vector<double> expected;
  bool empty_input = false;

  [[nodiscard]] std::size_t bins() const { return counts.size(); }
  [[nodiscard]] double center(std::size_t i) const { return 0.5 * (edges_ns[i] + edges_ns[i + 1]); }
  /// counts / expected; NaN where nothing is expected.
  [[nodiscard]] std::vector<double> normalized() const;
  /// Statistical error of normalized(), sqrt(expected * g) / expected per bin.
  [[nodiscard]] std::vector<double> normalized_sigma() const;

  /// Adds another histogram over identical edges.
  CoincidenceHistogram& operator+=(const CoincidenceHistogram& other);
};

/// Full start-stop cross-correlation of two sorted time lists over delays in
/// [-max_tau, max_tau). Expected counts use n_l n_r w (T - |tau|) / T^2 with T
/// the observation time (`duration_ns`, or the data span when 0).
CoincidenceHistogram cross_correlate(std::span<const double> left, std::span<const double> right,
                                     double bin_width_ns, double max_tau_ns,
                                     double duration_ns = 0.0);

/// Same estimator for one stream against itself, excluding each photon's pair
/// with itself.
CoincidenceHistogram auto_correlate(std::span<const double> times, double bin_width_ns,
                                    double max_tau_ns, double duration_ns = 0.0);

/// Tab-separated `time_ns<TAB>port<TAB>channel` lines, UTF-8, sorted by time.
void write_stream(std::ostream& os, const PhotonStream& s);
/// Throws ValidationError on malformed or unsorted input.
PhotonStream read_stream(std::istream& is);

}  // namespace nanoguide
