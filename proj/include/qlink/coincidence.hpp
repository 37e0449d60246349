#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "qlink/stream_io.hpp"
#include "qlink/timetag.hpp"

namespace qlink {

struct ChannelPair {
  std::uint8_t first = 1;
  std::uint8_t second = 2;
};

/// Cross-correlation histogram of tag-pair delays (t_second - t_first) in
/// ticks. Bins are centred on multiples of bin_width; delays map to the
/// nearest bin centre (half-away-from-zero), so the histogram is exactly
/// mirror-symmetric under swapping the channel pair. counts has
/// 2*half_range_bins + 1 entries; entry 0 corresponds to tau =
/// -half_range_bins*bin_width.
struct Correlogram {
  ChannelPair pair;
  std::uint64_t bin_width = 1;       // ticks
  std::uint64_t half_range_bins = 0; // bins on each side of tau = 0
  std::vector<std::uint64_t> counts;
  std::uint64_t tags_first = 0;
  std::uint64_t tags_second = 0;
  /// Largest number of tags the sliding window ever held; stays bounded by
  /// rate * window span regardless of stream length.
  std::uint64_t max_window_occupancy = 0;

  std::uint64_t range_ticks() const { return half_range_bins * bin_width; }
  std::int64_t tau_at(std::size_t index) const {
    return (static_cast<std::int64_t>(index) - static_cast<std::int64_t>(half_range_bins)) *
           static_cast<std::int64_t>(bin_width);
  }
  std::uint64_t total_counts() const;
};

/// Streaming two-pointer correlogram over a sorted stream: O(n + matches),
/// constant memory. Throws std::invalid_argument on unsorted input or when
/// range < bin or bin < 1.
Correlogram cross_correlogram(TagSource& source, ChannelPair pair, std::uint64_t range_ticks,
                              std::uint64_t bin_ticks = 1);
Correlogram cross_correlogram(std::span<const TimeTag> tags, ChannelPair pair,
                              std::uint64_t range_ticks, std::uint64_t bin_ticks = 1);

struct PeakReport {
  std::int64_t center_ticks = 0;     // bin centre of the maximum
  double height = 0.0;               // raw counts in the peak bin
  double fwhm_ticks = 0.0;           // linear-interpolated width at half height above background
  double background_per_bin = 0.0;   // mean of bins away from any peak
};

struct PeakSearchParams {
  /// Per-bin false-positive rate of the detection threshold. The threshold is
  /// the exact Poisson upper quantile of the background mean, i.e. the
  /// 5-sigma rule with correct tails on sparse floors.
  double per_bin_false_rate = 1e-8;
  /// Bins closer than this (in ticks) to a candidate peak are excluded from
  /// the background estimate. 32 ticks = 5 ns at the default 156.25 ps tick.
  std::uint64_t background_exclusion_ticks = 32;
  /// Candidate bins within this distance (ticks) merge into one peak.
  std::uint64_t grouping_ticks = 16;
};

/// Local maxima significantly above the accidental floor. A flat histogram
/// yields an empty list.
std::vector<PeakReport> find_peaks(const Correlogram& correlogram,
                                   const PeakSearchParams& params = {});

/// Smallest k with P(Poisson(mean) >= k) <= alpha. Exposed for tests.
std::uint64_t poisson_upper_quantile(double mean, double alpha);

/// Counts tag pairs whose delay (t_second - t_first) lies within
/// +-window/2 ticks (closed interval, integer half-width) of any centre.
/// Centres must be sorted and non-overlapping. Streaming, exact.
std::uint64_t count_windowed_coincidences(TagSource& source, ChannelPair pair,
                                          std::span<const std::int64_t> centers_ticks,
                                          std::uint64_t window_ticks);
std::uint64_t count_windowed_coincidences(std::span<const TimeTag> tags, ChannelPair pair,
                                          std::span<const std::int64_t> centers_ticks,
                                          std::uint64_t window_ticks);

/// Expected accidental-coincidence rate (per second) from uncorrelated
/// singles: n_pairs * n_centers * rate^2 * window_s for uniform per-channel
/// rates. `window_s` is the window duration; note a closed window of w ticks
/// spans (w + 2*(w/2) - w + 1) = 2*(w/2)+1 tick intervals, so pass the
/// effective duration when comparing against exact tick-window counts.
double estimate_accidentals(double rate_hz, double window_s, int n_pairs, int n_centers);

/// Same with per-channel rates and an explicit pair list.
double estimate_accidentals(std::span<const double> channel_rates_hz,
                            std::span<const ChannelPair> pairs, double window_s, int n_centers);

/// Brute-force all-pairs reference counter; exact ground truth for the
/// streaming counter. Refuses streams longer than 1e5 tags.
std::uint64_t naive_coincidence_oracle(std::span<const TimeTag> tags, ChannelPair pair,
                                       std::span<const std::int64_t> centers_ticks,
                                       std::uint64_t window_ticks);

/// Brute-force correlogram reference; same guard.
Correlogram naive_correlogram_oracle(std::span<const TimeTag> tags, ChannelPair pair,
                                     std::uint64_t range_ticks, std::uint64_t bin_ticks = 1);

}  // namespace qlink
