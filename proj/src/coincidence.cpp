#include "qlink/coincidence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace qlink {
namespace {

constexpr std::size_t kOracleGuard = 100000;

// Growable power-of-two ring buffer of recent ticks.
class TickWindow {
 public:
  TickWindow() : data_(64) {}

  void push(std::uint64_t tick) {
    if (size_ == data_.size()) grow();
    data_[(head_ + size_) & (data_.size() - 1)] = tick;
    ++size_;
  }

  // Drops entries with tick < cutoff. Entries are pushed in non-decreasing
  // order, so eviction pops from the front.
  void evict_before(std::uint64_t cutoff) {
    while (size_ > 0 && data_[head_] < cutoff) {
      head_ = (head_ + 1) & (data_.size() - 1);
      --size_;
    }
  }

  std::size_t size() const { return size_; }
  std::uint64_t at(std::size_t i) const { return data_[(head_ + i) & (data_.size() - 1)]; }

 private:
  void grow() {
    std::vector<std::uint64_t> bigger(data_.size() * 2);
    for (std::size_t i = 0; i < size_; ++i) bigger[i] = at(i);
    data_ = std::move(bigger);
    head_ = 0;
  }

  std::vector<std::uint64_t> data_;
  std::size_t head_ = 0;
  std::size_t size_ = 0;
};

// Nearest-bin index (half away from zero): round(|d|/bin) with the sign of d.
std::int64_t bin_index(std::int64_t delay, std::uint64_t bin) {
  const std::uint64_t mag = delay < 0 ? static_cast<std::uint64_t>(-delay)
                                      : static_cast<std::uint64_t>(delay);
  const std::uint64_t k = (2 * mag + bin) / (2 * bin);
  return delay < 0 ? -static_cast<std::int64_t>(k) : static_cast<std::int64_t>(k);
}

// Largest |delay| whose nearest bin centre is still inside +-half_range_bins.
std::uint64_t correlogram_span(std::uint64_t half_range_bins, std::uint64_t bin) {
  return half_range_bins * bin + (bin - 1) / 2;
}

void check_sorted(std::uint64_t prev, std::uint64_t cur, std::uint64_t index) {
  if (cur < prev) {
    throw std::invalid_argument("stream not sorted at tag " + std::to_string(index));
  }
}

void validate_windows(std::span<const std::int64_t> centers, std::uint64_t window) {
  const auto half = static_cast<std::int64_t>(window / 2);
  for (std::size_t i = 0; i + 1 < centers.size(); ++i) {
    if (centers[i + 1] <= centers[i]) {
      throw std::invalid_argument("window centers must be strictly increasing");
    }
    if (centers[i + 1] - centers[i] <= 2 * half) {
      throw std::invalid_argument("coincidence windows overlap at centers " +
                                  std::to_string(centers[i]) + " and " +
                                  std::to_string(centers[i + 1]));
    }
  }
}

bool in_any_window(std::int64_t delay, std::span<const std::int64_t> centers,
                   std::int64_t half) {
  for (const std::int64_t c : centers) {
    const std::int64_t diff = delay - c;
    if (diff >= -half && diff <= half) return true;
  }
  return false;
}

double normal_upper_quantile(double alpha) {
  // Bisection on the Gaussian tail; alpha is tiny so the bracket is wide.
  double lo = 0.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (0.5 * std::erfc(mid / std::sqrt(2.0)) > alpha) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

std::uint64_t Correlogram::total_counts() const {
  return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

Correlogram cross_correlogram(TagSource& source, ChannelPair pair, std::uint64_t range_ticks,
                              std::uint64_t bin_ticks) {
  if (bin_ticks < 1 || range_ticks < bin_ticks) {
    throw std::invalid_argument("cross_correlogram: need range >= bin >= 1");
  }

  Correlogram g;
  g.pair = pair;
  g.bin_width = bin_ticks;
  g.half_range_bins = range_ticks / bin_ticks;
  g.counts.assign(2 * g.half_range_bins + 1, 0);

  const std::uint64_t span = correlogram_span(g.half_range_bins, bin_ticks);
  const auto n_half = static_cast<std::int64_t>(g.half_range_bins);
  const bool same_channel = pair.first == pair.second;

  TickWindow window_first;
  TickWindow window_second;

  auto record = [&](std::int64_t delay) {
    const std::int64_t k = bin_index(delay, bin_ticks);
    if (k >= -n_half && k <= n_half) {
      ++g.counts[static_cast<std::size_t>(k + n_half)];
    }
  };

  TimeTag tag;
  std::uint64_t index = 0;
  std::uint64_t prev_tick = 0;
  while (source.next(tag)) {
    check_sorted(prev_tick, tag.tick, index);
    prev_tick = tag.tick;
    ++index;

    const bool is_first = tag.channel == pair.first;
    const bool is_second = tag.channel == pair.second;
    if (!is_first && !is_second) continue;

    const std::uint64_t cutoff = tag.tick > span ? tag.tick - span : 0;
    window_first.evict_before(cutoff);
    window_second.evict_before(cutoff);

    if (same_channel) {
      ++g.tags_first;
      ++g.tags_second;
      // Symmetric autocorrelogram: each unordered pair lands at +-delay.
      for (std::size_t i = 0; i < window_first.size(); ++i) {
        const auto d = static_cast<std::int64_t>(tag.tick - window_first.at(i));
        record(d);
        record(-d);
      }
      window_first.push(tag.tick);
    } else if (is_first) {
      ++g.tags_first;
      // Earlier second-channel tags give delay = t_second - t_first <= 0.
      for (std::size_t i = 0; i < window_second.size(); ++i) {
        record(-static_cast<std::int64_t>(tag.tick - window_second.at(i)));
      }
      window_first.push(tag.tick);
    } else {
      ++g.tags_second;
      for (std::size_t i = 0; i < window_first.size(); ++i) {
        record(static_cast<std::int64_t>(tag.tick - window_first.at(i)));
      }
      window_second.push(tag.tick);
    }
    g.max_window_occupancy =
        std::max<std::uint64_t>(g.max_window_occupancy, window_first.size() + window_second.size());
  }
  return g;
}

Correlogram cross_correlogram(std::span<const TimeTag> tags, ChannelPair pair,
                              std::uint64_t range_ticks, std::uint64_t bin_ticks) {
  SpanTagSource source(tags);
  return cross_correlogram(source, pair, range_ticks, bin_ticks);
}

std::uint64_t poisson_upper_quantile(double mean, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::domain_error("poisson_upper_quantile: alpha must be in (0,1)");
  }
  if (mean <= 0.0) return 1;
  if (mean <= 300.0) {
    double pmf = std::exp(-mean);
    double cdf = pmf;
    std::uint64_t k = 0;
    const double target = 1.0 - alpha;
    while (cdf < target && k < 100000) {
      ++k;
      pmf *= mean / static_cast<double>(k);
      cdf += pmf;
    }
    return k + 1;  // P(X >= k+1) = 1 - cdf <= alpha
  }
  // Cornish-Fisher with the skewness term; indistinguishable from exact at
  // these means.
  const double z = normal_upper_quantile(alpha);
  return static_cast<std::uint64_t>(
      std::ceil(mean + z * std::sqrt(mean) + (z * z - 1.0) / 6.0));
}

std::vector<PeakReport> find_peaks(const Correlogram& g, const PeakSearchParams& params) {
  const std::size_t n = g.counts.size();
  if (n == 0) {
    throw std::invalid_argument("find_peaks: empty correlogram");
  }
  if (g.total_counts() == 0) return {};

  // Provisional background: the median is robust against a few peak bins.
  std::vector<std::uint64_t> sorted(g.counts);
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(n / 2),
                   sorted.end());
  const double provisional = static_cast<double>(sorted[n / 2]);

  const std::uint64_t thr0 = poisson_upper_quantile(provisional, params.per_bin_false_rate);

  // Final background: mean of bins far from any candidate.
  const std::size_t excl_bins = static_cast<std::size_t>(
      (params.background_exclusion_ticks + g.bin_width - 1) / g.bin_width);
  std::vector<bool> excluded(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    if (g.counts[i] >= thr0) {
      const std::size_t lo = i > excl_bins ? i - excl_bins : 0;
      const std::size_t hi = std::min(n - 1, i + excl_bins);
      for (std::size_t j = lo; j <= hi; ++j) excluded[j] = true;
    }
  }
  double bg_sum = 0.0;
  std::size_t bg_n = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!excluded[i]) {
      bg_sum += static_cast<double>(g.counts[i]);
      ++bg_n;
    }
  }
  const double background = bg_n > 0 ? bg_sum / static_cast<double>(bg_n) : provisional;
  const std::uint64_t threshold =
      poisson_upper_quantile(background, params.per_bin_false_rate);

  // Group significant bins into clusters and keep one peak per cluster.
  const std::size_t group_bins =
      std::max<std::size_t>(1, static_cast<std::size_t>(params.grouping_ticks / g.bin_width));
  std::vector<PeakReport> peaks;
  std::size_t i = 0;
  while (i < n) {
    if (g.counts[i] < threshold) {
      ++i;
      continue;
    }
    std::size_t cluster_end = i;
    std::size_t last_hit = i;
    std::size_t j = i + 1;
    while (j < n && j - last_hit <= group_bins) {
      if (g.counts[j] >= threshold) {
        last_hit = j;
        cluster_end = j;
      }
      ++j;
    }

    std::size_t peak_idx = i;
    for (std::size_t k = i; k <= cluster_end; ++k) {
      if (g.counts[k] > g.counts[peak_idx]) peak_idx = k;
    }

    const double peak_count = static_cast<double>(g.counts[peak_idx]);
    const double half_level = background + (peak_count - background) / 2.0;

    // Half-maximum crossings by linear interpolation; clamp at the edges.
    const auto bin_w = static_cast<double>(g.bin_width);
    double left_x = static_cast<double>(g.tau_at(0));
    for (std::size_t k = peak_idx; k-- > 0;) {
      if (static_cast<double>(g.counts[k]) <= half_level) {
        const double y0 = static_cast<double>(g.counts[k]);
        const double y1 = static_cast<double>(g.counts[k + 1]);
        const double frac = y1 > y0 ? (half_level - y0) / (y1 - y0) : 0.0;
        left_x = static_cast<double>(g.tau_at(k)) + frac * bin_w;
        break;
      }
    }
    double right_x = static_cast<double>(g.tau_at(n - 1));
    for (std::size_t k = peak_idx + 1; k < n; ++k) {
      if (static_cast<double>(g.counts[k]) <= half_level) {
        const double y0 = static_cast<double>(g.counts[k - 1]);
        const double y1 = static_cast<double>(g.counts[k]);
        const double frac = y0 > y1 ? (y0 - half_level) / (y0 - y1) : 1.0;
        right_x = static_cast<double>(g.tau_at(k - 1)) + frac * bin_w;
        break;
      }
    }

    PeakReport report;
    report.center_ticks = g.tau_at(peak_idx);
    report.height = peak_count;
    report.fwhm_ticks = std::max(right_x - left_x, 1e-9);
    report.background_per_bin = background;
    peaks.push_back(report);

    i = cluster_end + 1;
  }
  return peaks;
}

std::uint64_t count_windowed_coincidences(TagSource& source, ChannelPair pair,
                                          std::span<const std::int64_t> centers_ticks,
                                          std::uint64_t window_ticks) {
  validate_windows(centers_ticks, window_ticks);
  if (centers_ticks.empty()) return 0;

  const auto half = static_cast<std::int64_t>(window_ticks / 2);
  std::int64_t max_abs = 0;
  for (const std::int64_t c : centers_ticks) {
    max_abs = std::max(max_abs, std::abs(c) + half);
  }
  const auto span = static_cast<std::uint64_t>(max_abs);
  const bool same_channel = pair.first == pair.second;

  TickWindow window_first;
  TickWindow window_second;
  std::uint64_t count = 0;

  TimeTag tag;
  std::uint64_t index = 0;
  std::uint64_t prev_tick = 0;
  while (source.next(tag)) {
    check_sorted(prev_tick, tag.tick, index);
    prev_tick = tag.tick;
    ++index;

    const bool is_first = tag.channel == pair.first;
    const bool is_second = tag.channel == pair.second;
    if (!is_first && !is_second) continue;

    const std::uint64_t cutoff = tag.tick > span ? tag.tick - span : 0;
    window_first.evict_before(cutoff);
    window_second.evict_before(cutoff);

    if (same_channel) {
      for (std::size_t i = 0; i < window_first.size(); ++i) {
        const auto d = static_cast<std::int64_t>(tag.tick - window_first.at(i));
        if (in_any_window(d, centers_ticks, half)) ++count;
        if (in_any_window(-d, centers_ticks, half)) ++count;
      }
      window_first.push(tag.tick);
    } else if (is_first) {
      for (std::size_t i = 0; i < window_second.size(); ++i) {
        const auto d = -static_cast<std::int64_t>(tag.tick - window_second.at(i));
        if (in_any_window(d, centers_ticks, half)) ++count;
      }
      window_first.push(tag.tick);
    } else {
      for (std::size_t i = 0; i < window_first.size(); ++i) {
        const auto d = static_cast<std::int64_t>(tag.tick - window_first.at(i));
        if (in_any_window(d, centers_ticks, half)) ++count;
      }
      window_second.push(tag.tick);
    }
  }
  return count;
}

std::uint64_t count_windowed_coincidences(std::span<const TimeTag> tags, ChannelPair pair,
                                          std::span<const std::int64_t> centers_ticks,
                                          std::uint64_t window_ticks) {
  SpanTagSource source(tags);
  return count_windowed_coincidences(source, pair, centers_ticks, window_ticks);
}

double estimate_accidentals(double rate_hz, double window_s, int n_pairs, int n_centers) {
  if (rate_hz < 0.0 || window_s < 0.0) {
    throw std::domain_error("estimate_accidentals: rates and window must be non-negative");
  }
  return static_cast<double>(n_pairs) * static_cast<double>(n_centers) * rate_hz * rate_hz *
         window_s;
}

double estimate_accidentals(std::span<const double> channel_rates_hz,
                            std::span<const ChannelPair> pairs, double window_s, int n_centers) {
  if (window_s < 0.0) {
    throw std::domain_error("estimate_accidentals: window must be non-negative");
  }
  double total = 0.0;
  for (const ChannelPair& p : pairs) {
    const std::size_t i = p.first;
    const std::size_t j = p.second;
    if (i < 1 || i > channel_rates_hz.size() || j < 1 || j > channel_rates_hz.size()) {
      throw std::invalid_argument("estimate_accidentals: channel outside rate table");
    }
    const double ri = channel_rates_hz[i - 1];
    const double rj = channel_rates_hz[j - 1];
    if (ri < 0.0 || rj < 0.0) {
      throw std::domain_error("estimate_accidentals: rates must be non-negative");
    }
    total += ri * rj * window_s * static_cast<double>(n_centers);
  }
  return total;
}

std::uint64_t naive_coincidence_oracle(std::span<const TimeTag> tags, ChannelPair pair,
                                       std::span<const std::int64_t> centers_ticks,
                                       std::uint64_t window_ticks) {
  if (tags.size() > kOracleGuard) {
    throw std::length_error("naive_coincidence_oracle: refusing streams over 1e5 tags");
  }
  validate_windows(centers_ticks, window_ticks);
  const auto half = static_cast<std::int64_t>(window_ticks / 2);
  std::uint64_t count = 0;
  for (std::size_t p = 0; p < tags.size(); ++p) {
    if (tags[p].channel != pair.first) continue;
    for (std::size_t q = 0; q < tags.size(); ++q) {
      if (q == p || tags[q].channel != pair.second) continue;
      const auto d = static_cast<std::int64_t>(tags[q].tick) -
                     static_cast<std::int64_t>(tags[p].tick);
      if (in_any_window(d, centers_ticks, half)) ++count;
    }
  }
  return count;
}

Correlogram naive_correlogram_oracle(std::span<const TimeTag> tags, ChannelPair pair,
                                     std::uint64_t range_ticks, std::uint64_t bin_ticks) {
  if (tags.size() > kOracleGuard) {
    throw std::length_error("naive_correlogram_oracle: refusing streams over 1e5 tags");
  }
  if (bin_ticks < 1 || range_ticks < bin_ticks) {
    throw std::invalid_argument("naive_correlogram_oracle: need range >= bin >= 1");
  }
  Correlogram g;
  g.pair = pair;
  g.bin_width = bin_ticks;
  g.half_range_bins = range_ticks / bin_ticks;
  g.counts.assign(2 * g.half_range_bins + 1, 0);
  const auto n_half = static_cast<std::int64_t>(g.half_range_bins);

  for (std::size_t p = 0; p < tags.size(); ++p) {
    if (tags[p].channel == pair.first) ++g.tags_first;
    if (tags[p].channel == pair.second) ++g.tags_second;
    if (tags[p].channel != pair.first) continue;
    for (std::size_t q = 0; q < tags.size(); ++q) {
      if (q == p || tags[q].channel != pair.second) continue;
      const auto d = static_cast<std::int64_t>(tags[q].tick) -
                     static_cast<std::int64_t>(tags[p].tick);
      const std::int64_t k = bin_index(d, bin_ticks);
      if (k >= -n_half && k <= n_half) {
        ++g.counts[static_cast<std::size_t>(k + n_half)];
      }
    }
  }
  return g;
}

}  // namespace qlink
