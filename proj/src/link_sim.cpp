#include "qlink/link_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "qlink/chsh.hpp"

namespace qlink {
namespace {

// Exact draw for moderate means, normal approximation above 1e6 where the
// relative error is below 1e-3 sigma.
std::uint64_t poisson_count(double mean, std::mt19937_64& rng) {
  if (mean <= 0.0) return 0;
  if (mean < 1e6) {
    std::poisson_distribution<std::uint64_t> dist(mean);
    return dist(rng);
  }
  std::normal_distribution<double> dist(mean, std::sqrt(mean));
  const double draw = std::max(0.0, dist(rng));
  return static_cast<std::uint64_t>(std::llround(draw));
}

struct Candidate {
  double arrival_s;
  double emitted_s;
  std::uint32_t pair_id;
  std::uint8_t channel;
  TagOrigin origin;
};

void check_fraction(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw ConfigError(std::string(name) + " must be in [0,1], got " + std::to_string(v));
  }
}

void check_non_negative(double v, const char* name) {
  if (!(v >= 0.0)) {
    throw ConfigError(std::string(name) + " must be non-negative, got " + std::to_string(v));
  }
}

void check_positive(double v, const char* name) {
  if (!(v > 0.0)) {
    throw ConfigError(std::string(name) + " must be positive, got " + std::to_string(v));
  }
}

}  // namespace

void LinkConfig::validate() const {
  check_positive(source.pair_rate_hz, "source.pair_rate_hz");
  check_non_negative(source.orphan_singles_rate_hz, "source.orphan_singles_rate_hz");
  check_non_negative(source.fibre_delay_s, "source.fibre_delay_s");
  check_fraction(source.intrinsic_visibility, "source.intrinsic_visibility");
  check_non_negative(channel.loss_db_per_photon, "channel.loss_db_per_photon");
  if (channel.scintillation) {
    check_non_negative(channel.scintillation->log_std_db, "channel.scintillation.log_std_db");
    check_positive(channel.scintillation->coherence_time_s,
                   "channel.scintillation.coherence_time_s");
  }
  for (std::size_t i = 0; i < detectors.size(); ++i) {
    const DetectorParams& d = detectors[i];
    const std::string prefix = "detectors[" + std::to_string(i) + "].";
    check_fraction(d.efficiency, (prefix + "efficiency").c_str());
    check_non_negative(d.dark_rate_hz, (prefix + "dark_rate_hz").c_str());
    check_non_negative(d.background_rate_hz, (prefix + "background_rate_hz").c_str());
    check_non_negative(d.jitter_sigma_s, (prefix + "jitter_sigma_s").c_str());
    check_non_negative(d.dead_time_s, (prefix + "dead_time_s").c_str());
    check_positive(d.tick_s, (prefix + "tick_s").c_str());
    if (d.tick_s != detectors[0].tick_s) {
      throw ConfigError("all detectors must share one time-stamping tick");
    }
  }
  for (const auto& [angle, name] :
       {std::pair{analyzers.a.angle_rad, "analyzers.a"}, {analyzers.b.angle_rad, "analyzers.b"}}) {
    if (!(angle >= 0.0 && angle < kPi)) {
      throw ConfigError(std::string(name) + ".angle_rad must lie in [0, pi), got " +
                        std::to_string(angle));
    }
  }
  check_fraction(analyzers.polarization_contrast, "analyzers.polarization_contrast");
  check_positive(run.duration_s, "run.duration_s");
  check_non_negative(run.path_length_m, "run.path_length_m");
  check_positive(analysis.coincidence_window_s, "analysis.coincidence_window_s");
  check_positive(analysis.correlogram_range_s, "analysis.correlogram_range_s");
  if (!chsh_plan.empty()) {
    if (chsh_plan.size() != 4) {
      throw ConfigError("chsh_plan must contain exactly 4 setting pairs, got " +
                        std::to_string(chsh_plan.size()));
    }
    for (std::size_t i = 0; i < chsh_plan.size(); ++i) {
      check_positive(chsh_plan[i].duration_s, "chsh_plan duration_s");
      for (std::size_t j = 0; j < i; ++j) {
        if (chsh_plan[i].angle_a_rad == chsh_plan[j].angle_a_rad &&
            chsh_plan[i].angle_b_rad == chsh_plan[j].angle_b_rad) {
          throw ConfigError("chsh_plan setting pairs must be distinct");
        }
      }
    }
  }
}

std::vector<double> sample_poisson_events(double rate_hz, double duration_s,
                                          std::mt19937_64& rng) {
  if (rate_hz < 0.0) {
    throw std::domain_error("sample_poisson_events: rate must be non-negative");
  }
  if (duration_s < 0.0) {
    throw std::domain_error("sample_poisson_events: duration must be non-negative");
  }
  std::vector<double> events;
  if (rate_hz == 0.0 || duration_s == 0.0) return events;
  events.reserve(static_cast<std::size_t>(rate_hz * duration_s * 1.1) + 16);
  std::exponential_distribution<double> gap(rate_hz);
  double t = 0.0;
  for (;;) {
    double dt = gap(rng);
    while (!(dt > 0.0)) dt = gap(rng);
    t += dt;
    if (t >= duration_s) break;
    events.push_back(t);
  }
  return events;
}

ThinnedPairStreams thin_pair_process(double pair_rate_hz, double p1, double p2,
                                     double duration_s, std::mt19937_64& rng) {
  if (!(p1 >= 0.0 && p1 <= 1.0) || !(p2 >= 0.0 && p2 <= 1.0)) {
    throw std::domain_error("thin_pair_process: survival probabilities must be in [0,1]");
  }
  // Poisson splitting: independent categories with the per-pair category
  // probabilities, so exactly the law of per-photon Bernoulli thinning.
  ThinnedPairStreams streams;
  streams.both = sample_poisson_events(pair_rate_hz * p1 * p2, duration_s, rng);
  streams.only_first = sample_poisson_events(pair_rate_hz * p1 * (1.0 - p2), duration_s, rng);
  streams.only_second = sample_poisson_events(pair_rate_hz * (1.0 - p1) * p2, duration_s, rng);
  return streams;
}

std::uint8_t channel_for(AnalyzerId analyzer, Port port) {
  if (analyzer == AnalyzerId::A) return port == Port::T ? 1 : 2;
  return port == Port::T ? 3 : 4;
}

PairOutcomeSampler::PairOutcomeSampler(const TwoQubitState& state, const AnalyzerSetting& a,
                                       const AnalyzerSetting& b) {
  auto cumulative = [](const OutcomeProbabilities& p) {
    std::array<double, 4> cum{p.p_tt, p.p_tt + p.p_tr, p.p_tt + p.p_tr + p.p_rt, 1.0};
    return cum;
  };
  // Route (A,B): photon 1 measured at A's angle; (B,A) swaps the settings.
  cum_ab_ = cumulative(joint_outcome_probabilities(state, a, b));
  cum_ba_ = cumulative(joint_outcome_probabilities(state, b, a));
  for (int photon = 1; photon <= 2; ++photon) {
    marginal_t_[photon - 1][0] = marginal_port_t_probability(state, photon, a);
    marginal_t_[photon - 1][1] = marginal_port_t_probability(state, photon, b);
  }
}

PairOutcomeSampler::Channels PairOutcomeSampler::sample(AnalyzerId route1, AnalyzerId route2,
                                                        std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (route1 != route2) {
    const std::array<double, 4>& cum = route1 == AnalyzerId::A ? cum_ab_ : cum_ba_;
    const double u = unit(rng);
    int outcome = 3;
    for (int k = 0; k < 3; ++k) {
      if (u < cum[static_cast<std::size_t>(k)]) {
        outcome = k;
        break;
      }
    }
    const Port port1 = (outcome >> 1) == 0 ? Port::T : Port::R;
    const Port port2 = (outcome & 1) == 0 ? Port::T : Port::R;
    return {channel_for(route1, port1), channel_for(route2, port2)};
  }
  // Same analyzer: independent marginal draws at that analyzer's angle.
  const std::size_t an = route1 == AnalyzerId::A ? 0 : 1;
  const Port port1 = unit(rng) < marginal_t_[0][an] ? Port::T : Port::R;
  const Port port2 = unit(rng) < marginal_t_[1][an] ? Port::T : Port::R;
  return {channel_for(route1, port1), channel_for(route1, port2)};
}

std::uint8_t PairOutcomeSampler::sample_single(int photon, AnalyzerId analyzer,
                                               std::mt19937_64& rng) const {
  if (photon != 1 && photon != 2) {
    throw std::invalid_argument("sample_single: photon index must be 1 or 2");
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t an = analyzer == AnalyzerId::A ? 0 : 1;
  const Port port =
      unit(rng) < marginal_t_[static_cast<std::size_t>(photon - 1)][an] ? Port::T : Port::R;
  return channel_for(analyzer, port);
}

std::uint8_t sample_pair_outcome_channel1(const TwoQubitState& state, const AnalyzerSetting& a,
                                          const AnalyzerSetting& b, AnalyzerId route1,
                                          AnalyzerId route2, std::mt19937_64& rng) {
  return PairOutcomeSampler(state, a, b).sample(route1, route2, rng).photon1;
}

PhotonDetector::PhotonDetector(std::uint8_t channel, const DetectorParams& params)
    : channel_(channel), params_(params), jitter_(0.0, std::max(params.jitter_sigma_s, 1e-300)) {
  if (channel < 1 || channel > kChannelCount) {
    throw std::invalid_argument("PhotonDetector: channel outside 1-4");
  }
}

void PhotonDetector::reset() {
  has_last_ = false;
  last_accepted_s_ = 0.0;
  jitter_.reset();
}

std::optional<TimeTag> PhotonDetector::detect(double arrival_s, std::mt19937_64& rng) {
  if (params_.efficiency < 1.0 && unit_(rng) >= params_.efficiency) return std::nullopt;
  if (params_.dead_time_s > 0.0 && has_last_ &&
      arrival_s - last_accepted_s_ < params_.dead_time_s) {
    return std::nullopt;
  }
  last_accepted_s_ = arrival_s;
  has_last_ = true;

  double stamped = arrival_s;
  if (params_.jitter_sigma_s > 0.0) stamped += jitter_(rng);
  if (stamped < 0.0) return std::nullopt;  // before the recorder started
  return TimeTag{quantize(stamped, params_.tick_s), channel_};
}

std::vector<TimeTag> generate_noise_tags(std::uint8_t channel, const DetectorParams& params,
                                         double duration_s, std::mt19937_64& rng) {
  const double rate = params.dark_rate_hz + params.background_rate_hz;
  const std::vector<double> times = sample_poisson_events(rate, duration_s, rng);
  std::vector<TimeTag> tags;
  tags.reserve(times.size());
  for (const double t : times) {
    const std::uint64_t tick = quantize(t, params.tick_s);
    if (!tags.empty() && tags.back().tick == tick) continue;  // unresolvable within one tick
    tags.push_back(TimeTag{tick, channel});
  }
  return tags;
}

SimResult simulate_run(const LinkConfig& config, std::uint64_t seed, bool record_truth) {
  config.validate();
  std::mt19937_64 rng(seed);

  const double duration = config.run.duration_s;
  const double delay = config.source.fibre_delay_s;
  const double flight = config.run.path_length_m / kSpeedOfLight;
  const double tick_s = config.tick_s();

  // State visibility = source x detection polarization contrast; the
  // accidental floor is produced physically by the noise streams below.
  const double v_state =
      config.source.intrinsic_visibility * config.analyzers.polarization_contrast;
  const TwoQubitState state = apply_werner(make_bell_state(config.source.state), v_state);
  const PairOutcomeSampler sampler(state, config.analyzers.a, config.analyzers.b);

  double eff_max = 0.0;
  for (const DetectorParams& d : config.detectors) eff_max = std::max(eff_max, d.efficiency);
  std::array<double, 4> residual_eff{};
  for (int c = 0; c < 4; ++c) {
    residual_eff[static_cast<std::size_t>(c)] =
        eff_max > 0.0 ? config.detectors[static_cast<std::size_t>(c)].efficiency / eff_max : 0.0;
  }

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto draw_route = [&rng, &unit]() {
    return unit(rng) < 0.5 ? AnalyzerId::A : AnalyzerId::B;
  };

  std::vector<Candidate> candidates;
  {
    const double p_link_nominal = std::pow(10.0, -config.channel.loss_db_per_photon / 10.0);
    const double p_nominal = std::min(1.0, p_link_nominal * eff_max);
    const double expected =
        duration * (config.source.pair_rate_hz *
                        (p_nominal * p_nominal + 2.0 * p_nominal * (1.0 - p_nominal)) +
                    2.0 * config.source.orphan_singles_rate_hz * p_nominal);
    double noise_rate = 0.0;
    for (const DetectorParams& d : config.detectors) {
      noise_rate += d.dark_rate_hz + d.background_rate_hz;
    }
    candidates.reserve(static_cast<std::size_t>(
        1.05 * (expected + noise_rate * (duration + delay + flight)) + 64));
  }

  std::uint64_t emitted_pairs = 0;
  std::uint64_t emitted_orphans = 0;
  std::uint32_t next_pair_id = 0;

  auto accept = [&](std::uint8_t channel) {
    const double r = residual_eff[static_cast<std::size_t>(channel - 1)];
    return r >= 1.0 || unit(rng) < r;
  };

  auto handle_pair_photon = [&](double emitted, double arrival, std::uint8_t channel,
                                std::uint32_t id) {
    if (accept(channel)) {
      candidates.push_back(Candidate{arrival, emitted, id, channel, TagOrigin::Pair});
    }
  };

  // The free-space attenuation is constant per scintillation coherence block
  // (the whole run when scintillation is off). Within each block the thinned
  // streams are homogeneous Poisson processes.
  const bool scintillating =
      config.channel.scintillation.has_value() && config.channel.scintillation->log_std_db > 0.0;
  const double block_len =
      scintillating ? config.channel.scintillation->coherence_time_s : duration;
  std::normal_distribution<double> scint_db(
      0.0, scintillating ? config.channel.scintillation->log_std_db : 1.0);

  for (double block_start = 0.0; block_start < duration; block_start += block_len) {
    const double block = std::min(block_len, duration - block_start);
    double loss_db_block = config.channel.loss_db_per_photon;
    if (scintillating) loss_db_block += scint_db(rng);
    const double p_link = std::min(1.0, std::pow(10.0, -loss_db_block / 10.0));
    const double p = std::min(1.0, p_link * eff_max);

    ThinnedPairStreams pairs =
        thin_pair_process(config.source.pair_rate_hz, p, p, block, rng);

    // Merge the three survivor streams in emission order so pair ids are
    // monotone in emission time.
    std::size_t ib = 0, i1 = 0, i2 = 0;
    const double inf = std::numeric_limits<double>::infinity();
    for (;;) {
      const double tb = ib < pairs.both.size() ? pairs.both[ib] : inf;
      const double t1 = i1 < pairs.only_first.size() ? pairs.only_first[i1] : inf;
      const double t2 = i2 < pairs.only_second.size() ? pairs.only_second[i2] : inf;
      const double t = std::min({tb, t1, t2});
      if (t == inf) break;
      const double emitted = block_start + t;
      const std::uint32_t id = next_pair_id++;
      if (tb <= t1 && tb <= t2) {
        ++ib;
        const AnalyzerId route1 = draw_route();
        const AnalyzerId route2 = draw_route();
        const PairOutcomeSampler::Channels ch = sampler.sample(route1, route2, rng);
        handle_pair_photon(emitted, emitted + flight, ch.photon1, id);
        handle_pair_photon(emitted, emitted + delay + flight, ch.photon2, id);
      } else if (t1 <= t2) {
        ++i1;
        const std::uint8_t ch = sampler.sample_single(1, draw_route(), rng);
        handle_pair_photon(emitted, emitted + flight, ch, id);
      } else {
        ++i2;
        const std::uint8_t ch = sampler.sample_single(2, draw_route(), rng);
        handle_pair_photon(emitted, emitted + delay + flight, ch, id);
      }
    }
    // Complete the emission count with the unobserved (neither photon
    // survived) category -- an independent Poisson by the splitting theorem.
    emitted_pairs += poisson_count(config.source.pair_rate_hz * block * (1.0 - p) * (1.0 - p), rng);

    // Unpaired source singles, one stream per arm; polarization uncorrelated.
    for (int arm = 1; arm <= 2; ++arm) {
      const std::vector<double> orphans =
          sample_poisson_events(config.source.orphan_singles_rate_hz * p, block, rng);
      for (const double t : orphans) {
        const double emitted = block_start + t;
        const std::uint8_t channel =
            channel_for(draw_route(), unit(rng) < 0.5 ? Port::T : Port::R);
        if (accept(channel)) {
          candidates.push_back(Candidate{emitted + (arm == 2 ? delay : 0.0) + flight, emitted, 0,
                                         channel, TagOrigin::Orphan});
        }
      }
      emitted_orphans += orphans.size();
      emitted_orphans +=
          poisson_count(config.source.orphan_singles_rate_hz * block * (1.0 - p), rng);
    }
  }
  emitted_pairs += next_pair_id;

  // Detector noise covers the whole recording window.
  const double record_window = duration + delay + flight;
  for (int c = 0; c < 4; ++c) {
    const DetectorParams& det = config.detectors[static_cast<std::size_t>(c)];
    const auto channel = static_cast<std::uint8_t>(c + 1);
    for (const double t : sample_poisson_events(det.dark_rate_hz, record_window, rng)) {
      candidates.push_back(Candidate{t, t, 0, channel, TagOrigin::Dark});
    }
    for (const double t : sample_poisson_events(det.background_rate_hz, record_window, rng)) {
      candidates.push_back(Candidate{t, t, 0, channel, TagOrigin::Background});
    }
  }

  // Dead time needs true-arrival order per channel; skip the sort when every
  // dead time is zero (detection is then order-independent).
  bool any_dead_time = false;
  for (const DetectorParams& d : config.detectors) {
    if (d.dead_time_s > 0.0) any_dead_time = true;
  }
  if (any_dead_time) {
    std::sort(candidates.begin(), candidates.end(),
              [](const Candidate& x, const Candidate& y) {
                if (x.arrival_s != y.arrival_s) return x.arrival_s < y.arrival_s;
                return x.channel < y.channel;
              });
  }

  // Efficiency was consumed by the thinning + residual acceptance above, so
  // the per-channel detectors here run at unit efficiency.
  std::array<std::optional<PhotonDetector>, 4> detectors;
  for (int c = 0; c < 4; ++c) {
    DetectorParams params = config.detectors[static_cast<std::size_t>(c)];
    params.efficiency = 1.0;
    detectors[static_cast<std::size_t>(c)].emplace(static_cast<std::uint8_t>(c + 1), params);
  }

  SimResult result;
  result.header.tick_femtoseconds =
      static_cast<std::uint64_t>(std::llround(tick_s * 1e15));

  if (record_truth) {
    struct Keyed {
      std::uint64_t word;
      std::uint32_t index;  // into accepted truth pool
    };
    std::vector<Keyed> keyed;
    keyed.reserve(candidates.size());
    std::vector<TruthTag> truth_pool;
    truth_pool.reserve(candidates.size());

    for (const Candidate& cand : candidates) {
      auto& det = *detectors[static_cast<std::size_t>(cand.channel - 1)];
      const std::optional<TimeTag> tag = det.detect(cand.arrival_s, rng);
      if (!tag) continue;
      keyed.push_back(Keyed{encode_record(*tag), static_cast<std::uint32_t>(truth_pool.size())});
      truth_pool.push_back(TruthTag{cand.origin, cand.pair_id, cand.emitted_s, false});
    }
    candidates.clear();
    candidates.shrink_to_fit();

    std::sort(keyed.begin(), keyed.end(), [](const Keyed& x, const Keyed& y) {
      if (x.word != y.word) return x.word < y.word;
      return x.index < y.index;
    });

    result.tags.reserve(keyed.size());
    result.truth.tags.reserve(keyed.size());
    std::uint64_t prev_word = ~std::uint64_t{0};
    for (const Keyed& k : keyed) {
      if (k.word == prev_word) continue;  // one electronic pulse per tick per channel
      prev_word = k.word;
      result.tags.push_back(decode_record(k.word));
      result.truth.tags.push_back(truth_pool[k.index]);
    }
  } else {
    std::vector<std::uint64_t> words;
    words.reserve(candidates.size());
    for (const Candidate& cand : candidates) {
      auto& det = *detectors[static_cast<std::size_t>(cand.channel - 1)];
      const std::optional<TimeTag> tag = det.detect(cand.arrival_s, rng);
      if (tag) words.push_back(encode_record(*tag));
    }
    candidates.clear();
    candidates.shrink_to_fit();

    std::sort(words.begin(), words.end());
    words.erase(std::unique(words.begin(), words.end()), words.end());
    result.tags.reserve(words.size());
    for (const std::uint64_t w : words) result.tags.push_back(decode_record(w));
  }

  TruthRecord& truth = result.truth;
  truth.duration_s = duration;
  truth.emitted_pairs = emitted_pairs;
  truth.emitted_orphans = emitted_orphans;
  if (record_truth) {
    std::vector<std::uint8_t> per_pair(next_pair_id, 0);
    for (std::size_t i = 0; i < result.tags.size(); ++i) {
      const TruthTag& t = truth.tags[i];
      const std::size_t ch = result.tags[i].channel - 1;
      if (t.origin == TagOrigin::Pair || t.origin == TagOrigin::Orphan) {
        ++truth.signal_tags_per_channel[ch];
      } else {
        ++truth.noise_tags_per_channel[ch];
      }
      if (t.origin == TagOrigin::Pair) {
        ++truth.detected_pair_photons;
        if (per_pair[t.pair_id] < 2) ++per_pair[t.pair_id];
      }
    }
    for (std::size_t i = 0; i < result.tags.size(); ++i) {
      TruthTag& t = truth.tags[i];
      if (t.origin == TagOrigin::Pair) {
        t.partner_detected = per_pair[t.pair_id] == 2;
      }
    }
    for (const std::uint8_t n : per_pair) {
      if (n == 2) ++truth.pairs_both_detected;
    }
  }
  return result;
}

}  // namespace qlink
