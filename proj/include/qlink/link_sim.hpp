#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "qlink/bell.hpp"
#include "qlink/timetag.hpp"

namespace qlink {

/// Entangled-pair source. pair_rate is the detected-equivalent pair rate at
/// the source; orphan_singles_rate models unpaired source photons per arm
/// (zero by default) so receiver singles/SNR bookkeeping can match a real
/// source whose local singles exceed twice its pair rate.
struct SourceParams {
  double pair_rate_hz = 1e7;
  double orphan_singles_rate_hz = 0.0;
  double fibre_delay_s = 50e-9;  // applied to photon 2 of each pair
  BellState state = BellState::of(BellLabel::PsiMinus);
  double intrinsic_visibility = 0.992;
};

/// Optional log-normal loss modulation: the per-photon attenuation becomes
/// loss_db + X(t), X piecewise-constant N(0, log_std_db^2) over blocks of
/// coherence_time.
struct Scintillation {
  double log_std_db = 0.0;
  double coherence_time_s = 1e-3;
};

struct ChannelParams {
  double loss_db_per_photon = 32.0;
  std::optional<Scintillation> scintillation;
};

struct DetectorParams {
  double efficiency = 0.25;
  double dark_rate_hz = 200.0;
  double background_rate_hz = 200.0;
  double jitter_sigma_s = 168e-12;
  double dead_time_s = 0.0;
  double tick_s = kDefaultTickSeconds;
};

struct AnalyzerConfig {
  AnalyzerSetting a{0.0, Convention::Mirrored};
  AnalyzerSetting b{kPi / 8.0, Convention::Relative};
  double polarization_contrast = 0.995;
};

struct RunParams {
  double duration_s = 900.0;
  std::uint64_t seed = 1;
  double path_length_m = 0.0;
};

struct ChshPlanEntry {
  double angle_a_rad = 0.0;
  double angle_b_rad = 0.0;
  double duration_s = 900.0;
};

struct AnalysisParams {
  double coincidence_window_s = 1.25e-9;
  double correlogram_range_s = 100e-9;
};

/// Full experiment description; the CLI loads/stores it as JSON with explicit
/// units in every field name.
struct LinkConfig {
  SourceParams source;
  ChannelParams channel;
  std::array<DetectorParams, 4> detectors{};
  AnalyzerConfig analyzers;
  RunParams run;
  AnalysisParams analysis;
  std::vector<ChshPlanEntry> chsh_plan;

  double tick_s() const { return detectors[0].tick_s; }
  /// Throws ConfigError with a description of the first violated invariant.
  void validate() const;
};

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& message) : std::runtime_error(message) {}
};

/// Homogeneous Poisson process on [0, duration) via exponential inter-arrival
/// sampling; strictly increasing times. Negative rate raises
/// std::domain_error; zero rate or duration gives an empty stream.
std::vector<double> sample_poisson_events(double rate_hz, double duration_s,
                                          std::mt19937_64& rng);

/// Exact importance-sampled thinning of a pair process: three independent
/// Poisson streams (both photons survive / only photon 1 / only photon 2) at
/// rates pair_rate*p1*p2, pair_rate*p1*(1-p2), pair_rate*(1-p1)*p2 --
/// distribution-identical to per-photon Bernoulli thinning of the full
/// emission process.
struct ThinnedPairStreams {
  std::vector<double> both;
  std::vector<double> only_first;
  std::vector<double> only_second;
};
ThinnedPairStreams thin_pair_process(double pair_rate_hz, double p1, double p2,
                                     double duration_s, std::mt19937_64& rng);

/// Receiver channel numbering: D_A^T=1, D_A^R=2, D_B^T=3, D_B^R=4.
enum class AnalyzerId { A, B };
std::uint8_t channel_for(AnalyzerId analyzer, Port port);

/// Samples the detector channels of two surviving photons given their random
/// beamsplitter routes. Distinct analyzers draw one joint T/R outcome from
/// the two-qubit state; photons on the same analyzer draw independent
/// marginals at that analyzer's angle. Reusable: the outcome tables are built
/// once per (state, settings).
class PairOutcomeSampler {
 public:
  PairOutcomeSampler(const TwoQubitState& state, const AnalyzerSetting& a,
                     const AnalyzerSetting& b);

  struct Channels {
    std::uint8_t photon1;
    std::uint8_t photon2;
  };
  Channels sample(AnalyzerId route1, AnalyzerId route2, std::mt19937_64& rng) const;

  /// Channel for a lone surviving photon (1 or 2) routed to `analyzer`.
  std::uint8_t sample_single(int photon, AnalyzerId analyzer, std::mt19937_64& rng) const;

 private:
  // Cumulative TT/TR/RT/RR tables for routes (A,B) and (B,A).
  std::array<double, 4> cum_ab_{};
  std::array<double, 4> cum_ba_{};
  // Port-T marginals per photon per analyzer.
  std::array<std::array<double, 2>, 2> marginal_t_{};
};

std::uint8_t sample_pair_outcome_channel1(const TwoQubitState& state, const AnalyzerSetting& a,
                                          const AnalyzerSetting& b, AnalyzerId route1,
                                          AnalyzerId route2, std::mt19937_64& rng);

/// One detector channel with jitter, quantization and dead-time state.
/// Arrivals must be fed in non-decreasing true-arrival order: dead time acts
/// on true arrival times (physical recovery), the Gaussian jitter only
/// perturbs the recorded timestamp.
class PhotonDetector {
 public:
  PhotonDetector(std::uint8_t channel, const DetectorParams& params);

  std::optional<TimeTag> detect(double arrival_s, std::mt19937_64& rng);
  void reset();
  std::uint8_t channel() const { return channel_; }

 private:
  std::uint8_t channel_;
  DetectorParams params_;
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
  std::normal_distribution<double> jitter_;
  double last_accepted_s_ = 0.0;
  bool has_last_ = false;
};

/// Dark + background Poisson stream for one channel, uniform in time,
/// already tick-quantized, sorted, duplicates removed.
std::vector<TimeTag> generate_noise_tags(std::uint8_t channel, const DetectorParams& params,
                                         double duration_s, std::mt19937_64& rng);

enum class TagOrigin : std::uint8_t { Pair, Orphan, Dark, Background };

/// Ground-truth annotation for one emitted tag (aligned with the tag stream).
struct TruthTag {
  TagOrigin origin = TagOrigin::Dark;
  std::uint32_t pair_id = 0;        // valid for Pair origin; unique, monotone in emission
  double emitted_time_s = 0.0;
  bool partner_detected = false;    // Pair origin: partner also present in the stream
};

struct TruthRecord {
  std::vector<TruthTag> tags;
  std::uint64_t emitted_pairs = 0;       // includes undetected pairs (exact-distribution sample)
  std::uint64_t emitted_orphans = 0;     // both arms
  std::uint64_t detected_pair_photons = 0;
  std::uint64_t pairs_both_detected = 0;
  std::uint64_t pairs_cross_analyzer = 0;  // both detected, one per analyzer
  std::array<std::uint64_t, 4> signal_tags_per_channel{};
  std::array<std::uint64_t, 4> noise_tags_per_channel{};
  double duration_s = 0.0;
};

struct SimResult {
  std::vector<TimeTag> tags;  // sorted by (tick, channel), no duplicates
  TruthRecord truth;          // tags empty when truth recording is disabled
  StreamHeader header;
};

/// End-to-end run: source -> thinned free-space loss -> 50/50 routing ->
/// analyzers -> detectors, plus per-channel noise. Deterministic for a fixed
/// seed. Set record_truth = false to skip per-tag ground truth on large runs.
SimResult simulate_run(const LinkConfig& config, std::uint64_t seed, bool record_truth = true);

}  // namespace qlink
