#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace qlink {

/// Quantum-mechanical CHSH maximum, 2*sqrt(2).
inline constexpr double kChshQuantumMax = 2.8284271247461902909;

/// Classical CHSH bound.
inline constexpr double kChshClassicalBound = 2.0;

/// CHSH analyzer settings (alpha, beta, alpha', beta') that achieve the
/// quantum maximum: (0, pi/8, pi/4, 3pi/8).
std::array<double, 4> chsh_standard_settings();

/// Speed of light used for flight-time bookkeeping, m/s.
inline constexpr double kSpeedOfLight = 2.998e8;

/// Coincidence counts for one analyzer-angle pair.
struct SettingCounts {
  double angle_a_rad = 0.0;
  double angle_b_rad = 0.0;
  std::uint64_t c_tt = 0;
  std::uint64_t c_tr = 0;
  std::uint64_t c_rt = 0;
  std::uint64_t c_rr = 0;

  std::uint64_t total() const { return c_tt + c_tr + c_rt + c_rr; }
};

struct CorrelationResult {
  double e = 0.0;
  double delta_e = 0.0;
};

/// E = (C_TT + C_RR - C_TR - C_RT) / N with first-order Poisson error
/// propagation: dE = 2*sqrt(C+ * C- / N^3), C+ = C_TT+C_RR, C- = C_TR+C_RT.
/// Throws std::domain_error when N = 0.
CorrelationResult correlation_with_error(const SettingCounts& counts);

struct ChshResult {
  double s = 0.0;
  double delta_s = 0.0;
  double sigmas_above_2 = 0.0;
  double qber = 0.0;
  double delta_qber = 0.0;
  /// Set when S exceeded 2*sqrt(2) and the QBER was clamped to 0.
  bool qber_clamped = false;
};

/// S = |E(a,b) - E(a,b')| + |E(a',b') + E(a',b)| from four correlation
/// results ordered as E(a,b), E(a,b'), E(a',b), E(a',b');
/// dS = sqrt(sum dE_i^2). The QBER fields are filled via qber_from_s.
ChshResult chsh_with_error(const std::array<CorrelationResult, 4>& correlations);

struct QberResult {
  double qber = 0.0;
  double delta_qber = 0.0;
  /// True when s > 2*sqrt(2) (statistical fluctuation) and qber clamped to 0.
  bool clamped = false;
};

/// QBER = (1 - s/(2*sqrt(2)))/2, dQBER = ds/(4*sqrt(2)).
QberResult qber_from_s(double s, double delta_s);

/// Visibility-limited Bell parameter: S_max = v_tot * 2*sqrt(2).
double predict_s_max(double v_tot);

/// Visibility dilution from a flat accidental floor: snr/(snr + 1).
double noise_visibility_from_snr(double snr);

/// 10*log10(rate_in/rate_out); both rates must be positive.
double loss_db(double rate_in_hz, double rate_out_hz);

struct BudgetStage {
  std::string name;
  double rate_in_hz = 0.0;
  double rate_out_hz = 0.0;
  double attenuation_db = 0.0;
};

/// Itemized dB ledger for the full link.
struct LossBudget {
  std::vector<BudgetStage> stages;
  double singles_total_db = 0.0;       // local singles -> receiver signal singles
  double pair_total_db = 0.0;          // local pairs -> receiver pairs
  double beamsplitter_db = 0.0;        // structural 50/50 routing loss per pair
  double detector_delta_db = 0.0;      // per-photon efficiency ratio source/receiver
  double single_link_db = 0.0;         // residual free-space loss per photon
  double pair_link_db = 0.0;           // residual free-space loss per pair
  double pair_to_single_ratio = 0.0;   // pair_link_db / single_link_db
  double flight_time_s = 0.0;
};

struct BudgetInputs {
  double local_pair_rate_hz = 0.0;
  double local_singles_rate_hz = 0.0;
  double received_pair_rate_hz = 0.0;
  double received_singles_rate_hz = 0.0;  // signal singles, noise excluded
  double source_detector_efficiency = 0.40;
  double receiver_detector_efficiency = 0.25;
  double path_length_m = 0.0;
};

LossBudget budget_report(const BudgetInputs& inputs);

}  // namespace qlink
