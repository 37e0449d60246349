#include "qlink/chsh.hpp"

#include <cmath>
#include <stdexcept>

#include "qlink/bell.hpp"

namespace qlink {

std::array<double, 4> chsh_standard_settings() {
  return {0.0, kPi / 8.0, kPi / 4.0, 3.0 * kPi / 8.0};
}

CorrelationResult correlation_with_error(const SettingCounts& counts) {
  const std::uint64_t n = counts.total();
  if (n == 0) {
    throw std::domain_error("correlation_with_error: zero total counts");
  }
  const auto c_plus = static_cast<double>(counts.c_tt + counts.c_rr);
  const auto c_minus = static_cast<double>(counts.c_tr + counts.c_rt);
  const auto total = static_cast<double>(n);

  CorrelationResult result;
  result.e = (c_plus - c_minus) / total;
  // Var(E) = sum_i (dE/dC_i)^2 * C_i for independent Poisson counts, which
  // collapses to 4*C+*C-/N^3. Degenerate when either group is empty.
  result.delta_e = c_plus * c_minus == 0.0
                       ? 0.0
                       : 2.0 * std::sqrt(c_plus * c_minus / (total * total * total));
  return result;
}

ChshResult chsh_with_error(const std::array<CorrelationResult, 4>& correlations) {
  const CorrelationResult& e_ab = correlations[0];
  const CorrelationResult& e_ab2 = correlations[1];
  const CorrelationResult& e_a2b = correlations[2];
  const CorrelationResult& e_a2b2 = correlations[3];

  ChshResult result;
  result.s = std::abs(e_ab.e - e_ab2.e) + std::abs(e_a2b2.e + e_a2b.e);
  double var = 0.0;
  for (const CorrelationResult& c : correlations) var += c.delta_e * c.delta_e;
  result.delta_s = std::sqrt(var);
  result.sigmas_above_2 =
      result.delta_s > 0.0 ? (result.s - kChshClassicalBound) / result.delta_s : 0.0;

  const QberResult q = qber_from_s(result.s, result.delta_s);
  result.qber = q.qber;
  result.delta_qber = q.delta_qber;
  result.qber_clamped = q.clamped;
  return result;
}

QberResult qber_from_s(double s, double delta_s) {
  if (s < 0.0 || delta_s < 0.0) {
    throw std::domain_error("qber_from_s: s and delta_s must be non-negative");
  }
  QberResult result;
  result.delta_qber = delta_s / (4.0 * std::sqrt(2.0));
  if (s > kChshQuantumMax) {
    // Statistical fluctuation above the quantum bound: accepted, flagged.
    result.qber = 0.0;
    result.clamped = true;
  } else {
    result.qber = (1.0 - s / kChshQuantumMax) / 2.0;
  }
  return result;
}

double predict_s_max(double v_tot) {
  if (!(v_tot >= 0.0 && v_tot <= 1.0)) {
    throw std::domain_error("predict_s_max: visibility must be in [0,1]");
  }
  return v_tot * kChshQuantumMax;
}

double noise_visibility_from_snr(double snr) {
  if (!(snr > 0.0)) {
    throw std::domain_error("noise_visibility_from_snr: snr must be positive");
  }
  return snr / (snr + 1.0);
}

double loss_db(double rate_in_hz, double rate_out_hz) {
  if (!(rate_in_hz > 0.0) || !(rate_out_hz > 0.0)) {
    throw std::domain_error("loss_db: rates must be positive");
  }
  return 10.0 * std::log10(rate_in_hz / rate_out_hz);
}

LossBudget budget_report(const BudgetInputs& in) {
  LossBudget budget;

  auto add_stage = [&budget](const std::string& name, double rate_in, double rate_out) {
    BudgetStage stage;
    stage.name = name;
    stage.rate_in_hz = rate_in;
    stage.rate_out_hz = rate_out;
    stage.attenuation_db = loss_db(rate_in, rate_out);
    budget.stages.push_back(stage);
    return stage.attenuation_db;
  };

  // Per-pair structural loss of the 50/50 beamsplitter: half of the pairs
  // land on the same analyzer and produce no A-B coincidence.
  budget.beamsplitter_db = 10.0 * std::log10(2.0);
  budget.detector_delta_db =
      10.0 * std::log10(in.source_detector_efficiency / in.receiver_detector_efficiency);

  if (in.local_singles_rate_hz > 0.0 && in.received_singles_rate_hz > 0.0) {
    budget.singles_total_db =
        add_stage("singles: local -> receiver", in.local_singles_rate_hz,
                  in.received_singles_rate_hz);
    budget.single_link_db = budget.singles_total_db - budget.detector_delta_db;
  }
  if (in.local_pair_rate_hz > 0.0 && in.received_pair_rate_hz > 0.0) {
    budget.pair_total_db =
        add_stage("pairs: local -> receiver", in.local_pair_rate_hz, in.received_pair_rate_hz);
    budget.pair_link_db =
        budget.pair_total_db - budget.beamsplitter_db - 2.0 * budget.detector_delta_db;
  }
  if (budget.single_link_db > 0.0) {
    budget.pair_to_single_ratio = budget.pair_link_db / budget.single_link_db;
  }
  budget.flight_time_s = in.path_length_m / kSpeedOfLight;
  return budget;
}

}  // namespace qlink
