#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "qlink/bell.hpp"
#include "qlink/chsh.hpp"

using namespace qlink;

namespace {

SettingCounts counts_of(std::uint64_t tt, std::uint64_t tr, std::uint64_t rt, std::uint64_t rr) {
  SettingCounts c;
  c.c_tt = tt;
  c.c_tr = tr;
  c.c_rt = rt;
  c.c_rr = rr;
  return c;
}

// Sample standard deviation of E under Poisson resampling of the four
// counts; the independent check on the closed-form error propagation.
double resampled_e_std(const SettingCounts& counts, int trials, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::poisson_distribution<std::uint64_t> tt(static_cast<double>(counts.c_tt));
  std::poisson_distribution<std::uint64_t> tr(static_cast<double>(counts.c_tr));
  std::poisson_distribution<std::uint64_t> rt(static_cast<double>(counts.c_rt));
  std::poisson_distribution<std::uint64_t> rr(static_cast<double>(counts.c_rr));
  double sum = 0.0;
  double sum2 = 0.0;
  int n = 0;
  for (int i = 0; i < trials; ++i) {
    const double ctt = static_cast<double>(tt(rng));
    const double ctr = static_cast<double>(tr(rng));
    const double crt = static_cast<double>(rt(rng));
    const double crr = static_cast<double>(rr(rng));
    const double total = ctt + ctr + crt + crr;
    if (total == 0.0) continue;
    const double e = (ctt + crr - ctr - crt) / total;
    sum += e;
    sum2 += e * e;
    ++n;
  }
  const double mean = sum / n;
  return std::sqrt(sum2 / n - mean * mean);
}

}  // namespace

TEST_CASE("correlation value and first-order poisson error") {
  SUBCASE("all counts in one channel give E=1 with zero error") {
    const CorrelationResult r = correlation_with_error(counts_of(192, 0, 0, 0));
    CHECK(r.e == doctest::Approx(1.0));
    CHECK(r.delta_e == 0.0);
  }
  SUBCASE("the (19,77,77,19) tuple") {
    const CorrelationResult r = correlation_with_error(counts_of(19, 77, 77, 19));
    CHECK(r.e == doctest::Approx(-116.0 / 192.0).epsilon(1e-12));
    CHECK(r.e == doctest::Approx(-0.604).epsilon(1e-3));
    CHECK(r.delta_e == doctest::Approx(0.057508).epsilon(1e-4));
  }
  SUBCASE("equal counts reduce to 1/sqrt(N)") {
    for (const std::uint64_t k : {5ull, 48ull, 1000ull}) {
      const CorrelationResult r = correlation_with_error(counts_of(k, k, k, k));
      CHECK(r.e == doctest::Approx(0.0));
      CHECK(r.delta_e == doctest::Approx(1.0 / std::sqrt(4.0 * static_cast<double>(k)))
                             .epsilon(1e-12));
    }
  }
  SUBCASE("zero total counts is an error") {
    CHECK_THROWS_AS(correlation_with_error(counts_of(0, 0, 0, 0)), std::domain_error);
  }
}

TEST_CASE("closed-form error matches poisson resampling within 5 percent") {
  const SettingCounts tuples[] = {counts_of(19, 77, 77, 19), counts_of(30, 12, 14, 28),
                                  counts_of(100, 100, 100, 100), counts_of(500, 50, 60, 450),
                                  counts_of(10, 10, 10, 10)};
  std::uint64_t seed = 100;
  for (const SettingCounts& c : tuples) {
    const double formula = correlation_with_error(c).delta_e;
    const double mc = resampled_e_std(c, 100000, seed++);
    CHECK(std::abs(mc - formula) / formula < 0.05);
  }
}

TEST_CASE("golden CHSH numbers from the four correlation values") {
  // Order: E(a,b), E(a,b'), E(a',b), E(a',b').
  const std::array<CorrelationResult, 4> table{{{-0.604, 0.059},
                                                {0.638, 0.056},
                                                {0.672, 0.055},
                                                {0.697, 0.058}}};
  const ChshResult r = chsh_with_error(table);
  CHECK(r.s == doctest::Approx(2.611).epsilon(1e-4));
  CHECK(r.delta_s == doctest::Approx(0.114044).epsilon(1e-4));
  CHECK(r.sigmas_above_2 == doctest::Approx(5.358).epsilon(1e-3));
  CHECK(r.qber == doctest::Approx(0.0384).epsilon(0.01));
  CHECK_FALSE(r.qber_clamped);
}

TEST_CASE("count tuples reproducing the experimental table") {
  const std::array<SettingCounts, 4> tuples{
      counts_of(18, 73, 73, 18),   // E(a,b)  ~ -0.604
      counts_of(77, 17, 17, 77),   // E(a,b') ~ +0.638
      counts_of(76, 15, 15, 77),   // E(a',b) ~ +0.672
      counts_of(64, 11, 12, 65)};  // E(a',b')~ +0.697
  std::array<CorrelationResult, 4> correlations{};
  for (std::size_t i = 0; i < 4; ++i) correlations[i] = correlation_with_error(tuples[i]);
  CHECK(correlations[0].e == doctest::Approx(-0.604).epsilon(2e-3));
  CHECK(correlations[1].e == doctest::Approx(0.638).epsilon(2e-3));
  CHECK(correlations[2].e == doctest::Approx(0.672).epsilon(2e-3));
  CHECK(correlations[3].e == doctest::Approx(0.697).epsilon(2e-3));

  const ChshResult r = chsh_with_error(correlations);
  CHECK(std::abs(r.s - 2.612) <= 0.005);
  CHECK(std::abs(r.delta_s - 0.114) <= 0.001);
  CHECK(std::abs(r.sigmas_above_2 - 5.4) <= 0.1);
}

TEST_CASE("ideal correlations reach the quantum bound, zero input gives zero") {
  const std::array<CorrelationResult, 4> ideal{{{-1.0 / std::sqrt(2.0), 0.0},
                                                {1.0 / std::sqrt(2.0), 0.0},
                                                {1.0 / std::sqrt(2.0), 0.0},
                                                {1.0 / std::sqrt(2.0), 0.0}}};
  CHECK(chsh_with_error(ideal).s == doctest::Approx(kChshQuantumMax).epsilon(1e-12));

  const std::array<CorrelationResult, 4> zero{{{0, 0}, {0, 0}, {0, 0}, {0, 0}}};
  CHECK(chsh_with_error(zero).s == 0.0);
}

TEST_CASE("S is invariant under uniform count scaling, dS shrinks as 1/sqrt(N)") {
  const std::array<SettingCounts, 4> base{counts_of(18, 73, 73, 18), counts_of(77, 17, 17, 77),
                                          counts_of(76, 15, 15, 77), counts_of(64, 11, 12, 65)};
  auto chsh_of = [](const std::array<SettingCounts, 4>& tuples) {
    std::array<CorrelationResult, 4> c{};
    for (std::size_t i = 0; i < 4; ++i) c[i] = correlation_with_error(tuples[i]);
    return chsh_with_error(c);
  };
  const ChshResult r1 = chsh_of(base);
  double prev_delta = r1.delta_s;
  for (const std::uint64_t k : {4ull, 16ull, 64ull}) {
    std::array<SettingCounts, 4> scaled = base;
    for (SettingCounts& c : scaled) {
      c.c_tt *= k;
      c.c_tr *= k;
      c.c_rt *= k;
      c.c_rr *= k;
    }
    const ChshResult rk = chsh_of(scaled);
    CHECK(rk.s == doctest::Approx(r1.s).epsilon(1e-12));
    CHECK(rk.delta_s < prev_delta);
    // quadrupling counts halves the error
    CHECK(rk.delta_s == doctest::Approx(r1.delta_s / std::sqrt(static_cast<double>(k)))
                            .epsilon(1e-9));
    prev_delta = rk.delta_s;
  }
}

TEST_CASE("qber from the bell parameter") {
  const QberResult q = qber_from_s(2.612, 0.114);
  CHECK(q.qber == doctest::Approx(0.038259).epsilon(1e-4));
  CHECK(q.qber == doctest::Approx(0.0385).epsilon(0.002 / 0.0385));  // paper rounding dominates
  CHECK(q.delta_qber == doctest::Approx(0.114 / (4.0 * std::sqrt(2.0))).epsilon(1e-12));
  CHECK_FALSE(q.clamped);

  CHECK(qber_from_s(kChshQuantumMax, 0.0).qber == doctest::Approx(0.0));
  CHECK(qber_from_s(0.0, 0.0).qber == doctest::Approx(0.5));

  const QberResult clamped = qber_from_s(2.9, 0.1);
  CHECK(clamped.qber == 0.0);
  CHECK(clamped.clamped);
  CHECK(clamped.delta_qber == doctest::Approx(0.1 / (4.0 * std::sqrt(2.0))));

  CHECK_THROWS_AS(qber_from_s(-0.1, 0.0), std::domain_error);
}

TEST_CASE("qber equals (1-V)/2 for werner states at the standard settings") {
  const auto [alpha, beta, alpha2, beta2] = chsh_standard_settings();
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> vis(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const double v = vis(rng);
    const TwoQubitState rho = apply_werner(make_bell_state(BellLabel::PsiMinus), v);
    auto e = [&rho](double a, double b) {
      return CorrelationResult{
          ideal_correlation(rho, {a, Convention::Mirrored}, {b, Convention::Relative}), 0.0};
    };
    const ChshResult r =
        chsh_with_error({e(alpha, beta), e(alpha, beta2), e(alpha2, beta), e(alpha2, beta2)});
    CHECK(std::abs(r.s - v * kChshQuantumMax) < 1e-9);
    CHECK(std::abs(r.qber - (1.0 - v) / 2.0) < 1e-9);
  }
}

TEST_CASE("visibility-limited S prediction") {
  CHECK(predict_s_max(0.932) == doctest::Approx(2.636).epsilon(0.005 / 2.636));
  CHECK(predict_s_max(1.0) == doctest::Approx(kChshQuantumMax));
  // classical bound is reached at V = 1/sqrt(2)
  CHECK(predict_s_max(1.0 / std::sqrt(2.0)) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK_THROWS_AS(predict_s_max(1.2), std::domain_error);
}

TEST_CASE("noise visibility from the coincidence SNR") {
  CHECK(noise_visibility_from_snr(15.0) == doctest::Approx(0.9375));
  CHECK(noise_visibility_from_snr(1e9) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(noise_visibility_from_snr(1.0) == doctest::Approx(0.5));
  CHECK_THROWS_AS(noise_visibility_from_snr(0.0), std::domain_error);
}

TEST_CASE("dB attenuation arithmetic") {
  CHECK(loss_db(1e6, 0.071) == doctest::Approx(71.487417).epsilon(1e-6));
  CHECK(loss_db(1e6, 0.071) == doctest::Approx(71.5).epsilon(0.6 / 71.5));
  CHECK(loss_db(123.0, 123.0) == doctest::Approx(0.0));
  CHECK(loss_db(3.3e6, 2500.0) == doctest::Approx(31.206).epsilon(1e-4));
  CHECK_THROWS_AS(loss_db(0.0, 1.0), std::domain_error);
  CHECK_THROWS_AS(loss_db(1.0, -2.0), std::domain_error);
}

TEST_CASE("loss budget ledger on the experiment's numbers") {
  BudgetInputs in;
  in.local_pair_rate_hz = 1e6;
  in.local_singles_rate_hz = 3.3e6;
  in.received_pair_rate_hz = 0.0778;
  in.received_singles_rate_hz = 1301.0;
  in.source_detector_efficiency = 0.40;
  in.receiver_detector_efficiency = 0.25;
  in.path_length_m = 144e3;

  const LossBudget budget = budget_report(in);
  CHECK(budget.detector_delta_db == doctest::Approx(2.041).epsilon(1e-3));
  CHECK(budget.beamsplitter_db == doctest::Approx(3.0103).epsilon(1e-4));
  CHECK(budget.singles_total_db == doctest::Approx(34.04).epsilon(1e-3));
  CHECK(budget.single_link_db == doctest::Approx(32.0).epsilon(0.01));
  CHECK(budget.pair_link_db == doctest::Approx(64.0).epsilon(0.01));
  // pair link attenuation is twice the single link attenuation
  CHECK(std::abs(budget.pair_link_db - 2.0 * budget.single_link_db) < 0.5);
  CHECK(budget.flight_time_s == doctest::Approx(4.8032e-4).epsilon(0.02));

  for (const BudgetStage& stage : budget.stages) {
    CHECK(stage.attenuation_db ==
          doctest::Approx(10.0 * std::log10(stage.rate_in_hz / stage.rate_out_hz))
              .epsilon(1e-12));
  }
}

TEST_CASE("zero-loss budget stages give zero dB totals") {
  BudgetInputs in;
  in.local_pair_rate_hz = 500.0;
  in.received_pair_rate_hz = 500.0;
  in.local_singles_rate_hz = 1000.0;
  in.received_singles_rate_hz = 1000.0;
  in.source_detector_efficiency = 0.25;
  in.receiver_detector_efficiency = 0.25;
  const LossBudget budget = budget_report(in);
  CHECK(budget.singles_total_db == doctest::Approx(0.0));
  CHECK(budget.pair_total_db == doctest::Approx(0.0));
  CHECK(budget.detector_delta_db == doctest::Approx(0.0));
  CHECK(budget.flight_time_s == 0.0);
}
