#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "qlink/bell.hpp"
#include "test_util.hpp"

using namespace qlink;
using test::Complex;

namespace {

const AnalyzerSetting kMirrored0{0.0, Convention::Mirrored};

AnalyzerSetting rel(double angle) { return {angle, Convention::Relative}; }
AnalyzerSetting mir(double angle) { return {angle, Convention::Mirrored}; }

}  // namespace

TEST_CASE("psi-minus density matrix has the textbook entries") {
  const TwoQubitState rho = make_bell_state(BellLabel::PsiMinus);
  CHECK(rho(1, 1).real() == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(rho(2, 2).real() == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(rho(1, 2).real() == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(rho(2, 1).real() == doctest::Approx(-0.5).epsilon(1e-12));
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      if ((i == 1 || i == 2) && (j == 1 || j == 2)) continue;
      CHECK(std::abs(rho(i, j)) < 1e-12);
    }
  }
  rho.validate();
  CHECK(rho.purity() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("psi-plus flips the off-diagonal sign") {
  const TwoQubitState rho = make_bell_state(BellLabel::PsiPlus);
  CHECK(rho(1, 2).real() == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(rho(2, 1).real() == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("fractional phase matches an independent outer-product oracle") {
  const TwoQubitState rho = make_bell_state(BellState::psi(kPi / 2.0));
  // Oracle: amplitudes built by hand, outer product in test code.
  std::array<Complex, 4> amp{};
  amp[1] = Complex(1.0 / std::sqrt(2.0), 0.0);
  amp[2] = std::polar(1.0 / std::sqrt(2.0), kPi / 2.0);
  const TwoQubitState expected = test::outer_product(amp);

  CHECK(test::max_entry_difference(rho, expected) < 1e-12);
  CHECK(std::abs(rho(2, 1) - Complex(0.0, 0.5)) < 1e-12);
  CHECK(std::abs(rho(1, 2) - Complex(0.0, -0.5)) < 1e-12);
  CHECK(rho.purity() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("phi family lives on HH/VV") {
  const TwoQubitState rho = make_bell_state(BellLabel::PhiPlus);
  CHECK(rho(0, 0).real() == doctest::Approx(0.5));
  CHECK(rho(3, 3).real() == doctest::Approx(0.5));
  CHECK(rho(0, 3).real() == doctest::Approx(0.5));
  CHECK(rho(1, 1).real() == doctest::Approx(0.0));
  rho.validate();
}

TEST_CASE("bell states from all labels satisfy the state invariants") {
  for (const BellLabel label :
       {BellLabel::PsiMinus, BellLabel::PsiPlus, BellLabel::PhiMinus, BellLabel::PhiPlus}) {
    const TwoQubitState rho = make_bell_state(label);
    CHECK(rho.is_valid());
    CHECK(rho.purity() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("werner mixing: identity, full depolarization, domain errors") {
  const TwoQubitState psi = make_bell_state(BellLabel::PsiMinus);

  const TwoQubitState same = apply_werner(psi, 1.0);
  CHECK(test::max_entry_difference(same, psi) < 1e-15);

  const TwoQubitState mixed = apply_werner(psi, 0.0);
  CHECK(test::max_entry_difference(mixed, TwoQubitState::maximally_mixed()) < 1e-15);

  CHECK_THROWS_AS(apply_werner(psi, -0.01), std::domain_error);
  CHECK_THROWS_AS(apply_werner(psi, 1.01), std::domain_error);
}

TEST_CASE("werner mixing scales correlations exactly by v") {
  const TwoQubitState psi = make_bell_state(BellLabel::PsiMinus);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> angle(0.0, kPi);
  for (int trial = 0; trial < 200; ++trial) {
    const double v = unit(rng);
    const AnalyzerSetting a = rel(angle(rng));
    const AnalyzerSetting b = rel(angle(rng));
    const double e_pure = ideal_correlation(psi, a, b);
    const double e_mixed = ideal_correlation(apply_werner(psi, v), a, b);
    CHECK(std::abs(e_mixed - v * e_pure) < 1e-9);
    CHECK(apply_werner(psi, v).is_valid());
  }
}

TEST_CASE("werner 0.932 reproduces the scaled correlation at (0, pi/8)") {
  const TwoQubitState rho = apply_werner(make_bell_state(BellLabel::PsiMinus), 0.932);
  const double e = ideal_correlation(rho, kMirrored0, rel(kPi / 8.0));
  CHECK(e == doctest::Approx(-0.932 * std::cos(kPi / 4.0)).epsilon(1e-12));
  CHECK(e == doctest::Approx(-0.659).epsilon(1e-3));
}

TEST_CASE("analyzer projectors: axes, mirroring, idempotence, completeness") {
  const auto h = analyzer_projector(rel(0.0), Port::T);
  CHECK(h[0] == doctest::Approx(1.0));
  CHECK(h[1] == doctest::Approx(0.0));
  CHECK(h[3] == doctest::Approx(0.0));

  const auto diag = analyzer_projector(rel(kPi / 4.0), Port::T);
  for (const double v : diag) CHECK(v == doctest::Approx(0.5).epsilon(1e-12));

  const auto mirrored = analyzer_projector(mir(kPi / 8.0), Port::T);
  const auto negated = analyzer_projector(rel(-kPi / 8.0), Port::T);
  for (int i = 0; i < 4; ++i) CHECK(mirrored[i] == doctest::Approx(negated[i]).epsilon(1e-12));

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> angle(0.0, kPi);
  for (int trial = 0; trial < 100; ++trial) {
    const AnalyzerSetting s = rel(angle(rng));
    const auto t = analyzer_projector(s, Port::T);
    const auto r = analyzer_projector(s, Port::R);
    // T + R = identity
    CHECK(t[0] + r[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(t[1] + r[1] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(t[3] + r[3] == doctest::Approx(1.0).epsilon(1e-12));
    // idempotent: P^2 = P
    CHECK(t[0] * t[0] + t[1] * t[2] == doctest::Approx(t[0]).epsilon(1e-12));
    CHECK(t[0] * t[1] + t[1] * t[3] == doctest::Approx(t[1]).epsilon(1e-12));
    // symmetric
    CHECK(t[1] == doctest::Approx(t[2]).epsilon(1e-12));
  }
}

TEST_CASE("joint probabilities: anticorrelation, mixed state, error path") {
  const TwoQubitState psi = make_bell_state(BellLabel::PsiMinus);

  const OutcomeProbabilities p = joint_outcome_probabilities(psi, rel(0.0), rel(0.0));
  CHECK(p.p_tt == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(p.p_rr == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(p.p_tr == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(p.p_rt == doctest::Approx(0.5).epsilon(1e-12));

  const OutcomeProbabilities mixed =
      joint_outcome_probabilities(TwoQubitState::maximally_mixed(), rel(0.4), rel(1.1));
  for (const double v : {mixed.p_tt, mixed.p_tr, mixed.p_rt, mixed.p_rr}) {
    CHECK(v == doctest::Approx(0.25).epsilon(1e-12));
  }

  TwoQubitState broken = psi;
  broken(0, 0) += 0.5;  // trace 1.5
  CHECK_THROWS_AS(joint_outcome_probabilities(broken, rel(0.0), rel(0.0)), std::domain_error);
}

TEST_CASE("matrix-trace path agrees with the closed form at the Table-1 style setting") {
  const TwoQubitState psi = make_bell_state(BellLabel::PsiMinus);
  const OutcomeProbabilities p = joint_outcome_probabilities(psi, kMirrored0, rel(kPi / 8.0));
  const double e = p.p_tt + p.p_rr - p.p_tr - p.p_rt;
  CHECK(e == doctest::Approx(-std::cos(kPi / 4.0)).epsilon(1e-12));
  CHECK(e == doctest::Approx(-0.70711).epsilon(1e-5));
}

TEST_CASE("probabilities sum to one on random states and angles") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> angle(0.0, kPi);
  for (int trial = 0; trial < 1000; ++trial) {
    const TwoQubitState rho = test::random_density_matrix(rng);
    const AnalyzerSetting a{angle(rng),
                            trial % 2 == 0 ? Convention::Relative : Convention::Mirrored};
    const AnalyzerSetting b{angle(rng), Convention::Relative};
    const OutcomeProbabilities p = joint_outcome_probabilities(rho, a, b);
    CHECK(std::abs(p.sum() - 1.0) < 1e-9);
    CHECK(p.p_tt >= 0.0);
    CHECK(p.p_tr >= 0.0);
    CHECK(p.p_rt >= 0.0);
    CHECK(p.p_rr >= 0.0);
  }
}

TEST_CASE("random density matrices satisfy the state invariants") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 1000; ++trial) {
    const TwoQubitState rho = test::random_density_matrix(rng);
    CHECK(rho.is_valid(1e-10, 1e-10));
  }
}

TEST_CASE("ideal correlation matches the closed forms on a 20x20 grid") {
  const TwoQubitState psi = make_bell_state(BellLabel::PsiMinus);
  for (int i = 0; i < 20; ++i) {
    for (int j = 0; j < 20; ++j) {
      const double a = kPi * i / 20.0;
      const double b = kPi * j / 20.0;
      // A mirrored: E = -cos(2(a+b)); both relative: E = -cos(2(a-b)).
      CHECK(std::abs(ideal_correlation(psi, mir(a), rel(b)) + std::cos(2.0 * (a + b))) < 1e-9);
      CHECK(std::abs(ideal_correlation(psi, rel(a), rel(b)) + std::cos(2.0 * (a - b))) < 1e-9);
    }
  }
}

TEST_CASE("perfect anticorrelation and the Table-1 sign pattern") {
  const TwoQubitState psi = make_bell_state(BellLabel::PsiMinus);
  CHECK(ideal_correlation(psi, rel(0.0), rel(0.0)) == doctest::Approx(-1.0).epsilon(1e-12));

  // Settings (0,pi/8), (pi/4,pi/8), (0,3pi/8), (pi/4,3pi/8) with A mirrored:
  // signs (-,+,+,+).
  const double e1 = ideal_correlation(psi, mir(0.0), rel(kPi / 8.0));
  const double e2 = ideal_correlation(psi, mir(kPi / 4.0), rel(kPi / 8.0));
  const double e3 = ideal_correlation(psi, mir(0.0), rel(3.0 * kPi / 8.0));
  const double e4 = ideal_correlation(psi, mir(kPi / 4.0), rel(3.0 * kPi / 8.0));
  CHECK(e1 < 0.0);
  CHECK(e2 > 0.0);
  CHECK(e3 > 0.0);
  CHECK(e4 > 0.0);
  CHECK(std::abs(e1) == doctest::Approx(std::cos(kPi / 4.0)).epsilon(1e-12));
}

TEST_CASE("relative-convention correlations are rotationally covariant") {
  const TwoQubitState psi = make_bell_state(BellLabel::PsiMinus);
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> angle(0.0, kPi);
  for (int trial = 0; trial < 100; ++trial) {
    const double a = angle(rng);
    const double b = angle(rng);
    const double delta = angle(rng);
    const double base = ideal_correlation(psi, rel(a), rel(b));
    const double shifted = ideal_correlation(psi, rel(a + delta), rel(b + delta));
    CHECK(std::abs(shifted - base) < 1e-9);
  }
}

TEST_CASE("marginals of werner bell states are 50/50 at any angle") {
  const TwoQubitState rho = apply_werner(make_bell_state(BellLabel::PsiMinus), 0.87);
  for (const double a : {0.0, 0.3, kPi / 4.0, 2.0}) {
    CHECK(marginal_port_t_probability(rho, 1, rel(a)) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(marginal_port_t_probability(rho, 2, rel(a)) == doctest::Approx(0.5).epsilon(1e-12));
  }
}

TEST_CASE("visibility versus pump phase") {
  CHECK(visibility_vs_phase(0.0, 0.84) == doctest::Approx(0.84).epsilon(1e-12));
  CHECK(visibility_vs_phase(kPi / 2.0, 0.7) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(visibility_vs_phase(kPi, 0.84) == doctest::Approx(-0.84).epsilon(1e-12));
}

TEST_CASE("visibility budget composes multiplicatively") {
  CHECK(combine_visibilities({0.944, 0.992, 0.995}) == doctest::Approx(0.932).epsilon(0.002 / 0.932));
  CHECK(combine_visibilities({1.0, 1.0, 1.0}) == doctest::Approx(1.0));
  CHECK(combine_visibilities({0.5, 1.0, 1.0}) == doctest::Approx(0.5));
  CHECK_THROWS_AS(combine_visibilities({1.2, 1.0, 1.0}), std::domain_error);
}

TEST_CASE("phase normalization and label round trips") {
  CHECK(normalize_phase(-kPi) == doctest::Approx(kPi));
  CHECK(normalize_phase(2.0 * kPi) == doctest::Approx(0.0));
  CHECK(normalize_phase(5.0 * kPi) == doctest::Approx(kPi));
  CHECK(BellState::of(BellLabel::PsiPlus).phase == doctest::Approx(0.0));
  CHECK(BellState::of(BellLabel::PsiMinus).phase == doctest::Approx(kPi));
  CHECK(BellState::of(BellLabel::PhiMinus).family == BellFamily::Phi);
}
