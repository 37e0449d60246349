#pragma once

#include <array>
#include <complex>
#include <random>
#include <vector>

#include "qlink/bell.hpp"
#include "qlink/timetag.hpp"

namespace qlink::test {

using Complex = std::complex<double>;

/// Random density matrix via G G^dagger / trace: Hermitian, PSD, unit trace
/// by construction. Independent of the library's state constructors.
inline TwoQubitState random_density_matrix(std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::array<Complex, 16> g{};
  for (Complex& v : g) v = Complex(normal(rng), normal(rng));

  TwoQubitState rho;
  Complex trace = 0.0;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      Complex sum = 0.0;
      for (int k = 0; k < 4; ++k) {
        sum += g[static_cast<std::size_t>(i * 4 + k)] *
               std::conj(g[static_cast<std::size_t>(j * 4 + k)]);
      }
      rho(i, j) = sum;
    }
    trace += rho(i, i);
  }
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) rho(i, j) /= trace.real();
  }
  return rho;
}

/// Outer product |amp><amp| computed in test code; oracle for the library's
/// Bell-state constructor.
inline TwoQubitState outer_product(const std::array<Complex, 4>& amp) {
  TwoQubitState rho;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      rho(i, j) = amp[static_cast<std::size_t>(i)] * std::conj(amp[static_cast<std::size_t>(j)]);
    }
  }
  return rho;
}

/// trace(a*b) computed by plain loops.
inline Complex trace_product(const TwoQubitState& a, const TwoQubitState& b) {
  Complex t = 0.0;
  for (int i = 0; i < 4; ++i) {
    for (int k = 0; k < 4; ++k) t += a(i, k) * b(k, i);
  }
  return t;
}

inline double max_entry_difference(const TwoQubitState& a, const TwoQubitState& b) {
  double worst = 0.0;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) worst = std::max(worst, std::abs(a(i, j) - b(i, j)));
  }
  return worst;
}

/// Sorted random tag stream: n tags uniform over [0, span_ticks), channels
/// uniform over 1..4, duplicates removed.
inline std::vector<TimeTag> random_tag_stream(std::size_t n, std::uint64_t span_ticks,
                                              std::mt19937_64& rng) {
  std::uniform_int_distribution<std::uint64_t> tick_dist(0, span_ticks - 1);
  std::uniform_int_distribution<int> channel_dist(1, 4);
  std::vector<std::uint64_t> words;
  words.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    words.push_back((tick_dist(rng) << 4) | static_cast<std::uint64_t>(channel_dist(rng)));
  }
  std::sort(words.begin(), words.end());
  words.erase(std::unique(words.begin(), words.end()), words.end());
  std::vector<TimeTag> tags;
  tags.reserve(words.size());
  for (const std::uint64_t w : words) {
    tags.push_back(TimeTag{w >> 4, static_cast<std::uint8_t>(w & 0xF)});
  }
  return tags;
}

}  // namespace qlink::test
