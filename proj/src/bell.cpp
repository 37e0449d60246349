#include "qlink/bell.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace qlink {
namespace {

using Complex = std::complex<double>;
using Matrix4c = Eigen::Matrix<Complex, 4, 4, Eigen::RowMajor>;
using MapMatrix4c = Eigen::Map<const Matrix4c>;

// Basis indices in the ordered (HH, HV, VH, VV) basis.
constexpr int kHH = 0;
constexpr int kHV = 1;
constexpr int kVH = 2;
constexpr int kVV = 3;

MapMatrix4c as_eigen(const TwoQubitState& s) { return MapMatrix4c(s.m.data()); }

double effective_angle(const AnalyzerSetting& s) {
  return s.convention == Convention::Mirrored ? -s.angle_rad : s.angle_rad;
}

}  // namespace

double normalize_phase(double rad) {
  double r = std::fmod(rad, 2.0 * kPi);
  if (r < 0.0) r += 2.0 * kPi;
  // fmod can land exactly on 2*pi after the correction when rad is a tiny
  // negative number.
  if (r >= 2.0 * kPi) r = 0.0;
  return r;
}

BellState BellState::of(BellLabel label) {
  switch (label) {
    case BellLabel::PsiMinus:
      return {BellFamily::Psi, kPi};
    case BellLabel::PsiPlus:
      return {BellFamily::Psi, 0.0};
    case BellLabel::PhiMinus:
      return {BellFamily::Phi, kPi};
    case BellLabel::PhiPlus:
      return {BellFamily::Phi, 0.0};
  }
  throw std::invalid_argument("unknown Bell label");
}

double TwoQubitState::trace_real() const {
  return ((*this)(0, 0) + (*this)(1, 1) + (*this)(2, 2) + (*this)(3, 3)).real();
}

double TwoQubitState::purity() const { return (as_eigen(*this) * as_eigen(*this)).trace().real(); }

double TwoQubitState::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> solver(as_eigen(*this),
                                                         Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

bool TwoQubitState::is_valid(double hermitian_tol, double trace_tol,
                             double eigenvalue_floor) const {
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      if (std::abs((*this)(i, j) - std::conj((*this)(j, i))) > hermitian_tol) return false;
    }
  }
  if (std::abs(trace_real() - 1.0) >= trace_tol) return false;
  return min_eigenvalue() >= eigenvalue_floor;
}

void TwoQubitState::validate(double hermitian_tol, double trace_tol,
                             double eigenvalue_floor) const {
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      if (std::abs((*this)(i, j) - std::conj((*this)(j, i))) > hermitian_tol) {
        throw std::domain_error("TwoQubitState: matrix is not Hermitian at entry (" +
                                std::to_string(i) + "," + std::to_string(j) + ")");
      }
    }
  }
  if (std::abs(trace_real() - 1.0) >= trace_tol) {
    throw std::domain_error("TwoQubitState: trace is " + std::to_string(trace_real()) +
                            ", expected 1");
  }
  const double min_eig = min_eigenvalue();
  if (min_eig < eigenvalue_floor) {
    throw std::domain_error("TwoQubitState: smallest eigenvalue " + std::to_string(min_eig) +
                            " below " + std::to_string(eigenvalue_floor));
  }
}

TwoQubitState TwoQubitState::maximally_mixed() {
  TwoQubitState s;
  for (int i = 0; i < 4; ++i) s(i, i) = 0.25;
  return s;
}

TwoQubitState make_bell_state(const BellState& state) {
  // |psi> = (|x> + e^{i phase}|y>)/sqrt(2) with (x, y) = (HV, VH) for the Psi
  // family and (HH, VV) for Phi; the density matrix is the outer product.
  const int x = state.family == BellFamily::Psi ? kHV : kHH;
  const int y = state.family == BellFamily::Psi ? kVH : kVV;
  const Complex phase = std::polar(1.0, state.phase);

  std::array<Complex, 4> amp{};
  amp[static_cast<std::size_t>(x)] = Complex(1.0 / std::sqrt(2.0), 0.0);
  amp[static_cast<std::size_t>(y)] = phase / std::sqrt(2.0);

  TwoQubitState rho;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      rho(i, j) = amp[static_cast<std::size_t>(i)] * std::conj(amp[static_cast<std::size_t>(j)]);
    }
  }
  return rho;
}

TwoQubitState make_bell_state(BellLabel label) { return make_bell_state(BellState::of(label)); }

TwoQubitState apply_werner(const TwoQubitState& rho, double v) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw std::domain_error("apply_werner: visibility must be in [0,1], got " + std::to_string(v));
  }
  TwoQubitState out;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      out(i, j) = v * rho(i, j);
    }
    out(i, i) += (1.0 - v) * 0.25;
  }
  return out;
}

std::array<double, 4> analyzer_projector(const AnalyzerSetting& setting, Port port) {
  double a = effective_angle(setting);
  if (port == Port::R) a += kPi / 2.0;  // orthogonal state
  const double c = std::cos(a);
  const double s = std::sin(a);
  return {c * c, c * s, c * s, s * s};
}

OutcomeProbabilities joint_outcome_probabilities(const TwoQubitState& rho,
                                                 const AnalyzerSetting& a,
                                                 const AnalyzerSetting& b) {
  if (std::abs(rho.trace_real() - 1.0) > 1e-9) {
    throw std::domain_error("joint_outcome_probabilities: state trace is " +
                            std::to_string(rho.trace_real()) + ", expected 1");
  }

  const auto pa_t = analyzer_projector(a, Port::T);
  const auto pa_r = analyzer_projector(a, Port::R);
  const auto pb_t = analyzer_projector(b, Port::T);
  const auto pb_r = analyzer_projector(b, Port::R);

  // trace(rho * (Pa (x) Pb)) with real projectors: sum over the tensor
  // product index pairs. Basis index i = 2*i1 + i2 for qubit indices i1, i2.
  auto joint = [&rho](const std::array<double, 4>& pa, const std::array<double, 4>& pb) {
    double value = 0.0;
    for (int i1 = 0; i1 < 2; ++i1) {
      for (int i2 = 0; i2 < 2; ++i2) {
        for (int j1 = 0; j1 < 2; ++j1) {
          for (int j2 = 0; j2 < 2; ++j2) {
            const double proj = pa[static_cast<std::size_t>(j1 * 2 + i1)] *
                                pb[static_cast<std::size_t>(j2 * 2 + i2)];
            if (proj == 0.0) continue;
            value += (rho(i1 * 2 + i2, j1 * 2 + j2)).real() * proj;
          }
        }
      }
    }
    return value;
  };

  auto clamp = [](double p, const char* name) {
    if (p < -1e-12) {
      throw std::domain_error(std::string("joint_outcome_probabilities: ") + name + " = " +
                              std::to_string(p) + " is negative beyond rounding tolerance");
    }
    return p < 0.0 ? 0.0 : p;
  };

  OutcomeProbabilities out;
  out.p_tt = clamp(joint(pa_t, pb_t), "p_tt");
  out.p_tr = clamp(joint(pa_t, pb_r), "p_tr");
  out.p_rt = clamp(joint(pa_r, pb_t), "p_rt");
  out.p_rr = clamp(joint(pa_r, pb_r), "p_rr");
  if (std::abs(out.sum() - 1.0) > 1e-9) {
    throw std::domain_error("joint_outcome_probabilities: outcome sum " +
                            std::to_string(out.sum()) + " differs from 1 beyond tolerance");
  }
  return out;
}

double marginal_port_t_probability(const TwoQubitState& rho, int photon,
                                   const AnalyzerSetting& setting) {
  if (photon != 1 && photon != 2) {
    throw std::invalid_argument("marginal_port_t_probability: photon index must be 1 or 2");
  }
  const auto p = analyzer_projector(setting, Port::T);
  double value = 0.0;
  // Contract the projector with the reduced state of the chosen photon.
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      for (int k = 0; k < 2; ++k) {
        const double proj = p[static_cast<std::size_t>(j * 2 + i)];
        if (proj == 0.0) continue;
        if (photon == 1) {
          value += rho(i * 2 + k, j * 2 + k).real() * proj;
        } else {
          value += rho(k * 2 + i, k * 2 + j).real() * proj;
        }
      }
    }
  }
  return std::clamp(value, 0.0, 1.0);
}

double ideal_correlation(const TwoQubitState& rho, const AnalyzerSetting& a,
                         const AnalyzerSetting& b) {
  const OutcomeProbabilities p = joint_outcome_probabilities(rho, a, b);
  return p.p_tt + p.p_rr - p.p_tr - p.p_rt;
}

double visibility_vs_phase(double phase_rad, double v0) {
  if (!(v0 >= 0.0 && v0 <= 1.0)) {
    throw std::domain_error("visibility_vs_phase: v0 must be in [0,1]");
  }
  return v0 * std::cos(phase_rad);
}

double combine_visibilities(const VisibilityBudget& budget) {
  for (double v : {budget.v_noise, budget.v_source, budget.v_polarization}) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw std::domain_error("combine_visibilities: components must be in [0,1]");
    }
  }
  return budget.v_noise * budget.v_source * budget.v_polarization;
}

}  // namespace qlink
