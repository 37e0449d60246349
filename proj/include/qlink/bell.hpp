#pragma once

#include <array>
#include <complex>

namespace qlink {

inline constexpr double kPi = 3.141592653589793238462643383279502884;

/// Normalizes an angle to [0, 2*pi).
double normalize_phase(double rad);

enum class BellFamily { Psi, Phi };
enum class BellLabel { PsiMinus, PsiPlus, PhiMinus, PhiPlus };

/// Two-qubit Bell state identified by family and a continuous relative phase:
/// Psi family is (|HV> + e^{i phase}|VH>)/sqrt(2), Phi family uses |HH>,|VV>.
/// phase = 0 gives the "+" state of the family, phase = pi the "-" state.
struct BellState {
  BellFamily family = BellFamily::Psi;
  double phase = kPi;  // radians in [0, 2*pi)

  static BellState of(BellLabel label);
  static BellState psi(double phase_rad) { return {BellFamily::Psi, normalize_phase(phase_rad)}; }
  static BellState phi(double phase_rad) { return {BellFamily::Phi, normalize_phase(phase_rad)}; }
};

/// 4x4 complex density matrix in the ordered basis (HH, HV, VH, VV),
/// row-major. Valid states are Hermitian, unit-trace and positive
/// semidefinite; every operation in this module returns valid states and
/// validate() checks the invariants explicitly.
struct TwoQubitState {
  using Complex = std::complex<double>;

  std::array<Complex, 16> m{};

  Complex& operator()(int row, int col) { return m[static_cast<std::size_t>(row) * 4 + col]; }
  const Complex& operator()(int row, int col) const {
    return m[static_cast<std::size_t>(row) * 4 + col];
  }

  double trace_real() const;
  /// trace(rho^2); 1 for pure states.
  double purity() const;
  double min_eigenvalue() const;

  bool is_valid(double hermitian_tol = 1e-12, double trace_tol = 1e-12,
                double eigenvalue_floor = -1e-9) const;
  /// Throws std::domain_error naming the violated invariant.
  void validate(double hermitian_tol = 1e-12, double trace_tol = 1e-12,
                double eigenvalue_floor = -1e-9) const;

  /// Maximally mixed two-qubit state, identity/4.
  static TwoQubitState maximally_mixed();
};

/// Pure-state density matrix of the requested Bell state.
TwoQubitState make_bell_state(const BellState& state);
TwoQubitState make_bell_state(BellLabel label);

/// Isotropic (Werner) mixing: v*rho + (1-v)*identity/4. Correlation values
/// scale exactly by v. v outside [0,1] raises std::domain_error.
TwoQubitState apply_werner(const TwoQubitState& rho, double v);

/// Analyzer angle convention. Relative: port T transmits the linear
/// polarization at `angle`. Mirrored: same with the angle negated (the
/// half-wave-plate parity flip); which arm is mirrored must be an explicit
/// configuration choice, never an implicit default inside the math.
enum class Convention { Relative, Mirrored };

struct AnalyzerSetting {
  double angle_rad = 0.0;
  Convention convention = Convention::Relative;
};

enum class Port { T, R };

/// 2x2 real projector (row-major, basis H,V) for one analyzer output port.
/// Port T projects onto cos(a)|H> + sin(a)|V>, port R onto the orthogonal
/// state; Mirrored negates the angle first. T + R is the identity.
std::array<double, 4> analyzer_projector(const AnalyzerSetting& setting, Port port);

struct OutcomeProbabilities {
  double p_tt = 0.0;
  double p_tr = 0.0;
  double p_rt = 0.0;
  double p_rr = 0.0;

  double sum() const { return p_tt + p_tr + p_rt + p_rr; }
};

/// Joint T/R outcome probabilities p_xy = trace(rho * P_x(a) (x) P_y(b)).
/// Values in [-1e-12, 0) are clamped to zero; anything more negative, or a
/// non-normalized state, raises std::domain_error.
OutcomeProbabilities joint_outcome_probabilities(const TwoQubitState& rho,
                                                 const AnalyzerSetting& a,
                                                 const AnalyzerSetting& b);

/// Probability that the given photon (1 or 2) exits port T of an analyzer at
/// `setting`, marginalized over the partner photon.
double marginal_port_t_probability(const TwoQubitState& rho, int photon,
                                   const AnalyzerSetting& setting);

/// Polarization correlation value E = p_TT + p_RR - p_TR - p_RT in [-1, 1].
double ideal_correlation(const TwoQubitState& rho, const AnalyzerSetting& a,
                         const AnalyzerSetting& b);

/// Signed visibility of the +/- basis as a function of the pump phase:
/// V(phase) = v0 * cos(phase).
double visibility_vs_phase(double phase_rad, double v0);

/// Multiplicative visibility budget: background/multi-pair noise factor,
/// source visibility and detection-module polarization contrast.
struct VisibilityBudget {
  double v_noise = 1.0;
  double v_source = 1.0;
  double v_polarization = 1.0;
};

/// Product of the budget components. Components outside [0,1] raise
/// std::domain_error.
double combine_visibilities(const VisibilityBudget& budget);

}  // namespace qlink
