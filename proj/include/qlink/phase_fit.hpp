#pragma once

#include <array>
#include <span>

#include "qlink/bell.hpp"

namespace qlink {

/// One visibility scan point: equatorial pump phase against the signed
/// visibility measured in the +/- basis. sigma <= 0 marks a missing error
/// bar; the fit falls back to unweighted least squares if any is missing.
struct VisibilityPoint {
  double pump_phase_rad = 0.0;
  double visibility = 0.0;
  double sigma = 0.0;
};

/// Result of fitting V(chi) = v0 * cos(chi - phi0).
struct CosineFit {
  double v0 = 0.0;
  double phi0 = 0.0;           // [0, 2*pi); meaningless when !phase_defined
  /// Covariance of (v0, phi0), row-major 2x2, propagated from the linear
  /// solve in (A, B) = v0*(cos phi0, sin phi0) coordinates.
  std::array<double, 4> covariance{};
  double residual_rms = 0.0;
  bool phase_defined = true;   // false when v0 is indistinguishable from 0
};

/// Weighted linear least squares on V = A cos(chi) + B sin(chi); exact on
/// noiseless inputs. Needs >= 3 points whose phases are not all congruent
/// mod pi (otherwise the design matrix is rank-deficient and this throws
/// std::invalid_argument).
CosineFit fit_cosine(std::span<const VisibilityPoint> points);

/// Pump phase that produces the requested state phase: chi = phi0 +
/// target_phase (V(chi) = +v0 at phase 0, -v0 at phase pi). Throws
/// std::domain_error when the fit has no usable amplitude.
double target_setting(const CosineFit& fit, double target_phase_rad);

/// Label overload; only the Psi family is reachable by a pump-phase change.
double target_setting(const CosineFit& fit, BellLabel target);

}  // namespace qlink
