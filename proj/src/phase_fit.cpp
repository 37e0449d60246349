#include "qlink/phase_fit.hpp"

#include <cmath>
#include <stdexcept>

namespace qlink {

CosineFit fit_cosine(std::span<const VisibilityPoint> points) {
  if (points.size() < 3) {
    throw std::invalid_argument("fit_cosine: need at least 3 scan points");
  }

  bool weighted = true;
  for (const VisibilityPoint& p : points) {
    if (!(p.sigma > 0.0)) weighted = false;
  }

  // Normal equations for V = A cos(chi) + B sin(chi) with weights 1/sigma^2.
  double s_cc = 0.0, s_cs = 0.0, s_ss = 0.0, s_cv = 0.0, s_sv = 0.0;
  for (const VisibilityPoint& p : points) {
    const double w = weighted ? 1.0 / (p.sigma * p.sigma) : 1.0;
    const double c = std::cos(p.pump_phase_rad);
    const double s = std::sin(p.pump_phase_rad);
    s_cc += w * c * c;
    s_cs += w * c * s;
    s_ss += w * s * s;
    s_cv += w * c * p.visibility;
    s_sv += w * s * p.visibility;
  }

  const double det = s_cc * s_ss - s_cs * s_cs;
  // Phases all congruent mod pi make the two columns proportional.
  const double scale = std::max(s_cc, s_ss);
  if (!(det > 1e-12 * scale * scale)) {
    throw std::invalid_argument(
        "fit_cosine: degenerate phase configuration (all phases congruent mod pi)");
  }

  const double a = (s_ss * s_cv - s_cs * s_sv) / det;
  const double b = (s_cc * s_sv - s_cs * s_cv) / det;

  // Covariance of (A, B) is the inverse normal matrix (weights are inverse
  // variances of known error bars, so no residual rescaling).
  const double cov_aa = s_ss / det;
  const double cov_ab = -s_cs / det;
  const double cov_bb = s_cc / det;

  CosineFit fit;
  fit.v0 = std::hypot(a, b);

  double rss = 0.0;
  for (const VisibilityPoint& p : points) {
    const double model = a * std::cos(p.pump_phase_rad) + b * std::sin(p.pump_phase_rad);
    const double r = p.visibility - model;
    rss += r * r;
  }
  fit.residual_rms = std::sqrt(rss / static_cast<double>(points.size()));

  if (fit.v0 < 1e-12) {
    fit.v0 = 0.0;
    fit.phi0 = 0.0;
    fit.phase_defined = false;
    // At v0 = 0 the phase Jacobian blows up; report the raw (A,B) covariance.
    fit.covariance = {cov_aa, cov_ab, cov_ab, cov_bb};
    return fit;
  }

  fit.phi0 = normalize_phase(std::atan2(b, a));
  fit.phase_defined = true;

  // Propagate to (v0, phi0): dv0 = (A,B)/v0, dphi0 = (-B, A)/v0^2.
  const double inv_v = 1.0 / fit.v0;
  const double j00 = a * inv_v;
  const double j01 = b * inv_v;
  const double j10 = -b * inv_v * inv_v;
  const double j11 = a * inv_v * inv_v;
  const double var_v = j00 * (j00 * cov_aa + j01 * cov_ab) + j01 * (j00 * cov_ab + j01 * cov_bb);
  const double cov_vp = j00 * (j10 * cov_aa + j11 * cov_ab) + j01 * (j10 * cov_ab + j11 * cov_bb);
  const double var_p = j10 * (j10 * cov_aa + j11 * cov_ab) + j11 * (j10 * cov_ab + j11 * cov_bb);
  fit.covariance = {var_v, cov_vp, cov_vp, var_p};
  return fit;
}

double target_setting(const CosineFit& fit, double target_phase_rad) {
  if (!fit.phase_defined || !(fit.v0 > 0.0)) {
    throw std::domain_error("target_setting: fit amplitude is zero, phase unobservable");
  }
  return normalize_phase(fit.phi0 + target_phase_rad);
}

double target_setting(const CosineFit& fit, BellLabel target) {
  switch (target) {
    case BellLabel::PsiPlus:
      return target_setting(fit, 0.0);
    case BellLabel::PsiMinus:
      return target_setting(fit, kPi);
    default:
      throw std::invalid_argument(
          "target_setting: only Psi states are reachable by a pump-phase change");
  }
}

}  // namespace qlink
