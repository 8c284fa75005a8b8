#pragma once

// Cumulants, exponential-utility optimization, MEMM cumulants and the
// exchange-option (Margrabe) contour pricer for a bivariate Merton model with defaults.

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include "repcalc/calculus.hpp"
#include "repcalc/drift.hpp"
#include "repcalc/models.hpp"

namespace repcalc {

namespace detail {

inline void require_1d(const LevyTriplet& t, const char* what) {
  if (t.dim() != 1) throw UsageError(std::string(what) + " needs a one-dimensional model");
}

inline double real_or_throw(Complex z, const char* what) {
  if (std::abs(z.imag()) > 1e-12 * std::max(1.0, std::abs(z.real())))
    throw ComputationError(std::string(what) + " is not real: " + format_complex(z));
  return z.real();
}

}  // namespace detail

/// kappa(v) = drift of e^{vx} - 1, so E[e^{v(X_T - X_0)}] = e^{kappa(v) T}.
inline Complex cumulant(Complex v, const LevyTriplet& t, const QuadratureConfig& cfg = {}) {
  detail::require_1d(t, "cumulant");
  return drift(rep_exp_affine(v), t, cfg).total[0];
}

/// kappa^R(-lambda) = drift of e^{-lambda (e^x - 1)} - 1, where R is the yield of e^X.
inline double utility_drift(double lambda, const LevyTriplet& t, const QuadratureConfig& cfg = {}) {
  detail::require_1d(t, "utility_drift");
  return detail::real_or_throw(drift(rep_exp_utility(lambda), t, cfg).total[0], "utility drift");
}

/// d/dlambda kappa^R(-lambda).
inline double utility_drift_slope(double lambda, const LevyTriplet& t, const QuadratureConfig& cfg = {}) {
  detail::require_1d(t, "utility_drift_slope");
  return detail::real_or_throw(drift(rep_exp_utility_sensitivity(lambda), t, cfg).total[0], "utility drift slope");
}

struct UtilityOptimum {
  double lambda_star = 0.0;
  double value = 0.0;  // kappa^R(-lambda_star)
  double slope = 0.0;  // first-order condition residual at lambda_star
};

namespace detail {

/// Minimum of a convex objective on [lo, hi]: grid scan, golden section on the
/// cell around the best grid point, then a root of the derivative.
inline UtilityOptimum minimize_convex(const std::function<double(double)>& f, const std::function<double(double)>& df,
                                      double lo, double hi, int grid = 64) {
  if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) throw UsageError("bracket must satisfy lo < hi");
  constexpr double inf = std::numeric_limits<double>::infinity();
  // A diverging integral (overflow, quadrature failure) counts as +inf: the
  // objective is an expectation of a positive quantity minus one.
  auto safe = [&](double x) {
    try {
      const double y = f(x);
      return std::isfinite(y) ? y : inf;
    } catch (const ComputationError&) {
      return inf;
    }
  };
  std::vector<double> xs(static_cast<std::size_t>(grid) + 1), fs(xs.size());
  std::size_t best = 0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    xs[k] = lo + (hi - lo) * static_cast<double>(k) / grid;
    fs[k] = safe(xs[k]);
    if (fs[k] < fs[best]) best = k;
  }
  if (!std::isfinite(fs[best])) throw ComputationError("objective diverges on the whole bracket");
  if (best == 0 || best + 1 == xs.size())
    throw ComputationError("optimum lies on the bracket edge at lambda = " + format_real(xs[best]) +
                           "; widen the bracket");

  double a = xs[best - 1], b = xs[best + 1];
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - invphi * (b - a), d = a + invphi * (b - a);
  double fc = safe(c), fd = safe(d);
  while (b - a > 1e-10 * std::max(1.0, std::abs(a) + std::abs(b))) {
    if (fc < fd) {
      b = d; d = c; fd = fc;
      c = b - invphi * (b - a); fc = safe(c);
    } else {
      a = c; c = d; fc = fd;
      d = a + invphi * (b - a); fd = safe(d);
    }
  }
  double x = 0.5 * (a + b);

  // Golden section stalls near sqrt(eps) in x; the derivative has a clean sign change.
  double left = xs[best - 1], right = xs[best + 1];
  if (!std::isfinite(fs[best - 1])) left = a;
  if (!std::isfinite(fs[best + 1])) right = b;
  try {
    const double dl = df(left), dr = df(right);
    if (dl < 0.0 && dr > 0.0) {
      boost::uintmax_t iters = 200;
      auto tol = boost::math::tools::eps_tolerance<double>(52);
      auto [r0, r1] = boost::math::tools::toms748_solve(df, left, right, dl, dr, tol, iters);
      x = 0.5 * (r0 + r1);
    }
  } catch (const ComputationError&) {
    // keep the golden-section point
  }
  return {x, f(x), df(x)};
}

}  // namespace detail

/// lambda* minimizing kappa^R(-lambda) on the bracket, i.e. maximizing the
/// expected exponential utility -E[e^{-lambda R_T}] = -e^{kappa^R(-lambda) T}.
inline UtilityOptimum optimize_exp_utility(const LevyTriplet& t, double lo, double hi, const QuadratureConfig& cfg = {}) {
  detail::require_1d(t, "optimize_exp_utility");
  return detail::minimize_convex([&](double l) { return utility_drift(l, t, cfg); },
                                 [&](double l) { return utility_drift_slope(l, t, cfg); }, lo, hi);
}

/// One-period version: minimizes E[e^{-lambda R_1}] - 1 over the bracket.
inline UtilityOptimum optimize_exp_utility(const DiscreteModel& m, double lo, double hi) {
  if (m.dim() != 1) throw UsageError("optimize_exp_utility needs a one-dimensional model");
  auto expect = [&](const RepFn& f) { return detail::real_or_throw(discrete_compensator(f, m, 1.0)[0], "expectation"); };
  return detail::minimize_convex([&](double l) { return expect(rep_exp_utility(l)); },
                                 [&](double l) { return expect(rep_exp_utility_sensitivity(l)); }, lo, hi);
}

/// Cumulant of X under the minimal entropy martingale measure:
/// drift of (e^{vx} - 1) e^{-lambda* (e^x - 1)}.
inline Complex memm_cumulant(Complex v, double lambda_star, const LevyTriplet& t, const QuadratureConfig& cfg = {}) {
  detail::require_1d(t, "memm_cumulant");
  return drift_Q(rep_exp_affine(v), rep_exp_utility(lambda_star), t, cfg).total[0];
}

// ---------------------------------------------------------------------------
// Exchange option

/// Two assets S^(k) = S^(k)_0 E(X_k). Jumps of X are lambda x law(e^Z - 1),
/// Z ~ Normal(mean, cov), plus default atoms with some x_i = -1.
struct MargrabeModel {
  double c11 = 0.0, c12 = 0.0, c22 = 0.0;  // diffusion covariance rate
  double jump_intensity = 0.0;
  RVector jump_mean = RVector::Zero(2);
  RMatrix jump_cov = RMatrix::Zero(2, 2);
  std::vector<JumpMeasure::Atom> defaults;
  double s1 = 100.0, s2 = 100.0;
  double maturity = 1.0;

  RMatrix diffusion() const { return (RMatrix(2, 2) << c11, c12, c12, c22).finished(); }

  void validate() const {
    if (!(s1 > 0.0) || !(s2 > 0.0) || !std::isfinite(s1) || !std::isfinite(s2))
      throw UsageError("spot values must be positive and finite");
    if (!(maturity > 0.0) || !std::isfinite(maturity)) throw UsageError("maturity must be positive");
    if (jump_mean.size() != 2 || jump_cov.rows() != 2 || jump_cov.cols() != 2)
      throw UsageError("jump mean/covariance must be 2-dimensional");
    for (const auto& a : defaults) {
      if (a.point.size() != 2) throw UsageError("default atoms must be 2-dimensional");
      const bool d1 = a.point[0] == -1.0, d2 = a.point[1] == -1.0;
      if (!d1 && !d2) throw UsageError("default atom " + point_string(a.point) + " has no component at -1");
      if ((!d1 && !(a.point[0] > -1.0)) || (!d2 && !(a.point[1] > -1.0)))
        throw UsageError("default atom " + point_string(a.point) + " has a surviving component <= -1");
    }
  }
};

/// Martingale triplet of X: h = Identity and b = 0, i.e. b = -int x F(dx) relative to h = Zero.
inline LevyTriplet assemble_triplet(const MargrabeModel& mm) {
  mm.validate();
  std::vector<JumpMeasure> parts{JumpMeasure::gaussian_push(mm.jump_intensity, mm.jump_mean, mm.jump_cov)};
  if (!mm.defaults.empty()) parts.push_back(JumpMeasure::atoms(2, mm.defaults));
  return LevyTriplet(RVector::Zero(2), mm.diffusion(), JumpMeasure::sum(parts),
                     uniform_truncation(2, Truncation::Identity));
}

struct DefaultIntensities {
  double lambda2_Q1 = 0.0;  // sum over atoms with x2 = -1 of (1 + x1) intensity
  double lambda1_Q2 = 0.0;  // sum over atoms with x1 = -1 of (1 + x2) intensity
};

inline DefaultIntensities default_intensities(const MargrabeModel& mm) {
  DefaultIntensities r;
  for (const auto& a : mm.defaults) {
    if (a.point[1] == -1.0) r.lambda2_Q1 += (1.0 + a.point[0]) * a.intensity;
    if (a.point[0] == -1.0) r.lambda1_Q2 += (1.0 + a.point[1]) * a.intensity;
  }
  return r;
}

/// Closed-form cumulant of log(S2/S1) under the measure with numeraire S1, including
/// the default terms.
inline Complex margrabe_kappa(Complex v, const MargrabeModel& mm) {
  const auto [l21, l12] = default_intensities(mm);
  const double ceff = mm.c11 - 2.0 * mm.c12 + mm.c22;
  const double lam = mm.jump_intensity;
  const double m1 = mm.jump_mean[0], m2 = mm.jump_mean[1];
  const double s11 = mm.jump_cov(0, 0), s12 = mm.jump_cov(0, 1), s22 = mm.jump_cov(1, 1);
  const double e1 = std::exp(m1 + 0.5 * s11), e2 = std::exp(m2 + 0.5 * s22);
  const Complex w = 1.0 - v;
  const Complex mixed = std::exp(w * m1 + v * m2 + 0.5 * w * w * s11 + v * w * s12 + 0.5 * v * v * s22);
  return 0.5 * ceff * v * (v - 1.0) - l21 + v * (lam * (e1 - e2) + l21 - l12) + lam * mixed - lam * e1;
}

struct ContourConfig {
  double beta = -0.5;
  double u_max = 200.0;  // first panel [0, u_max], then doubling panels
  double rel_tol = 1e-9;
  double u_limit = 1e6;
  unsigned max_depth = 15;
};

struct MargrabeResult {
  double price = 0.0;
  Complex kappa0;
  double lambda2_Q1 = 0.0;
  double lambda1_Q2 = 0.0;
  double tail_mass = 0.0;   // |contribution| of the last panel, in price units
  std::size_t nodes = 0;    // integrand evaluations
  double imag_residual = 0.0;
  double u_end = 0.0;
};

/// p / S1 = Q1[S2_T = 0] + (1/2 pi i) int_{beta + iR} (S2/S1)^v e^{kappa(v) T} / (v (v - 1)) dv.
inline MargrabeResult margrabe_price(const MargrabeModel& mm, const ContourConfig& cfg = {}) {
  mm.validate();
  if (!(cfg.beta < 0.0) || !std::isfinite(cfg.beta)) throw UsageError("contour abscissa beta must be negative");
  if (!(cfg.u_max > 0.0) || !(cfg.rel_tol > 0.0)) throw UsageError("u_max and rel_tol must be positive");
  const double T = mm.maturity;
  const double log_ratio = std::log(mm.s2 / mm.s1);

  MargrabeResult r;
  const auto di = default_intensities(mm);
  r.lambda2_Q1 = di.lambda2_Q1;
  r.lambda1_Q2 = di.lambda1_Q2;
  r.kappa0 = margrabe_kappa(0.0, mm);

  auto g = [&](double u) -> Complex {
    ++r.nodes;
    const Complex v(cfg.beta, u);
    return std::exp(v * log_ratio + margrabe_kappa(v, mm) * T) / (v * (v - 1.0));
  };
  // Real part of g(u) + g(-u) is twice Re g(u); the imaginary part vanishes for a real model.
  auto re_part = [&](double u) { return (g(u) + g(-u)).real(); };
  auto im_part = [&](double u) { return (g(u) + g(-u)).imag(); };

  using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
  const double qtol = 0.1 * cfg.rel_tol;
  double re = 0.0, im = 0.0;
  double a = 0.0, b = cfg.u_max;
  for (;;) {
    const double pr = GK::integrate(re_part, a, b, cfg.max_depth, qtol);
    const double pi_ = GK::integrate(im_part, a, b, cfg.max_depth, qtol);
    re += pr;
    im += pi_;
    r.tail_mass = std::abs(pr) / (2.0 * std::numbers::pi) * mm.s1;
    r.u_end = b;
    if (std::abs(pr) <= cfg.rel_tol * std::max(std::abs(re), 1e-300)) break;
    if (b >= cfg.u_limit)
      throw ComputationError("contour integral tail still " + format_real(r.tail_mass) + " at u = " + format_real(b));
    a = b;
    b *= 2.0;
  }
  const double scale = mm.s1 / (2.0 * std::numbers::pi);
  r.imag_residual = std::abs(im) * scale;
  if (r.imag_residual > 1e-9 * mm.s1)
    throw ComputationError("contour integral has imaginary residual " + format_real(r.imag_residual));
  // Q1[S2_T = 0] = 1 - Q1[S2_T > 0] = 1 - e^{kappa(0) T}
  r.price = mm.s1 * -std::expm1(r.kappa0.real() * T) + re * scale;
  if (r.price < 0.0 && r.price > -1e-9 * mm.s1) r.price = 0.0;
  if (r.price < 0.0) throw ComputationError("negative price " + format_real(r.price));
  return r;
}

}  // namespace repcalc
