#pragma once

// Drift conversion: from a representation xi o X and the characteristics of X
// to the drift rate of xi o X, under P or under a measure built from eta o X.

#include <cmath>
#include <optional>
#include <string>

#include "repcalc/calculus.hpp"
#include "repcalc/models.hpp"
#include "repcalc/repfn.hpp"

namespace repcalc {

/// Drift rate of xi o X split by origin. total is the floating-point sum
/// linear_part + quadratic_part + jump_part.
struct DriftReport {
  CVector total;
  CVector linear_part;     // Dxi(0) b
  CVector quadratic_part;  // 1/2 sum_ij D2_ij xi(0) c_ij
  CVector jump_part;       // int (xi(x) - Dxi(0) h(x)) F(dx)
  double quadrature_error = 0.0;
  std::optional<CVector> cross_term;  // drift_Q only: 2 sum_ij D_i xi(0) D_j eta(0) c_ij, enters quadratic_part halved
};

/// b^{xi o X} = Dxi(0) b^{X[h]} + 1/2 sum D2_ij xi(0) c_ij + int (xi - Dxi(0) h) dF.
///
/// The jump integral is evaluated as int (xi(x) - Dxi(0) x) F(dx) + Dxi(0) int (x - h(x)) F(dx):
/// the first integrand is smooth wherever xi is, the second has closed forms.
inline DriftReport drift(const RepFn& xi, const LevyTriplet& t, const QuadratureConfig& cfg = {}) {
  if (xi.input_dim() != t.dim())
    throw UsageError("drift: function input dimension " + std::to_string(xi.input_dim()) +
                     " != model dimension " + std::to_string(t.dim()));
  const Jet2 jet = jet_at_zero(xi);
  const auto n = static_cast<Eigen::Index>(xi.output_dim());
  const auto d = static_cast<Eigen::Index>(t.dim());

  DriftReport r;
  r.linear_part = jet.jacobian * t.b().cast<Complex>();
  r.quadratic_part = CVector::Zero(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    Complex q = 0.0;
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < d; ++j) q += jet.hessian[static_cast<std::size_t>(k)](i, j) * t.c()(i, j);
    r.quadratic_part[k] = 0.5 * q;
  }

  r.jump_part = CVector::Zero(n);
  if (!t.F().empty()) {
    const CMatrix& J = jet.jacobian;
    const IntegralResult smooth = integrate(
        t.F(), [&](const RVector& x) -> CVector { return eval(xi, x) - J * x.cast<Complex>(); }, n, cfg);
    const RVector gap = truncation_gap(t.F(), t.h(), cfg);
    r.jump_part = smooth.value + J * gap.cast<Complex>();
    r.quadrature_error = smooth.error;
  }
  r.total = r.linear_part + r.quadratic_part + r.jump_part;
  return r;
}

/// Drift of xi o X under dQ/dP = E(eta o X)_T / E(B^{eta o X})_T: the P-drift of (1 + eta) xi.
inline DriftReport drift_Q(const RepFn& xi, const RepFn& eta, const LevyTriplet& t, const QuadratureConfig& cfg = {}) {
  DriftReport r = drift(girsanov_adjust(xi, eta), t, cfg);
  const CMatrix Jx = jet_at_zero(xi).jacobian;
  const CMatrix Je = jet_at_zero(eta).jacobian;
  r.cross_term = 2.0 * (Jx * t.c().cast<Complex>() * Je.transpose());
  return r;
}

/// E[(xi o X)_T] = b^{xi o X} T for a Levy X.
inline CVector expectation_pii(const RepFn& xi, const LevyTriplet& t, double T, const QuadratureConfig& cfg = {}) {
  if (!(T >= 0.0)) throw UsageError("maturity must be >= 0");
  return drift(xi, t, cfg).total * T;
}

/// E[E(xi o X)_T] = exp(b^{xi o X} T) for scalar xi and Levy X.
inline Complex expectation_stoch_exp(const RepFn& xi, const LevyTriplet& t, double T, const QuadratureConfig& cfg = {}) {
  if (xi.output_dim() != 1) throw UsageError("stochastic exponential needs a scalar representation");
  if (!(T >= 0.0)) throw UsageError("maturity must be >= 0");
  return std::exp(drift(xi, t, cfg).total[0] * T);
}

namespace detail {

inline long periods(double T) {
  if (!(T >= 0.0) || !std::isfinite(T)) throw UsageError("time must be finite and >= 0");
  return static_cast<long>(std::floor(T));
}

inline CVector eval_on_support(const RepFn& f, const RVector& x) {
  CVector y = eval(f, x);
  if (!all_finite(y)) throw ComputationError("function undefined at support point " + point_string(x));
  return y;
}

/// Sum_k p_k f(x_k) for a discrete law.
inline CVector expect(const RepFn& f, const DiscreteModel& m) {
  if (f.input_dim() != m.dim()) throw UsageError("function and model dimensions differ");
  CVector acc = CVector::Zero(static_cast<Eigen::Index>(f.output_dim()));
  for (const auto& pt : m.support()) acc += pt.p * eval_on_support(f, pt.x);
  return acc;
}

inline Complex int_power(Complex base, long n) {
  Complex r = 1.0;
  for (long k = 0; k < n; ++k) r *= base;
  return r;
}

}  // namespace detail

/// B_T = floor(T) E[xi(Delta X)] for i.i.d. increments.
inline CVector discrete_compensator(const RepFn& xi, const DiscreteModel& m, double T) {
  const long n = detail::periods(T);
  return static_cast<double>(n) * detail::expect(xi, m);
}

/// E[E(xi o X)_T] = (E[1 + xi(Delta X)])^floor(T).
inline Complex discrete_stoch_exp(const RepFn& xi, const DiscreteModel& m, double T) {
  if (xi.output_dim() != 1) throw UsageError("stochastic exponential needs a scalar representation");
  const long n = detail::periods(T);
  return detail::int_power(1.0 + detail::expect(xi, m)[0], n);
}

/// Q-expectation of E(xi o X)_T with dQ/dP proportional to E(eta o X)_T:
/// (1 + E[(1 + eta) xi] / E[1 + eta])^floor(T).
inline Complex discrete_Q_stoch_exp(const RepFn& xi, const RepFn& eta, const DiscreteModel& m, double T) {
  if (xi.output_dim() != 1 || eta.output_dim() != 1)
    throw UsageError("stochastic exponential needs scalar representations");
  if (xi.input_dim() != m.dim() || eta.input_dim() != m.dim()) throw UsageError("function and model dimensions differ");
  const long n = detail::periods(T);
  Complex weighted = 0.0;
  Complex norm = 0.0;
  for (const auto& pt : m.support()) {
    const Complex e = 1.0 + detail::eval_on_support(eta, pt.x)[0];
    norm += pt.p * e;
    weighted += pt.p * (e * detail::eval_on_support(xi, pt.x)[0]);
  }
  if (norm.imag() != 0.0 || !(norm.real() > 0.0))
    throw ComputationError("degenerate measure change: E[1 + eta] = " + format_complex(norm));
  return detail::int_power(1.0 + weighted / norm, n);
}

}  // namespace repcalc
