#pragma once

// Process models: finite-activity jump measures, Levy triplets relative to an
// explicit truncation, and i.i.d. discrete-time increment laws.

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "repcalc/errors.hpp"
#include "repcalc/quadrature.hpp"
#include "repcalc/repfn.hpp"
#include "repcalc/types.hpp"

namespace repcalc {

enum class Truncation {
  Zero,      // h_i(x) = 0
  Identity,  // h_i(x) = x_i
  UnitClip,  // h_i(x) = x_i 1{|x_i| <= 1}
};

using TruncationSpec = std::vector<Truncation>;

inline TruncationSpec uniform_truncation(std::size_t d, Truncation t) { return TruncationSpec(d, t); }

inline RVector apply_truncation(const TruncationSpec& h, const RVector& x) {
  RVector out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    switch (h[static_cast<std::size_t>(i)]) {
      case Truncation::Zero: out[i] = 0.0; break;
      case Truncation::Identity: out[i] = x[i]; break;
      case Truncation::UnitClip: out[i] = std::abs(x[i]) <= 1.0 ? x[i] : 0.0; break;
    }
  }
  return out;
}

inline std::string point_string(const RVector& x) {
  std::string s = "(";
  for (Eigen::Index i = 0; i < x.size(); ++i) s += (i ? ", " : "") + format_real(x[i]);
  return s + ")";
}

/// Finite-activity Levy measure: a sum of components, each a finite set of
/// atoms, a scaled Gaussian pushed through z -> e^z - 1, or the image of
/// another measure under a real-valued representing function.
class JumpMeasure {
 public:
  struct Atom {
    RVector point;
    double intensity = 0.0;
  };
  struct FiniteAtoms {
    std::vector<Atom> atoms;
  };
  struct GaussianPush {
    double intensity = 0.0;
    RVector mean;
    RMatrix cov;
    RMatrix chol;  // lower-triangular factor of cov (jittered when singular)
  };
  struct Mapped {
    std::shared_ptr<const JumpMeasure> base;
    std::shared_ptr<const RepFn> map;
  };
  using Component = std::variant<FiniteAtoms, GaussianPush, Mapped>;

  static JumpMeasure none(std::size_t dim) { return JumpMeasure(dim, {}); }

  /// A measure holding one already-validated component (e.g. taken from another measure).
  static JumpMeasure single(std::size_t dim, Component c) { return JumpMeasure(dim, {std::move(c)}); }

  static JumpMeasure atoms(std::size_t dim, std::vector<Atom> list) {
    for (std::size_t k = 0; k < list.size(); ++k) {
      const auto& a = list[k];
      if (static_cast<std::size_t>(a.point.size()) != dim)
        throw UsageError("atom " + std::to_string(k) + " has dimension " + std::to_string(a.point.size()) +
                         ", expected " + std::to_string(dim));
      if (!a.point.allFinite()) throw UsageError("atom " + std::to_string(k) + " is not finite");
      if (!(a.intensity > 0.0) || !std::isfinite(a.intensity))
        throw UsageError("atom intensity must be positive and finite, got " + format_real(a.intensity));
      if (a.point.isZero(0.0)) throw UsageError("atom at the origin is not a jump");
      for (std::size_t j = 0; j < k; ++j)
        if ((list[j].point - a.point).cwiseAbs().maxCoeff() < 1e-12)
          throw UsageError("duplicate atom at " + point_string(a.point));
    }
    if (list.empty()) return none(dim);
    return JumpMeasure(dim, {FiniteAtoms{std::move(list)}});
  }

  /// lambda x law of (e^{Z_1} - 1, ..., e^{Z_d} - 1) with Z ~ Normal(mean, cov).
  static JumpMeasure gaussian_push(double intensity, RVector mean, RMatrix cov) {
    const auto d = mean.size();
    if (d == 0) throw UsageError("gaussian_push: empty mean");
    if (cov.rows() != d || cov.cols() != d) throw UsageError("gaussian_push: covariance shape mismatch");
    if (!(intensity >= 0.0) || !std::isfinite(intensity))
      throw UsageError("gaussian_push: intensity must be finite and >= 0");
    if (!mean.allFinite() || !cov.allFinite()) throw UsageError("gaussian_push: non-finite parameters");
    if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, cov.cwiseAbs().maxCoeff()))
      throw UsageError("gaussian_push: covariance not symmetric");
    Eigen::SelfAdjointEigenSolver<RMatrix> es(cov, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-12) throw UsageError("gaussian_push: covariance not PSD");
    Eigen::LLT<RMatrix> llt(cov);
    RMatrix chol;
    if (llt.info() == Eigen::Success) {
      chol = llt.matrixL();
    } else {
      Eigen::LLT<RMatrix> jittered(cov + 1e-12 * RMatrix::Identity(d, d));
      if (jittered.info() != Eigen::Success) throw UsageError("gaussian_push: covariance factorization failed");
      chol = jittered.matrixL();
    }
    const auto dim = static_cast<std::size_t>(d);
    if (intensity == 0.0) return none(dim);
    return JumpMeasure(dim, {GaussianPush{intensity, std::move(mean), std::move(cov), std::move(chol)}});
  }

  /// Image of `base` under a real-valued representing function.
  static JumpMeasure mapped(JumpMeasure base, RepFn map) {
    if (map.input_dim() != base.dim()) throw UsageError("mapped measure: dimension mismatch");
    const std::size_t out = map.output_dim();
    if (base.empty()) return none(out);
    return JumpMeasure(out, {Mapped{std::make_shared<const JumpMeasure>(std::move(base)),
                                    std::make_shared<const RepFn>(std::move(map))}});
  }

  static JumpMeasure sum(const std::vector<JumpMeasure>& parts) {
    if (parts.empty()) throw UsageError("sum of zero measures has no dimension");
    std::vector<Component> all;
    for (const auto& p : parts) {
      if (p.dim() != parts.front().dim()) throw UsageError("sum of measures with different dimensions");
      all.insert(all.end(), p.components().begin(), p.components().end());
    }
    return JumpMeasure(parts.front().dim(), std::move(all));
  }

  std::size_t dim() const { return dim_; }
  bool empty() const { return components_.empty(); }
  const std::vector<Component>& components() const { return components_; }

  /// F(R^d) (for mapped components: mass of the base, an upper bound).
  double total_mass() const {
    double m = 0.0;
    for (const auto& c : components_) {
      if (auto* a = std::get_if<FiniteAtoms>(&c)) {
        for (const auto& at : a->atoms) m += at.intensity;
      } else if (auto* g = std::get_if<GaussianPush>(&c)) {
        m += g->intensity;
      } else {
        m += std::get<Mapped>(c).base->total_mass();
      }
    }
    return m;
  }

  /// True when every component is a finite atom list.
  bool atoms_only() const {
    return std::all_of(components_.begin(), components_.end(),
                       [](const Component& c) { return std::holds_alternative<FiniteAtoms>(c); });
  }

  /// All atoms across components (components that are not atom lists are skipped).
  std::vector<Atom> all_atoms() const {
    std::vector<Atom> out;
    for (const auto& c : components_)
      if (auto* a = std::get_if<FiniteAtoms>(&c)) out.insert(out.end(), a->atoms.begin(), a->atoms.end());
    return out;
  }

 private:
  JumpMeasure(std::size_t dim, std::vector<Component> comps) : dim_(dim), components_(std::move(comps)) {
    if (dim == 0) throw UsageError("jump measure dimension must be >= 1");
  }

  std::size_t dim_;
  std::vector<Component> components_;
};

/// Integrand over jump sizes; returns a vector of fixed length.
using Integrand = std::function<CVector(const RVector&)>;

struct IntegralResult {
  CVector value;
  double error = 0.0;
};

namespace detail {

inline CVector checked_value(const Integrand& g, const RVector& x, Eigen::Index n_out, const char* where) {
  CVector y = g(x);
  if (y.size() != n_out) throw UsageError("integrand returned a vector of the wrong length");
  if (!all_finite(y))
    throw ComputationError(std::string("integrand not finite at ") + where + " " + point_string(x));
  return y;
}

inline CVector gaussian_push_rule(const JumpMeasure::GaussianPush& g, const Integrand& f, Eigen::Index n_out,
                                  std::size_t n_nodes) {
  const GaussHermiteRule& rule = gauss_hermite(n_nodes);
  const auto d = g.mean.size();
  const std::size_t total = static_cast<std::size_t>(std::pow(static_cast<double>(n_nodes), static_cast<double>(d)));
  CVector acc = CVector::Zero(n_out);
  std::vector<std::size_t> idx(static_cast<std::size_t>(d), 0);
  RVector t(d), x(d);
  for (std::size_t k = 0; k < total; ++k) {
    double w = 1.0;
    for (Eigen::Index i = 0; i < d; ++i) {
      t[i] = std::numbers::sqrt2 * rule.nodes[idx[static_cast<std::size_t>(i)]];
      w *= rule.weights[idx[static_cast<std::size_t>(i)]];
    }
    if (w > 0.0) {
      const RVector z = g.mean + g.chol * t;
      for (Eigen::Index i = 0; i < d; ++i) x[i] = std::expm1(z[i]);
      acc += w * checked_value(f, x, n_out, "Gauss-Hermite node");
    }
    for (std::size_t i = 0; i < idx.size(); ++i) {
      if (++idx[i] < n_nodes) break;
      idx[i] = 0;
    }
  }
  return acc * (g.intensity * std::pow(std::numbers::pi, -0.5 * static_cast<double>(d)));
}

inline double max_abs(const CVector& v) {
  double m = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) m = std::max(m, std::abs(v[i]));
  return m;
}

}  // namespace detail

/// Integral of g against F. Atoms are summed exactly; Gaussian pushforwards use
/// tensor Gauss-Hermite with node doubling until successive levels agree.
inline IntegralResult integrate(const JumpMeasure& F, const Integrand& g, Eigen::Index n_out,
                                const QuadratureConfig& cfg = {}) {
  IntegralResult out{CVector::Zero(n_out), 0.0};
  for (const auto& comp : F.components()) {
    if (auto* a = std::get_if<JumpMeasure::FiniteAtoms>(&comp)) {
      for (const auto& at : a->atoms) out.value += at.intensity * detail::checked_value(g, at.point, n_out, "atom");
    } else if (auto* gp = std::get_if<JumpMeasure::GaussianPush>(&comp)) {
      std::size_t n = cfg.base_nodes;
      CVector prev = detail::gaussian_push_rule(*gp, g, n_out, n);
      bool converged = false;
      double diff = 0.0;
      for (int level = 1; level <= cfg.max_level; ++level) {
        n *= 2;
        CVector next = detail::gaussian_push_rule(*gp, g, n_out, n);
        diff = detail::max_abs(next - prev);
        prev = std::move(next);
        if (diff <= std::max(cfg.abs_tol, cfg.rel_tol * detail::max_abs(prev))) {
          converged = true;
          break;
        }
      }
      if (!converged)
        throw ComputationError("Gauss-Hermite quadrature did not converge: last change " + format_real(diff) +
                               " at " + std::to_string(n) + " nodes per dimension");
      out.value += prev;
      out.error += diff;
    } else {
      const auto& m = std::get<JumpMeasure::Mapped>(comp);
      const RepFn& map = *m.map;
      Integrand composed = [&](const RVector& x) -> CVector {
        const CVector y = eval(map, x);
        if (any_nan(y)) throw ComputationError("mapping undefined at jump " + point_string(x));
        RVector yr(y.size());
        for (Eigen::Index i = 0; i < y.size(); ++i) {
          if (y[i].imag() != 0.0) throw ComputationError("mapped measure needs a real-valued map");
          yr[i] = y[i].real();
        }
        if (yr.isZero(0.0)) return CVector::Zero(n_out);  // jumps mapped to 0 are not jumps
        return g(yr);
      };
      const IntegralResult r = integrate(*m.base, composed, n_out, cfg);
      out.value += r.value;
      out.error += r.error;
    }
  }
  return out;
}

namespace detail {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

}  // namespace detail

/// Integral of x - h(x) against F, componentwise. Gaussian pushforwards use the
/// lognormal closed forms, so the discontinuous unit clip never meets quadrature.
inline RVector truncation_gap(const JumpMeasure& F, const TruncationSpec& h, const QuadratureConfig& cfg = {}) {
  const auto d = static_cast<Eigen::Index>(F.dim());
  if (h.size() != F.dim()) throw UsageError("truncation has the wrong dimension");
  RVector gap = RVector::Zero(d);
  for (const auto& comp : F.components()) {
    if (auto* a = std::get_if<JumpMeasure::FiniteAtoms>(&comp)) {
      for (const auto& at : a->atoms) gap += at.intensity * (at.point - apply_truncation(h, at.point));
    } else if (auto* g = std::get_if<JumpMeasure::GaussianPush>(&comp)) {
      for (Eigen::Index i = 0; i < d; ++i) {
        const double m = g->mean[i];
        const double var = g->cov(i, i);
        const double s = std::sqrt(std::max(var, 0.0));
        double v = 0.0;
        switch (h[static_cast<std::size_t>(i)]) {
          case Truncation::Identity: v = 0.0; break;
          case Truncation::Zero: v = std::expm1(m + 0.5 * var); break;
          case Truncation::UnitClip:
            if (s == 0.0) {
              const double x = std::expm1(m);
              v = std::abs(x) > 1.0 ? x : 0.0;
            } else {
              // E[(e^Z - 1) 1{e^Z - 1 > 1}]; e^Z - 1 > -1 so only the upper tail is clipped.
              const double c = std::numbers::ln2;
              v = std::exp(m + 0.5 * var) * detail::normal_cdf((m + var - c) / s) - detail::normal_cdf((m - c) / s);
            }
            break;
        }
        gap[i] += g->intensity * v;
      }
    } else {
      const auto& m = std::get<JumpMeasure::Mapped>(comp);
      const JumpMeasure part = JumpMeasure::mapped(*m.base, *m.map);
      const IntegralResult r = integrate(
          part, [&](const RVector& x) { return CVector((x - apply_truncation(h, x)).cast<Complex>()); }, d, cfg);
      gap += r.value.real();
    }
  }
  return gap;
}

/// Characteristics (b, c, F) of a Levy process; b is the drift of X[h].
class LevyTriplet {
 public:
  LevyTriplet(RVector b, RMatrix c, JumpMeasure F, TruncationSpec h)
      : b_(std::move(b)), c_(std::move(c)), F_(std::move(F)), h_(std::move(h)) {
    const auto d = b_.size();
    if (d == 0) throw UsageError("triplet dimension must be >= 1");
    if (c_.rows() != d || c_.cols() != d) throw UsageError("diffusion matrix has the wrong shape");
    if (static_cast<Eigen::Index>(F_.dim()) != d) throw UsageError("jump measure dimension does not match drift");
    if (static_cast<Eigen::Index>(h_.size()) != d) throw UsageError("truncation dimension does not match drift");
    if (!b_.allFinite()) throw UsageError("drift must be finite");
    if (!c_.allFinite()) throw UsageError("diffusion matrix must be finite");
    if ((c_ - c_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, c_.cwiseAbs().maxCoeff()))
      throw UsageError("diffusion matrix must be symmetric");
    Eigen::SelfAdjointEigenSolver<RMatrix> es(c_, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-12) throw UsageError("diffusion matrix must be PSD");
  }

  std::size_t dim() const { return static_cast<std::size_t>(b_.size()); }
  const RVector& b() const { return b_; }
  const RMatrix& c() const { return c_; }
  const JumpMeasure& F() const { return F_; }
  const TruncationSpec& h() const { return h_; }

 private:
  RVector b_;
  RMatrix c_;
  JumpMeasure F_;
  TruncationSpec h_;
};

/// Same process, drift re-expressed relative to h_new: b' = b + int (h_new - h) dF.
inline LevyTriplet retruncate(const LevyTriplet& t, const TruncationSpec& h_new, const QuadratureConfig& cfg = {}) {
  if (h_new.size() != t.dim()) throw UsageError("retruncate: truncation has the wrong dimension");
  if (h_new == t.h()) return t;
  const RVector b = t.b() + truncation_gap(t.F(), t.h(), cfg) - truncation_gap(t.F(), h_new, cfg);
  return LevyTriplet(b, t.c(), t.F(), h_new);
}

/// i.i.d. increments with finite support.
class DiscreteModel {
 public:
  struct Point {
    RVector x;
    double p = 0.0;
  };

  explicit DiscreteModel(std::vector<Point> support) : support_(std::move(support)) {
    if (support_.empty()) throw UsageError("discrete model needs a non-empty support");
    const auto d = support_.front().x.size();
    if (d == 0) throw UsageError("discrete model points need dimension >= 1");
    double total = 0.0;
    for (std::size_t k = 0; k < support_.size(); ++k) {
      const auto& pt = support_[k];
      if (pt.x.size() != d) throw UsageError("discrete model points have mixed dimensions");
      if (!pt.x.allFinite()) throw UsageError("discrete model point is not finite");
      if (!(pt.p > 0.0 && pt.p <= 1.0)) throw UsageError("probabilities must lie in (0, 1]");
      for (std::size_t j = 0; j < k; ++j)
        if ((support_[j].x - pt.x).cwiseAbs().maxCoeff() < 1e-12)
          throw UsageError("duplicate support point " + point_string(pt.x));
      total += pt.p;
    }
    if (std::abs(total - 1.0) > 1e-12) throw UsageError("probabilities sum to " + format_real(total) + ", not 1");
  }

  std::size_t dim() const { return static_cast<std::size_t>(support_.front().x.size()); }
  const std::vector<Point>& support() const { return support_; }

 private:
  std::vector<Point> support_;
};

}  // namespace repcalc
