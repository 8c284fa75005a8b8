#pragma once

// Deterministic representing functions: expression trees R^d -> C^n that vanish
// at the origin, evaluated pointwise and differentiated to second order at 0.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "repcalc/errors.hpp"
#include "repcalc/types.hpp"

namespace repcalc {

/// Predicate carried by an Indicator node. Every admissible predicate is
/// constant on a ball around zero: Equal/NotEqual need a != 0, AbsAtMost/AbsAbove need r > 0.
struct Predicate {
  enum class Kind { Equal, NotEqual, AbsAtMost, AbsAbove };
  Kind kind = Kind::NotEqual;
  double threshold = -1.0;

  static Predicate equal(double a) { return {Kind::Equal, a}; }
  static Predicate not_equal(double a) { return {Kind::NotEqual, a}; }
  static Predicate abs_at_most(double r) { return {Kind::AbsAtMost, r}; }
  static Predicate abs_above(double r) { return {Kind::AbsAbove, r}; }

  bool holds(const Complex& z) const {
    switch (kind) {
      case Kind::Equal: return z == Complex(threshold, 0.0);
      case Kind::NotEqual: return z != Complex(threshold, 0.0);
      case Kind::AbsAtMost: return std::abs(z) <= threshold;
      case Kind::AbsAbove: return std::abs(z) > threshold;
    }
    return false;
  }

  void validate() const {
    const bool point = kind == Kind::Equal || kind == Kind::NotEqual;
    if (!std::isfinite(threshold))
      throw UsageError("indicator threshold must be finite");
    if (point && threshold == 0.0)
      throw UsageError("indicator predicate '= 0' / '!= 0' touches the origin");
    if (!point && !(threshold > 0.0))
      throw UsageError("indicator radius must be strictly positive");
  }

  friend bool operator==(const Predicate&, const Predicate&) = default;
};

enum class Op { Coord, Const, Add, Sub, Mul, Div, Neg, Exp, Log, PowConst, Indicator, Compose };

struct Node;
using NodePtr = std::shared_ptr<const Node>;
using NodeList = std::vector<NodePtr>;

struct Node {
  Op op = Op::Const;
  std::size_t index = 0;        // Coord
  Complex constant{};           // Const value, PowConst exponent
  Predicate predicate{};        // Indicator
  std::vector<NodePtr> args;    // operands; for Compose args[0] is the outer tree
  std::shared_ptr<const NodeList> inner;  // Compose: trees whose values feed the outer coords
};

namespace detail {

inline NodePtr make_node(Node n) { return std::make_shared<const Node>(std::move(n)); }

/// Largest coordinate index read from the top-level input, or -1 when none is read.
inline long max_coord(const Node& n) {
  if (n.op == Op::Coord) return static_cast<long>(n.index);
  if (n.op == Op::Compose) {
    long m = -1;
    for (const auto& p : *n.inner) m = std::max(m, max_coord(*p));
    return m;
  }
  long m = -1;
  for (const auto& a : n.args) m = std::max(m, max_coord(*a));
  return m;
}

inline bool has_real_constants(const Node& n) {
  if ((n.op == Op::Const || n.op == Op::PowConst) && n.constant.imag() != 0.0) return false;
  for (const auto& a : n.args)
    if (!has_real_constants(*a)) return false;
  if (n.op == Op::Compose)
    for (const auto& p : *n.inner)
      if (!has_real_constants(*p)) return false;
  return true;
}

// ---- second-order forward jets -------------------------------------------

/// Truncated Taylor number: value, gradient and (row-major) Hessian in `dim` variables.
struct Jet {
  Complex v{};
  std::vector<Complex> g;
  std::vector<Complex> h;

  static Jet constant(Complex c, std::size_t dim) {
    return {c, std::vector<Complex>(dim), std::vector<Complex>(dim * dim)};
  }
  static Jet variable(std::size_t i, std::size_t dim) {
    Jet j = constant(0.0, dim);
    j.g[i] = 1.0;
    return j;
  }
  std::size_t dim() const { return g.size(); }
};

inline Jet operator+(const Jet& a, const Jet& b) {
  Jet r = a;
  r.v += b.v;
  for (std::size_t i = 0; i < r.g.size(); ++i) r.g[i] += b.g[i];
  for (std::size_t i = 0; i < r.h.size(); ++i) r.h[i] += b.h[i];
  return r;
}

inline Jet operator-(const Jet& a, const Jet& b) {
  Jet r = a;
  r.v -= b.v;
  for (std::size_t i = 0; i < r.g.size(); ++i) r.g[i] -= b.g[i];
  for (std::size_t i = 0; i < r.h.size(); ++i) r.h[i] -= b.h[i];
  return r;
}

inline Jet operator-(const Jet& a) {
  Jet r = a;
  r.v = -r.v;
  for (auto& x : r.g) x = -x;
  for (auto& x : r.h) x = -x;
  return r;
}

inline Jet operator*(const Jet& a, const Jet& b) {
  const std::size_t d = a.dim();
  Jet r = Jet::constant(a.v * b.v, d);
  for (std::size_t i = 0; i < d; ++i) r.g[i] = a.v * b.g[i] + b.v * a.g[i];
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j)
      r.h[i * d + j] = a.v * b.h[i * d + j] + b.v * a.h[i * d + j] +
                       (a.g[i] * b.g[j] + b.g[i] * a.g[j]);
  return r;
}

/// Chain rule for a scalar function with f(a.v) = f0, f'(a.v) = f1, f''(a.v) = f2.
inline Jet lift(const Jet& a, Complex f0, Complex f1, Complex f2) {
  const std::size_t d = a.dim();
  Jet r = Jet::constant(f0, d);
  for (std::size_t i = 0; i < d; ++i) r.g[i] = f1 * a.g[i];
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j)
      r.h[i * d + j] = f1 * a.h[i * d + j] + f2 * (a.g[i] * a.g[j]);
  return r;
}

// ---- scalar policies -----------------------------------------------------

inline bool on_branch_cut(const Complex& z) { return z.imag() == 0.0 && z.real() <= 0.0; }

struct ComplexScalar {
  using T = Complex;
  std::size_t dim = 0;

  static bool nan(const T& z) { return is_nan(z); }
  T make_nan() const { return kComplexNaN; }
  T constant(Complex c) const { return c; }
  T add(const T& a, const T& b) const { return a + b; }
  T sub(const T& a, const T& b) const { return a - b; }
  T neg(const T& a) const { return -a; }
  T mul(const T& a, const T& b) const {
    if (nan(a) || nan(b)) return make_nan();
    return a * b;
  }
  T div(const T& a, const T& b) const {
    if (nan(a) || nan(b) || b == Complex(0.0)) return make_nan();
    return a / b;
  }
  T exp(const T& a) const { return nan(a) ? make_nan() : std::exp(a); }
  T log(const T& a) const { return nan(a) || on_branch_cut(a) ? make_nan() : std::log(a); }
  T pow(const T& a, Complex p) const {
    if (nan(a) || on_branch_cut(a)) return make_nan();
    return std::exp(p * std::log(a));
  }
  T indicator(const Predicate& pred, const T& a) const {
    if (nan(a)) return make_nan();
    return pred.holds(a) ? 1.0 : 0.0;
  }
};

struct JetScalar {
  using T = Jet;
  std::size_t dim = 0;

  static bool nan(const T& j) { return is_nan(j.v); }
  T make_nan() const { return Jet::constant(kComplexNaN, dim); }
  T constant(Complex c) const { return Jet::constant(c, dim); }
  T add(const T& a, const T& b) const { return a + b; }
  T sub(const T& a, const T& b) const { return a - b; }
  T neg(const T& a) const { return -a; }
  T mul(const T& a, const T& b) const {
    if (nan(a) || nan(b)) return make_nan();
    return a * b;
  }
  T div(const T& a, const T& b) const {
    if (nan(a) || nan(b) || b.v == Complex(0.0)) return make_nan();
    const Complex inv = 1.0 / b.v;
    return a * lift(b, inv, -inv * inv, 2.0 * inv * inv * inv);
  }
  T exp(const T& a) const {
    if (nan(a)) return make_nan();
    const Complex e = std::exp(a.v);
    return lift(a, e, e, e);
  }
  T log(const T& a) const {
    if (nan(a) || on_branch_cut(a.v)) return make_nan();
    const Complex inv = 1.0 / a.v;
    return lift(a, std::log(a.v), inv, -inv * inv);
  }
  T pow(const T& a, Complex p) const {
    if (nan(a) || on_branch_cut(a.v)) return make_nan();
    const Complex f0 = std::exp(p * std::log(a.v));
    const Complex inv = 1.0 / a.v;
    return lift(a, f0, p * f0 * inv, p * (p - 1.0) * f0 * inv * inv);
  }
  // Frozen at the child's value: predicates are locally constant around the expansion point.
  T indicator(const Predicate& pred, const T& a) const {
    if (nan(a)) return make_nan();
    return constant(pred.holds(a.v) ? 1.0 : 0.0);
  }
};

template <class Policy>
typename Policy::T evaluate(const Policy& P, const Node& n, std::span<const typename Policy::T> in) {
  using T = typename Policy::T;
  switch (n.op) {
    case Op::Coord: return in[n.index];
    case Op::Const: return P.constant(n.constant);
    case Op::Add: return P.add(evaluate(P, *n.args[0], in), evaluate(P, *n.args[1], in));
    case Op::Sub: return P.sub(evaluate(P, *n.args[0], in), evaluate(P, *n.args[1], in));
    case Op::Mul: return P.mul(evaluate(P, *n.args[0], in), evaluate(P, *n.args[1], in));
    case Op::Div: return P.div(evaluate(P, *n.args[0], in), evaluate(P, *n.args[1], in));
    case Op::Neg: return P.neg(evaluate(P, *n.args[0], in));
    case Op::Exp: return P.exp(evaluate(P, *n.args[0], in));
    case Op::Log: return P.log(evaluate(P, *n.args[0], in));
    case Op::PowConst: return P.pow(evaluate(P, *n.args[0], in), n.constant);
    case Op::Indicator: return P.indicator(n.predicate, evaluate(P, *n.args[0], in));
    case Op::Compose: {
      std::vector<T> mid;
      mid.reserve(n.inner->size());
      for (const auto& p : *n.inner) {
        mid.push_back(evaluate(P, *p, in));
        if (Policy::nan(mid.back())) return P.make_nan();
      }
      return evaluate(P, *n.args[0], std::span<const T>(mid));
    }
  }
  return P.make_nan();
}

inline Complex eval_at_origin(const Node& n) {
  const long m = max_coord(n);
  std::vector<Complex> zeros(static_cast<std::size_t>(m + 1));
  return evaluate(ComplexScalar{}, n, std::span<const Complex>(zeros));
}

}  // namespace detail

/// Value handle on an immutable expression node; arithmetic builds new trees.
class Expr {
 public:
  Expr(double c) : node_(detail::make_node({Op::Const, 0, Complex(c, 0.0), {}, {}, {}})) {}
  Expr(Complex c) : node_(detail::make_node({Op::Const, 0, c, {}, {}, {}})) {}
  explicit Expr(NodePtr node) : node_(std::move(node)) {
    if (!node_) throw UsageError("null expression node");
  }

  const Node& node() const { return *node_; }
  const NodePtr& ptr() const { return node_; }

 private:
  NodePtr node_;
};

inline Expr coord(std::size_t i) { return Expr(detail::make_node({Op::Coord, i, {}, {}, {}, {}})); }
inline Expr constant(Complex c) { return Expr(c); }

namespace detail {
inline Expr binary(Op op, const Expr& a, const Expr& b) {
  return Expr(make_node({op, 0, {}, {}, {a.ptr(), b.ptr()}, {}}));
}
inline Expr unary(Op op, const Expr& a, Complex c = {}) {
  return Expr(make_node({op, 0, c, {}, {a.ptr()}, {}}));
}
}  // namespace detail

inline Expr operator+(const Expr& a, const Expr& b) { return detail::binary(Op::Add, a, b); }
inline Expr operator-(const Expr& a, const Expr& b) { return detail::binary(Op::Sub, a, b); }
inline Expr operator*(const Expr& a, const Expr& b) { return detail::binary(Op::Mul, a, b); }
inline Expr operator/(const Expr& a, const Expr& b) { return detail::binary(Op::Div, a, b); }
inline Expr operator-(const Expr& a) { return detail::unary(Op::Neg, a); }
inline Expr exp(const Expr& a) { return detail::unary(Op::Exp, a); }
inline Expr log(const Expr& a) { return detail::unary(Op::Log, a); }
/// base^p on the principal branch; NaN for real nonpositive bases.
inline Expr pow(const Expr& base, Complex p) { return detail::unary(Op::PowConst, base, p); }

/// 1{pred(child)}; the child must vanish at the origin so the predicate is constant near 0.
inline Expr indicator(const Predicate& pred, const Expr& child) {
  pred.validate();
  const Complex at0 = detail::eval_at_origin(child.node());
  if (at0 != Complex(0.0))
    throw UsageError("indicator argument must vanish at the origin (got " + format_complex(at0) + ")");
  return Expr(detail::make_node({Op::Indicator, 0, {}, pred, {child.ptr()}, {}}));
}

/// Derivatives of a representing function at the origin.
struct Jet2 {
  CVector value;                 // n
  CMatrix jacobian;              // n x d
  std::vector<CMatrix> hessian;  // n entries of d x d
};

/// Deterministic representing function R^d -> C^n with f(0) = 0.
class RepFn {
 public:
  RepFn(std::size_t input_dim, std::vector<Expr> outputs) : input_dim_(input_dim) {
    if (input_dim == 0) throw UsageError("representing function needs input dimension >= 1");
    if (outputs.empty()) throw UsageError("representing function needs at least one output");
    auto nodes = std::make_shared<NodeList>();
    nodes->reserve(outputs.size());
    for (auto& e : outputs) nodes->push_back(e.ptr());
    init(std::move(nodes));
  }

  RepFn(std::size_t input_dim, std::shared_ptr<const NodeList> nodes) : input_dim_(input_dim) {
    if (input_dim == 0) throw UsageError("representing function needs input dimension >= 1");
    if (!nodes || nodes->empty()) throw UsageError("representing function needs at least one output");
    init(std::move(nodes));
  }

  std::size_t input_dim() const { return input_dim_; }
  std::size_t output_dim() const { return outputs_->size(); }
  const NodeList& nodes() const { return *outputs_; }
  const std::shared_ptr<const NodeList>& shared_nodes() const { return outputs_; }
  Expr output(std::size_t k) const { return Expr(outputs_->at(k)); }

  /// True when every constant and exponent in the tree is real.
  bool real_coefficients() const {
    return std::all_of(outputs_->begin(), outputs_->end(),
                       [](const NodePtr& p) { return detail::has_real_constants(*p); });
  }

 private:
  void init(std::shared_ptr<const NodeList> nodes) {
    for (const auto& p : *nodes) {
      if (!p) throw UsageError("null output expression");
      const long m = detail::max_coord(*p);
      if (m >= static_cast<long>(input_dim_))
        throw UsageError("expression reads coordinate " + std::to_string(m) +
                         " but input dimension is " + std::to_string(input_dim_));
    }
    outputs_ = std::move(nodes);
    std::vector<Complex> zeros(input_dim_);
    for (std::size_t k = 0; k < outputs_->size(); ++k) {
      const Complex v = detail::evaluate(detail::ComplexScalar{input_dim_}, *(*outputs_)[k],
                                         std::span<const Complex>(zeros));
      if (v != Complex(0.0))
        throw UsageError("representing function must vanish at the origin; output " +
                         std::to_string(k) + " equals " + format_complex(v));
    }
  }

  std::size_t input_dim_;
  std::shared_ptr<const NodeList> outputs_;
};

/// f(x). Any undefined component (pole, branch cut) makes the whole result NaN.
inline CVector eval(const RepFn& f, std::span<const Complex> x) {
  if (x.size() != f.input_dim())
    throw UsageError("eval: point has dimension " + std::to_string(x.size()) + ", expected " +
                     std::to_string(f.input_dim()));
  const detail::ComplexScalar policy{f.input_dim()};
  CVector out(static_cast<Eigen::Index>(f.output_dim()));
  for (std::size_t k = 0; k < f.output_dim(); ++k) {
    out[static_cast<Eigen::Index>(k)] = detail::evaluate(policy, *f.nodes()[k], x);
    if (is_nan(out[static_cast<Eigen::Index>(k)])) return nan_vector(out.size());
  }
  return out;
}

inline CVector eval(const RepFn& f, const CVector& x) {
  return eval(f, std::span<const Complex>(x.data(), static_cast<std::size_t>(x.size())));
}

inline CVector eval(const RepFn& f, const RVector& x) {
  const CVector z = x.cast<Complex>();
  return eval(f, z);
}

/// Dxi(0) and D^2xi(0) by second-order forward propagation; indicators frozen at 0.
inline Jet2 jet_at_zero(const RepFn& f) {
  const std::size_t d = f.input_dim();
  const auto n = static_cast<Eigen::Index>(f.output_dim());
  const detail::JetScalar policy{d};
  std::vector<detail::Jet> seeds;
  seeds.reserve(d);
  for (std::size_t i = 0; i < d; ++i) seeds.push_back(detail::Jet::variable(i, d));

  Jet2 out{CVector::Zero(n), CMatrix::Zero(n, static_cast<Eigen::Index>(d)), {}};
  out.hessian.assign(static_cast<std::size_t>(n), CMatrix::Zero(static_cast<Eigen::Index>(d),
                                                                static_cast<Eigen::Index>(d)));
  for (Eigen::Index k = 0; k < n; ++k) {
    const detail::Jet j = detail::evaluate(policy, *f.nodes()[static_cast<std::size_t>(k)],
                                           std::span<const detail::Jet>(seeds));
    if (detail::JetScalar::nan(j))
      throw ComputationError("jet_at_zero: output " + std::to_string(k) + " undefined at the origin");
    out.value[k] = j.v;
    for (std::size_t i = 0; i < d; ++i) {
      out.jacobian(k, static_cast<Eigen::Index>(i)) = j.g[i];
      for (std::size_t l = 0; l < d; ++l)
        out.hessian[static_cast<std::size_t>(k)](static_cast<Eigen::Index>(i),
                                                 static_cast<Eigen::Index>(l)) = j.h[i * d + l];
    }
  }
  return out;
}

/// psi(xi(.)): the outer function reads the inner outputs as its coordinates.
inline RepFn compose(const RepFn& psi, const RepFn& xi) {
  if (psi.input_dim() != xi.output_dim())
    throw UsageError("compose: outer input dimension " + std::to_string(psi.input_dim()) +
                     " != inner output dimension " + std::to_string(xi.output_dim()));
  std::vector<Expr> outs;
  outs.reserve(psi.output_dim());
  for (const auto& p : psi.nodes())
    outs.emplace_back(detail::make_node({Op::Compose, 0, {}, {}, {p}, xi.shared_nodes()}));
  return RepFn(xi.input_dim(), std::move(outs));
}

/// Identity on R^d.
inline RepFn identity(std::size_t d) {
  std::vector<Expr> outs;
  for (std::size_t i = 0; i < d; ++i) outs.push_back(coord(i));
  return RepFn(d, std::move(outs));
}

/// Concatenates the outputs of functions sharing an input dimension.
inline RepFn stack(const std::vector<RepFn>& parts) {
  if (parts.empty()) throw UsageError("stack: no functions");
  std::vector<Expr> outs;
  for (const auto& f : parts) {
    if (f.input_dim() != parts.front().input_dim()) throw UsageError("stack: input dimensions differ");
    for (std::size_t k = 0; k < f.output_dim(); ++k) outs.push_back(f.output(k));
  }
  return RepFn(parts.front().input_dim(), std::move(outs));
}

/// zeta * xi for a constant m x n matrix zeta (the integration rule with a constant integrand).
inline RepFn left_multiply(const CMatrix& zeta, const RepFn& xi) {
  if (static_cast<std::size_t>(zeta.cols()) != xi.output_dim())
    throw UsageError("left_multiply: matrix has " + std::to_string(zeta.cols()) +
                     " columns, function has " + std::to_string(xi.output_dim()) + " outputs");
  if (zeta.rows() == 0) throw UsageError("left_multiply: empty matrix");
  std::vector<Expr> outs;
  for (Eigen::Index r = 0; r < zeta.rows(); ++r) {
    Expr acc = zeta(r, 0) * xi.output(0);
    for (Eigen::Index c = 1; c < zeta.cols(); ++c) acc = acc + zeta(r, c) * xi.output(static_cast<std::size_t>(c));
    outs.push_back(acc);
  }
  return RepFn(xi.input_dim(), std::move(outs));
}

/// Central-difference estimate of Dxi(0), D^2xi(0); independent of the jet engine.
inline Jet2 finite_difference_jet(const RepFn& f, double step) {
  if (!(step > 0.0)) throw UsageError("finite_difference_jet: step must be positive");
  const auto d = static_cast<Eigen::Index>(f.input_dim());
  const auto n = static_cast<Eigen::Index>(f.output_dim());
  auto at = [&](const RVector& x) {
    CVector y = eval(f, x);
    if (any_nan(y)) {
      std::string pt;
      for (Eigen::Index i = 0; i < x.size(); ++i) pt += (i ? ", " : "") + format_real(x[i]);
      throw ComputationError("finite_difference_jet: function undefined at stencil point (" + pt + ")");
    }
    return y;
  };
  auto unit = [&](Eigen::Index i, double s) {
    RVector e = RVector::Zero(d);
    e[i] = s;
    return e;
  };
  const CVector f0 = at(RVector::Zero(d));
  Jet2 out{f0, CMatrix::Zero(n, d), std::vector<CMatrix>(static_cast<std::size_t>(n), CMatrix::Zero(d, d))};
  const double h = step;
  for (Eigen::Index i = 0; i < d; ++i) {
    const CVector fp = at(unit(i, h));
    const CVector fm = at(unit(i, -h));
    out.jacobian.col(i) = (fp - fm) / (2.0 * h);
    const CVector second = (fp - 2.0 * f0 + fm) / (h * h);
    for (Eigen::Index k = 0; k < n; ++k) out.hessian[static_cast<std::size_t>(k)](i, i) = second[k];
    for (Eigen::Index j = 0; j < i; ++j) {
      const CVector fpp = at(unit(i, h) + unit(j, h));
      const CVector fpm = at(unit(i, h) + unit(j, -h));
      const CVector fmp = at(unit(i, -h) + unit(j, h));
      const CVector fmm = at(unit(i, -h) + unit(j, -h));
      const CVector mixed = (fpp - fpm - fmp + fmm) / (4.0 * h * h);
      for (Eigen::Index k = 0; k < n; ++k) {
        out.hessian[static_cast<std::size_t>(k)](i, j) = mixed[k];
        out.hessian[static_cast<std::size_t>(k)](j, i) = mixed[k];
      }
    }
  }
  return out;
}

}  // namespace repcalc
