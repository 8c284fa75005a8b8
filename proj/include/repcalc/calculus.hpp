#pragma once

// Catalog of representing functions for common transformations of
// semimartingales, and the measure-change adjustment (1 + eta) xi.

#include <string>
#include <vector>

#include "repcalc/repfn.hpp"

namespace repcalc {

/// (1 + x1) / (1 + x2) - 1: percentage change of a ratio K/L from those of K and L.
inline RepFn rep_ratio() { return RepFn(2, {(1.0 + coord(0)) / (1.0 + coord(1)) - 1.0}); }

/// log(1 + x): log return from a percentage return.
inline RepFn rep_log_return() { return RepFn(1, {log(1.0 + coord(0))}); }

/// e^{v x} - 1: percentage change of e^{vX}.
inline RepFn rep_exp_affine(Complex v) { return RepFn(1, {exp(v * coord(0)) - 1.0}); }

/// (1 + x)^v - 1: percentage change of Y^v from that of Y.
inline RepFn rep_power(Complex v) { return RepFn(1, {pow(1.0 + coord(0), v) - 1.0}); }

/// e^{-lambda (e^x - 1)} - 1: percentage change of e^{-lambda R} with R the yield of e^X.
inline RepFn rep_exp_utility(double lambda) {
  return RepFn(1, {exp(-lambda * (exp(coord(0)) - 1.0)) - 1.0});
}

/// d/dlambda of rep_exp_utility: -(e^x - 1) e^{-lambda (e^x - 1)}.
inline RepFn rep_exp_utility_sensitivity(double lambda) {
  const Expr yield = exp(coord(0)) - 1.0;
  return RepFn(1, {-yield * exp(-lambda * yield)});
}

/// (e^{v x} - 1) e^{-lambda* (e^x - 1)}.
inline RepFn rep_memm_integrand(Complex v, double lambda_star) {
  return RepFn(1, {(exp(v * coord(0)) - 1.0) * exp(-lambda_star * (exp(coord(0)) - 1.0))});
}

/// e^{x1 - x2} - 1: ratio change in terms of log increments.
inline RepFn rep_exp_log_ratio() { return RepFn(2, {exp(coord(0) - coord(1)) - 1.0}); }

/// ((1 + x2) / (1 + x1))^v - 1: power of the ratio S2/S1 without default handling.
inline RepFn rep_power_ratio(Complex v) {
  return RepFn(2, {pow((1.0 + coord(1)) / (1.0 + coord(0)), v) - 1.0});
}

/// Exchange-option integrand with default handling: finite at x1 = -1 and x2 = -1.
///   (1 + x1) (1{x2 != -1} ((1 + 1{x2 != -1} x2) / (1 + 1{x1 != -1} x1))^v - 1)
inline RepFn rep_margrabe(Complex v) {
  const Expr x1 = coord(0);
  const Expr x2 = coord(1);
  const Expr alive1 = indicator(Predicate::not_equal(-1.0), x1);
  const Expr alive2 = indicator(Predicate::not_equal(-1.0), x2);
  const Expr ratio = (1.0 + alive2 * x2) / (1.0 + alive1 * x1);
  return RepFn(2, {(1.0 + x1) * (alive2 * pow(ratio, v) - 1.0)});
}

/// x_i on R^d.
inline RepFn rep_component(std::size_t d, std::size_t i) {
  if (i >= d) throw UsageError("component index out of range");
  return RepFn(d, {coord(i)});
}

/// Zero function R^d -> C^n.
inline RepFn rep_zero(std::size_t d, std::size_t n = 1) {
  std::vector<Expr> outs(n, Expr(0.0));
  return RepFn(d, std::move(outs));
}

/// (1 + eta) xi: the P-representation whose drift is the Q-drift of xi o X
/// when dQ/dP is driven by eta o X. eta >= -1 on the support is the caller's contract.
inline RepFn girsanov_adjust(const RepFn& xi, const RepFn& eta) {
  if (eta.output_dim() != 1) throw UsageError("girsanov_adjust: eta must be scalar-valued");
  if (eta.input_dim() != xi.input_dim()) throw UsageError("girsanov_adjust: input dimensions differ");
  const Expr density = 1.0 + eta.output(0);
  std::vector<Expr> outs;
  outs.reserve(xi.output_dim());
  for (std::size_t k = 0; k < xi.output_dim(); ++k) outs.push_back(density * xi.output(k));
  return RepFn(xi.input_dim(), std::move(outs));
}

/// One catalog entry: name, parameters and the function they build.
struct StdRep {
  std::string name;
  std::vector<std::string> parameters;
  std::string note;
};

inline const std::vector<StdRep>& catalog() {
  static const std::vector<StdRep> entries = {
      {"identity", {"dim"}, "x (defaults to the model dimension)"},
      {"component", {"dim", "i"}, "x_i"},
      {"ratio", {}, "(1+x1)/(1+x2)-1"},
      {"log_return", {}, "log(1+x)"},
      {"exp_affine", {"v"}, "e^{vx}-1"},
      {"power", {"v"}, "(1+x)^v-1"},
      {"exp_utility", {"lambda"}, "e^{-lambda(e^x-1)}-1"},
      {"exp_utility_sensitivity", {"lambda"}, "-(e^x-1)e^{-lambda(e^x-1)}"},
      {"memm_integrand", {"v", "lambda_star"}, "(e^{vx}-1)e^{-lambda_star(e^x-1)}"},
      {"exp_log_ratio", {}, "e^{x1-x2}-1"},
      {"power_ratio", {"v"}, "((1+x2)/(1+x1))^v-1"},
      {"margrabe", {"v"}, "(1+x1)(1{x2!=-1}((1+1{x2!=-1}x2)/(1+1{x1!=-1}x1))^v-1)"},
  };
  return entries;
}

}  // namespace repcalc
