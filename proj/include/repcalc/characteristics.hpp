#pragma once

// Characteristics of Y = xi o X for a Levy X: (b^{Y[g]}, c^Y, F^Y).

#include <cstdint>
#include <optional>
#include <random>

#include "repcalc/drift.hpp"

namespace repcalc {

struct PushforwardOptions {
  // When set, Gaussian pushforward components are replaced by this many
  // equally weighted sampled atoms before mapping. Otherwise they stay exact
  // (a Mapped component that integrate() composes on the fly).
  std::optional<std::size_t> sampled_atoms;
  std::uint64_t seed = 0x5eed;
  QuadratureConfig quad;
};

namespace detail {

inline RVector real_point(const CVector& y, const RVector& at) {
  RVector out(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y[i].imag() != 0.0) throw ComputationError("pushforward needs a real-valued map; complex at " + point_string(at));
    out[i] = y[i].real();
  }
  return out;
}

/// Image of an atom list; coincident images merge, images at 0 drop out.
inline std::vector<JumpMeasure::Atom> map_atoms(const RepFn& xi, const std::vector<JumpMeasure::Atom>& atoms) {
  std::vector<JumpMeasure::Atom> out;
  for (const auto& a : atoms) {
    const CVector y = eval(xi, a.point);
    if (any_nan(y)) throw ComputationError("representation undefined at atom " + point_string(a.point));
    const RVector yr = real_point(y, a.point);
    if (yr.isZero(0.0)) continue;
    auto hit = std::find_if(out.begin(), out.end(), [&](const JumpMeasure::Atom& o) {
      return (o.point - yr).cwiseAbs().maxCoeff() < 1e-12;
    });
    if (hit != out.end()) hit->intensity += a.intensity;
    else out.push_back({yr, a.intensity});
  }
  return out;
}

inline std::vector<JumpMeasure::Atom> sample_gaussian_push(const JumpMeasure::GaussianPush& g, std::size_t n,
                                                           std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<JumpMeasure::Atom> out;
  out.reserve(n);
  RVector z(g.mean.size());
  for (std::size_t k = 0; k < n; ++k) {
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = normal(rng);
    RVector x = (g.mean + g.chol * z).array().unaryExpr([](double v) { return std::expm1(v); });
    out.push_back({std::move(x), g.intensity / static_cast<double>(n)});
  }
  return out;
}

}  // namespace detail

/// Image of F under xi, dimension output_dim(xi).
inline JumpMeasure pushforward_measure(const RepFn& xi, const JumpMeasure& F, const PushforwardOptions& opt = {}) {
  if (xi.input_dim() != F.dim()) throw UsageError("pushforward: map and measure dimensions differ");
  const std::size_t n = xi.output_dim();
  std::vector<JumpMeasure::Atom> atoms;
  std::vector<JumpMeasure> parts;
  std::uint64_t seed = opt.seed;
  for (const auto& comp : F.components()) {
    if (auto* a = std::get_if<JumpMeasure::FiniteAtoms>(&comp)) {
      atoms.insert(atoms.end(), a->atoms.begin(), a->atoms.end());
    } else if (auto* g = std::get_if<JumpMeasure::GaussianPush>(&comp); g && opt.sampled_atoms) {
      auto s = detail::sample_gaussian_push(*g, *opt.sampled_atoms, seed++);
      atoms.insert(atoms.end(), s.begin(), s.end());
    } else {
      parts.push_back(JumpMeasure::mapped(JumpMeasure::single(F.dim(), comp), xi));
    }
  }
  std::vector<JumpMeasure::Atom> mapped = detail::map_atoms(xi, atoms);
  if (!mapped.empty()) parts.push_back(JumpMeasure::atoms(n, std::move(mapped)));
  if (parts.empty()) return JumpMeasure::none(n);
  return JumpMeasure::sum(parts);
}

/// (b^{Y[g]}, c^Y, F^Y) for Y = xi o X:
///   c^Y = Dxi(0) c Dxi(0)^T,  F^Y = F o xi^{-1},  b^{Y[g]} = b^{xi o X} - int (y - g(y)) F^Y(dy).
inline LevyTriplet pushforward_characteristics(const RepFn& xi, const LevyTriplet& t, const TruncationSpec& g,
                                               const PushforwardOptions& opt = {}) {
  if (g.size() != xi.output_dim()) throw UsageError("pushforward: truncation must match the output dimension");
  if (xi.input_dim() != t.dim()) throw UsageError("pushforward: map and triplet dimensions differ");
  const CMatrix J = jet_at_zero(xi).jacobian;
  if (!J.imag().isZero(0.0)) throw UsageError("pushforward needs a real-valued map (complex derivative at 0)");
  const RMatrix Jr = J.real();
  RMatrix cY = Jr * t.c() * Jr.transpose();
  cY = 0.5 * (cY + cY.transpose());

  const DriftReport dr = drift(xi, t, opt.quad);
  RVector bY(dr.total.size());
  for (Eigen::Index i = 0; i < bY.size(); ++i) {
    const Complex z = dr.total[i];
    if (std::abs(z.imag()) > 1e-12 * std::max(1.0, std::abs(z.real())))
      throw ComputationError("pushforward: drift has a non-zero imaginary part " + format_complex(z));
    bY[i] = z.real();
  }
  JumpMeasure FY = pushforward_measure(xi, t.F(), opt);
  bY -= truncation_gap(FY, g, opt.quad);
  return LevyTriplet(std::move(bY), std::move(cY), std::move(FY), g);
}

/// F(G) for G a box prod_i (lo_i, hi_i]; counts atoms exactly. Throws for
/// components that are not atom lists.
inline double atom_mass_in_box(const JumpMeasure& F, const RVector& lo, const RVector& hi) {
  if (!F.atoms_only()) throw UsageError("box mass is only exact for atom measures");
  double m = 0.0;
  for (const auto& a : F.all_atoms())
    if ((a.point.array() > lo.array()).all() && (a.point.array() <= hi.array()).all()) m += a.intensity;
  return m;
}

}  // namespace repcalc
