#include <gtest/gtest.h>

#include <random>

#include "repcalc/calculus.hpp"
#include "repcalc/characteristics.hpp"
#include "repcalc/models.hpp"
#include "support/oracles.hpp"

using namespace repcalc;

namespace {

RVector vec(std::initializer_list<double> v) {
  RVector x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double z : v) x[i++] = z;
  return x;
}

RMatrix mat1(double a) { return RMatrix::Constant(1, 1, a); }

Integrand scalar(std::function<Complex(double)> f) {
  return [f](const RVector& x) { return CVector::Constant(1, f(x[0])); };
}

}  // namespace

TEST(Integrate, SingleAtom) {
  const JumpMeasure F = JumpMeasure::atoms(1, {{vec({0.1}), 1.0}});
  const IntegralResult r = integrate(F, scalar([](double x) { return std::exp(x) - 1.0 - x; }), 1);
  EXPECT_EQ(r.value[0].real(), std::exp(0.1) - 1.0 - 0.1);
  EXPECT_NEAR(r.value[0].real(), 5.17092e-3, 1e-8);
  EXPECT_EQ(r.error, 0.0);
}

TEST(Integrate, ZeroIntegrand) {
  const JumpMeasure F = JumpMeasure::sum({JumpMeasure::atoms(1, {{vec({0.3}), 2.0}}),
                                          JumpMeasure::gaussian_push(0.7, vec({-0.1}), mat1(0.04))});
  const IntegralResult r = integrate(F, [](const RVector&) { return CVector::Zero(2); }, 2);
  EXPECT_EQ(r.value, CVector::Zero(2));
  EXPECT_EQ(r.error, 0.0);
}

TEST(Integrate, AtomsEqualLoopSum) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-0.9, 2.0), w(0.1, 3.0);
  std::vector<JumpMeasure::Atom> atoms;
  for (int k = 0; k < 25; ++k) atoms.push_back({vec({u(rng), u(rng)}), w(rng)});
  const JumpMeasure F = JumpMeasure::atoms(2, atoms);
  const RepFn xi = rep_margrabe({-0.5, 4.0});
  const IntegralResult r = integrate(F, [&](const RVector& x) { return eval(xi, x); }, 1);
  Complex want = 0.0;
  for (const auto& a : atoms) want += a.intensity * eval(xi, a.point)[0];
  EXPECT_EQ(r.value[0], want);
}

TEST(Integrate, LognormalMoments) {
  const double s = 0.3;
  const JumpMeasure F = JumpMeasure::gaussian_push(1.0, vec({0.0}), mat1(s * s));
  const IntegralResult a = integrate(F, scalar([](double x) { return std::log1p(x); }), 1);
  EXPECT_NEAR(std::abs(a.value[0]), 0.0, 1e-12);
  const IntegralResult b = integrate(F, scalar([](double x) { return x; }), 1);
  EXPECT_NEAR(b.value[0].real(), std::expm1(0.5 * s * s), 1e-13);
}

TEST(Integrate, LognormalMatchesIndependentQuadrature) {
  const double lam = 0.6, m = -0.08, s = 0.25;
  const JumpMeasure F = JumpMeasure::gaussian_push(lam, vec({m}), mat1(s * s));
  const std::vector<std::function<Complex(double)>> gs = {
      [](double x) { return std::exp(-2.0 * x) - 1.0 + 2.0 * x; },
      [](double x) { return std::pow(1.0 + x, Complex(0.5, 3.0)) - 1.0; },
      [](double x) { return x * x * x; },
  };
  for (const auto& g : gs) {
    const Complex got = integrate(F, scalar(g), 1).value[0];
    const Complex want = oracle::lognormal_jump_integral(lam, m, s, g);
    EXPECT_LT(std::abs(got - want), 1e-10 * std::max(1.0, std::abs(want))) << got << " vs " << want;
  }
}

TEST(Integrate, NaNAtAtomIsError) {
  const JumpMeasure F = JumpMeasure::atoms(1, {{vec({-1.0}), 1.0}});
  EXPECT_THROW(integrate(F, [](const RVector& x) { return eval(rep_log_return(), x); }, 1), ComputationError);
}

TEST(Integrate, MargrabeIntegrandsConvergeOnContour) {
  RMatrix S(2, 2);
  S << 0.0625, 0.02, 0.02, 0.0625;
  const JumpMeasure F = JumpMeasure::gaussian_push(0.4, vec({-0.1, -0.05}), S);
  for (double u = 0.0; u <= 50.0; u += 5.0) {
    const RepFn xi = rep_margrabe({-0.5, u});
    const IntegralResult r = integrate(F, [&](const RVector& x) { return eval(xi, x); }, 1);
    EXPECT_LE(r.error, 1e-9 * std::max(1e-12, std::abs(r.value[0]))) << "u = " << u;
  }
}

TEST(Integrate, GaussianPushSupportAboveMinusOne) {
  RMatrix S(2, 2);
  S << 4.0, 1.0, 1.0, 9.0;
  const JumpMeasure F = JumpMeasure::gaussian_push(1.0, vec({-3.0, 0.5}), S);
  const auto& g = std::get<JumpMeasure::GaussianPush>(F.components().front());
  const auto pts = detail::sample_gaussian_push(g, 1000000, 99);
  std::size_t bad = 0;
  for (const auto& a : pts) bad += (a.point.array() > -1.0).all() ? 0 : 1;
  EXPECT_EQ(bad, 0u);
}

TEST(JumpMeasureValidation, Rejections) {
  EXPECT_THROW(JumpMeasure::atoms(1, {{vec({0.0}), 1.0}}), UsageError);
  EXPECT_THROW(JumpMeasure::atoms(1, {{vec({0.2}), 0.0}}), UsageError);
  EXPECT_THROW(JumpMeasure::atoms(1, {{vec({0.2}), 1.0}, {vec({0.2}), 2.0}}), UsageError);
  EXPECT_THROW(JumpMeasure::atoms(2, {{vec({0.2}), 1.0}}), UsageError);
  EXPECT_THROW(JumpMeasure::gaussian_push(1.0, vec({0.0}), mat1(-0.1)), UsageError);
  RMatrix asym(2, 2);
  asym << 1.0, 0.5, 0.2, 1.0;
  EXPECT_THROW(JumpMeasure::gaussian_push(1.0, vec({0.0, 0.0}), asym), UsageError);
}

TEST(JumpMeasureValidation, SingularCovarianceIsJittered) {
  RMatrix S(2, 2);
  S << 0.04, 0.04, 0.04, 0.04;
  const JumpMeasure F = JumpMeasure::gaussian_push(1.0, vec({0.0, 0.0}), S);
  const IntegralResult r = integrate(F, [](const RVector& x) { return CVector::Constant(1, x[0] - x[1]); }, 1);
  EXPECT_NEAR(std::abs(r.value[0]), 0.0, 1e-8);
}

TEST(TripletValidation, Rejections) {
  const JumpMeasure none = JumpMeasure::none(1);
  const auto h = uniform_truncation(1, Truncation::Identity);
  EXPECT_THROW(LevyTriplet(vec({0.0}), mat1(-0.01), none, h), UsageError);
  EXPECT_THROW(LevyTriplet(vec({kNaN}), mat1(0.01), none, h), UsageError);
  EXPECT_THROW(LevyTriplet(vec({0.0, 0.0}), mat1(0.01), none, h), UsageError);
}

TEST(DiscreteModelValidation, Rejections) {
  EXPECT_THROW(DiscreteModel({{vec({0.1}), 0.5}, {vec({-0.1}), 0.4}}), UsageError);
  EXPECT_THROW(DiscreteModel({{vec({0.1}), 0.5}, {vec({0.1}), 0.5}}), UsageError);
  EXPECT_THROW(DiscreteModel({{vec({0.1}), 1.5}, {vec({-0.1}), -0.5}}), UsageError);
  EXPECT_NO_THROW(DiscreteModel({{vec({0.1}), 0.5}, {vec({-0.1}), 0.5}}));
}

TEST(Truncation, FunctionsNearZero) {
  const RVector x = vec({0.3, -0.7, 1.5});
  EXPECT_EQ(apply_truncation(uniform_truncation(3, Truncation::Identity), x), x);
  EXPECT_EQ(apply_truncation(uniform_truncation(3, Truncation::Zero), x), RVector::Zero(3));
  EXPECT_EQ(apply_truncation(uniform_truncation(3, Truncation::UnitClip), x), vec({0.3, -0.7, 0.0}));
}

TEST(Retruncate, NoJumps) {
  const LevyTriplet t(vec({0.2}), mat1(0.04), JumpMeasure::none(1), uniform_truncation(1, Truncation::Identity));
  for (auto h : {Truncation::Zero, Truncation::UnitClip, Truncation::Identity})
    EXPECT_EQ(retruncate(t, uniform_truncation(1, h)).b(), t.b());
}

TEST(Retruncate, AtomOutsideClip) {
  const LevyTriplet t(vec({0.0}), mat1(0.0), JumpMeasure::atoms(1, {{vec({2.0}), 1.0}}),
                      uniform_truncation(1, Truncation::Identity));
  EXPECT_EQ(retruncate(t, uniform_truncation(1, Truncation::UnitClip)).b()[0], -2.0);
}

TEST(Retruncate, RoundTrip) {
  const JumpMeasure F = JumpMeasure::sum({JumpMeasure::atoms(1, {{vec({2.0}), 1.0}, {vec({-0.4}), 0.5}}),
                                          JumpMeasure::gaussian_push(0.5, vec({-0.05}), mat1(0.3))});
  const LevyTriplet t(vec({0.03}), mat1(0.04), F, uniform_truncation(1, Truncation::UnitClip));
  for (auto a : {Truncation::Zero, Truncation::Identity, Truncation::UnitClip}) {
    const LevyTriplet back = retruncate(retruncate(t, uniform_truncation(1, a)), t.h());
    EXPECT_NEAR(back.b()[0], t.b()[0], 1e-15);
  }
}

TEST(Retruncate, ClipGapMatchesQuadrature) {
  // the closed-form clipped tail against an independent integral
  const double lam = 0.5, m = 0.2, s = 0.6;
  const JumpMeasure F = JumpMeasure::gaussian_push(lam, vec({m}), mat1(s * s));
  const double got = truncation_gap(F, uniform_truncation(1, Truncation::UnitClip))[0];
  boost::math::quadrature::tanh_sinh<double> ts;
  const double lo = std::log(2.0), hi = m + 40.0 * s;
  const double want = lam * ts.integrate([&](double z) {
    return std::expm1(z) * std::exp(-0.5 * (z - m) * (z - m) / (s * s)) / (s * std::sqrt(2.0 * std::numbers::pi));
  }, lo, hi);
  EXPECT_NEAR(got, want, 1e-12);
}
