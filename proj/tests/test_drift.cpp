#include <gtest/gtest.h>

#include <random>

#include "repcalc/calculus.hpp"
#include "repcalc/drift.hpp"
#include "repcalc/pricing.hpp"
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

LevyTriplet gbm_pair() {
  RMatrix c(2, 2);
  c << 0.04, 0.006, 0.006, 0.01;
  return LevyTriplet(vec({0.05, 0.02}), c, JumpMeasure::none(2), uniform_truncation(2, Truncation::Identity));
}

LevyTriplet merton_1d(Truncation h = Truncation::UnitClip) {
  return LevyTriplet(vec({0.03}), mat1(0.04), JumpMeasure::gaussian_push(0.5, vec({-0.05}), mat1(0.01)),
                     uniform_truncation(1, h));
}

// jumps beyond the unit clip on both sides plus a Gaussian pushforward; the
// pushforward variances stay small because e^{v x} is doubly exponential in Z
LevyTriplet mixed_1d(Truncation h) {
  const JumpMeasure F = JumpMeasure::sum({JumpMeasure::atoms(1, {{vec({1.7}), 0.3}, {vec({-0.6}), 0.8}, {vec({0.05}), 2.0}}),
                                          JumpMeasure::gaussian_push(0.4, vec({0.1}), mat1(0.04))});
  return LevyTriplet(vec({0.01}), mat1(0.09), F, uniform_truncation(1, h));
}

LevyTriplet mixed_2d(Truncation h) {
  RMatrix c(2, 2), S(2, 2);
  c << 0.04, 0.01, 0.01, 0.09;
  S << 0.04, 0.01, 0.01, 0.03;
  const JumpMeasure F = JumpMeasure::sum({JumpMeasure::atoms(2, {{vec({1.5, -0.2}), 0.3}, {vec({0.3, -0.95}), 0.02},
                                                                 {vec({-0.5, 2.5}), 0.1}}),
                                          JumpMeasure::gaussian_push(0.6, vec({0.05, -0.1}), S)});
  return LevyTriplet(vec({0.02, -0.01}), c, F, uniform_truncation(2, h));
}

double rel(Complex a, Complex b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

const RVector kTri = vec({std::log(1.1), 0.0, std::log(0.9)});

DiscreteModel trinomial(double pu, double pm, double pd) {
  return DiscreteModel({{vec({std::log(1.1)}), pu}, {vec({0.0}), pm}, {vec({std::log(0.9)}), pd}});
}

}  // namespace

TEST(Drift, GbmRatio) {
  const DriftReport r = drift(rep_ratio(), gbm_pair());
  EXPECT_NEAR(r.total[0].real(), 0.034, 1e-15);
  EXPECT_EQ(r.total[0].imag(), 0.0);
  EXPECT_EQ(r.jump_part[0], Complex(0.0));
}

TEST(Drift, PartsSumToTotal) {
  const DriftReport r = drift(rep_margrabe({-0.5, 3.0}), mixed_2d(Truncation::UnitClip));
  EXPECT_EQ(r.total, r.linear_part + r.quadratic_part + r.jump_part);
}

TEST(Drift, IdentityEchoesDrift) {
  const LevyTriplet t = mixed_2d(Truncation::Identity);
  const DriftReport r = drift(identity(2), t);
  EXPECT_EQ(r.total, t.b().cast<Complex>());
  EXPECT_LT(r.jump_part.cwiseAbs().maxCoeff(), 1e-17);
}

TEST(Drift, SingleAtom) {
  const LevyTriplet t(vec({0.0}), mat1(0.0), JumpMeasure::atoms(1, {{vec({0.1}), 1.0}}),
                      uniform_truncation(1, Truncation::Identity));
  EXPECT_NEAR(drift(rep_exp_affine(1.0), t).total[0].real(), std::exp(0.1) - 1.0 - 0.1, 1e-17);
}

TEST(Drift, BivariateAtomsRatio) {
  std::vector<JumpMeasure::Atom> atoms = {{vec({0.5, 0.2}), 0.7}, {vec({-0.3, 0.4}), 0.2}, {vec({0.1, -0.6}), 1.1}};
  RMatrix c(2, 2);
  c << 0.02, 0.004, 0.004, 0.03;
  const LevyTriplet t(vec({0.01, 0.02}), c, JumpMeasure::atoms(2, atoms), uniform_truncation(2, Truncation::Identity));
  // b1 - b2 - c12 + c22 + sum lambda ((1+x1)/(1+x2) - 1 - x1 + x2)
  double want = 0.01 - 0.02 - 0.004 + 0.03;
  for (const auto& a : atoms) want += a.intensity * ((1.0 + a.point[0]) / (1.0 + a.point[1]) - 1.0 - a.point[0] + a.point[1]);
  EXPECT_NEAR(drift(rep_ratio(), t).total[0].real(), want, 1e-15);
}

TEST(Drift, Linearity) {
  const LevyTriplet t = mixed_1d(Truncation::UnitClip);
  const Complex a(0.3, -1.2), b(-2.0, 0.5);
  const RepFn xi = rep_exp_affine({0.4, 1.0}), psi = rep_log_return();
  const RepFn combo(1, {a * xi.output(0) + b * psi.output(0)});
  const Complex want = a * drift(xi, t).total[0] + b * drift(psi, t).total[0];
  EXPECT_LT(rel(drift(combo, t).total[0], want), 1e-12);
}

TEST(Drift, TruncationInvariance) {
  const std::vector<RepFn> fs1 = {rep_log_return(), rep_exp_affine({0.5, 2.0}), rep_power(-0.7),
                                  rep_exp_utility(1.3), rep_memm_integrand({1.0, 2.0}, 0.8), identity(1)};
  const std::vector<RepFn> fs2 = {rep_ratio(), rep_margrabe({-0.5, 5.0}), rep_exp_log_ratio(), identity(2)};
  const Truncation all[] = {Truncation::Zero, Truncation::Identity, Truncation::UnitClip};
  for (Truncation h : all) {
    const LevyTriplet t1 = mixed_1d(h);
    const LevyTriplet t2 = mixed_2d(h);
    for (Truncation h2 : all) {
      const LevyTriplet u1 = retruncate(t1, uniform_truncation(1, h2));
      const LevyTriplet u2 = retruncate(t2, uniform_truncation(2, h2));
      for (const auto& f : fs1) EXPECT_LT(rel(drift(f, u1).total[0], drift(f, t1).total[0]), 1e-9);
      for (const auto& f : fs2)
        for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(f.output_dim()); ++k)
          EXPECT_LT(rel(drift(f, u2).total[k], drift(f, t2).total[k]), 1e-9);
    }
  }
}

TEST(Drift, MixedTruncationPerComponent) {
  const LevyTriplet t = mixed_2d(Truncation::Identity);
  const TruncationSpec mixed{Truncation::UnitClip, Truncation::Zero};
  const LevyTriplet u = retruncate(t, mixed);
  EXPECT_LT(rel(drift(rep_margrabe(-0.5), u).total[0], drift(rep_margrabe(-0.5), t).total[0]), 1e-9);
}

TEST(Drift, GirsanovZeroIsBitExact) {
  for (Truncation h : {Truncation::Zero, Truncation::UnitClip}) {
    const LevyTriplet t = mixed_2d(h);
    for (const auto& xi : {rep_margrabe({-0.5, 2.0}), rep_ratio(), rep_exp_log_ratio()}) {
      const DriftReport p = drift(xi, t);
      const DriftReport q = drift_Q(xi, rep_zero(2), t);
      EXPECT_EQ(p.total, q.total);
      EXPECT_EQ(p.jump_part, q.jump_part);
      EXPECT_EQ(*q.cross_term, CMatrix::Zero(1, 1));
    }
  }
}

TEST(Drift, MemmMatchesStandaloneIntegral) {
  const LevyTriplet t = merton_1d(Truncation::Identity);
  const double ls = 0.8;
  const Complex v(0.5, 1.0);
  const Complex got = drift_Q(rep_exp_affine(v), rep_exp_utility(ls), t).total[0];
  // v b + 1/2 c (v^2 - 2 ls v) + int ((e^{vx}-1) e^{-ls(e^x-1)} - v x) F(dx)
  const double lam = 0.5, m = -0.05, s = 0.1;
  const Complex jumps = oracle::lognormal_jump_integral(lam, m, s, [&](double x) {
    return (std::exp(v * x) - 1.0) * std::exp(-ls * std::expm1(x)) - v * x;
  });
  const Complex want = v * 0.03 + 0.5 * 0.04 * (v * v - 2.0 * ls * v) + jumps;
  EXPECT_LT(rel(got, want), 1e-11);
  EXPECT_LT(rel(got, memm_cumulant(v, ls, t)), 1e-14);
}

TEST(Drift, CrossTerm) {
  const LevyTriplet t = gbm_pair();
  const DriftReport r = drift_Q(rep_ratio(), rep_component(2, 0), t);
  // Dxi = [1, -1], Deta = [1, 0]: 2 (c11 - c21)
  EXPECT_NEAR((*r.cross_term)(0, 0).real(), 2.0 * (0.04 - 0.006), 1e-16);
  // the Q-drift of the ratio under the K-numeraire adds c11 - c21
  EXPECT_NEAR(r.total[0].real(), 0.034 + 0.04 - 0.006, 1e-15);
}

TEST(Drift, ZeroFunction) {
  const DriftReport r = drift_Q(rep_exp_affine(0.0), rep_exp_utility(1.0), merton_1d());
  EXPECT_EQ(r.total[0], Complex(0.0));
}

TEST(Drift, ConjugateSymmetry) {
  const LevyTriplet t1 = mixed_1d(Truncation::UnitClip);
  const LevyTriplet t2 = mixed_2d(Truncation::UnitClip);
  for (const Complex v : {Complex(0.5, 1.5), Complex(-0.5, 12.0), Complex(2.0, -0.3)}) {
    EXPECT_LT(rel(drift(rep_exp_affine(std::conj(v)), t1).total[0], std::conj(drift(rep_exp_affine(v), t1).total[0])), 1e-14);
    EXPECT_LT(rel(drift(rep_power(std::conj(v)), t1).total[0], std::conj(drift(rep_power(v), t1).total[0])), 1e-14);
    EXPECT_LT(rel(drift(rep_margrabe(std::conj(v)), t2).total[0], std::conj(drift(rep_margrabe(v), t2).total[0])), 1e-14);
  }
  EXPECT_EQ(drift(rep_ratio(), t2).total[0].imag(), 0.0);
}

TEST(Drift, DimensionMismatch) {
  EXPECT_THROW(drift(rep_ratio(), merton_1d()), UsageError);
}

TEST(Drift, NaNAtAtomIsError) {
  const LevyTriplet t(vec({0.0}), mat1(0.0), JumpMeasure::atoms(1, {{vec({-1.0}), 0.1}}),
                      uniform_truncation(1, Truncation::Identity));
  EXPECT_THROW(drift(rep_log_return(), t), ComputationError);
}

TEST(Expectation, Pii) {
  const LevyTriplet t(vec({0.3}), mat1(0.0), JumpMeasure::none(1), uniform_truncation(1, Truncation::Identity));
  EXPECT_EQ(expectation_pii(identity(1), t, 2.0)[0], Complex(0.6));
  EXPECT_EQ(expectation_pii(rep_log_return(), merton_1d(), 0.0)[0], Complex(0.0));
  EXPECT_THROW(expectation_pii(identity(1), t, -1.0), UsageError);
}

TEST(Expectation, StochExp) {
  EXPECT_NEAR(2.0 * expectation_stoch_exp(rep_ratio(), gbm_pair(), 1.0).real(), 2.0 * std::exp(0.034), 1e-15);
  EXPECT_EQ(expectation_stoch_exp(rep_exp_affine({1.0, 1.0}), merton_1d(), 0.0), Complex(1.0));
  const LevyTriplet t(vec({0.1}), mat1(0.09), JumpMeasure::none(1), uniform_truncation(1, Truncation::Identity));
  const Complex v(0.7, 0.4);
  EXPECT_LT(rel(expectation_stoch_exp(rep_exp_affine(v), t, 2.0), std::exp((0.1 * v + 0.045 * v * v) * 2.0)), 1e-15);
}

TEST(Discrete, Compensator) {
  const DiscreteModel m = trinomial(0.3, 0.4, 0.3);
  EXPECT_EQ(discrete_compensator(identity(1), m, 0.7)[0], Complex(0.0));
  EXPECT_NEAR(discrete_compensator(identity(1), m, 1.0)[0].real(), 0.3 * std::log(1.1) + 0.3 * std::log(0.9), 1e-17);
  EXPECT_NEAR(discrete_compensator(identity(1), m, 1.0)[0].real(), -3.015e-3, 5e-7);
  const Complex brute = oracle::enumerate_paths({0.3, 0.4, 0.3}, 3, [&](const std::vector<int>& idx) {
    double s = 0.0;
    for (int i : idx) s += kTri[i];
    return Complex(s);
  });
  EXPECT_NEAR(discrete_compensator(identity(1), m, 3.5)[0].real(), brute.real(), 1e-15);
}

TEST(Discrete, StochExpClosedForm) {
  const double pu = 0.3, pm = 0.4, pd = 0.3;
  const DiscreteModel m = trinomial(pu, pm, pd);
  for (double lambda : {0.0, 1.0, 2.5, -0.7}) {
    const double factor = pu * std::exp(-0.1 * lambda) + pm + pd * std::exp(0.1 * lambda);
    for (double T : {0.5, 1.0, 2.0, 3.9, 7.0}) {
      const Complex got = discrete_stoch_exp(rep_exp_utility(lambda), m, T);
      EXPECT_LT(rel(got, std::pow(factor, std::floor(T))), 1e-12);
    }
  }
  EXPECT_EQ(discrete_stoch_exp(rep_exp_utility(0.0), m, 5.0), Complex(1.0));
}

TEST(Discrete, QStochExpClosedForm) {
  for (auto [pu, pm, pd] : {std::tuple{0.3, 0.4, 0.3}, std::tuple{0.4, 0.4, 0.2}, std::tuple{0.25, 0.6, 0.15}}) {
    const DiscreteModel m = trinomial(pu, pm, pd);
    const double ls = std::log(pu / pd) / 0.2;
    const double r = std::sqrt(pu * pd);
    for (const Complex v : {Complex(0.0), Complex(0.5), Complex(1.0), Complex(1.0, 2.0), Complex(-3.0, 0.5)}) {
      const Complex f = ((std::pow(1.1, v) + std::pow(0.9, v)) * r + pm) / (2.0 * r + pm);
      for (double T : {1.0, 2.0, 4.5}) {
        const Complex got = discrete_Q_stoch_exp(rep_exp_affine(v), rep_exp_utility(ls), m, T);
        EXPECT_LT(rel(got, std::pow(f, std::floor(T))), 1e-12) << "v=" << v << " T=" << T;
      }
    }
    EXPECT_EQ(discrete_Q_stoch_exp(rep_exp_affine(0.0), rep_exp_utility(ls), m, 3.0), Complex(1.0));
  }
}

TEST(Discrete, QWithZeroDensity) {
  const DiscreteModel m = trinomial(0.3, 0.4, 0.3);
  const RepFn xi = rep_exp_affine({0.3, 0.2});
  EXPECT_EQ(discrete_Q_stoch_exp(xi, rep_zero(1), m, 3.0), discrete_stoch_exp(xi, m, 3.0));
}

TEST(Discrete, DegenerateNormalizer) {
  const DiscreteModel m({{vec({0.1}), 0.5}, {vec({-0.1}), 0.5}});
  const RepFn minus_one(1, {indicator(Predicate::abs_above(0.05), coord(0)) * -1.0});
  EXPECT_THROW(discrete_Q_stoch_exp(identity(1), minus_one, m, 1.0), ComputationError);
}

TEST(Discrete, BruteForceEnumeration) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-0.4, 0.4), w(0.1, 1.0);
  for (int trial = 0; trial < 6; ++trial) {
    const int k = 2 + trial % 3;  // support sizes 2..4
    std::vector<DiscreteModel::Point> pts;
    std::vector<double> p;
    double total = 0.0;
    for (int i = 0; i < k; ++i) {
      p.push_back(w(rng));
      total += p.back();
    }
    for (int i = 0; i < k; ++i) {
      p[static_cast<std::size_t>(i)] /= total;
      pts.push_back({vec({u(rng)}), p[static_cast<std::size_t>(i)]});
    }
    double sum = 0.0;
    for (const auto& pt : pts) sum += pt.p;
    pts.back().p += 1.0 - sum;
    p.back() = pts.back().p;
    const DiscreteModel m(pts);
    const RepFn xi = rep_exp_affine({0.8, -1.1});
    const RepFn eta = rep_exp_utility(1.7);
    Complex norm = 0.0;
    for (const auto& pt : pts) norm += pt.p * (1.0 + eval(eta, pt.x)[0]);
    for (int n = 0; n <= 4; ++n) {
      const Complex plain = oracle::enumerate_paths(p, n, [&](const std::vector<int>& idx) {
        Complex v = 1.0;
        for (int i : idx) v *= 1.0 + eval(xi, pts[static_cast<std::size_t>(i)].x)[0];
        return v;
      });
      const Complex q = oracle::enumerate_paths(p, n, [&](const std::vector<int>& idx) {
        Complex v = 1.0;
        for (int i : idx) {
          const RVector& x = pts[static_cast<std::size_t>(i)].x;
          v *= (1.0 + eval(eta, x)[0]) / norm * (1.0 + eval(xi, x)[0]);
        }
        return v;
      });
      EXPECT_LT(rel(discrete_stoch_exp(xi, m, n + 0.5), plain), 1e-12);
      EXPECT_LT(rel(discrete_Q_stoch_exp(xi, eta, m, n), q), 1e-12);
    }
  }
}
