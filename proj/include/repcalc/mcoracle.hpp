#pragma once

// Monte Carlo oracle: exact terminal sampling of finite-activity Levy increments,
// pathwise stochastic exponentials and measure-change weights.
//
// Every path owns a counter-based random stream derived from (seed, path index),
// and per-path values are reduced by pairwise summation in index order, so the
// estimates do not depend on the number of worker threads.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <random>
#include <thread>
#include <vector>

#include "repcalc/drift.hpp"
#include "repcalc/pricing.hpp"

namespace repcalc {

struct SimConfig {
  std::size_t n_paths = 100000;
  std::uint64_t seed = 20181124;
  std::size_t batch = 4096;  // work unit handed to a thread; does not affect results
  bool antithetic = false;   // paths 2k and 2k+1 share draws with normals negated
  unsigned threads = 0;      // 0: hardware concurrency
};

struct McEstimate {
  Complex mean;
  double std_error = 0.0;  // sqrt(se_re^2 + se_im^2)
  double std_error_re = 0.0;
  double std_error_im = 0.0;
  std::size_t n_paths = 0;
  std::size_t n_effective = 0;  // independent samples (pairs when antithetic)
  std::size_t non_finite = 0;
  double kurtosis = 0.0;  // of the real parts
  std::string warning;
};

/// SplitMix64 as a standard uniform random bit generator.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;
  explicit SplitMix64(std::uint64_t state) : state_(state) {}
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

/// Random source of one path. Normal draws are multiplied by `sign`.
class PathRng {
 public:
  PathRng(std::uint64_t seed, std::uint64_t stream, double sign = 1.0)
      : gen_(SplitMix64(seed ^ 0x6a09e667f3bcc909ULL)() ^ (stream * 0xd1b54a32d192ed03ULL)), sign_(sign) {}

  double normal() { return sign_ * normal_(gen_); }
  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(gen_); }
  std::uint64_t poisson(double mean) {
    if (mean <= 0.0) return 0;
    return std::poisson_distribution<std::uint64_t>(mean)(gen_);
  }
  SplitMix64& engine() { return gen_; }

 private:
  SplitMix64 gen_;
  std::normal_distribution<double> normal_;
  double sign_;
};

namespace detail {

/// Draws jump sizes from F / F(R^d).
class JumpSampler {
 public:
  explicit JumpSampler(const JumpMeasure& F) : dim_(F.dim()) {
    for (const auto& c : F.components()) {
      if (auto* a = std::get_if<JumpMeasure::FiniteAtoms>(&c)) {
        for (const auto& at : a->atoms) add(at.intensity, Entry{&at, nullptr, nullptr, nullptr});
      } else if (auto* g = std::get_if<JumpMeasure::GaussianPush>(&c)) {
        add(g->intensity, Entry{nullptr, g, nullptr, nullptr});
      } else {
        const auto& m = std::get<JumpMeasure::Mapped>(c);
        subs_.push_back(std::make_shared<JumpSampler>(*m.base));
        add(m.base->total_mass(), Entry{nullptr, nullptr, subs_.back().get(), m.map.get()});
      }
    }
  }

  double total() const { return cum_.empty() ? 0.0 : cum_.back(); }

  RVector draw(PathRng& rng) const {
    const double u = rng.uniform() * total();
    auto it = std::upper_bound(cum_.begin(), cum_.end(), u);
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(it - cum_.begin()), entries_.size() - 1);
    const Entry& e = entries_[k];
    if (e.atom) return e.atom->point;
    if (e.gauss) {
      RVector z(e.gauss->mean.size());
      for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
      RVector x = e.gauss->mean + e.gauss->chol * z;
      for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = std::expm1(x[i]);
      return x;
    }
    const RVector base = e.sub->draw(rng);
    const CVector y = eval(*e.map, base);
    RVector out(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) out[i] = y[i].imag() == 0.0 ? y[i].real() : kNaN;
    return out;
  }

 private:
  struct Entry {
    const JumpMeasure::Atom* atom;
    const JumpMeasure::GaussianPush* gauss;
    const JumpSampler* sub;
    const RepFn* map;
  };
  void add(double mass, Entry e) {
    cum_.push_back((cum_.empty() ? 0.0 : cum_.back()) + mass);
    entries_.push_back(e);
  }

  std::size_t dim_;
  std::vector<double> cum_;
  std::vector<Entry> entries_;
  std::vector<std::shared_ptr<JumpSampler>> subs_;
};

inline Complex pairwise_sum(const Complex* p, std::size_t n) {
  if (n <= 8) {
    Complex s = 0.0;
    for (std::size_t k = 0; k < n; ++k) s += p[k];
    return s;
  }
  const std::size_t h = n / 2;
  return pairwise_sum(p, h) + pairwise_sum(p + h, n - h);
}

inline double pairwise_sum(const double* p, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) s += p[k];
    return s;
  }
  const std::size_t h = n / 2;
  return pairwise_sum(p, h) + pairwise_sum(p + h, n - h);
}

inline unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

inline McEstimate summarize(const std::vector<Complex>& values, const SimConfig& cfg) {
  McEstimate est;
  est.n_paths = values.size();
  std::vector<Complex> samples;
  samples.reserve(values.size());
  const std::size_t step = cfg.antithetic ? 2 : 1;
  for (std::size_t k = 0; k + step <= values.size(); k += step) {
    const Complex s = cfg.antithetic ? 0.5 * (values[k] + values[k + 1]) : values[k];
    if (std::isfinite(s.real()) && std::isfinite(s.imag())) samples.push_back(s);
    else ++est.non_finite;
  }
  const double total = static_cast<double>(values.size() / step);
  if (static_cast<double>(est.non_finite) > 1e-3 * total)
    throw ComputationError(std::to_string(est.non_finite) + " of " + std::to_string(values.size() / step) +
                           " Monte Carlo samples are not finite");
  const std::size_t n = samples.size();
  if (n < 2) throw ComputationError("fewer than two finite Monte Carlo samples");
  est.n_effective = n;
  est.mean = pairwise_sum(samples.data(), n) / static_cast<double>(n);

  std::vector<double> d2r(n), d2i(n), d4r(n);
  for (std::size_t k = 0; k < n; ++k) {
    const Complex d = samples[k] - est.mean;
    d2r[k] = d.real() * d.real();
    d2i[k] = d.imag() * d.imag();
    d4r[k] = d2r[k] * d2r[k];
  }
  const double nn = static_cast<double>(n);
  const double var_r = pairwise_sum(d2r.data(), n) / (nn - 1.0);
  const double var_i = pairwise_sum(d2i.data(), n) / (nn - 1.0);
  est.std_error_re = std::sqrt(var_r / nn);
  est.std_error_im = std::sqrt(var_i / nn);
  est.std_error = std::hypot(est.std_error_re, est.std_error_im);
  const double m2 = pairwise_sum(d2r.data(), n) / nn;
  est.kurtosis = m2 > 0.0 ? pairwise_sum(d4r.data(), n) / nn / (m2 * m2) : 0.0;
  if (est.kurtosis > 100.0)
    est.warning = "sample kurtosis " + format_real(est.kurtosis) + " exceeds 100; standard error may be unreliable";
  return est;
}

/// Evaluates path_value(index, rng) for every path on a thread pool.
template <class F>
McEstimate run_paths(const SimConfig& cfg, F&& path_value) {
  if (cfg.n_paths < 2) throw UsageError("n_paths must be >= 2");
  if (cfg.antithetic && cfg.n_paths % 2 != 0) throw UsageError("antithetic sampling needs an even n_paths");
  if (cfg.batch == 0) throw UsageError("batch size must be >= 1");
  std::vector<Complex> values(cfg.n_paths);
  const std::size_t n_batches = (cfg.n_paths + cfg.batch - 1) / cfg.batch;
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    try {
      for (std::size_t b; (b = next.fetch_add(1)) < n_batches;) {
        const std::size_t end = std::min(cfg.n_paths, (b + 1) * cfg.batch);
        for (std::size_t i = b * cfg.batch; i < end; ++i) {
          const std::uint64_t stream = cfg.antithetic ? i / 2 : i;
          PathRng rng(cfg.seed, stream, (cfg.antithetic && i % 2 == 1) ? -1.0 : 1.0);
          values[i] = path_value(i, rng);
        }
      }
    } catch (...) {
      std::lock_guard lock(failure_mu);
      if (!failure) failure = std::current_exception();
      next = n_batches;
    }
  };
  const unsigned n_threads = std::min<unsigned>(resolve_threads(cfg.threads), static_cast<unsigned>(n_batches));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (unsigned k = 0; k < n_threads; ++k) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return summarize(values, cfg);
}

}  // namespace detail

/// Terminal draw of a Levy path: Gaussian part G = chol(c) sqrt(T) Z and the jumps.
struct LevyPath {
  RVector gaussian;
  std::vector<RVector> jumps;
  RVector increment;  // X_T - X_0
};

/// Samples X over [0, T] for a finite-activity triplet. Reuse one sampler per model.
class LevySimulator {
 public:
  explicit LevySimulator(const LevyTriplet& t, const QuadratureConfig& cfg = {})
      : t_(t), jumps_(t_.F()) {
    // int h dF = int x dF - int (x - h) dF, both from closed forms
    compensator_ = truncation_gap(t.F(), uniform_truncation(t.dim(), Truncation::Zero), cfg) -
                   truncation_gap(t.F(), t.h(), cfg);
    // symmetric square root: same law as a Cholesky factor, and fine for singular c
    Eigen::SelfAdjointEigenSolver<RMatrix> es(t.c());
    root_ = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
  }

  LevySimulator(const LevySimulator&) = delete;  // the sampler points into t_
  LevySimulator& operator=(const LevySimulator&) = delete;

  const LevyTriplet& triplet() const { return t_; }
  const RVector& jump_compensator() const { return compensator_; }

  LevyPath sample(double T, PathRng& rng) const {
    const auto d = static_cast<Eigen::Index>(t_.dim());
    LevyPath p;
    RVector z(d);
    for (Eigen::Index i = 0; i < d; ++i) z[i] = rng.normal();
    p.gaussian = std::sqrt(T) * (root_ * z);
    const std::uint64_t n = rng.poisson(jumps_.total() * T);
    p.jumps.reserve(n);
    p.increment = t_.b() * T + p.gaussian - compensator_ * T;
    for (std::uint64_t k = 0; k < n; ++k) {
      p.jumps.push_back(jumps_.draw(rng));
      p.increment += p.jumps.back();
    }
    return p;
  }

 private:
  LevyTriplet t_;
  detail::JumpSampler jumps_;
  RVector compensator_;
  RMatrix root_;
};

/// X_T - X_0 = b T + chol(c) sqrt(T) Z + sum_j J_j - T int h dF.
inline RVector sample_increment(const LevyTriplet& t, double T, PathRng& rng) {
  return LevySimulator(t).sample(T, rng).increment;
}

/// Pathwise E(xi o X)_T for scalar xi, given the sampled path:
///   exp(Dxi (b - int h dF) T + 1/2 tr(D2xi c) T + Dxi G - 1/2 Dxi c Dxi^T T) prod_j (1 + xi(J_j)).
class StochExpEvaluator {
 public:
  StochExpEvaluator(const RepFn& xi, const LevySimulator& sim) : xi_(xi) {
    if (xi.output_dim() != 1) throw UsageError("stochastic exponential needs a scalar representation");
    if (xi.input_dim() != sim.triplet().dim()) throw UsageError("representation and model dimensions differ");
    const Jet2 jet = jet_at_zero(xi);
    grad_ = jet.jacobian.row(0).transpose();
    const LevyTriplet& t = sim.triplet();
    const CVector drift_vec = (t.b() - sim.jump_compensator()).cast<Complex>();
    const CMatrix c = t.c().cast<Complex>();
    Complex lin = 0.0;
    for (Eigen::Index i = 0; i < grad_.size(); ++i) lin += grad_[i] * drift_vec[i];
    Complex quad = 0.0, var = 0.0;
    for (Eigen::Index i = 0; i < grad_.size(); ++i)
      for (Eigen::Index j = 0; j < grad_.size(); ++j) {
        quad += jet.hessian[0](i, j) * c(i, j);
        var += grad_[i] * c(i, j) * grad_[j];
      }
    rate_ = lin + 0.5 * quad - 0.5 * var;
  }

  Complex operator()(const LevyPath& p, double T) const {
    Complex g = 0.0;
    for (Eigen::Index i = 0; i < grad_.size(); ++i) g += grad_[i] * p.gaussian[i];
    Complex v = std::exp(rate_ * T + g);
    for (const auto& j : p.jumps) {
      if (!j.allFinite()) return kComplexNaN;
      v *= 1.0 + eval(xi_, j)[0];
      if (v == Complex(0.0)) break;  // absorbed
    }
    return v;
  }

 private:
  const RepFn& xi_;
  CVector grad_;
  Complex rate_;
};

/// Estimate of E[E(xi o X)_T].
inline McEstimate mc_stoch_exp(const RepFn& xi, const LevyTriplet& t, double T, const SimConfig& cfg = {}) {
  if (!(T >= 0.0)) throw UsageError("maturity must be >= 0");
  const LevySimulator sim(t);
  const StochExpEvaluator se(xi, sim);
  return detail::run_paths(cfg, [&](std::size_t, PathRng& rng) { return se(sim.sample(T, rng), T); });
}

/// Estimate of E[f(X_T - X_0)] for a function of the increment (need not vanish at 0).
inline McEstimate mc_increment(const std::function<Complex(const RVector&)>& f, const LevyTriplet& t, double T,
                               const SimConfig& cfg = {}) {
  const LevySimulator sim(t);
  return detail::run_paths(cfg, [&](std::size_t, PathRng& rng) { return f(sim.sample(T, rng).increment); });
}

/// Estimate of E[(S1_T - S2_T)^+] with S_k = S_k(0) E(X_k).
inline McEstimate mc_margrabe(const MargrabeModel& mm, const SimConfig& cfg = {}) {
  const LevyTriplet t = assemble_triplet(mm);
  const LevySimulator sim(t);
  const RepFn x1 = rep_component(2, 0), x2 = rep_component(2, 1);
  const StochExpEvaluator e1(x1, sim), e2(x2, sim);
  const double T = mm.maturity;
  return detail::run_paths(cfg, [&](std::size_t, PathRng& rng) {
    const LevyPath p = sim.sample(T, rng);
    const double a = mm.s1 * e1(p, T).real();
    const double b = mm.s2 * e2(p, T).real();
    return Complex(std::max(a - b, 0.0));
  });
}

/// Estimate of E_Q[E(xi o X)_T] with weights E(eta o X)_T / exp(b^{eta o X} T).
inline McEstimate mc_reweighted(const RepFn& xi, const RepFn& eta, const LevyTriplet& t, double T,
                                const SimConfig& cfg = {}, const QuadratureConfig& quad = {}) {
  if (!(T >= 0.0)) throw UsageError("maturity must be >= 0");
  const Complex b_eta = drift(eta, t, quad).total[0];
  if (b_eta.imag() != 0.0 || !std::isfinite(b_eta.real()))
    throw ComputationError("measure-change drift must be real and finite, got " + format_complex(b_eta));
  const double norm = std::exp(b_eta.real() * T);
  const LevySimulator sim(t);
  const StochExpEvaluator payoff(xi, sim), density(eta, sim);
  return detail::run_paths(cfg, [&](std::size_t i, PathRng& rng) {
    const LevyPath p = sim.sample(T, rng);
    const Complex w = density(p, T);
    if (w.imag() != 0.0 || w.real() < 0.0)
      throw ComputationError("negative or complex weight " + format_complex(w) + " on path " + std::to_string(i) +
                             "; the density representation must stay >= -1");
    return w.real() / norm * payoff(p, T);
  });
}

// ---------------------------------------------------------------------------
// Discrete time

namespace detail {

inline std::discrete_distribution<std::size_t> support_law(const DiscreteModel& m) {
  std::vector<double> p;
  for (const auto& pt : m.support()) p.push_back(pt.p);
  return std::discrete_distribution<std::size_t>(p.begin(), p.end());
}

}  // namespace detail

/// Estimate of E[prod_{k <= floor(T)} (1 + xi(Delta X_k))].
inline McEstimate mc_discrete_stoch_exp(const RepFn& xi, const DiscreteModel& m, double T, const SimConfig& cfg = {}) {
  const long n = detail::periods(T);
  std::vector<Complex> factor;
  for (const auto& pt : m.support()) factor.push_back(1.0 + detail::eval_on_support(xi, pt.x)[0]);
  const auto law = detail::support_law(m);
  return detail::run_paths(cfg, [&](std::size_t, PathRng& rng) {
    auto pick = law;
    Complex v = 1.0;
    for (long k = 0; k < n; ++k) v *= factor[pick(rng.engine())];
    return v;
  });
}

/// Estimate of E_Q[prod (1 + xi)] with weight prod (1 + eta) / E[1 + eta]^floor(T).
inline McEstimate mc_discrete_reweighted(const RepFn& xi, const RepFn& eta, const DiscreteModel& m, double T,
                                         const SimConfig& cfg = {}) {
  const long n = detail::periods(T);
  std::vector<Complex> fx, fe;
  double norm = 0.0;
  for (const auto& pt : m.support()) {
    fx.push_back(1.0 + detail::eval_on_support(xi, pt.x)[0]);
    const Complex e = 1.0 + detail::eval_on_support(eta, pt.x)[0];
    if (e.imag() != 0.0 || e.real() < 0.0)
      throw ComputationError("negative or complex weight at support point " + point_string(pt.x));
    fe.push_back(e);
    norm += pt.p * e.real();
  }
  if (!(norm > 0.0)) throw ComputationError("degenerate measure change: E[1 + eta] = " + format_real(norm));
  const auto law = detail::support_law(m);
  return detail::run_paths(cfg, [&](std::size_t, PathRng& rng) {
    auto pick = law;
    Complex v = 1.0;
    for (long k = 0; k < n; ++k) {
      const std::size_t j = pick(rng.engine());
      v *= fe[j] / norm * fx[j];
    }
    return v;
  });
}

}  // namespace repcalc
