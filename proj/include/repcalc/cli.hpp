#pragma once

// Command-line frontend. run_cli() is the whole program; tools/repcalc_cli.cpp
// only forwards argv, so tests can drive it in-process.
//
// Exit codes: 0 success, 1 computation diagnostic, 2 usage or parse error.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "repcalc/characteristics.hpp"
#include "repcalc/io.hpp"
#include "repcalc/mcoracle.hpp"
#include "repcalc/pricing.hpp"

namespace repcalc {

namespace cli {

inline constexpr int kOk = 0;
inline constexpr int kComputation = 1;
inline constexpr int kUsage = 2;

/// Axis of a complex grid: count points from start to stop inclusive.
struct Axis {
  double start = 0.0, stop = 0.0;
  std::size_t count = 1;

  std::vector<double> points() const {
    std::vector<double> p(count);
    for (std::size_t k = 0; k < count; ++k)
      p[k] = count == 1 ? start : start + (stop - start) * static_cast<double>(k) / static_cast<double>(count - 1);
    return p;
  }
};

inline Axis parse_axis(const std::string& text, const char* flag) {
  Axis a;
  char c1 = 0, c2 = 0;
  std::istringstream in(text);
  long long count = 0;
  if (!(in >> a.start >> c1 >> a.stop >> c2 >> count) || c1 != ',' || c2 != ',' || count < 1 || !(in >> std::ws).eof())
    throw UsageError(std::string(flag) + " expects start,stop,count with count >= 1, got '" + text + "'");
  a.count = static_cast<std::size_t>(count);
  return a;
}

inline std::vector<Complex> grid(const Axis& re, const Axis& im) {
  std::vector<Complex> g;
  for (double r : re.points())
    for (double i : im.points()) g.emplace_back(r, i);
  return g;
}

inline Json complex_json(Complex z) { return format_complex(z); }

inline Json cvector_json(const CVector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(complex_json(v[i]));
  return a;
}

inline Json report_json(const DriftReport& r) {
  Json j = {{"total", cvector_json(r.total)},
            {"linear_part", cvector_json(r.linear_part)},
            {"quadratic_part", cvector_json(r.quadratic_part)},
            {"jump_part", cvector_json(r.jump_part)},
            {"quadrature_error", r.quadrature_error}};
  if (r.cross_term) j["cross_term"] = cvector_json(*r.cross_term);
  return j;
}

inline Json estimate_json(const McEstimate& e, const SimConfig& cfg) {
  Json j = {{"mean", complex_json(e.mean)},   {"std_error", e.std_error},     {"std_error_re", e.std_error_re},
            {"std_error_im", e.std_error_im}, {"n_paths", e.n_paths},         {"n_effective", e.n_effective},
            {"seed", cfg.seed},               {"non_finite", e.non_finite},   {"kurtosis", e.kurtosis}};
  if (!e.warning.empty()) j["warning"] = e.warning;
  return j;
}

template <class M>
const M& expect_model(const Model& m, const char* what) {
  if (auto* p = std::get_if<M>(&m)) return *p;
  throw UsageError(std::string("this command needs a ") + what + " model");
}

inline Json parse_params(const std::string& text, const char* flag) {
  if (text.empty()) return Json::object();
  return parse_json_text(text, flag);
}

/// Options shared by all subcommands plus the per-command ones; filled by CLI11.
struct Options {
  std::string model, out, format, xi = "identity", xi_params, eta, eta_params, truncation;
  std::string re = "0,0,1", im = "0,0,1", v = "1", target = "cumulant", what = "stoch-exp";
  double tol = 0.0, beta = -0.5, u_max = 200.0, lo = -20.0, hi = 20.0, T = 1.0, lambda = 0.0;
  std::optional<double> lambda_star;
  std::uint64_t seed = 20181124;
  unsigned threads = 0;
  std::size_t paths = 100000;
  bool antithetic = false;
};

inline QuadratureConfig quad_config(const Options& o) {
  QuadratureConfig q;
  if (o.tol > 0.0) q.rel_tol = o.tol;
  return q;
}

inline SimConfig sim_config(const Options& o) {
  SimConfig s;
  s.n_paths = o.paths;
  s.seed = o.seed;
  s.antithetic = o.antithetic;
  s.threads = o.threads;
  if (s.threads == 0) {
    if (const char* env = std::getenv("REPCALC_THREADS")) {
      try {
        s.threads = static_cast<unsigned>(std::stoul(env));
      } catch (const std::exception&) {
        throw UsageError(std::string("REPCALC_THREADS must be a non-negative integer, got '") + env + "'");
      }
    }
  }
  return s;
}

struct Output {
  std::string text;
  int code = kOk;
};

inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

inline Output cmd_drift(const Options& o) {
  const Model m = load_model(o.model);
  LevyTriplet t = std::holds_alternative<MargrabeModel>(m) ? assemble_triplet(std::get<MargrabeModel>(m))
                                                           : expect_model<LevyTriplet>(m, "levy or margrabe");
  const QuadratureConfig q = quad_config(o);
  if (!o.truncation.empty()) t = retruncate(t, TruncationSpec(t.dim(), detail::truncation_of(Json(o.truncation), "--truncation")), q);
  const RepFn xi = make_rep(o.xi, parse_params(o.xi_params, "--params"), t.dim());
  if (o.eta.empty()) return {dump(report_json(drift(xi, t, q)))};
  const RepFn eta = make_rep(o.eta, parse_params(o.eta_params, "--eta-params"), t.dim());
  return {dump(report_json(drift_Q(xi, eta, t, q)))};
}

/// Grid of kappa values; failing points are flagged and turn the exit code to 1.
inline Output grid_table(const Options& o, const std::function<Complex(Complex)>& kappa, const char* column) {
  const auto pts = grid(parse_axis(o.re, "--re"), parse_axis(o.im, "--im"));
  const bool json = o.format == "json";
  Output res;
  Json rows = Json::array();
  std::string csv = std::string("re_v,im_v,re_") + column + ",im_" + column + ",status\n";
  for (const Complex v : pts) {
    try {
      const Complex k = kappa(v);
      if (json) rows.push_back({{"v", complex_json(v)}, {column, complex_json(k)}, {"status", "ok"}});
      csv += format_real(v.real()) + "," + format_real(v.imag()) + "," + format_real(k.real()) + "," +
             format_real(k.imag()) + ",ok\n";
    } catch (const ComputationError& e) {
      res.code = kComputation;
      if (json) rows.push_back({{"v", complex_json(v)}, {column, nullptr}, {"status", e.what()}});
      std::string msg = e.what();
      for (char& ch : msg)
        if (ch == ',' || ch == '\n') ch = ';';
      csv += format_real(v.real()) + "," + format_real(v.imag()) + ",nan,nan,error: " + msg + "\n";
    }
  }
  res.text = json ? dump(rows) : csv;
  return res;
}

inline Output cmd_cumulant(const Options& o) {
  const Model m = load_model(o.model);
  const QuadratureConfig q = quad_config(o);
  if (auto* mm = std::get_if<MargrabeModel>(&m))
    return grid_table(o, [&](Complex v) { return margrabe_kappa(v, *mm); }, "kappa");
  const LevyTriplet& t = expect_model<LevyTriplet>(m, "levy or margrabe");
  return grid_table(o, [&](Complex v) { return cumulant(v, t, q); }, "kappa");
}

inline Output cmd_price_margrabe(const Options& o) {
  const Model m = load_model(o.model);
  const MargrabeModel& mm = expect_model<MargrabeModel>(m, "margrabe");
  ContourConfig c;
  c.beta = o.beta;
  c.u_max = o.u_max;
  if (o.tol > 0.0) c.rel_tol = o.tol;
  const MargrabeResult r = margrabe_price(mm, c);
  return {dump({{"price", r.price},
                {"kappa0", complex_json(r.kappa0)},
                {"lambda2_Q1", r.lambda2_Q1},
                {"lambda1_Q2", r.lambda1_Q2},
                {"tail_mass", r.tail_mass},
                {"nodes", r.nodes},
                {"imag_residual", r.imag_residual},
                {"u_end", r.u_end}})};
}

inline UtilityOptimum optimum_for(const Model& m, const Options& o) {
  if (auto* d = std::get_if<DiscreteModel>(&m)) return optimize_exp_utility(*d, o.lo, o.hi);
  return optimize_exp_utility(expect_model<LevyTriplet>(m, "levy or discrete"), o.lo, o.hi, quad_config(o));
}

inline Output cmd_utility(const Options& o) {
  const UtilityOptimum u = optimum_for(load_model(o.model), o);
  return {dump({{"lambda_star", u.lambda_star}, {"value", u.value}, {"slope", u.slope}})};
}

inline Output cmd_memm(const Options& o) {
  const Model m = load_model(o.model);
  const LevyTriplet& t = expect_model<LevyTriplet>(m, "levy");
  const QuadratureConfig q = quad_config(o);
  const double ls = o.lambda_star ? *o.lambda_star : optimize_exp_utility(t, o.lo, o.hi, q).lambda_star;
  Output res = grid_table(o, [&](Complex v) { return memm_cumulant(v, ls, t, q); }, "kappa_q");
  if (o.format == "json") {
    Json j = {{"lambda_star", ls}, {"rows", Json::parse(res.text)}};
    res.text = dump(j);
  }
  return res;
}

inline Output cmd_mc_verify(const Options& o) {
  const Model m = load_model(o.model);
  const SimConfig s = sim_config(o);
  const QuadratureConfig q = quad_config(o);
  Complex analytic;
  McEstimate est;
  Json extra = Json::object();
  if (o.target == "margrabe") {
    const MargrabeModel& mm = expect_model<MargrabeModel>(m, "margrabe");
    analytic = margrabe_price(mm).price;
    est = mc_margrabe(mm, s);
  } else {
    const LevyTriplet& t = expect_model<LevyTriplet>(m, "levy");
    const Complex v = parse_complex(o.v);
    if (o.target == "cumulant") {
      analytic = std::exp(cumulant(v, t, q) * o.T);
      est = mc_stoch_exp(rep_exp_affine(v), t, o.T, s);
    } else if (o.target == "memm") {
      const double ls = o.lambda_star ? *o.lambda_star : optimize_exp_utility(t, o.lo, o.hi, q).lambda_star;
      extra["lambda_star"] = ls;
      analytic = std::exp(memm_cumulant(v, ls, t, q) * o.T);
      est = mc_reweighted(rep_exp_affine(v), rep_exp_utility(ls), t, o.T, s, q);
    } else if (o.target == "stoch-exp") {
      const RepFn xi = make_rep(o.xi, parse_params(o.xi_params, "--params"), t.dim());
      analytic = expectation_stoch_exp(xi, t, o.T, q);
      est = mc_stoch_exp(xi, t, o.T, s);
    } else {
      throw UsageError("--target must be cumulant, memm, margrabe or stoch-exp");
    }
  }
  const double z_re = est.std_error_re > 0.0 ? (est.mean.real() - analytic.real()) / est.std_error_re : 0.0;
  const double z_im = est.std_error_im > 0.0 ? (est.mean.imag() - analytic.imag()) / est.std_error_im : 0.0;
  Json j = {{"target", o.target}, {"analytic", complex_json(analytic)}, {"mc", estimate_json(est, s)},
            {"z_re", z_re},       {"z_im", z_im}};
  j.update(extra);
  return {dump(j)};
}

inline Output cmd_discrete(const Options& o) {
  const Model m = load_model(o.model);
  const DiscreteModel& d = expect_model<DiscreteModel>(m, "discrete");
  if (o.what == "optimize") {
    const UtilityOptimum u = optimize_exp_utility(d, o.lo, o.hi);
    return {dump({{"lambda_star", u.lambda_star}, {"value", u.value}, {"slope", u.slope}})};
  }
  Json j = {{"what", o.what}, {"T", o.T}};
  if (o.what == "utility") {
    j["lambda"] = o.lambda;
    j["value"] = complex_json(discrete_stoch_exp(rep_exp_utility(o.lambda), d, o.T));
    return {dump(j)};
  }
  const RepFn xi = make_rep(o.xi, parse_params(o.xi_params, "--params"), d.dim());
  if (o.what == "compensator") {
    j["value"] = cvector_json(discrete_compensator(xi, d, o.T));
  } else if (o.what == "stoch-exp") {
    j["value"] = complex_json(discrete_stoch_exp(xi, d, o.T));
  } else if (o.what == "q-stoch-exp") {
    if (o.eta.empty()) throw UsageError("q-stoch-exp needs --eta");
    const RepFn eta = make_rep(o.eta, parse_params(o.eta_params, "--eta-params"), d.dim());
    j["value"] = complex_json(discrete_Q_stoch_exp(xi, eta, d, o.T));
  } else {
    throw UsageError("--what must be compensator, stoch-exp, q-stoch-exp, utility or optimize");
  }
  return {dump(j)};
}

}  // namespace cli

/// Runs one command; writes results to `out` (or --out) and diagnostics to `err`.
inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  using namespace cli;
  Options o;
  CLI::App app{"repcalc: drifts, cumulants and prices from representing functions"};
  app.require_subcommand(1);

  auto common = [&](CLI::App* sub, bool grid_cmd) {
    sub->add_option("--model", o.model, "model file (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "write the result here instead of stdout");
    sub->add_option("--format", o.format, grid_cmd ? "csv (default) or json" : "json (only format)")
        ->check(CLI::IsMember(grid_cmd ? std::vector<std::string>{"json", "csv"} : std::vector<std::string>{"json"}));
    sub->add_option("--tol", o.tol, "relative tolerance for quadrature");
    sub->add_option("--seed", o.seed, "Monte Carlo seed");
    sub->add_option("--threads", o.threads, "worker cap (default: REPCALC_THREADS or all cores)");
  };
  auto rep_opts = [&](CLI::App* sub) {
    sub->add_option("--xi", o.xi, "catalog name of xi");
    sub->add_option("--params", o.xi_params, "JSON parameters of xi, e.g. {\"v\":\"0.5+1i\"}");
    sub->add_option("--eta", o.eta, "catalog name of the measure-change representation");
    sub->add_option("--eta-params", o.eta_params, "JSON parameters of eta");
  };
  auto grid_opts = [&](CLI::App* sub) {
    sub->add_option("--re", o.re, "real axis start,stop,count");
    sub->add_option("--im", o.im, "imaginary axis start,stop,count");
  };
  auto bracket_opts = [&](CLI::App* sub) {
    sub->add_option("--lo", o.lo, "lower end of the lambda bracket");
    sub->add_option("--hi", o.hi, "upper end of the lambda bracket");
  };

  CLI::App* drift_cmd = app.add_subcommand("drift", "drift report of xi o X (or its Q-drift with --eta)");
  common(drift_cmd, false);
  rep_opts(drift_cmd);
  drift_cmd->add_option("--truncation", o.truncation, "re-express the model relative to zero|identity|unit_clip");

  CLI::App* cum = app.add_subcommand("cumulant", "cumulant kappa(v) on a grid");
  common(cum, true);
  grid_opts(cum);

  CLI::App* price = app.add_subcommand("price-margrabe", "exchange option price by contour integration");
  common(price, false);
  price->add_option("--beta", o.beta, "contour abscissa (< 0)");
  price->add_option("--u-max", o.u_max, "first panel end");

  CLI::App* util = app.add_subcommand("utility", "optimal exponential-utility lambda*");
  common(util, false);
  bracket_opts(util);

  CLI::App* memm = app.add_subcommand("memm", "cumulant under the minimal entropy martingale measure");
  common(memm, true);
  grid_opts(memm);
  bracket_opts(memm);
  memm->add_option("--lambda-star", o.lambda_star, "skip the optimization and use this lambda*");

  CLI::App* mc = app.add_subcommand("mc-verify", "analytic value next to a Monte Carlo estimate");
  common(mc, false);
  rep_opts(mc);
  bracket_opts(mc);
  mc->add_option("--target", o.target, "cumulant | memm | margrabe | stoch-exp");
  mc->add_option("--v", o.v, "transform argument (a+bi)");
  mc->add_option("--T", o.T, "horizon");
  mc->add_option("--paths", o.paths, "number of paths");
  mc->add_option("--lambda-star", o.lambda_star, "lambda* for the memm target");
  mc->add_flag("--antithetic", o.antithetic, "antithetic normals");

  CLI::App* disc = app.add_subcommand("discrete", "discrete-time compensators and stochastic exponentials");
  common(disc, false);
  rep_opts(disc);
  bracket_opts(disc);
  disc->add_option("--what", o.what, "compensator | stoch-exp | q-stoch-exp | utility | optimize");
  disc->add_option("--T", o.T, "time; floor(T) periods");
  disc->add_option("--lambda", o.lambda, "risk aversion for --what utility");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    Output res;
    if (*drift_cmd) res = cmd_drift(o);
    else if (*cum) res = cmd_cumulant(o);
    else if (*price) res = cmd_price_margrabe(o);
    else if (*util) res = cmd_utility(o);
    else if (*memm) res = cmd_memm(o);
    else if (*mc) res = cmd_mc_verify(o);
    else res = cmd_discrete(o);
    if (o.out.empty()) {
      out << res.text;
    } else {
      std::ofstream f(o.out);
      if (!f) throw UsageError("cannot write '" + o.out + "'");
      f << res.text;
    }
    if (res.code == kComputation) err << "error: one or more grid points failed (see status column)\n";
    return res.code;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const ComputationError& e) {
    err << "computation error: " << e.what() << "\n";
    return kComputation;
  } catch (const std::exception& e) {
    err << "computation error: " << e.what() << "\n";
    return kComputation;
  }
}

}  // namespace repcalc
