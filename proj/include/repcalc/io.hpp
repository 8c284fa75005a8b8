#pragma once

// JSON model files and catalog lookup by name.
//
//   {"type":"levy","dim":d,"b":[...],"c":[[...]],"truncation":["unit_clip",...],
//    "jumps":[{"kind":"atoms","atoms":[{"x":[...],"intensity":...}]},
//             {"kind":"gaussian_push","lambda":...,"mean":[...],"cov":[[...]]},
//             {"kind":"mapped","map":"(fn ...)","base":[<jump components>]}]}
//   {"type":"discrete","support":[{"x":[...],"p":...}]}
//   {"type":"margrabe","diffusion":[[c11,c12],[c12,c22]],
//    "jumps":{"lambda":...,"mean":[m1,m2],"cov":[[...]]},
//    "defaults":[{"x":[x1,-1],"intensity":...}],"spots":[s1,s2],"maturity":T}

#include <fstream>
#include <sstream>
#include <string>
#include <variant>

#include <json.hpp>

#include "repcalc/calculus.hpp"
#include "repcalc/models.hpp"
#include "repcalc/pricing.hpp"
#include "repcalc/repfn_text.hpp"

namespace repcalc {

using Json = nlohmann::json;

using Model = std::variant<LevyTriplet, DiscreteModel, MargrabeModel>;

namespace detail {

[[noreturn]] inline void schema_error(const std::string& where, const std::string& msg) {
  throw UsageError("model " + where + ": " + msg);
}

inline const Json& field(const Json& j, const char* key, const std::string& where) {
  if (!j.is_object()) schema_error(where, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) schema_error(where, std::string("missing field '") + key + "'");
  return *it;
}

inline double number(const Json& j, const std::string& where) {
  if (!j.is_number()) schema_error(where, "expected a number");
  return j.get<double>();
}

inline RVector vector_of(const Json& j, const std::string& where) {
  if (!j.is_array()) schema_error(where, "expected an array of numbers");
  RVector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) v[static_cast<Eigen::Index>(k)] = number(j[k], where + "[" + std::to_string(k) + "]");
  return v;
}

inline RMatrix matrix_of(const Json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) schema_error(where, "expected a non-empty array of rows");
  const std::size_t rows = j.size();
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  RMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    const RVector row = vector_of(j[r], where + "[" + std::to_string(r) + "]");
    if (static_cast<std::size_t>(row.size()) != cols) schema_error(where, "ragged matrix");
    m.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return m;
}

inline Json to_json(const RVector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline Json to_json(const RMatrix& m) {
  Json a = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) a.push_back(to_json(RVector(m.row(r).transpose())));
  return a;
}

inline Truncation truncation_of(const Json& j, const std::string& where) {
  if (!j.is_string()) schema_error(where, "expected \"zero\", \"identity\" or \"unit_clip\"");
  const auto s = j.get<std::string>();
  if (s == "zero") return Truncation::Zero;
  if (s == "identity") return Truncation::Identity;
  if (s == "unit_clip") return Truncation::UnitClip;
  schema_error(where, "unknown truncation '" + s + "'");
}

inline const char* truncation_name(Truncation t) {
  switch (t) {
    case Truncation::Zero: return "zero";
    case Truncation::Identity: return "identity";
    case Truncation::UnitClip: return "unit_clip";
  }
  return "?";
}

inline std::vector<JumpMeasure::Atom> atoms_of(const Json& j, const std::string& where) {
  if (!j.is_array()) schema_error(where, "expected an array of atoms");
  std::vector<JumpMeasure::Atom> out;
  for (std::size_t k = 0; k < j.size(); ++k) {
    const std::string w = where + "[" + std::to_string(k) + "]";
    out.push_back({vector_of(field(j[k], "x", w), w + ".x"), number(field(j[k], "intensity", w), w + ".intensity")});
  }
  return out;
}

inline Json atoms_json(const std::vector<JumpMeasure::Atom>& atoms) {
  Json a = Json::array();
  for (const auto& at : atoms) a.push_back({{"x", to_json(at.point)}, {"intensity", at.intensity}});
  return a;
}

inline JumpMeasure jumps_of(const Json& j, std::size_t dim, const std::string& where) {
  if (!j.is_array()) schema_error(where, "expected an array of jump components");
  std::vector<JumpMeasure> parts{JumpMeasure::none(dim)};
  for (std::size_t k = 0; k < j.size(); ++k) {
    const std::string w = where + "[" + std::to_string(k) + "]";
    const Json& kind = field(j[k], "kind", w);
    const std::string s = kind.is_string() ? kind.get<std::string>() : "";
    if (s == "atoms") {
      parts.push_back(JumpMeasure::atoms(dim, atoms_of(field(j[k], "atoms", w), w + ".atoms")));
    } else if (s == "gaussian_push") {
      RVector mean = vector_of(field(j[k], "mean", w), w + ".mean");
      if (static_cast<std::size_t>(mean.size()) != dim) schema_error(w + ".mean", "wrong dimension");
      parts.push_back(JumpMeasure::gaussian_push(number(field(j[k], "lambda", w), w + ".lambda"), std::move(mean),
                                                 matrix_of(field(j[k], "cov", w), w + ".cov")));
    } else if (s == "mapped") {
      const Json& m = field(j[k], "map", w);
      if (!m.is_string()) schema_error(w + ".map", "expected an expression string");
      RepFn map = parse_repfn(m.get<std::string>());
      if (map.output_dim() != dim) schema_error(w + ".map", "output dimension does not match the model");
      parts.push_back(JumpMeasure::mapped(jumps_of(field(j[k], "base", w), map.input_dim(), w + ".base"), map));
    } else {
      schema_error(w + ".kind", "expected \"atoms\", \"gaussian_push\" or \"mapped\"");
    }
  }
  return JumpMeasure::sum(parts);
}

inline Json jumps_json(const JumpMeasure& F) {
  Json a = Json::array();
  for (const auto& c : F.components()) {
    if (auto* at = std::get_if<JumpMeasure::FiniteAtoms>(&c)) {
      a.push_back({{"kind", "atoms"}, {"atoms", atoms_json(at->atoms)}});
    } else if (auto* g = std::get_if<JumpMeasure::GaussianPush>(&c)) {
      a.push_back({{"kind", "gaussian_push"}, {"lambda", g->intensity}, {"mean", to_json(g->mean)}, {"cov", to_json(g->cov)}});
    } else {
      const auto& m = std::get<JumpMeasure::Mapped>(c);
      a.push_back({{"kind", "mapped"}, {"map", to_string(*m.map)}, {"base", jumps_json(*m.base)}});
    }
  }
  return a;
}

}  // namespace detail

inline LevyTriplet levy_from_json(const Json& j) {
  using namespace detail;
  const RVector b = vector_of(field(j, "b", "levy"), "b");
  const auto d = static_cast<std::size_t>(b.size());
  if (j.contains("dim") && (!j["dim"].is_number_integer() || j["dim"].get<long long>() != static_cast<long long>(d)))
    schema_error("dim", "does not match the length of b");
  const RMatrix c = j.contains("c") ? matrix_of(j["c"], "c") : RMatrix::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  TruncationSpec h(d, Truncation::Identity);
  if (j.contains("truncation")) {
    const Json& t = j["truncation"];
    if (t.is_string()) {
      h.assign(d, truncation_of(t, "truncation"));
    } else if (t.is_array() && t.size() == d) {
      for (std::size_t i = 0; i < d; ++i) h[i] = truncation_of(t[i], "truncation[" + std::to_string(i) + "]");
    } else {
      schema_error("truncation", "expected a name or one name per dimension");
    }
  }
  const JumpMeasure F = j.contains("jumps") ? jumps_of(j["jumps"], d, "jumps") : JumpMeasure::none(d);
  return LevyTriplet(b, c, F, h);
}

inline Json to_json(const LevyTriplet& t) {
  Json h = Json::array();
  for (auto x : t.h()) h.push_back(detail::truncation_name(x));
  return {{"type", "levy"}, {"dim", t.dim()}, {"b", detail::to_json(t.b())}, {"c", detail::to_json(t.c())},
          {"truncation", h}, {"jumps", detail::jumps_json(t.F())}};
}

inline DiscreteModel discrete_from_json(const Json& j) {
  using namespace detail;
  const Json& s = field(j, "support", "discrete");
  if (!s.is_array()) schema_error("support", "expected an array");
  std::vector<DiscreteModel::Point> pts;
  for (std::size_t k = 0; k < s.size(); ++k) {
    const std::string w = "support[" + std::to_string(k) + "]";
    pts.push_back({vector_of(field(s[k], "x", w), w + ".x"), number(field(s[k], "p", w), w + ".p")});
  }
  return DiscreteModel(std::move(pts));
}

inline Json to_json(const DiscreteModel& m) {
  Json s = Json::array();
  for (const auto& p : m.support()) s.push_back({{"x", detail::to_json(p.x)}, {"p", p.p}});
  return {{"type", "discrete"}, {"support", s}};
}

inline MargrabeModel margrabe_from_json(const Json& j) {
  using namespace detail;
  MargrabeModel mm;
  const RMatrix c = matrix_of(field(j, "diffusion", "margrabe"), "diffusion");
  if (c.rows() != 2 || c.cols() != 2) schema_error("diffusion", "expected a 2x2 matrix");
  if (c(0, 1) != c(1, 0)) schema_error("diffusion", "matrix must be symmetric");
  mm.c11 = c(0, 0);
  mm.c12 = c(0, 1);
  mm.c22 = c(1, 1);
  if (j.contains("jumps")) {
    const Json& g = j["jumps"];
    mm.jump_intensity = number(field(g, "lambda", "jumps"), "jumps.lambda");
    mm.jump_mean = vector_of(field(g, "mean", "jumps"), "jumps.mean");
    mm.jump_cov = matrix_of(field(g, "cov", "jumps"), "jumps.cov");
  }
  if (j.contains("defaults")) mm.defaults = atoms_of(j["defaults"], "defaults");
  const RVector spots = vector_of(field(j, "spots", "margrabe"), "spots");
  if (spots.size() != 2) schema_error("spots", "expected two spot values");
  mm.s1 = spots[0];
  mm.s2 = spots[1];
  mm.maturity = number(field(j, "maturity", "margrabe"), "maturity");
  mm.validate();
  // validates the covariance and atoms as a jump measure
  (void)assemble_triplet(mm);
  return mm;
}

inline Json to_json(const MargrabeModel& mm) {
  return {{"type", "margrabe"},
          {"diffusion", detail::to_json(mm.diffusion())},
          {"jumps", {{"lambda", mm.jump_intensity}, {"mean", detail::to_json(mm.jump_mean)}, {"cov", detail::to_json(mm.jump_cov)}}},
          {"defaults", detail::atoms_json(mm.defaults)},
          {"spots", {mm.s1, mm.s2}},
          {"maturity", mm.maturity}};
}

inline Model model_from_json(const Json& j) {
  const Json& type = detail::field(j, "type", "file");
  const std::string t = type.is_string() ? type.get<std::string>() : "";
  if (t == "levy") return levy_from_json(j);
  if (t == "discrete") return discrete_from_json(j);
  if (t == "margrabe") return margrabe_from_json(j);
  detail::schema_error("type", "expected \"levy\", \"discrete\" or \"margrabe\"");
}

inline Json to_json(const Model& m) {
  return std::visit([](const auto& x) { return to_json(x); }, m);
}

inline Json parse_json_text(const std::string& text, const std::string& source) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw UsageError(source + ": JSON parse error at byte " + std::to_string(e.byte) + ": " + e.what());
  }
}

inline Model load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open model file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return model_from_json(parse_json_text(ss.str(), path));
}

// ---------------------------------------------------------------------------
// Catalog lookup

namespace detail {

inline Complex complex_param(const Json& p, const char* key) {
  auto it = p.find(key);
  if (it == p.end()) throw UsageError(std::string("missing parameter '") + key + "'");
  if (it->is_number()) return it->get<double>();
  if (it->is_string()) return parse_complex(it->get<std::string>());
  throw UsageError(std::string("parameter '") + key + "' must be a number or an \"a+bi\" string");
}

inline double real_param(const Json& p, const char* key) {
  const Complex z = complex_param(p, key);
  if (z.imag() != 0.0) throw UsageError(std::string("parameter '") + key + "' must be real");
  return z.real();
}

inline std::size_t index_param(const Json& p, const char* key, std::size_t fallback) {
  auto it = p.find(key);
  if (it == p.end()) return fallback;
  if (!it->is_number_integer() || it->get<long long>() < 0)
    throw UsageError(std::string("parameter '") + key + "' must be a non-negative integer");
  return it->get<std::size_t>();
}

}  // namespace detail

/// Builds a catalog representation; `dim` fills in the dimension of identity/component.
/// The name "expr" takes {"text": "(fn ...)"}.
inline RepFn make_rep(const std::string& name, const Json& params, std::size_t dim) {
  using namespace detail;
  const Json p = params.is_null() ? Json::object() : params;
  if (!p.is_object()) throw UsageError("parameters must be a JSON object");
  if (name == "identity") return identity(index_param(p, "dim", dim));
  if (name == "component") return rep_component(index_param(p, "dim", dim), index_param(p, "i", 0));
  if (name == "ratio") return rep_ratio();
  if (name == "log_return") return rep_log_return();
  if (name == "exp_affine") return rep_exp_affine(complex_param(p, "v"));
  if (name == "power") return rep_power(complex_param(p, "v"));
  if (name == "exp_utility") return rep_exp_utility(real_param(p, "lambda"));
  if (name == "exp_utility_sensitivity") return rep_exp_utility_sensitivity(real_param(p, "lambda"));
  if (name == "memm_integrand") return rep_memm_integrand(complex_param(p, "v"), real_param(p, "lambda_star"));
  if (name == "exp_log_ratio") return rep_exp_log_ratio();
  if (name == "power_ratio") return rep_power_ratio(complex_param(p, "v"));
  if (name == "margrabe") return rep_margrabe(complex_param(p, "v"));
  if (name == "expr") {
    auto it = p.find("text");
    if (it == p.end() || !it->is_string()) throw UsageError("expr needs {\"text\": \"(fn ...)\"}");
    return parse_repfn(it->get<std::string>());
  }
  throw UsageError("unknown representation '" + name + "'");
}

}  // namespace repcalc
