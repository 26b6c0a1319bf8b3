#pragma once

// JSON encoding of models, measures and solver records (schema
// "thermoflat/1"). Reals are written in shortest round-trip form;
// infinities as the strings "+inf" and "-inf".

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "thermoflat/linearizer.hpp"
#include "thermoflat/transport.hpp"

namespace thermoflat::io {

using Json = nlohmann::ordered_json;

inline constexpr const char* kSchema = "thermoflat/1";

/// Raised for malformed or schema-violating documents; reported like a model error.
class ParseError : public ModelError {
 public:
  using ModelError::ModelError;
};

// ---------------------------------------------------------------------------
// scalars

inline Json real(double v) {
  if (v == std::numeric_limits<double>::infinity()) return "+inf";
  if (v == -std::numeric_limits<double>::infinity()) return "-inf";
  if (std::isnan(v)) return "nan";
  return v;
}
inline Json real(const ExtReal& v) { return real(v.to_double()); }

inline double get_real(const Json& j, const std::string& what) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "+inf" || s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  throw ParseError(what + ": expected a number");
}

inline Json vec(std::span<const double> v) {
  Json a = Json::array();
  for (double x : v) a.push_back(real(x));
  return a;
}

inline Vector get_vec(const Json& j, const std::string& what) {
  if (!j.is_array()) throw ParseError(what + ": expected an array");
  Vector v;
  for (const auto& x : j) v.push_back(get_real(x, what));
  return v;
}

inline const Json& field(const Json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw ParseError(where + ": missing field '" + key + "'");
  return j.at(key);
}

inline Json point(const DualPoint& p) { return vec(p.coords()); }
inline DualPoint get_point(const Json& j, const std::string& what) { return DualPoint(get_vec(j, what)); }

inline Json points(const std::vector<DualPoint>& ps) {
  Json a = Json::array();
  for (const auto& p : ps) a.push_back(point(p));
  return a;
}
inline std::vector<DualPoint> get_points(const Json& j, const std::string& what) {
  if (!j.is_array()) throw ParseError(what + ": expected an array");
  std::vector<DualPoint> out;
  for (const auto& p : j) out.push_back(get_point(p, what));
  return out;
}

// ---------------------------------------------------------------------------
// model pieces

inline Json to_json(const AprioriAlphabet& a) {
  Vector m(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) m[i] = a.weight(i);
  return Json{{"k", a.size()}, {"m", vec(m)}};
}

inline AprioriAlphabet alphabet_from_json(const Json& j) {
  const std::string w = "alphabet";
  const auto k = field(j, "k", w).get<std::size_t>();
  if (!j.contains("m")) return AprioriAlphabet::uniform(k);
  Vector m = get_vec(j.at("m"), w + ".m");
  if (m.size() != k) throw ParseError("alphabet: m must have k entries");
  return AprioriAlphabet(std::move(m));
}

inline Json to_json(const CylinderPotential& p) {
  return Json{{"memory", p.memory()}, {"table", vec(p.table())}, {"name", p.name()}};
}

inline CylinderPotential potential_from_json(const Json& j, const AprioriAlphabet& alphabet) {
  const std::string w = "potential";
  return {alphabet, field(j, "memory", w).get<int>(), get_vec(field(j, "table", w), w + ".table"),
          j.value("name", std::string())};
}

inline Json to_json(const ConvexSpec& g) {
  Json j = std::visit(
      [](const auto& k) -> Json {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, ConvexSpec::Quadratic>)
          return {{"kind", "quadratic"}, {"beta", real(k.beta)}, {"dim", k.dim}};
        else if constexpr (std::is_same_v<T, ConvexSpec::AbsSum>)
          return {{"kind", "abs_sum"}, {"dim", k.dim}};
        else if constexpr (std::is_same_v<T, ConvexSpec::Grid>) {
          Json axes = Json::array();
          for (const auto& ax : k.samples.axes()) axes.push_back(vec(ax));
          return {{"kind", "grid"}, {"grid", axes}, {"values", vec(k.samples.values())}};
        } else
          return {{"kind", "linear_shift"}, {"slope", vec(k.slope)}, {"base", to_json(*k.base)}};
      },
      g.kind());
  if (!g.label().empty()) j["label"] = g.label();
  return j;
}

inline ConvexSpec convex_from_json(const Json& j) {
  const std::string w = "convex function";
  const auto kind = field(j, "kind", w).get<std::string>();
  const std::string label = j.value("label", std::string());
  if (kind == "quadratic")
    return ConvexSpec::quadratic(get_real(field(j, "beta", w), w + ".beta"), j.value("dim", std::size_t{1}), label);
  if (kind == "abs_sum") return ConvexSpec::abs_sum(j.value("dim", std::size_t{1}), label);
  if (kind == "grid") {
    std::vector<Vector> axes;
    for (const auto& ax : field(j, "grid", w)) axes.push_back(get_vec(ax, w + ".grid"));
    return ConvexSpec::grid(GridFunction(std::move(axes), get_vec(field(j, "values", w), w + ".values")), label);
  }
  if (kind == "linear_shift")
    return ConvexSpec::linear_shift(get_vec(field(j, "slope", w), w + ".slope"), convex_from_json(field(j, "base", w)),
                                    label);
  throw ParseError("convex function: unknown kind '" + kind + "'");
}

inline Json to_json(const SolverConfig& c) {
  Json j{{"tol", real(c.tol)},
         {"sc_tol", real(c.sc_tol)},
         {"cluster_radius", real(c.cluster_radius)},
         {"value_window", real(c.value_window)},
         {"grid", c.grid},
         {"multistart", c.multistart_cap},
         {"seed", c.seed}};
  j["radius_plus"] = c.radius_plus ? real(*c.radius_plus) : Json(nullptr);
  j["radius_minus"] = c.radius_minus ? real(*c.radius_minus) : Json(nullptr);
  return j;
}

/// Overlays the fields present in j onto c.
inline SolverConfig config_from_json(const Json& j, SolverConfig c = {}) {
  const std::string w = "config";
  if (!j.is_object()) throw ParseError("config: expected an object");
  if (j.contains("tol")) c.tol = get_real(j["tol"], w);
  if (j.contains("sc_tol")) c.sc_tol = get_real(j["sc_tol"], w);
  if (j.contains("cluster_radius")) c.cluster_radius = get_real(j["cluster_radius"], w);
  if (j.contains("value_window")) c.value_window = get_real(j["value_window"], w);
  if (j.contains("grid")) c.grid = j["grid"].get<int>();
  if (j.contains("multistart")) c.multistart_cap = j["multistart"].get<int>();
  if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("radius_plus") && !j["radius_plus"].is_null()) c.radius_plus = get_real(j["radius_plus"], w);
  if (j.contains("radius_minus") && !j["radius_minus"].is_null()) c.radius_minus = get_real(j["radius_minus"], w);
  return c;
}

inline Json to_json(const ModelSpec& m) {
  Json j{{"schema", kSchema}, {"label", m.label}, {"alphabet", to_json(m.alphabet)}};
  auto side = [](const std::vector<CylinderPotential>& phis) {
    Json a = Json::array();
    for (const auto& p : phis) a.push_back(to_json(p));
    return a;
  };
  if (m.g_plus) {
    j["plus"] = side(m.plus);
    j["g_plus"] = to_json(*m.g_plus);
  }
  if (m.g_minus) {
    j["minus"] = side(m.minus);
    j["g_minus"] = to_json(*m.g_minus);
  }
  if (m.base) j["base"] = to_json(*m.base);
  return j;
}

inline void check_schema(const Json& j) {
  if (!j.is_object()) throw ParseError("document: expected a JSON object");
  if (j.contains("schema") && j["schema"] != kSchema)
    throw ParseError("document: unsupported schema '" + j["schema"].dump() + "'");
}

inline ModelSpec model_from_json(const Json& j) {
  check_schema(j);
  ModelSpec m;
  m.alphabet = alphabet_from_json(field(j, "alphabet", "model"));
  m.label = j.value("label", std::string());
  auto side = [&](const char* key) {
    std::vector<CylinderPotential> out;
    if (j.contains(key))
      for (const auto& p : j[key]) out.push_back(potential_from_json(p, m.alphabet));
    return out;
  };
  m.plus = side("plus");
  m.minus = side("minus");
  if (j.contains("g_plus")) m.g_plus = convex_from_json(j["g_plus"]);
  if (j.contains("g_minus")) m.g_minus = convex_from_json(j["g_minus"]);
  if (j.contains("base")) m.base = potential_from_json(j["base"], m.alphabet);
  m.validate();
  return m;
}

// ---------------------------------------------------------------------------
// measures and records

inline Json to_json(const MarkovMeasure& mu) {
  Json rows = Json::array();
  for (const auto& r : mu.kernel()) rows.push_back(vec(r));
  return Json{{"k", mu.k()}, {"order", mu.order()}, {"stationary", vec(mu.stationary())}, {"transitions", rows}};
}

inline MarkovMeasure measure_from_json(const Json& j) {
  const std::string w = "measure";
  const auto k = field(j, "k", w).get<std::size_t>();
  const int order = field(j, "order", w).get<int>();
  std::vector<Vector> rows;
  for (const auto& r : field(j, "transitions", w)) rows.push_back(get_vec(r, w + ".transitions"));
  if (order == 0) {
    if (rows.size() != 1) throw ParseError("measure: a product measure has one transition row");
    return MarkovMeasure::product(k, rows[0]);
  }
  const std::size_t n = ipow(k, order);
  if (rows.size() != n) throw ParseError("measure: expected k^order transition rows");
  // state transition matrix from the symbol kernel: state s -> (s * k + b) mod k^order
  SquareMatrix q(n, 0.0);
  for (std::size_t s = 0; s < n; ++s) {
    if (rows[s].size() != k) throw ParseError("measure: transition rows must have k entries");
    for (std::size_t b = 0; b < k; ++b) q(s, (s * k + b) % n) += rows[s][b];
  }
  return MarkovMeasure::chain(k, order, q, get_vec(field(j, "stationary", w), w + ".stationary"));
}

inline Json to_json(const RPFData& r) {
  return Json{{"log_lambda", real(r.log_lambda)}, {"h", vec(r.h)},
              {"nu", vec(r.nu)},                  {"eigen_residual", real(r.eigen_residual)},
              {"adjoint_residual", real(r.adjoint_residual)}, {"gibbs", to_json(r.gibbs)}};
}

inline Json to_json(const Equilibrium& e) {
  return Json{{"x_plus", point(e.x_plus)},
              {"x_minus", point(e.x_minus)},
              {"tau_plus", vec(e.tau_plus)},
              {"tau_minus", vec(e.tau_minus)},
              {"residual_plus", real(e.residual_plus)},
              {"residual_minus", real(e.residual_minus)},
              {"p_value", real(e.p_value)},
              {"measure", to_json(e.measure)}};
}

inline Equilibrium equilibrium_from_json(const Json& j) {
  const std::string w = "equilibrium";
  Equilibrium e;
  e.x_plus = get_point(field(j, "x_plus", w), w);
  e.x_minus = get_point(field(j, "x_minus", w), w);
  e.tau_plus = get_vec(field(j, "tau_plus", w), w);
  e.tau_minus = get_vec(field(j, "tau_minus", w), w);
  e.residual_plus = get_real(field(j, "residual_plus", w), w);
  e.residual_minus = get_real(field(j, "residual_minus", w), w);
  e.p_value = get_real(field(j, "p_value", w), w);
  e.measure = measure_from_json(field(j, "measure", w));
  return e;
}

namespace detail {

inline Json optimizer_map(const std::vector<std::pair<DualPoint, std::vector<DualPoint>>>& m) {
  Json a = Json::array();
  for (const auto& [y, xs] : m) a.push_back(Json{{"y_plus", point(y)}, {"minimizers", points(xs)}});
  return a;
}

inline std::vector<std::pair<DualPoint, std::vector<DualPoint>>> optimizer_map_from(const Json& j) {
  std::vector<std::pair<DualPoint, std::vector<DualPoint>>> out;
  for (const auto& e : j)
    out.emplace_back(get_point(field(e, "y_plus", "optimizer map"), "y_plus"),
                     get_points(field(e, "minimizers", "optimizer map"), "minimizers"));
  return out;
}

}  // namespace detail

inline Json to_json(const GameSolution& s) {
  Json j;
  j["p_flat"] = real(s.p_flat);
  j["p_sharp"] = s.p_sharp ? real(*s.p_sharp) : Json(nullptr);
  j["gap"] = s.gap ? real(*s.gap) : Json(nullptr);
  j["m_flat"] = points(s.m_flat);
  j["m_flat_of"] = detail::optimizer_map(s.m_flat_of);
  j["m_sharp"] = points(s.m_sharp);
  j["m_sharp_of"] = detail::optimizer_map(s.m_sharp_of);
  Json eq = Json::array();
  for (const auto& e : s.equilibria) eq.push_back(to_json(e));
  j["equilibria"] = eq;
  j["radii"] = Json{{"plus", real(s.radii.plus)}, {"minus", real(s.radii.minus)}};
  j["diagnostics"] = s.diagnostics;
  return j;
}

inline GameSolution solution_from_json(const Json& j) {
  const std::string w = "solution";
  GameSolution s;
  s.p_flat = get_real(field(j, "p_flat", w), w);
  if (!field(j, "p_sharp", w).is_null()) s.p_sharp = get_real(j["p_sharp"], w);
  if (!field(j, "gap", w).is_null()) s.gap = get_real(j["gap"], w);
  s.m_flat = get_points(field(j, "m_flat", w), w);
  s.m_flat_of = detail::optimizer_map_from(field(j, "m_flat_of", w));
  s.m_sharp = get_points(field(j, "m_sharp", w), w);
  s.m_sharp_of = detail::optimizer_map_from(field(j, "m_sharp_of", w));
  for (const auto& e : field(j, "equilibria", w)) s.equilibria.push_back(equilibrium_from_json(e));
  s.radii.plus = get_real(field(field(j, "radii", w), "plus", w), w);
  s.radii.minus = get_real(field(j["radii"], "minus", w), w);
  s.diagnostics = field(j, "diagnostics", w).get<std::vector<std::string>>();
  return s;
}

inline Json to_json(const DiscreteDualMeasure& m) {
  return Json{{"support", points(m.support())}, {"weights", vec(m.weights())}};
}

inline DiscreteDualMeasure dual_measure_from_json(const Json& j) {
  const std::string w = "dual measure";
  return {get_points(field(j, "support", w), w), get_vec(field(j, "weights", w), w)};
}

inline Json to_json(const Coupling& c) {
  Json rows = Json::array();
  for (std::size_t i = 0; i < c.rows; ++i) {
    Vector r(c.cols);
    for (std::size_t j = 0; j < c.cols; ++j) r[j] = c(i, j);
    rows.push_back(vec(r));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// text

/// Pretty-printed document with a trailing newline.
inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

/// Parses text; syntax errors are reported as "<source>:<line>:<column>: ...".
inline Json parse(const std::string& text, const std::string& source = "<input>") {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::string what = e.what();
    if (const auto p = what.find("syntax error"); p != std::string::npos) what = what.substr(p);
    throw ParseError(source + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + what);
  }
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Json load(const std::string& path) { return parse(read_file(path), path); }

}  // namespace thermoflat::io
