#pragma once

// Command-line front end. `run` is the whole program minus main(), so the
// test suite can drive it in-process.
//
// Exit codes: 0 success, 2 unreadable or invalid input, 3 solver failure.

#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "thermoflat/io.hpp"
#include "thermoflat/oracle.hpp"
#include "thermoflat/transport.hpp"

namespace thermoflat::cli {

using io::Json;

enum ExitCode { kOk = 0, kInvalidInput = 2, kSolverFailure = 3 };

struct Options {
  std::string model_file;
  std::optional<double> tol, sc_tol, radius_plus, radius_minus;
  std::optional<int> grid, multistart;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string scan;
  std::string hist;
  int resolution = 101;
  int bkl_resolution = 41;
  int delta_n = 8;
  std::size_t birkhoff_n = 0;
  std::size_t samples = 1000;
  std::size_t bins = 20;
  std::vector<double> weights;
};

namespace detail {

inline std::string fmt17(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw io::ParseError(path + ": cannot write file");
  f << text;
}

inline SolverConfig resolve_config(const Json& doc, const Options& o) {
  SolverConfig c;
  if (doc.contains("config")) c = io::config_from_json(doc["config"], c);
  if (o.tol) c.tol = *o.tol;
  if (o.sc_tol) c.sc_tol = *o.sc_tol;
  if (o.grid) c.grid = *o.grid;
  if (o.multistart) c.multistart_cap = *o.multistart;
  if (o.seed) c.seed = *o.seed;
  if (o.radius_plus) c.radius_plus = *o.radius_plus;
  if (o.radius_minus) c.radius_minus = *o.radius_minus;
  c.validate();
  return c;
}

inline Json header(const std::string& command, const std::string& label) {
  return Json{{"schema", io::kSchema}, {"command", command}, {"model", label}};
}

inline Json pressure_entry(const CylinderPotential& p, const std::string& role) {
  const RPFData r = rpf_solve(p);
  Json j{{"role", role}, {"name", p.name()}, {"memory", p.memory()}, {"p_l", io::real(r.log_lambda)}};
  j["entropy"] = io::real(entropy_of_gibbs(r, p));
  j["rpf"] = io::to_json(r);
  return j;
}

inline Json pressure_report(const Json& doc) {
  io::check_schema(doc);
  const AprioriAlphabet alphabet = io::alphabet_from_json(io::field(doc, "alphabet", "document"));
  Json list = Json::array();
  auto add = [&](const char* key, const std::string& role) {
    if (!doc.contains(key)) return;
    const Json& v = doc[key];
    if (v.is_array()) {
      for (const auto& p : v) list.push_back(pressure_entry(io::potential_from_json(p, alphabet), role));
    } else {
      list.push_back(pressure_entry(io::potential_from_json(v, alphabet), role));
    }
  };
  add("potentials", "potential");
  add("base", "base");
  add("plus", "plus");
  add("minus", "minus");
  if (list.empty()) throw io::ParseError("document: no potentials to evaluate");
  Json j = header("pressure", doc.value("label", std::string()));
  j["potentials"] = list;
  return j;
}

inline std::string scan_csv(const GameSolution& s) {
  std::ostringstream os;
  const std::size_t n = s.scan.empty() ? 0 : s.scan.front().first.size();
  for (std::size_t i = 0; i < n; ++i) os << "y_plus_" << i + 1 << ',';
  os << "p_flat\n";
  for (const auto& [y, v] : s.scan) {
    for (double c : y) os << fmt17(c) << ',';
    os << fmt17(v) << '\n';
  }
  return os.str();
}

inline Json solve_report(const ModelSpec& model, const SolverConfig& config, const Options& o, bool game) {
  const GameSolution s = game ? solve_game(model, config) : solve_flat(model, config);
  Json j = header(game ? "game" : "solve", model.label);
  j["config"] = io::to_json(config);
  j["solution"] = io::to_json(s);
  if (game) {
    if (model.g_minus && model.g_minus->strictly_convex_conjugate()) {
      try {
        const DecisionRule rule = decision_rule(model, s, config);
        Json table = Json::array();
        for (const auto& [xp, xm] : rule.table) table.push_back(Json{{"x_plus", io::point(xp)}, {"x_minus", io::point(xm)}});
        j["decision_rule"] = Json{{"table", table},
                                  {"jump_coarse", io::real(rule.jump_coarse)},
                                  {"jump_fine", io::real(rule.jump_fine)},
                                  {"continuous", rule.continuous}};
      } catch (const ModelError& e) {
        j["decision_rule"] = Json{{"unavailable", e.what()}};
      }
    } else {
      j["decision_rule"] = nullptr;
    }
  }
  if (!o.scan.empty()) write_text(o.scan, scan_csv(s));
  return j;
}

inline Vector mixture_weights(const Options& o, std::size_t count) {
  if (o.weights.empty()) return Vector(count, 1.0 / static_cast<double>(count));
  if (o.weights.size() != count)
    throw ModelError("--weights: expected " + std::to_string(count) + " weights, one per equilibrium");
  return o.weights;
}

inline Json transport_report(const ModelSpec& model, const SolverConfig& config, const Options& o) {
  const GameSolution s = solve_flat(model, config);
  std::vector<MarkovMeasure> eqs;
  for (const auto& e : s.equilibria) eqs.push_back(e.measure);
  const Vector w = mixture_weights(o, eqs.size());
  const auto dist = order_parameter_distribution(model, eqs, w);
  const TransportResult primal = kantorovich_primal(model, dist.plus, dist.minus);
  const auto [pp, pm] = canonical_dual_pair(model, dist.plus, dist.minus, config);
  const DualReport dual = kantorovich_dual_check(model, dist.plus, dist.minus, pp, pm);
  Json j = header("transport", model.label);
  j["config"] = io::to_json(config);
  j["p_flat"] = io::real(s.p_flat);
  j["weights"] = io::vec(w);
  j["y_plus"] = io::to_json(dist.plus);
  j["y_minus"] = io::to_json(dist.minus);
  Json cost = Json::array();
  for (const auto& r : primal.cost) cost.push_back(io::vec(r));
  j["cost"] = cost;
  j["value"] = io::real(primal.value);
  j["coupling"] = io::to_json(primal.coupling);
  j["marginal_error"] = io::real(primal.coupling.marginal_error(dist.plus.weights(), dist.minus.weights()));
  Json viol = Json::array();
  for (const auto& v : dual.violations) viol.push_back(Json{{"i", v.i}, {"j", v.j}, {"amount", io::real(v.amount)}});
  j["dual"] = Json{{"p_plus", io::vec(pp)},      {"p_minus", io::vec(pm)},      {"value", io::real(dual.dual_value)},
                   {"feasible", dual.feasible},  {"bounded", dual.bounded},     {"attains", dual.attains},
                   {"violations", viol}};
  if (o.birkhoff_n > 0) {
    const BirkhoffSamples b = birkhoff_sampling(model, eqs.front(), o.birkhoff_n, o.samples, config.seed);
    Json side = Json::object();
    auto stats = [&](const std::vector<DualPoint>& xs) {
      Json a = Json::array();
      const std::size_t d = xs.empty() ? 0 : xs.front().size();
      for (std::size_t c = 0; c < d; ++c) {
        const SampleStats st = sample_stats(xs, c);
        a.push_back(Json{{"mean", io::real(st.mean)}, {"variance", io::real(st.variance)},
                         {"std_error", io::real(st.std_error)}});
      }
      return a;
    };
    j["birkhoff"] = Json{{"n", o.birkhoff_n},      {"samples", o.samples},         {"seed", config.seed},
                         {"plus", stats(b.plus)}, {"minus", stats(b.minus)}};
    if (!o.hist.empty()) {
      std::ostringstream os;
      os << "bin_center,count\n";
      if (model.g_plus)
        for (const auto& bin : histogram(b.plus, o.bins)) os << fmt17(bin.center) << ',' << bin.count << '\n';
      write_text(o.hist, os.str());
    }
  }
  return j;
}

inline Json delta_report(const ModelSpec& model, const SolverConfig& config, const Options& o) {
  const GameSolution s = solve_flat(model, config);
  const Vector w = mixture_weights(o, s.equilibria.size());
  std::vector<MixtureMeasure::Component> comps;
  Json cj = Json::array();
  double weighted = 0.0;
  for (std::size_t i = 0; i < s.equilibria.size(); ++i) {
    const MarkovMeasure& mu = s.equilibria[i].measure;
    comps.push_back({w[i], mu, mu.is_ergodic()});
    const double p = direct_nonlinear_pressure(model, mu).to_double();
    weighted += w[i] * p;
    cj.push_back(Json{{"weight", io::real(w[i])}, {"direct_p", io::real(p)}, {"ergodic", comps.back().ergodic}});
  }
  const MixtureMeasure mix(comps);
  Json j = header("delta", model.label);
  j["config"] = io::to_json(config);
  j["p_flat"] = io::real(s.p_flat);
  j["components"] = cj;
  j["weighted_direct_p"] = io::real(weighted);
  j["affine_flat"] = io::real(affine_pressure_flat(model, mix));
  j["affine_sharp"] = io::real(affine_pressure_sharp(model, mix));
  if (model.g_plus) {
    const FSpec f{*model.g_plus, model.plus};
    j["delta_plus"] = io::real(delta_functional(f, mix));
    Json seq = Json::array();
    int mem = 1;
    for (const auto& p : model.plus) mem = std::max(mem, p.memory());
    for (int n = mem; n <= o.delta_n; ++n) {
      if (std::pow(static_cast<double>(model.alphabet.size()), n) > 2e6) break;
      seq.push_back(Json{{"n", n}, {"value", io::real(delta_via_birkhoff(f, mix, n))}});
    }
    j["delta_plus_birkhoff"] = seq;
  }
  return j;
}

inline Json oracle_report(const ModelSpec& model, const SolverConfig& config, const Options& o) {
  const GameSolution s = solve_flat(model, config);
  Json j = header("oracle", model.label);
  j["config"] = io::to_json(config);
  j["p_flat"] = io::real(s.p_flat);
  Json notes = Json::array();
  double worst = 0.0;
  try {
    const DirectResult d = direct_pressure(model, o.resolution);
    j["direct"] = io::real(d.value);
    worst = std::max(worst, std::abs(d.value - s.p_flat));
  } catch (const ModelError& e) {
    j["direct"] = nullptr;
    notes.push_back(std::string("direct: ") + e.what());
  }
  try {
    const BklResult b = bkl_pressure(model, o.bkl_resolution);
    j["bkl"] = io::real(b.value);
    worst = std::max(worst, std::abs(b.value - s.p_flat));
  } catch (const ModelError& e) {
    j["bkl"] = nullptr;
    notes.push_back(std::string("bkl: ") + e.what());
  }
  j["max_abs_diff"] = io::real(worst);
  j["notes"] = notes;
  return j;
}

inline void add_solver_flags(CLI::App* sub, Options& o) {
  sub->add_option("model", o.model_file, "model JSON file")->required();
  sub->add_option("--tol", o.tol, "value tolerance (1e-8)");
  sub->add_option("--sc-tol", o.sc_tol, "self-consistency tolerance (1e-6)");
  sub->add_option("--grid", o.grid, "multistart grid points per axis (17)");
  sub->add_option("--multistart", o.multistart, "cap on multistart grid size (289)");
  sub->add_option("--seed", o.seed, "random seed (0)");
  sub->add_option("--radius-plus", o.radius_plus, "override the y+ search radius");
  sub->add_option("--radius-minus", o.radius_minus, "override the y- search radius");
  sub->add_option("--out", o.out, "write the JSON report here instead of stdout");
}

}  // namespace detail

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"thermoflat: nonlinear pressures and equilibrium measures of finite-alphabet shifts"};
  app.name("thermoflat");
  app.require_subcommand(1);
  Options o;
  auto* pressure = app.add_subcommand("pressure", "linear pressures and Perron data of the model potentials");
  pressure->add_option("model", o.model_file, "model or potential JSON file")->required();
  pressure->add_option("--out", o.out, "write the JSON report here instead of stdout");
  auto* solve = app.add_subcommand("solve", "max-min value, its optimizers and equilibrium measures");
  auto* game = app.add_subcommand("game", "both conservative values of the game and the decision rule");
  auto* transport = app.add_subcommand("transport", "order-parameter distributions and the transport identity");
  auto* delta = app.add_subcommand("delta", "affine pressures and Delta-functionals on the equilibrium mixture");
  auto* oracle = app.add_subcommand("oracle", "compare the solver with the brute-force oracles");
  auto* report = app.add_subcommand("report", "pressure, game and oracle sections in one document");
  for (auto* s : {solve, game, transport, delta, oracle, report}) detail::add_solver_flags(s, o);
  for (auto* s : {solve, game}) s->add_option("--scan", o.scan, "write the (y+, P_flat(y+)) scan as CSV");
  for (auto* s : {transport, delta}) s->add_option("--weights", o.weights, "mixture weights over the equilibria");
  transport->add_option("--birkhoff-n", o.birkhoff_n, "path length for Birkhoff sampling (0 = off)");
  transport->add_option("--samples", o.samples, "number of sampled paths (1000)");
  transport->add_option("--bins", o.bins, "histogram bins (20)");
  transport->add_option("--hist", o.hist, "write the y+ histogram as CSV");
  delta->add_option("--n", o.delta_n, "largest word length for the Birkhoff sequence (8)");
  for (auto* s : {oracle, report}) {
    s->add_option("--resolution", o.resolution, "direct oracle grid resolution (101)");
    s->add_option("--bkl-resolution", o.bkl_resolution, "entropy-function oracle grid resolution (41)");
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kInvalidInput;
  }

  try {
    const Json doc = io::load(o.model_file);
    Json result;
    if (pressure->parsed()) {
      result = detail::pressure_report(doc);
    } else {
      const ModelSpec model = io::model_from_json(doc);
      const SolverConfig config = detail::resolve_config(doc, o);
      if (solve->parsed()) result = detail::solve_report(model, config, o, false);
      else if (game->parsed()) result = detail::solve_report(model, config, o, true);
      else if (transport->parsed()) result = detail::transport_report(model, config, o);
      else if (delta->parsed()) result = detail::delta_report(model, config, o);
      else if (oracle->parsed()) result = detail::oracle_report(model, config, o);
      else {
        result = detail::header("report", model.label);
        result["config"] = io::to_json(config);
        result["pressure"] = detail::pressure_report(doc)["potentials"];
        result["game"] = detail::solve_report(model, config, o, true);
        result["oracle"] = detail::oracle_report(model, config, o);
      }
    }
    const std::string text = io::dump(result);
    if (o.out.empty()) out << text;
    else detail::write_text(o.out, text);
    return kOk;
  } catch (const ModelError& e) {
    err << "error: " << e.what() << "\n";
    return kInvalidInput;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << o.model_file << ": " << e.what() << "\n";
    return kInvalidInput;
  } catch (const std::exception& e) {
    err << "solver failure: " << e.what() << "\n";
    return kSolverFailure;
  }
}

}  // namespace thermoflat::cli
