// File formats: JSON problem, heuristic and world files (strict schemas,
// unknown keys rejected), certificate reports and CSV exports.
//
// CSV rules: comma separated, no quoting (fields are numbers or bare
// identifiers and never contain commas), '\n' line endings, numbers printed
// with 17 significant digits.

#ifndef HEURSOS_IO_HPP
#define HEURSOS_IO_HPP

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <iomanip>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "heursos/planner.hpp"
#include "heursos/poly.hpp"
#include "heursos/semialg.hpp"
#include "heursos/sosprog.hpp"
#include "heursos/synth.hpp"
#include "heursos/verify.hpp"

namespace heursos::io {

using json = nlohmann::json;

/// Schema violation; `line` is 1-based, 0 when unknown.
class SchemaError : public std::runtime_error {
 public:
  SchemaError(const std::string& path, const std::string& what, int line = 0)
      : std::runtime_error(format(path, what, line)), path_(path), line_(line) {}
  const std::string& path() const { return path_; }
  int line() const { return line_; }

 private:
  static std::string format(const std::string& path, const std::string& what, int line) {
    std::string s = "schema error";
    if (line > 0) s += " (line " + std::to_string(line) + ")";
    s += " at " + (path.empty() ? std::string("/") : path) + ": " + what;
    return s;
  }
  std::string path_;
  int line_;
};

namespace detail {

inline int line_of_offset(std::string_view text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

// Line of the first occurrence of "key" in the source text; 0 if absent.
inline int line_of_key(std::string_view text, const std::string& key) {
  const std::string quoted = "\"" + key + "\"";
  const auto pos = text.find(quoted);
  return pos == std::string_view::npos ? 0 : line_of_offset(text, pos);
}

class Reader {
 public:
  explicit Reader(std::string_view text) : text_(text) {}

  [[noreturn]] void fail(const std::string& path, const std::string& what, const std::string& key = {}) const {
    throw SchemaError(path, what, key.empty() ? 0 : line_of_key(text_, key));
  }

  void keys(const json& j, const std::string& path, std::initializer_list<std::string_view> allowed,
            std::initializer_list<std::string_view> required = {}) const {
    if (!j.is_object()) fail(path, "expected an object");
    for (const auto& [k, v] : j.items()) {
      if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) fail(path + "/" + k, "unknown key", k);
    }
    for (auto r : required) {
      if (!j.contains(std::string(r))) fail(path, "missing required key '" + std::string(r) + "'");
    }
  }

  double number(const json& j, const std::string& path) const {
    if (!j.is_number()) fail(path, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) fail(path, "expected a finite number");
    return v;
  }

  int integer(const json& j, const std::string& path) const {
    if (!j.is_number_integer()) fail(path, "expected an integer");
    return j.get<int>();
  }

  std::string string(const json& j, const std::string& path) const {
    if (!j.is_string()) fail(path, "expected a string");
    return j.get<std::string>();
  }

  std::vector<double> vec(const json& j, const std::string& path, std::size_t expect = 0) const {
    if (!j.is_array()) fail(path, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], path + "/" + std::to_string(i)));
    if (expect && out.size() != expect) fail(path, "expected " + std::to_string(expect) + " entries");
    return out;
  }

  Box box(const json& j, const std::string& path, std::size_t dim) const {
    keys(j, path, {"lo", "hi"}, {"lo", "hi"});
    Box b{vec(j["lo"], path + "/lo", dim), vec(j["hi"], path + "/hi", dim)};
    for (std::size_t i = 0; i < dim; ++i) {
      if (!(b.lo[i] <= b.hi[i])) fail(path, "lo must not exceed hi");
    }
    return b;
  }

  /// A polynomial in `nvars` variables: a number (constant) or an array of
  /// [coefficient, [exponents...]] terms.
  Polynomial poly(const json& j, const std::string& path, std::size_t nvars) const {
    if (j.is_number()) return Polynomial::constant(nvars, number(j, path));
    if (!j.is_array()) fail(path, "expected a number or an array of [coefficient, [exponents]] terms");
    Polynomial p(nvars);
    for (std::size_t t = 0; t < j.size(); ++t) {
      const std::string tp = path + "/" + std::to_string(t);
      const json& term = j[t];
      if (!term.is_array() || term.size() != 2) fail(tp, "expected [coefficient, [exponents]]");
      const double c = number(term[0], tp + "/0");
      if (!term[1].is_array() || term[1].size() != nvars) {
        fail(tp + "/1", "expected " + std::to_string(nvars) + " exponents");
      }
      std::vector<int> e;
      for (std::size_t i = 0; i < nvars; ++i) {
        const int k = integer(term[1][i], tp + "/1/" + std::to_string(i));
        if (k < 0) fail(tp + "/1/" + std::to_string(i), "exponents must be nonnegative");
        e.push_back(k);
      }
      p.add_term(Monomial(std::move(e)), c);
    }
    return p;
  }

  SemialgebraicSet set(const json& j, const std::string& path, std::size_t nvars) const {
    if (!j.is_object()) fail(path, "expected an object");
    if (j.contains("box")) {
      keys(j, path, {"box"});
      const Box b = box(j["box"], path + "/box", nvars);
      return heursos::box(b.lo, b.hi);
    }
    keys(j, path, {"constraints", "bounds"}, {"constraints"});
    if (!j["constraints"].is_array()) fail(path + "/constraints", "expected an array of polynomials");
    std::vector<Polynomial> cons;
    for (std::size_t i = 0; i < j["constraints"].size(); ++i) {
      cons.push_back(poly(j["constraints"][i], path + "/constraints/" + std::to_string(i), nvars));
    }
    std::optional<Box> bounds;
    if (j.contains("bounds")) bounds = box(j["bounds"], path + "/bounds", nvars);
    return SemialgebraicSet(nvars, std::move(cons), std::move(bounds));
  }

  std::string_view text() const { return text_; }

 private:
  std::string_view text_;
};

inline json parse(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError("", std::string("malformed JSON: ") + e.what(), line_of_offset(text, e.byte));
  }
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline json poly_json(const Polynomial& p) {
  json terms = json::array();
  for (const auto& [m, c] : p.terms()) terms.push_back(json::array({c, m.exponents()}));
  return terms;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Problem files.

struct ProblemFile {
  std::string name;
  std::vector<std::string> state_names;
  std::vector<std::string> control_names;
  /// Polynomial problems support synthesis; black boxes only falsify and plan.
  std::variant<BlackBoxProblem, PolyProblem> problem;
  std::optional<Measure> measure;
  std::optional<int> deg_h;
  std::optional<int> deg_lambda;

  bool is_polynomial() const { return std::holds_alternative<PolyProblem>(problem); }
  const PolyProblem& poly() const {
    if (!is_polynomial()) throw std::invalid_argument("problem '" + name + "' is not polynomial");
    return std::get<PolyProblem>(problem);
  }
  BlackBoxProblem black_box() const {
    if (is_polynomial()) return to_black_box(std::get<PolyProblem>(problem));
    return std::get<BlackBoxProblem>(problem);
  }
  std::size_t state_dim() const {
    return is_polynomial() ? std::get<PolyProblem>(problem).state_dim() : std::get<BlackBoxProblem>(problem).n;
  }
};

/// Default measure of a built-in problem: unit atoms at +-1 for the single
/// integrator, Lebesgue on [-2,2]x[-sqrt2,sqrt2] for the double integrator
/// and on the state box otherwise.
inline std::optional<Measure> builtin_measure(std::string_view name, const AnyProblem& p) {
  if (name == "single_integrator_1d") return Measure::discrete({{{-1.0}, 1.0}, {{1.0}, 1.0}});
  if (name == "double_integrator_1d") return Measure::lebesgue({-2.0, -std::numbers::sqrt2}, {2.0, std::numbers::sqrt2});
  if (const auto* pp = std::get_if<PolyProblem>(&p)) {
    if (pp->xfree().bounds()) return Measure::lebesgue(pp->xfree().bounds()->lo, pp->xfree().bounds()->hi);
  }
  return std::nullopt;
}

namespace detail {

inline std::vector<std::string> default_names(const char* prefix, std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i + 1));
  return out;
}

inline BuiltinParams builtin_params(const Reader& r, const json& j, const std::string& path) {
  BuiltinParams prm;
  r.keys(j, path, {"n", "rho", "taylor"});
  if (j.contains("n")) prm.n = r.integer(j["n"], path + "/n");
  if (j.contains("rho")) prm.rho = r.number(j["rho"], path + "/rho");
  if (j.contains("taylor")) {
    if (!j["taylor"].is_boolean()) r.fail(path + "/taylor", "expected a boolean", "taylor");
    prm.taylor = j["taylor"].get<bool>();
  }
  return prm;
}

inline Measure measure(const Reader& r, const json& j, const std::string& path, std::size_t n) {
  if (!j.is_object()) r.fail(path, "expected an object");
  if (j.contains("box")) {
    r.keys(j, path, {"box"});
    const Box b = r.box(j["box"], path + "/box", n);
    try {
      return Measure::lebesgue(b.lo, b.hi);
    } catch (const std::invalid_argument& e) {
      r.fail(path + "/box", e.what(), "box");
    }
  }
  r.keys(j, path, {"atoms"}, {"atoms"});
  if (!j["atoms"].is_array() || j["atoms"].empty()) r.fail(path + "/atoms", "expected a nonempty array", "atoms");
  std::vector<DiscreteMeasure::Atom> atoms;
  for (std::size_t i = 0; i < j["atoms"].size(); ++i) {
    const std::string ap = path + "/atoms/" + std::to_string(i);
    const json& a = j["atoms"][i];
    r.keys(a, ap, {"point", "weight"}, {"point"});
    const double w = a.contains("weight") ? r.number(a["weight"], ap + "/weight") : 1.0;
    if (!(w > 0.0)) r.fail(ap + "/weight", "weights must be positive", "weight");
    atoms.push_back({r.vec(a["point"], ap + "/point", n), w});
  }
  return Measure::discrete(std::move(atoms));
}

}  // namespace detail

/// Parses a problem document. Either "builtin" (with optional "params") or
/// explicit "variables", "dynamics", "cost" and "sets" blocks.
inline ProblemFile problem_from_json(std::string_view text) {
  const json j = detail::parse(text);
  const detail::Reader r(text);
  r.keys(j, "", {"name", "builtin", "params", "variables", "dynamics", "cost", "sets", "measure", "degrees"});
  ProblemFile pf;
  if (j.contains("name")) pf.name = r.string(j["name"], "/name");

  if (j.contains("builtin")) {
    for (const char* k : {"variables", "dynamics", "cost", "sets"}) {
      if (j.contains(k)) r.fail(std::string("/") + k, "not allowed together with 'builtin'", k);
    }
    const std::string name = r.string(j["builtin"], "/builtin");
    const BuiltinParams prm = j.contains("params") ? detail::builtin_params(r, j["params"], "/params") : BuiltinParams{};
    AnyProblem p = [&] {
      try {
        return builtin(name, prm);
      } catch (const std::invalid_argument& e) {
        r.fail("/builtin", e.what(), "builtin");
      }
    }();
    if (pf.name.empty()) pf.name = name;
    pf.measure = builtin_measure(name, p);
    std::visit([&](const auto& q) { pf.problem = q; }, p);
  } else {
    if (j.contains("params")) r.fail("/params", "only allowed with 'builtin'", "params");
    r.keys(j, "", {"name", "variables", "dynamics", "cost", "sets", "measure", "degrees"},
           {"variables", "dynamics", "cost", "sets"});
    const json& vars = j["variables"];
    r.keys(vars, "/variables", {"state", "control"}, {"state"});
    auto names = [&](const json& a, const std::string& path) {
      if (!a.is_array()) r.fail(path, "expected an array of names");
      std::vector<std::string> out;
      for (std::size_t i = 0; i < a.size(); ++i) out.push_back(r.string(a[i], path + "/" + std::to_string(i)));
      return out;
    };
    pf.state_names = names(vars["state"], "/variables/state");
    if (vars.contains("control")) pf.control_names = names(vars["control"], "/variables/control");
    const std::size_t n = pf.state_names.size(), m = pf.control_names.size();
    if (n == 0) r.fail("/variables/state", "need at least one state variable", "state");

    if (!j["dynamics"].is_array() || j["dynamics"].size() != n) {
      r.fail("/dynamics", "expected one polynomial per state variable", "dynamics");
    }
    std::vector<Polynomial> f;
    for (std::size_t i = 0; i < n; ++i) f.push_back(r.poly(j["dynamics"][i], "/dynamics/" + std::to_string(i), n + m));
    const Polynomial g = r.poly(j["cost"], "/cost", n + m);

    const json& sets = j["sets"];
    r.keys(sets, "/sets", {"free", "control", "goal"}, {"free", "goal"});
    SemialgebraicSet xfree = r.set(sets["free"], "/sets/free", n);
    SemialgebraicSet omega = sets.contains("control") ? r.set(sets["control"], "/sets/control", m) : SemialgebraicSet(m);
    const json& gj = sets["goal"];
    std::optional<GoalSpec> goal;
    if (gj.is_object() && gj.contains("point")) {
      r.keys(gj, "/sets/goal", {"point"});
      goal = GoalSpec::point(r.vec(gj["point"], "/sets/goal/point", n));
    } else {
      r.keys(gj, "/sets/goal", {"set", "samples"}, {"set"});
      std::vector<std::vector<double>> samples;
      if (gj.contains("samples")) {
        if (!gj["samples"].is_array()) r.fail("/sets/goal/samples", "expected an array of points", "samples");
        for (std::size_t i = 0; i < gj["samples"].size(); ++i) {
          samples.push_back(r.vec(gj["samples"][i], "/sets/goal/samples/" + std::to_string(i), n));
        }
      }
      goal = GoalSpec::set(r.set(gj["set"], "/sets/goal/set", n), std::move(samples));
    }
    try {
      pf.problem = PolyProblem(PolyVector(std::move(f)), g, std::move(xfree), std::move(omega), std::move(*goal));
    } catch (const std::invalid_argument& e) {
      r.fail("", e.what());
    }
  }

  const std::size_t n = pf.state_dim();
  if (pf.state_names.empty()) pf.state_names = detail::default_names("x", n);
  if (pf.control_names.empty()) {
    const std::size_t m = pf.is_polynomial() ? pf.poly().control_dim() : std::get<BlackBoxProblem>(pf.problem).m;
    pf.control_names = detail::default_names("u", m);
  }
  if (j.contains("measure")) pf.measure = detail::measure(r, j["measure"], "/measure", n);
  if (j.contains("degrees")) {
    const json& d = j["degrees"];
    r.keys(d, "/degrees", {"h", "lambda"});
    if (d.contains("h")) pf.deg_h = r.integer(d["h"], "/degrees/h");
    if (d.contains("lambda")) pf.deg_lambda = r.integer(d["lambda"], "/degrees/lambda");
  }
  return pf;
}

/// Loads a problem from a path, or from "builtin:NAME" for a built-in with
/// default parameters and measure.
inline ProblemFile load_problem(const std::string& spec) {
  constexpr std::string_view prefix = "builtin:";
  if (spec.rfind(prefix, 0) == 0) {
    return problem_from_json(json{{"builtin", spec.substr(prefix.size())}}.dump());
  }
  return problem_from_json(detail::read_file(spec));
}

// ---------------------------------------------------------------------------
// Heuristic files.

struct HeuristicFile {
  Polynomial heuristic{1};
  std::vector<std::string> variables;
  std::optional<double> objective;
  std::string status;
};

inline json heuristic_to_json(const Polynomial& H, const std::vector<std::string>& variables,
                              std::optional<double> objective = std::nullopt, const std::string& status = {}) {
  json j;
  j["nvars"] = H.nvars();
  j["variables"] = variables;
  j["degree"] = H.degree();
  j["terms"] = detail::poly_json(H);
  if (objective) j["objective"] = *objective;
  if (!status.empty()) j["status"] = status;
  return j;
}

inline HeuristicFile heuristic_from_json(std::string_view text) {
  const json j = detail::parse(text);
  const detail::Reader r(text);
  r.keys(j, "", {"nvars", "variables", "degree", "terms", "objective", "status"}, {"nvars", "terms"});
  HeuristicFile hf;
  const int n = r.integer(j["nvars"], "/nvars");
  if (n < 1) r.fail("/nvars", "must be positive", "nvars");
  hf.heuristic = r.poly(j["terms"], "/terms", static_cast<std::size_t>(n));
  if (j.contains("variables")) {
    if (!j["variables"].is_array() || j["variables"].size() != static_cast<std::size_t>(n)) {
      r.fail("/variables", "expected one name per variable", "variables");
    }
    for (std::size_t i = 0; i < j["variables"].size(); ++i) {
      hf.variables.push_back(r.string(j["variables"][i], "/variables/" + std::to_string(i)));
    }
  }
  if (j.contains("degree") && r.integer(j["degree"], "/degree") != hf.heuristic.degree()) {
    r.fail("/degree", "does not match the terms", "degree");
  }
  if (j.contains("objective")) hf.objective = r.number(j["objective"], "/objective");
  if (j.contains("status")) hf.status = r.string(j["status"], "/status");
  return hf;
}

inline HeuristicFile load_heuristic(const std::string& path) { return heuristic_from_json(detail::read_file(path)); }

// ---------------------------------------------------------------------------
// World files.

struct World {
  std::string name;
  Box bounds;
  std::vector<Box> obstacles;
  std::vector<double> start;
  Box goal;
  /// Control set: explicit samples, or generated by "headings" (unit
  /// vectors in the plane) or "per_axis" (grid over Omega's box).
  std::vector<std::vector<double>> controls;
  int headings = 0;
  int per_axis = 0;
  double step = 0.25;
  int substeps = 4;
  std::vector<double> cell_size;
  std::size_t max_iterations = 1000000;

  bool in_obstacle(std::span<const double> z) const {
    for (const Box& b : obstacles) {
      if (b.contains(z)) return true;
    }
    return false;
  }
};

inline World world_from_json(std::string_view text) {
  const json j = detail::parse(text);
  const detail::Reader r(text);
  r.keys(j, "", {"name", "bounds", "obstacles", "start", "goal", "planner"}, {"bounds", "start", "goal", "planner"});
  World w;
  if (j.contains("name")) w.name = r.string(j["name"], "/name");
  const json& bj = j["bounds"];
  r.keys(bj, "/bounds", {"lo", "hi"}, {"lo", "hi"});
  const std::size_t n = bj["lo"].is_array() ? bj["lo"].size() : 0;
  if (n == 0) r.fail("/bounds/lo", "expected a nonempty array", "lo");
  w.bounds = r.box(bj, "/bounds", n);
  if (j.contains("obstacles")) {
    if (!j["obstacles"].is_array()) r.fail("/obstacles", "expected an array of boxes", "obstacles");
    for (std::size_t i = 0; i < j["obstacles"].size(); ++i) {
      w.obstacles.push_back(r.box(j["obstacles"][i], "/obstacles/" + std::to_string(i), n));
    }
  }
  w.start = r.vec(j["start"], "/start", n);
  w.goal = r.box(j["goal"], "/goal", n);

  const json& pj = j["planner"];
  r.keys(pj, "/planner", {"controls", "step", "substeps", "cell_size", "max_iterations"}, {"controls", "cell_size"});
  const json& cj = pj["controls"];
  if (cj.is_array()) {
    for (std::size_t i = 0; i < cj.size(); ++i) w.controls.push_back(r.vec(cj[i], "/planner/controls/" + std::to_string(i)));
    if (w.controls.empty()) r.fail("/planner/controls", "empty control set", "controls");
  } else {
    r.keys(cj, "/planner/controls", {"headings", "per_axis"});
    if (cj.size() != 1) r.fail("/planner/controls", "give exactly one of 'headings' or 'per_axis'", "controls");
    if (cj.contains("headings")) w.headings = r.integer(cj["headings"], "/planner/controls/headings");
    if (cj.contains("per_axis")) w.per_axis = r.integer(cj["per_axis"], "/planner/controls/per_axis");
    if (std::max(w.headings, w.per_axis) < 1) r.fail("/planner/controls", "count must be positive", "controls");
  }
  if (pj.contains("step")) w.step = r.number(pj["step"], "/planner/step");
  if (pj.contains("substeps")) w.substeps = r.integer(pj["substeps"], "/planner/substeps");
  w.cell_size = r.vec(pj["cell_size"], "/planner/cell_size", n);
  if (pj.contains("max_iterations")) {
    const int cap = r.integer(pj["max_iterations"], "/planner/max_iterations");
    if (cap < 1) r.fail("/planner/max_iterations", "must be at least 1", "max_iterations");
    w.max_iterations = static_cast<std::size_t>(cap);
  }
  return w;
}

inline World load_world(const std::string& path) { return world_from_json(detail::read_file(path)); }

/// The problem placed in the world: X_free becomes the world bounds minus
/// the obstacles and the goal becomes the world's goal box.
inline BlackBoxProblem place_in_world(BlackBoxProblem p, const World& w) {
  if (w.bounds.dim() != p.n) throw std::invalid_argument("world dimension does not match the problem");
  p.in_xfree = [w](std::span<const double> z) { return w.bounds.contains(z) && !w.in_obstacle(z); };
  p.x_bounds = w.bounds;
  p.in_goal = [goal = w.goal](std::span<const double> z) { return goal.contains(z); };
  p.goal_points.clear();
  return p;
}

inline PlannerConfig planner_config(const World& w, const BlackBoxProblem& p) {
  PlannerConfig cfg;
  cfg.start = w.start;
  cfg.step = w.step;
  cfg.substeps = w.substeps;
  cfg.cell_size = w.cell_size;
  cfg.max_iterations = w.max_iterations;
  cfg.goal_region = w.goal;
  if (!w.controls.empty()) {
    cfg.controls = w.controls;
  } else if (w.headings > 0) {
    if (p.m != 2) throw std::invalid_argument("world: 'headings' needs a planar control");
    for (int k = 0; k < w.headings; ++k) {
      const double a = 2.0 * std::numbers::pi * k / w.headings;
      cfg.controls.push_back({std::cos(a), std::sin(a)});
    }
  } else {
    std::vector<int> counts(p.m, w.per_axis);
    verify_detail::for_each_grid_point(p.u_bounds, counts, [&](std::span<const double> u) {
      if (p.in_omega(u)) cfg.controls.emplace_back(u.begin(), u.end());
    });
  }
  return cfg;
}

// ---------------------------------------------------------------------------
// Reports and CSV.

inline void write_certificate_report(std::ostream& os, const SosCertificate& c) {
  os << std::setprecision(17);
  os << "certificate: " << (c.valid() ? "valid" : "INVALID") << "\n";
  os << "max_residual " << c.max_residual << "\n";
  os << "max_equality_residual " << c.max_equality_residual << "\n";
  for (std::size_t i = 0; i < c.names.size(); ++i) {
    os << "block " << c.names[i] << " size " << c.grams[i].rows() << " min_eigenvalue " << c.min_eigenvalues[i] << "\n";
  }
}

/// H on a tensor grid over `region`: columns of the state names then H.
inline void write_surface_csv(std::ostream& os, const Polynomial& H, const Box& region, const std::vector<int>& counts,
                              const std::vector<std::string>& names) {
  os << std::setprecision(17);
  for (const auto& n : names) os << n << ",";
  os << "H\n";
  verify_detail::for_each_grid_point(region, counts, [&](std::span<const double> z) {
    for (double v : z) os << v << ",";
    os << H.eval(z) << "\n";
  });
}

inline void write_trace_csv(std::ostream& os, const SearchResult& r, const std::vector<std::string>& names) {
  os << std::setprecision(17) << "iteration";
  for (const auto& n : names) os << "," << n;
  os << "\n";
  for (std::size_t k = 0; k < r.trace.size(); ++k) {
    os << k;
    for (double v : r.trace[k]) os << "," << v;
    os << "\n";
  }
}

inline void write_oracle_csv(std::ostream& os, const ValueOracle& o, const std::vector<std::string>& names) {
  os << std::setprecision(17);
  for (const auto& n : names) os << n << ",";
  os << "V\n";
  for (std::size_t k = 0; k < o.size(); ++k) {
    for (double v : o.node(k)) os << v << ",";
    if (o.value(k) == ValueOracle::kInf) {
      os << "inf\n";
    } else {
      os << o.value(k) << "\n";
    }
  }
}

}  // namespace heursos::io

#endif  // HEURSOS_IO_HPP
