#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "heursos/io.hpp"

namespace {

using namespace heursos;

const std::string data_dir = HEURSOS_DATA_DIR;

int schema_line(const std::string& text, bool world = false) {
  try {
    if (world) {
      io::world_from_json(text);
    } else {
      io::problem_from_json(text);
    }
  } catch (const io::SchemaError& e) {
    return e.line();
  }
  return -1;
}

TEST(ProblemFile, BundledProblemsLoad) {
  for (const char* name :
       {"single_integrator_1d", "double_integrator_1d", "double_integrator_unbounded", "pendulum", "shortest_path_2d",
        "unicycle"}) {
    EXPECT_NO_THROW(io::load_problem(data_dir + "/problems/" + name + ".json")) << name;
  }
  const auto pf = io::load_problem(data_dir + "/problems/single_integrator_1d.json");
  ASSERT_TRUE(pf.is_polynomial());
  EXPECT_EQ(pf.state_names, std::vector<std::string>{"x"});
  EXPECT_EQ(pf.deg_h, 10);
  ASSERT_TRUE(pf.measure);
  EXPECT_EQ(std::get<DiscreteMeasure>(pf.measure->data()).atoms.size(), 2u);
  EXPECT_FALSE(io::load_problem(data_dir + "/problems/unicycle.json").is_polynomial());
}

TEST(ProblemFile, ExplicitMatchesBuiltin) {
  const auto file = io::load_problem(data_dir + "/problems/single_integrator_1d.json");
  const auto bi = io::load_problem("builtin:single_integrator_1d");
  EXPECT_LE(file.poly().f()[0].max_coeff_diff(bi.poly().f()[0]), 0.0);
  EXPECT_LE(file.poly().g().max_coeff_diff(bi.poly().g()), 0.0);
  EXPECT_EQ(bi.state_names, std::vector<std::string>{"x1"});
}

TEST(ProblemFile, UnknownKeyReportsLine) {
  const std::string text = "{\n  \"builtin\": \"pendulum\",\n  \"colour\": 1\n}\n";
  EXPECT_EQ(schema_line(text), 3);
  try {
    io::problem_from_json(text);
  } catch (const io::SchemaError& e) {
    EXPECT_EQ(e.path(), "/colour");
    EXPECT_NE(std::string(e.what()).find("unknown key"), std::string::npos);
  }
}

TEST(ProblemFile, MalformedJsonReportsLine) {
  EXPECT_EQ(schema_line("{\n  \"builtin\": \"pendulum\",\n  ]\n}\n"), 3);
}

TEST(ProblemFile, SchemaViolations) {
  EXPECT_THROW(io::problem_from_json(R"({"builtin": "nope"})"), io::SchemaError);
  EXPECT_THROW(io::problem_from_json(R"({"builtin": "pendulum", "dynamics": []})"), io::SchemaError);
  EXPECT_THROW(io::problem_from_json(R"({"builtin": "pendulum", "params": {"rho": "1"}})"), io::SchemaError);
  const std::string bad_exponents = R"({"variables": {"state": ["x"], "control": ["u"]},
    "dynamics": [[[1.0, [0, -1]]]], "cost": 1.0,
    "sets": {"free": {"box": {"lo": [-1], "hi": [1]}}, "goal": {"point": [0]}}})";
  EXPECT_THROW(io::problem_from_json(bad_exponents), io::SchemaError);
  const std::string wrong_arity = R"({"variables": {"state": ["x"], "control": ["u"]},
    "dynamics": [[[1.0, [1]]]], "cost": 1.0,
    "sets": {"free": {"box": {"lo": [-1], "hi": [1]}}, "goal": {"point": [0]}}})";
  EXPECT_THROW(io::problem_from_json(wrong_arity), io::SchemaError);
  EXPECT_THROW(io::problem_from_json(R"({"builtin": "pendulum", "measure": {"atoms": []}})"), io::SchemaError);
  EXPECT_THROW(io::problem_from_json(R"({"builtin": "pendulum", "degrees": {"h": 4.5}})"), io::SchemaError);
}

TEST(HeuristicFile, RoundTripPreservesCertificate) {
  const auto pf = io::load_problem("builtin:single_integrator_1d");
  const auto r = synthesize(SynthesisRequest{pf.poly(), *pf.measure, 6});
  ASSERT_EQ(r.status, SynthesisStatus::Ok) << r.diagnostic;
  const std::string text = io::heuristic_to_json(*r.heuristic, pf.state_names, r.objective, "Ok").dump(2);
  const auto hf = io::heuristic_from_json(text);
  EXPECT_EQ(hf.variables, pf.state_names);
  EXPECT_EQ(hf.status, "Ok");
  ASSERT_TRUE(hf.objective);
  EXPECT_EQ(*hf.objective, r.objective);
  EXPECT_EQ(hf.heuristic.max_coeff_diff(*r.heuristic), 0.0);

  const auto a = certify_admissible(pf.poly(), *r.heuristic);
  const auto b = certify_admissible(pf.poly(), hf.heuristic);
  ASSERT_TRUE(a.certified() && b.certified());
  EXPECT_NEAR(a.certificate->max_residual, b.certificate->max_residual, 1e-10);
  EXPECT_NEAR(a.certificate->max_equality_residual, b.certificate->max_equality_residual, 1e-10);
}

TEST(HeuristicFile, SchemaViolations) {
  EXPECT_THROW(io::heuristic_from_json(R"({"terms": []})"), io::SchemaError);
  EXPECT_THROW(io::heuristic_from_json(R"({"nvars": 1, "terms": [[1.0, [1]]], "degree": 2})"), io::SchemaError);
  EXPECT_THROW(io::heuristic_from_json(R"({"nvars": 1, "terms": [], "variables": ["a", "b"]})"), io::SchemaError);
  EXPECT_THROW(io::heuristic_from_json(R"({"nvars": 1, "terms": [], "extra": 0})"), io::SchemaError);
  const auto hf = io::heuristic_from_json(R"({"nvars": 2, "terms": [[2.0, [1, 1]], [-1.0, [0, 0]]]})");
  EXPECT_DOUBLE_EQ(hf.heuristic.eval(std::vector<double>{2.0, 3.0}), 11.0);
}

TEST(WorldFile, SchemaViolations) {
  const std::string base = R"({
  "bounds": {"lo": [0, 0], "hi": [1, 1]},
  "start": [0.1, 0.1],
  "goal": {"lo": [0.8, 0.8], "hi": [0.9, 0.9]},
  "planner": {"controls": {"headings": 8}, "cell_size": [0.1, 0.1]}
})";
  EXPECT_NO_THROW(io::world_from_json(base));
  std::string bad = base;
  bad.replace(bad.find("\"headings\""), 10, "\"heading\"");
  EXPECT_EQ(schema_line(bad, true), 5);
  bad = base;
  bad.replace(bad.find("[0.1, 0.1]"), 10, "[0.1]");
  EXPECT_THROW(io::world_from_json(bad), io::SchemaError);
  bad = base;
  bad.replace(bad.find("\"hi\": [1, 1]"), 12, "\"hi\": [-1, 1]");
  EXPECT_THROW(io::world_from_json(bad), io::SchemaError);
  EXPECT_THROW(io::world_from_json(R"({"bounds": {"lo": [0], "hi": [1]}})"), io::SchemaError);
}

TEST(WorldFile, BundledPathsValidate) {
  const struct {
    const char* world;
    const char* problem;
  } cases[] = {{"shortest_path_2d", "shortest_path_2d"}, {"unicycle_corridor", "unicycle"}};
  for (const auto& c : cases) {
    const io::World w = io::load_world(data_dir + "/worlds/" + c.world + ".json");
    const BlackBoxProblem p = io::place_in_world(io::load_problem(data_dir + "/problems/" + c.problem + ".json").black_box(), w);
    const PlannerConfig cfg = io::planner_config(w, p);
    const HeuristicFn H = p.n == 2 ? euclidean_box_heuristic(w.goal) : unicycle_box_heuristic(w.goal);
    const SearchResult r = plan(p, H, cfg);
    ASSERT_EQ(r.status, SearchStatus::Solved) << c.world;
    const PathCheck check = validate_path(p, cfg, r);
    EXPECT_TRUE(check.ok) << c.world << ": " << check.reason;
    EXPECT_TRUE(w.goal.contains(r.states.back())) << c.world;
  }
}

TEST(Csv, OutputsAreByteIdentical) {
  const auto pf = io::load_problem("builtin:single_integrator_1d");
  const Polynomial x = Polynomial::variable(1, 0);
  auto render = [&] {
    std::ostringstream os;
    io::write_surface_csv(os, 0.5 * x * x, Box{{-1.0}, {1.0}}, {5}, pf.state_names);
    const auto o = value_oracle(pf.black_box(), OracleSpec{Box{{-1.0}, {1.0}}, {11}});
    io::write_oracle_csv(os, o, pf.state_names);
    return os.str();
  };
  const std::string a = render();
  EXPECT_EQ(a, render());
  EXPECT_EQ(a.substr(0, 5), "x1,H\n");
  EXPECT_NE(a.find("\n-1,0.5\n"), std::string::npos);
  EXPECT_EQ(a.find('\r'), std::string::npos);
  EXPECT_EQ(a.find('"'), std::string::npos);
}

TEST(Csv, TraceHasOneRowPerExpansion) {
  const io::World w = io::load_world(data_dir + "/worlds/shortest_path_2d.json");
  const BlackBoxProblem p = io::place_in_world(io::load_problem("builtin:shortest_path_nd").black_box(), w);
  PlannerConfig cfg = io::planner_config(w, p);
  cfg.record_trace = true;
  cfg.max_iterations = 50;
  const SearchResult r = plan(p, euclidean_box_heuristic(w.goal), cfg);
  std::ostringstream os;
  io::write_trace_csv(os, r, {"x", "y"});
  const std::string s = os.str();
  EXPECT_EQ(s.substr(0, 12), "iteration,x,");
  EXPECT_EQ(static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')), r.trace.size() + 1);
}

TEST(Report, CertificateReportListsBlocks) {
  const auto pf = io::load_problem("builtin:single_integrator_1d");
  const auto r = certify_admissible(pf.poly(), Polynomial::variable(1, 0));
  ASSERT_TRUE(r.certified());
  std::ostringstream os;
  io::write_certificate_report(os, *r.certificate);
  EXPECT_EQ(os.str().substr(0, 19), "certificate: valid\n");
  EXPECT_NE(os.str().find("block "), std::string::npos);
}

}  // namespace
