// heursos command-line frontend.

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "heursos/io.hpp"
#include "heursos/planner.hpp"
#include "heursos/synth.hpp"
#include "heursos/verify.hpp"

namespace {

using namespace heursos;

// Exit codes.
constexpr int kOk = 0;
constexpr int kRefuted = 1;
constexpr int kUsage = 2;
constexpr int kExhausted = 3;
constexpr int kCapReached = 4;
constexpr int kUnbounded = 5;
constexpr int kInfeasible = 6;
constexpr int kSolverFailure = 7;
constexpr int kRuntime = 8;

constexpr const char* kExitCodes =
    "Exit codes:\n"
    "  0  success (synth Ok, certified, no counterexample, plan solved)\n"
    "  1  refuted: certificate not found or counterexample found\n"
    "  2  usage or schema error\n"
    "  3  plan: goal unreachable (Exhausted)\n"
    "  4  plan: iteration cap reached\n"
    "  5  synth: Unbounded\n"
    "  6  synth: Infeasible\n"
    "  7  synth/verify: solver failure\n"
    "  8  other runtime error\n"
    "Set HEURSOS_VERBOSE=1 for per-iteration solver output.\n";

bool verbose() {
  const char* v = std::getenv("HEURSOS_VERBOSE");
  return v && *v && std::string(v) != "0";
}

SdpSettings sdp_settings() {
  SdpSettings s;
  s.verbose = verbose();
  return s;
}

std::vector<std::string> names_for(const io::ProblemFile& pf) { return pf.state_names; }

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

std::string fmt(const std::vector<double>& z) {
  std::string s = "(";
  for (std::size_t i = 0; i < z.size(); ++i) s += (i ? ", " : "") + fmt(z[i]);
  return s + ")";
}

/// Heuristic by name: zero, euclid, unicycle, pendulum:ALPHA, or a JSON file.
Heuristic heuristic_by_spec(const std::string& spec, std::size_t n) {
  if (spec == "zero") return Heuristic::from_polynomial(Polynomial(n));
  if (spec == "euclid") return euclidean_heuristic(n);
  if (spec == "unicycle") {
    if (n != 3) throw std::invalid_argument("unicycle heuristic needs a 3-state problem");
    return unicycle_heuristic();
  }
  if (spec.rfind("pendulum:", 0) == 0) {
    if (n != 2) throw std::invalid_argument("pendulum heuristic needs a 2-state problem");
    return pendulum_heuristic(std::stod(spec.substr(9)));
  }
  const io::HeuristicFile hf = io::load_heuristic(spec);
  if (hf.heuristic.nvars() != n) throw std::invalid_argument("heuristic dimension does not match the problem");
  return Heuristic::from_polynomial(hf.heuristic);
}

int cmd_synth(const std::string& problem, int degree, int lambda_degree, double epsilon, const std::string& out,
              int surface) {
  const io::ProblemFile pf = io::load_problem(problem);
  const int d = degree > 0 ? degree : pf.deg_h.value_or(-1);
  if (d < 0) throw io::SchemaError("/degrees/h", "no degree given (use --degree)");
  if (!pf.measure) throw io::SchemaError("/measure", "no measure given");
  SynthesisRequest req{pf.poly(), *pf.measure, d};
  req.deg_lambda = lambda_degree >= 0 ? lambda_degree : pf.deg_lambda.value_or(-1);
  req.sdp = sdp_settings();
  req.margin = epsilon;
  const SynthesisResult r = synthesize(req);

  std::cout << "status " << to_string(r.status) << "\n";
  std::cout << "solver " << to_string(r.solver_status) << " iterations " << r.solver_iterations << "\n";
  std::cout << "diagnostic " << r.diagnostic << "\n";
  if (r.heuristic) {
    std::cout << "objective " << fmt(r.objective) << "\n";
    std::cout << "H = " << r.heuristic->to_string() << "\n";
    if (!out.empty()) {
      write_file(out + ".json",
                 io::heuristic_to_json(*r.heuristic, names_for(pf), r.objective, to_string(r.status)).dump(2) + "\n");
      std::ostringstream rep;
      rep << "status " << to_string(r.status) << "\n";
      if (r.certificate) io::write_certificate_report(rep, *r.certificate);
      write_file(out + "_certificate.txt", rep.str());
      std::ostringstream csv;
      const Box region = pf.measure->support_bounds();
      std::vector<int> counts(pf.state_dim(), surface);
      for (std::size_t i = 0; i < region.dim(); ++i) {
        if (region.lo[i] == region.hi[i]) counts[i] = 1;
      }
      io::write_surface_csv(csv, *r.heuristic, region, counts, names_for(pf));
      write_file(out + "_surface.csv", csv.str());
    }
  }
  switch (r.status) {
    case SynthesisStatus::Ok: return kOk;
    case SynthesisStatus::Unbounded: return kUnbounded;
    case SynthesisStatus::Infeasible: return kInfeasible;
    case SynthesisStatus::SolverFailure: return kSolverFailure;
  }
  return kRuntime;
}

int cmd_verify(const std::string& problem, const std::string& heuristic, int lambda_degree, bool consistent) {
  const io::ProblemFile pf = io::load_problem(problem);
  const io::HeuristicFile hf = io::load_heuristic(heuristic);
  CertifySettings cs;
  cs.sdp = sdp_settings();
  const CertifyResult r = consistent ? certify_consistent(pf.poly(), hf.heuristic, lambda_degree, cs)
                                     : certify_admissible(pf.poly(), hf.heuristic, lambda_degree, cs);
  std::cout << (consistent ? "consistency " : "admissibility ") << to_string(r.outcome) << "\n";
  std::cout << "multiplier_degree " << r.lambda_degree << "\n";
  for (const auto& [deg, st] : r.attempts) std::cout << "attempt degree " << deg << " " << to_string(st) << "\n";
  if (!r.reason.empty()) std::cout << "reason " << r.reason << "\n";
  if (r.certificate) io::write_certificate_report(std::cout, *r.certificate);
  switch (r.outcome) {
    case CertifyResult::Outcome::Certified: return kOk;
    case CertifyResult::Outcome::RelaxationInfeasible:
    case CertifyResult::Outcome::GoalConditionFailed: return kRefuted;
    case CertifyResult::Outcome::SolverFailure: return kSolverFailure;
  }
  return kRuntime;
}

int cmd_falsify(const std::string& problem, const std::string& heuristic, std::vector<int> grid, std::size_t samples,
                double tolerance) {
  const io::ProblemFile pf = io::load_problem(problem);
  const BlackBoxProblem bb = pf.black_box();
  if (grid.empty()) {
    grid.assign(bb.n, 51);
    grid.insert(grid.end(), bb.m, 21);
  }
  FalsifySettings fs{grid, samples, tolerance};
  const FalsifyReport r = falsify(bb, heuristic_by_spec(heuristic, bb.n), fs);
  std::cout << "evaluated " << r.evaluated << " skipped_kinks " << r.skipped_kinks << " tie_points " << r.tie_points
            << "\n";
  std::cout << "min_value " << fmt(r.min_value) << " at state " << fmt(r.min_state) << " control "
            << fmt(r.min_control) << "\n";
  if (r.none_found()) {
    std::cout << "none-found\n";
    return kOk;
  }
  const Counterexample& c = *r.counterexample;
  std::cout << "counterexample " << to_string(c.condition) << " value " << fmt(c.value) << " state " << fmt(c.state)
            << " control " << fmt(c.control) << "\n";
  return kRefuted;
}

HeuristicFn planner_heuristic(const std::string& spec, const io::World& w, std::size_t n) {
  if (spec == "zero") return [](std::span<const double>) { return 0.0; };
  if (spec == "euclid") return euclidean_box_heuristic(w.goal);
  if (spec == "unicycle") return unicycle_box_heuristic(w.goal);
  const io::HeuristicFile hf = io::load_heuristic(spec);
  if (hf.heuristic.nvars() != n) throw std::invalid_argument("heuristic dimension does not match the world");
  return [H = hf.heuristic](std::span<const double> z) { return H.eval(z); };
}

int cmd_plan(const std::string& world, const std::string& problem, const std::string& heuristic,
             const std::string& trace, long max_iterations) {
  const io::World w = io::load_world(world);
  const io::ProblemFile pf = io::load_problem(problem);
  const BlackBoxProblem bb = io::place_in_world(pf.black_box(), w);
  PlannerConfig cfg = io::planner_config(w, bb);
  if (max_iterations > 0) cfg.max_iterations = static_cast<std::size_t>(max_iterations);
  cfg.record_trace = !trace.empty();
  const SearchResult r = plan(bb, planner_heuristic(heuristic, w, bb.n), cfg);
  std::cout << "status " << to_string(r.status) << "\n";
  std::cout << "iterations " << r.iterations << "\n";
  std::cout << "generated " << r.generated << "\n";
  if (r.status == SearchStatus::Solved) {
    std::cout << "cost " << fmt(r.cost) << "\n";
    std::cout << "edges " << r.controls.size() << "\n";
  }
  if (!trace.empty()) {
    std::ostringstream csv;
    io::write_trace_csv(csv, r, pf.state_names);
    write_file(trace, csv.str());
  }
  switch (r.status) {
    case SearchStatus::Solved: return kOk;
    case SearchStatus::Exhausted: return kExhausted;
    case SearchStatus::CapReached: return kCapReached;
  }
  return kRuntime;
}

int cmd_report(const std::string& world, const std::string& problem, const std::string& heuristic) {
  const io::World w = io::load_world(world);
  const io::ProblemFile pf = io::load_problem(problem);
  const BlackBoxProblem bb = io::place_in_world(pf.black_box(), w);
  const PlannerConfig cfg = io::planner_config(w, bb);
  const SpeedupReport r = admissible_speedup_report(bb, planner_heuristic(heuristic, w, bb.n), cfg);
  io::json j;
  j["informed_iters"] = r.informed_iters;
  j["uninformed_iters"] = r.uninformed_iters;
  j["informed_cost"] = r.informed_cost;
  j["uninformed_cost"] = r.uninformed_cost;
  j["reduction_fraction"] = r.reduction_fraction;
  j["cost_quantum"] = r.cost_quantum;
  j["cost_mismatch"] = r.cost_mismatch;
  std::cout << j.dump(2) << "\n";
  return kOk;
}

int cmd_oracle(const std::string& problem, const std::vector<double>& lo, const std::vector<double>& hi,
               const std::vector<int>& counts, double dt, int controls, const std::string& heuristic,
               const std::string& out) {
  const io::ProblemFile pf = io::load_problem(problem);
  const BlackBoxProblem bb = pf.black_box();
  OracleSpec spec;
  spec.box = lo.empty() ? bb.x_bounds : Box{lo, hi};
  spec.counts = counts.empty() ? std::vector<int>(bb.n, 61) : counts;
  spec.dt = dt;
  spec.controls_per_axis = controls;
  if (spec.box.dim() != bb.n || spec.counts.size() != bb.n) throw io::SchemaError("", "grid dimension mismatch");
  const ValueOracle o = value_oracle(bb, spec);
  std::size_t finite = 0;
  for (double v : o.values()) finite += v != ValueOracle::kInf;
  std::cout << "sweeps " << o.sweeps() << "\n";
  std::cout << "finite_nodes " << finite << " of " << o.size() << "\n";
  std::cout << "error_estimate " << fmt(o.error_estimate()) << "\n";
  std::ostringstream csv;
  if (!heuristic.empty()) {
    const io::HeuristicFile hf = io::load_heuristic(heuristic);
    const Comparison c = compare(hf.heuristic, o);
    std::cout << "max_overshoot " << fmt(c.max_overshoot) << "\n";
    std::cout << "mean_gap " << fmt(c.mean_gap) << "\n";
    write_comparison_csv(csv, c, bb.n);
  } else {
    io::write_oracle_csv(csv, o, pf.state_names);
  }
  if (!out.empty()) write_file(out, csv.str());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Admissible heuristics for kinodynamic planning via sum-of-squares programming"};
  app.footer(kExitCodes);
  app.require_subcommand(1);

  std::string problem, heuristic, out, world, trace;
  int degree = -1, lambda_degree = -1, surface = 101, controls = 11;
  double epsilon = 0.0, tolerance = 1e-9, dt = 0.02;
  bool consistent = false;
  std::vector<int> grid, counts;
  std::vector<double> lo, hi;
  std::size_t samples = 10000;
  long max_iterations = 0;

  auto* synth = app.add_subcommand("synth", "Synthesize a certified polynomial heuristic");
  synth->add_option("problem", problem, "Problem file or builtin:NAME")->required();
  synth->add_option("--degree", degree, "Degree of H (even, >= 2)");
  synth->add_option("--lambda-degree", lambda_degree, "Multiplier degree (default: largest admissible)");
  synth->add_option("--epsilon", epsilon, "Admissibility margin subtracted from H");
  synth->add_option("--out", out, "Output prefix for .json, _certificate.txt and _surface.csv");
  synth->add_option("--surface", surface, "Surface CSV points per axis");

  auto* verify = app.add_subcommand("verify", "Certify a polynomial heuristic by SOS");
  verify->add_option("problem", problem, "Problem file or builtin:NAME")->required();
  verify->add_option("heuristic", heuristic, "Heuristic JSON file")->required();
  verify->add_option("--lambda-degree", lambda_degree, "Initial multiplier degree");
  verify->add_flag("--consistent", consistent, "Check consistency instead of admissibility");

  auto* fals = app.add_subcommand("falsify", "Search for pointwise violations on a grid");
  fals->add_option("problem", problem, "Problem file or builtin:NAME")->required();
  fals->add_option("heuristic", heuristic, "zero, euclid, unicycle, pendulum:ALPHA, or a heuristic JSON file")
      ->required();
  fals->add_option("--grid", grid, "Points per axis, states then controls")->delimiter(',');
  fals->add_option("--samples", samples, "Low-discrepancy samples");
  fals->add_option("--tolerance", tolerance, "Violation threshold");

  auto* pl = app.add_subcommand("plan", "Run the kinodynamic search on a world");
  pl->add_option("world", world, "World file")->required();
  pl->add_option("problem", problem, "Problem file or builtin:NAME")->required();
  pl->add_option("--heuristic", heuristic, "zero, euclid, unicycle, or a heuristic JSON file")->default_val("zero");
  pl->add_option("--trace", trace, "CSV of expanded states");
  pl->add_option("--max-iterations", max_iterations, "Override the world's iteration cap");

  auto* rep = app.add_subcommand("report", "Compare informed and zero-heuristic search");
  rep->add_option("world", world, "World file")->required();
  rep->add_option("problem", problem, "Problem file or builtin:NAME")->required();
  rep->add_option("--heuristic", heuristic, "euclid, unicycle, or a heuristic JSON file")->required();

  auto* orc = app.add_subcommand("oracle", "Value-function oracle by value iteration");
  orc->add_option("problem", problem, "Problem file or builtin:NAME")->required();
  orc->add_option("--lo", lo, "Grid lower corner")->delimiter(',');
  orc->add_option("--hi", hi, "Grid upper corner")->delimiter(',');
  orc->add_option("--counts", counts, "Nodes per axis (odd)")->delimiter(',');
  orc->add_option("--dt", dt, "Time step");
  orc->add_option("--controls", controls, "Control samples per axis");
  orc->add_option("--compare", heuristic, "Heuristic JSON file to compare against");
  orc->add_option("--out", out, "CSV output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*synth) return cmd_synth(problem, degree, lambda_degree, epsilon, out, surface);
    if (*verify) return cmd_verify(problem, heuristic, lambda_degree, consistent);
    if (*fals) return cmd_falsify(problem, heuristic, grid, samples, tolerance);
    if (*pl) return cmd_plan(world, problem, heuristic, trace, max_iterations);
    if (*rep) return cmd_report(world, problem, heuristic);
    if (*orc) {
      if (lo.size() != hi.size()) throw io::SchemaError("", "--lo and --hi need the same length");
      return cmd_oracle(problem, lo, hi, counts, dt, controls, heuristic, out);
    }
  } catch (const io::SchemaError& e) {
    std::cerr << e.what() << "\n";
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kUsage;
}
