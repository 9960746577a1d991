// End-to-end heuristic synthesis, the built-in example problems, and a
// brute-force value-function oracle used as ground truth in tests.

#ifndef HEURSOS_SYNTH_HPP
#define HEURSOS_SYNTH_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "heursos/poly.hpp"
#include "heursos/sdp.hpp"
#include "heursos/semialg.hpp"
#include "heursos/sosprog.hpp"
#include "heursos/verify.hpp"

namespace heursos {

enum class SynthesisStatus { Ok, Unbounded, Infeasible, SolverFailure };

inline const char* to_string(SynthesisStatus s) {
  switch (s) {
    case SynthesisStatus::Ok: return "Ok";
    case SynthesisStatus::Unbounded: return "Unbounded";
    case SynthesisStatus::Infeasible: return "Infeasible";
    case SynthesisStatus::SolverFailure: return "SolverFailure";
  }
  return "?";
}

struct SynthesisRequest {
  PolyProblem problem;
  Measure measure;
  int deg_h = 2;
  /// < 0: default multiplier degree.
  int deg_lambda = -1;
  SdpSettings sdp;
  HeuristicProgramOptions program;
  /// Post-verification grid (state axes, then control axes). Empty: 41 per
  /// state axis and 21 per control axis.
  std::vector<int> verify_grid;
  std::size_t verify_samples = 2000;
  /// Pointwise AH2 tolerance of the post-verification.
  double verify_tolerance = 1e-6;
  /// Subtracted from H after extraction; 0 disables.
  double margin = 0.0;
  /// Certificate acceptance thresholds.
  double eig_tolerance = 1e-8;
  double residual_tolerance = 1e-7;
};

struct SynthesisResult {
  SynthesisStatus status = SynthesisStatus::SolverFailure;
  std::optional<Polynomial> heuristic;
  /// Integral of H against the measure.
  double objective = std::numeric_limits<double>::quiet_NaN();
  std::optional<SosCertificate> certificate;
  std::optional<FalsifyReport> verification;
  SdpStatus solver_status = SdpStatus::NumericalFailure;
  int solver_iterations = 0;
  int lambda_degree = 0;
  double seconds = 0.0;
  std::string diagnostic;

  bool ok() const { return status == SynthesisStatus::Ok; }
};

namespace synth_detail {

inline bool within(const Box& inner, const Box& outer, double tol = 1e-12) {
  for (std::size_t i = 0; i < inner.dim(); ++i) {
    if (inner.lo[i] < outer.lo[i] - tol || inner.hi[i] > outer.hi[i] + tol) return false;
  }
  return true;
}

inline std::string format_point(std::span<const double> z) {
  std::ostringstream os;
  os << std::setprecision(4) << "(";
  for (std::size_t i = 0; i < z.size(); ++i) os << (i ? ", " : "") << z[i];
  os << ")";
  return os.str();
}

// Where the last iterate's H is largest on the measure support: the region
// suspected of infinite value.
inline std::string unbounded_diagnostic(const HeuristicProgram& hp, const SdpSolution& sol, const Measure& m) {
  std::ostringstream os;
  const Box sup = m.support_bounds();
  os << "objective diverges; the measure support " << format_point(sup.lo) << " to " << format_point(sup.hi)
     << " likely contains states from which the goal cannot be reached without leaving X_free";
  if (sol.free.size() >= static_cast<Eigen::Index>(hp.h_basis.size()) && sol.free.allFinite()) {
    const Polynomial H = hp.heuristic(sol.free.head(static_cast<Eigen::Index>(hp.h_basis.size())));
    std::vector<int> counts(sup.dim(), 21);
    double best = -std::numeric_limits<double>::infinity();
    std::vector<double> arg;
    verify_detail::for_each_grid_point(sup, counts, [&](std::span<const double> x) {
      const double v = H.eval(x);
      if (std::isfinite(v) && v > best) {
        best = v;
        arg.assign(x.begin(), x.end());
      }
    });
    if (!arg.empty()) os << "; H is largest near " << format_point(arg);
  }
  return os.str();
}

}  // namespace synth_detail

inline SynthesisResult synthesize(const SynthesisRequest& req) {
  const auto t0 = std::chrono::steady_clock::now();
  const PolyProblem& p = req.problem;
  if (req.deg_h < 2 || req.deg_h % 2 != 0) throw std::invalid_argument("synthesize: degH must be even and >= 2");
  if (req.measure.nvars() != p.state_dim()) throw std::invalid_argument("synthesize: measure dimension mismatch");
  if (p.xfree().bounds() && !synth_detail::within(req.measure.support_bounds(), *p.xfree().bounds())) {
    throw std::invalid_argument("synthesize: measure support must lie within X_free's bounding box");
  }

  SynthesisResult r;
  const HeuristicProgram hp = build_heuristic_program(p.data(), req.measure, req.deg_h, req.deg_lambda, req.program);
  r.lambda_degree = hp.lambda_degree;
  const SdpSolution sol = solve(to_sdp(hp.program), req.sdp);
  r.solver_status = sol.status;
  r.solver_iterations = sol.iterations;
  auto done = [&](SynthesisStatus s, std::string msg) {
    r.status = s;
    r.diagnostic = std::move(msg);
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
  };

  const bool diverged = std::abs(sol.primal_objective) > req.sdp.objective_limit;
  if (sol.status == SdpStatus::DualInfeasible || diverged) {
    return done(SynthesisStatus::Unbounded, synth_detail::unbounded_diagnostic(hp, sol, req.measure));
  }
  if (sol.status == SdpStatus::PrimalInfeasible) {
    return done(SynthesisStatus::Infeasible, "no heuristic of this degree satisfies the SOS conditions");
  }
  Extraction ex = extract_heuristic(hp, sol, req.margin);
  if (!ex.heuristic) {
    return done(SynthesisStatus::SolverFailure, std::string("solver: ") + to_string(sol.status) + " (" + sol.message + ")");
  }
  r.heuristic = ex.heuristic;
  r.certificate = ex.certificate;
  r.objective = integrate(req.measure, *ex.heuristic);
  if (!ex.certificate->valid(req.eig_tolerance, req.residual_tolerance)) {
    std::ostringstream os;
    os << "certificate re-check failed: min eigenvalue " << ex.certificate->min_eigenvalue() << ", residual "
       << ex.certificate->max_residual << ", goal residual " << ex.certificate->max_equality_residual;
    return done(SynthesisStatus::SolverFailure, os.str());
  }

  FalsifySettings fs;
  fs.grid = req.verify_grid;
  if (fs.grid.empty()) {
    fs.grid.assign(p.state_dim(), 41);
    fs.grid.insert(fs.grid.end(), p.control_dim(), 21);
  }
  fs.halton_samples = req.verify_samples;
  fs.tolerance = req.verify_tolerance;
  r.verification = falsify(to_black_box(p), Heuristic::from_polynomial(*r.heuristic), fs);
  if (!r.verification->none_found()) {
    const auto& c = *r.verification->counterexample;
    return done(SynthesisStatus::SolverFailure, std::string("post-verification found an ") + to_string(c.condition) +
                                                    " violation " + std::to_string(c.value) + " at " +
                                                    synth_detail::format_point(c.state));
  }
  return done(SynthesisStatus::Ok, "certified");
}

// ---------------------------------------------------------------------------
// Built-in problems.

struct BuiltinParams {
  /// Dimension of shortest_path_nd.
  int n = 2;
  /// Cost weight of the pendulum.
  double rho = 1.0;
  /// Pendulum with sin replaced by its cubic Taylor polynomial.
  bool taylor = false;
};

using AnyProblem = std::variant<PolyProblem, BlackBoxProblem>;

inline std::vector<std::string> builtin_names() {
  return {"single_integrator_1d", "double_integrator_1d", "shortest_path_nd", "unicycle", "pendulum"};
}

namespace synth_detail {

inline BlackBoxProblem pendulum(double rho) {
  const double pi = std::numbers::pi;
  BlackBoxProblem b;
  b.n = 2;
  b.m = 1;
  b.f = [](std::span<const double> x, std::span<const double> u) {
    return std::vector<double>{x[1], std::sin(x[0]) + u[0]};
  };
  b.g = [rho](std::span<const double> x, std::span<const double> u) {
    return rho * (x[0] * x[0] + x[1] * x[1] + u[0] * u[0]);
  };
  b.in_xfree = [](std::span<const double>) { return true; };
  b.in_omega = [](std::span<const double> u) { return std::abs(u[0]) <= 1.0; };
  b.x_bounds = Box{{-pi, -pi}, {pi, pi}};
  b.u_bounds = Box{{-1.0}, {1.0}};
  b.in_goal = [](std::span<const double> x) { return x[0] == 0.0 && x[1] == 0.0; };
  b.goal_points = {{0.0, 0.0}};
  return b;
}

inline BlackBoxProblem unicycle() {
  const double pi = std::numbers::pi;
  BlackBoxProblem b;
  b.n = 3;
  b.m = 1;
  b.f = [](std::span<const double> x, std::span<const double> u) {
    return std::vector<double>{std::cos(x[2]), std::sin(x[2]), u[0]};
  };
  b.g = [](std::span<const double>, std::span<const double>) { return 1.0; };
  b.in_xfree = [](std::span<const double>) { return true; };
  b.in_omega = [](std::span<const double> u) { return std::abs(u[0]) <= 1.0; };
  b.x_bounds = Box{{-2.0, -2.0, -pi}, {2.0, 2.0, pi}};
  b.u_bounds = Box{{-1.0}, {1.0}};
  b.in_goal = [](std::span<const double> x) { return x[0] == 0.0 && x[1] == 0.0 && x[2] == 0.0; };
  b.goal_points = {{0.0, 0.0, 0.0}};
  return b;
}

}  // namespace synth_detail

/// Example problems. Unicycle and pendulum have trigonometric dynamics and
/// are returned as black boxes unless `taylor` requests the polynomial
/// pendulum (sin t ~ t - t^3/6, error below pi^5/120 ~ 2.55 on [-pi, pi]).
inline AnyProblem builtin(std::string_view name, const BuiltinParams& prm = {}) {
  if (name == "single_integrator_1d") {
    // x' = u, g = 1, X_free = Omega = [-1, 1], goal {0}.
    return PolyProblem(PolyVector({Polynomial::variable(2, 1)}), Polynomial::constant(2, 1.0), box({-1.0}, {1.0}),
                       box({-1.0}, {1.0}), GoalSpec::point({0.0}));
  }
  if (name == "double_integrator_1d") {
    // (x1', x2') = (x2, u), g = 1, X_free = [-3, 3]^2, Omega = [-1, 1].
    return PolyProblem(PolyVector({Polynomial::variable(3, 1), Polynomial::variable(3, 2)}), Polynomial::constant(3, 1.0),
                       box({-3.0, -3.0}, {3.0, 3.0}), box({-1.0}, {1.0}), GoalSpec::point({0.0, 0.0}));
  }
  if (name == "shortest_path_nd") {
    // x' = u with |u| <= 1 (same value function as |u| = 1), X_free = [-1, 1]^n.
    if (prm.n < 1) throw std::invalid_argument("builtin: shortest_path_nd needs n >= 1");
    const std::size_t n = static_cast<std::size_t>(prm.n);
    const std::size_t nz = 2 * n;
    std::vector<Polynomial> f;
    for (std::size_t i = 0; i < n; ++i) f.push_back(Polynomial::variable(nz, n + i));
    Polynomial ball = Polynomial::constant(n, 1.0);
    for (std::size_t i = 0; i < n; ++i) ball -= Polynomial::variable(n, i) * Polynomial::variable(n, i);
    const std::vector<double> lo(n, -1.0), hi(n, 1.0);
    return PolyProblem(PolyVector(std::move(f)), Polynomial::constant(nz, 1.0), box(lo, hi),
                       SemialgebraicSet(n, {ball}, Box{lo, hi}), GoalSpec::point(std::vector<double>(n, 0.0)));
  }
  if (name == "unicycle") return synth_detail::unicycle();
  if (name == "pendulum") {
    if (!(prm.rho > 0.0)) throw std::invalid_argument("builtin: pendulum needs rho > 0");
    if (!prm.taylor) return synth_detail::pendulum(prm.rho);
    const double pi = std::numbers::pi;
    const Polynomial th = Polynomial::variable(3, 0), om = Polynomial::variable(3, 1), u = Polynomial::variable(3, 2);
    const Polynomial sin3 = th - (1.0 / 6.0) * th * th * th;
    return PolyProblem(PolyVector({om, sin3 + u}), prm.rho * (th * th + om * om + u * u), box({-pi, -pi}, {pi, pi}),
                       box({-1.0}, {1.0}), GoalSpec::point({0.0, 0.0}));
  }
  throw std::invalid_argument("builtin: unknown problem '" + std::string(name) + "'");
}

/// Closed-form heuristics from the examples.
inline Heuristic euclidean_heuristic(std::size_t n) {
  Heuristic h;
  h.nvars = n;
  h.value = [](std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
  };
  h.gradient = [h_value = h.value](std::span<const double> x) {
    const double r = h_value(x);
    std::vector<double> g(x.begin(), x.end());
    for (double& v : g) v /= r;
    return g;
  };
  h.kink = [h_value = h.value](std::span<const double> x) { return h_value(x) == 0.0 ? KinkKind::Kink : KinkKind::None; };
  return h;
}

/// max{|(x, y)|, |theta|} for the unicycle.
inline Heuristic unicycle_heuristic() {
  Heuristic planar;
  planar.nvars = 3;
  planar.value = [](std::span<const double> x) { return std::hypot(x[0], x[1]); };
  planar.gradient = [](std::span<const double> x) {
    const double r = std::hypot(x[0], x[1]);
    return std::vector<double>{x[0] / r, x[1] / r, 0.0};
  };
  planar.kink = [](std::span<const double> x) { return x[0] == 0.0 && x[1] == 0.0 ? KinkKind::Kink : KinkKind::None; };
  Heuristic heading;
  heading.nvars = 3;
  heading.value = [](std::span<const double> x) { return std::abs(x[2]); };
  heading.gradient = [](std::span<const double> x) { return std::vector<double>{0.0, 0.0, x[2] > 0.0 ? 1.0 : -1.0}; };
  heading.kink = [](std::span<const double> x) { return x[2] == 0.0 ? KinkKind::Kink : KinkKind::None; };
  return max_of(std::move(planar), std::move(heading));
}

/// (alpha / 2)(theta^2 + omega^2).
inline Heuristic pendulum_heuristic(double alpha) {
  Polynomial th = Polynomial::variable(2, 0), om = Polynomial::variable(2, 1);
  return Heuristic::from_polynomial(0.5 * alpha * (th * th + om * om));
}

/// Minimum time to the origin for x1' = x2, x2' = u, |u| <= 1, no state
/// constraints (bang-bang with one switch).
inline double double_integrator_min_time(double x1, double x2) {
  if (x1 >= -x2 * std::abs(x2) / 2.0) return x2 + 2.0 * std::sqrt(x1 + x2 * x2 / 2.0);
  return -x2 + 2.0 * std::sqrt(-x1 + x2 * x2 / 2.0);
}

// ---------------------------------------------------------------------------
// Value oracle.

struct OracleSpec {
  Box box;
  /// Nodes per axis (odd counts allow the nested coarse grid used for the
  /// error estimate).
  std::vector<int> counts;
  int controls_per_axis = 11;
  double dt = 0.02;
  /// Upper bound on the dt steps chained into one transition.
  int max_substeps = 50;
  double tol = 1e-6;
  int max_sweeps = 100000;
  bool estimate_error = true;
  /// Value of nodes that cannot reach the goal during iteration; must exceed
  /// every finite value of interest.
  double sentinel = 1e4;
  /// Nodes whose greedy trajectories end at a sentinel node with larger
  /// probability than this are reported as +inf. Finite values omit the cost
  /// those trajectories would accrue after absorption.
  double lost_tolerance = 1e-3;
};

/// Grid approximation of the value function by semi-Lagrangian value
/// iteration with multilinear interpolation. Unreachable nodes hold +inf.
class ValueOracle {
 public:
  ValueOracle() = default;
  ValueOracle(Box box, std::vector<int> counts, std::vector<std::vector<double>> controls, double dt)
      : box_(std::move(box)), counts_(std::move(counts)), controls_(std::move(controls)), dt_(dt) {
    if (box_.dim() != counts_.size() || box_.dim() == 0) throw std::invalid_argument("ValueOracle: grid dimension mismatch");
    std::size_t total = 1;
    for (int c : counts_) {
      if (c < 2) throw std::invalid_argument("ValueOracle: need at least 2 nodes per axis");
      total *= static_cast<std::size_t>(c);
    }
    values_.assign(total, kInf);
  }

  static constexpr double kInf = std::numeric_limits<double>::infinity();

  std::size_t dim() const { return box_.dim(); }
  const Box& box() const { return box_; }
  const std::vector<int>& counts() const { return counts_; }
  const std::vector<std::vector<double>>& controls() const { return controls_; }
  double dt() const { return dt_; }
  std::size_t size() const { return values_.size(); }
  double spacing(std::size_t i) const { return (box_.hi[i] - box_.lo[i]) / (counts_[i] - 1); }

  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }
  double value(std::size_t node) const { return values_[node]; }

  double error_estimate() const { return error_estimate_; }
  void set_error_estimate(double e) { error_estimate_ = e; }
  int sweeps() const { return sweeps_; }
  void set_sweeps(int s) { sweeps_ = s; }
  bool converged() const { return converged_; }
  void set_converged(bool c) { converged_ = c; }

  std::vector<double> node(std::size_t index) const {
    std::vector<double> z(dim());
    for (std::size_t i = dim(); i-- > 0;) {
      const int k = static_cast<int>(index % counts_[i]);
      index /= counts_[i];
      z[i] = box_.lo[i] + spacing(i) * k;
    }
    return z;
  }

  /// Multilinear interpolation; +inf if any contributing node is +inf or the
  /// point lies outside the grid.
  double interpolate(std::span<const double> z) const {
    const std::size_t d = dim();
    std::size_t base = 0;
    double frac[8];
    std::size_t stride[8];
    if (d > 8) throw std::invalid_argument("ValueOracle: dimension too large");
    std::size_t s = 1;
    for (std::size_t i = d; i-- > 0;) {
      stride[i] = s;
      s *= counts_[i];
    }
    for (std::size_t i = 0; i < d; ++i) {
      double t = (z[i] - box_.lo[i]) / spacing(i);
      if (t < -1e-9 || t > counts_[i] - 1 + 1e-9) return kInf;
      if (std::abs(t - std::round(t)) < 1e-9) t = std::round(t);
      int k = static_cast<int>(std::floor(t));
      k = std::clamp(k, 0, counts_[i] - 2);
      frac[i] = std::clamp(t - k, 0.0, 1.0);
      base += stride[i] * k;
    }
    double v = 0.0;
    for (std::size_t corner = 0; corner < (std::size_t{1} << d); ++corner) {
      double w = 1.0;
      std::size_t idx = base;
      for (std::size_t i = 0; i < d; ++i) {
        if (corner >> i & 1) {
          w *= frac[i];
          idx += stride[i];
        } else {
          w *= 1.0 - frac[i];
        }
      }
      if (w == 0.0) continue;
      const double vi = values_[idx];
      if (vi == kInf) return kInf;
      v += w * vi;
    }
    return v;
  }

 private:
  Box box_;
  std::vector<int> counts_;
  std::vector<std::vector<double>> controls_;
  double dt_ = 0.02;
  std::vector<double> values_;
  double error_estimate_ = 0.0;
  int sweeps_ = 0;
  bool converged_ = false;
};

namespace synth_detail {

inline std::vector<std::vector<double>> control_samples(const BlackBoxProblem& p, int per_axis) {
  std::vector<std::vector<double>> out;
  if (p.m == 0) return {{}};
  std::vector<int> counts(p.m, per_axis);
  verify_detail::for_each_grid_point(p.u_bounds, counts, [&](std::span<const double> u) {
    if (p.in_omega(u)) out.emplace_back(u.begin(), u.end());
  });
  if (out.empty()) throw std::invalid_argument("value_oracle: no control sample lies in Omega");
  return out;
}

// Interpolation stencil of a successor point: node indices and weights.
struct Stencil {
  std::vector<std::size_t> index;
  std::vector<double> weight;
};

inline std::optional<Stencil> stencil(const ValueOracle& o, std::span<const double> z) {
  const std::size_t d = o.dim();
  std::vector<std::size_t> stride(d);
  std::size_t s = 1;
  for (std::size_t i = d; i-- > 0;) {
    stride[i] = s;
    s *= o.counts()[i];
  }
  std::size_t base = 0;
  std::vector<double> frac(d);
  for (std::size_t i = 0; i < d; ++i) {
    double t = (z[i] - o.box().lo[i]) / o.spacing(i);
    if (t < -1e-9 || t > o.counts()[i] - 1 + 1e-9) return std::nullopt;
    if (std::abs(t - std::round(t)) < 1e-9) t = std::round(t);
    const int k = std::clamp(static_cast<int>(std::floor(t)), 0, o.counts()[i] - 2);
    frac[i] = std::clamp(t - k, 0.0, 1.0);
    base += stride[i] * k;
  }
  Stencil st;
  for (std::size_t corner = 0; corner < (std::size_t{1} << d); ++corner) {
    double w = 1.0;
    std::size_t idx = base;
    for (std::size_t i = 0; i < d; ++i) {
      if (corner >> i & 1) {
        w *= frac[i];
        idx += stride[i];
      } else {
        w *= 1.0 - frac[i];
      }
    }
    if (w <= 0.0) continue;
    st.index.push_back(idx);
    st.weight.push_back(w);
  }
  return st;
}

inline ValueOracle run_value_iteration(const BlackBoxProblem& p, const OracleSpec& spec) {
  if (spec.box.dim() != p.n || spec.counts.size() != p.n) throw std::invalid_argument("value_oracle: grid dimension mismatch");
  if (!(spec.dt > 0.0)) throw std::invalid_argument("value_oracle: dt must be positive");
  ValueOracle o(spec.box, spec.counts, control_samples(p, spec.controls_per_axis), spec.dt);
  const std::size_t N = o.size();
  const std::size_t n = p.n;
  auto& V = o.values();

  std::vector<char> active(N, 0), goal(N, 0);
  std::vector<std::vector<double>> nodes(N);
  for (std::size_t k = 0; k < N; ++k) {
    nodes[k] = o.node(k);
    V[k] = spec.sentinel;
    if (!p.in_xfree(nodes[k])) continue;
    if (p.in_goal && p.in_goal(nodes[k])) {
      V[k] = 0.0;
      goal[k] = 1;
      continue;
    }
    active[k] = 1;
  }
  // Point goals: every node within one cell (per axis) of the goal point is a
  // goal cell.
  for (const auto& zg : p.goal_points) {
    for (std::size_t k = 0; k < N; ++k) {
      bool near = true;
      for (std::size_t i = 0; i < n && near; ++i) near = std::abs(nodes[k][i] - zg[i]) <= o.spacing(i) * (1.0 + 1e-9);
      if (near && p.in_xfree(nodes[k])) {
        V[k] = 0.0;
        active[k] = 0;
        goal[k] = 1;
      }
    }
  }

  // Per (node, control): stage cost, self weight, and stencil over other nodes.
  struct Move {
    double cost;
    double self;
    Stencil rest;
  };
  std::vector<std::vector<Move>> moves(N);
  for (std::size_t k = 0; k < N; ++k) {
    if (!active[k]) continue;
    for (const auto& u : o.controls()) {
      // Euler steps of dt under constant control until the state has moved
      // one cell (in cell units, max norm) or the step cap is reached.
      std::vector<double> next = nodes[k];
      double cost = 0.0;
      bool valid = true;
      for (int step = 0; step < spec.max_substeps; ++step) {
        const std::vector<double> fx = p.f(next, u);
        cost += spec.dt * p.g(next, u);
        double moved = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          next[i] += spec.dt * fx[i];
          moved = std::max(moved, std::abs(next[i] - nodes[k][i]) / o.spacing(i));
        }
        if (!p.in_xfree(next)) {
          valid = false;
          break;
        }
        if (moved >= 1.0) break;
      }
      if (!valid) continue;
      auto st = stencil(o, next);
      if (!st) continue;
      Move mv{cost, 0.0, {}};
      for (std::size_t j = 0; j < st->index.size(); ++j) {
        if (st->index[j] == k) {
          mv.self += st->weight[j];
        } else {
          mv.rest.index.push_back(st->index[j]);
          mv.rest.weight.push_back(st->weight[j]);
        }
      }
      if (mv.self >= 1.0 - 1e-12) continue;
      moves[k].push_back(std::move(mv));
    }
  }

  // Gauss-Seidel sweeps alternating node order; the self-loop of each move
  // is solved exactly: V = (c + sum_j w_j V_j) / (1 - w_self).
  auto move_value = [&](const Move& mv, const std::vector<double>& W) {
    double acc = mv.cost;
    for (std::size_t j = 0; j < mv.rest.index.size(); ++j) acc += mv.rest.weight[j] * W[mv.rest.index[j]];
    return acc / (1.0 - mv.self);
  };
  int sweep = 0;
  bool converged = false;
  for (; sweep < spec.max_sweeps; ++sweep) {
    double change = 0.0;
    const bool forward = sweep % 2 == 0;
    for (std::size_t t = 0; t < N; ++t) {
      const std::size_t k = forward ? t : N - 1 - t;
      double best = V[k];
      for (const Move& mv : moves[k]) best = std::min(best, move_value(mv, V));
      if (best < V[k]) {
        change = std::max(change, V[k] - best);
        V[k] = best;
      }
    }
    if (change <= spec.tol) {
      converged = true;
      ++sweep;
      break;
    }
  }

  // Under the greedy policy V = E[cost] + sentinel * P(absorbed at a node that
  // cannot reach the goal). Evaluate both terms with non-viable nodes as
  // zero-cost absorbers so the sentinel does not leak into reported values.
  std::vector<const Move*> policy(N, nullptr);
  for (std::size_t k = 0; k < N; ++k) {
    if (goal[k] || V[k] >= spec.sentinel) continue;
    double best = ValueOracle::kInf;
    for (const Move& mv : moves[k]) {
      const double v = move_value(mv, V);
      if (v < best) {
        best = v;
        policy[k] = &mv;
      }
    }
  }
  std::vector<double> lost(N, 0.0), W(N, 0.0);
  for (std::size_t k = 0; k < N; ++k) {
    if (!goal[k] && V[k] >= spec.sentinel) lost[k] = 1.0;
    if (policy[k]) W[k] = V[k];
  }
  const double lost_tol = 1e-3 * std::min(spec.lost_tolerance, spec.tol);
  for (int s = 0; s < spec.max_sweeps; ++s) {
    double dw = 0.0, dl = 0.0;
    const bool forward = s % 2 == 0;
    for (std::size_t t = 0; t < N; ++t) {
      const std::size_t k = forward ? t : N - 1 - t;
      const Move* mv = policy[k];
      if (!mv) continue;
      double w = mv->cost, l = 0.0;
      for (std::size_t j = 0; j < mv->rest.index.size(); ++j) {
        w += mv->rest.weight[j] * W[mv->rest.index[j]];
        l += mv->rest.weight[j] * lost[mv->rest.index[j]];
      }
      w /= 1.0 - mv->self;
      l /= 1.0 - mv->self;
      dw = std::max(dw, std::abs(w - W[k]));
      dl = std::max(dl, std::abs(l - lost[k]));
      W[k] = w;
      lost[k] = l;
    }
    if (dw <= spec.tol && dl <= lost_tol) break;
  }
  for (std::size_t k = 0; k < N; ++k) {
    if (goal[k]) continue;
    V[k] = (V[k] >= spec.sentinel || lost[k] > spec.lost_tolerance) ? ValueOracle::kInf : W[k];
  }
  o.set_sweeps(sweep);
  o.set_converged(converged);
  return o;
}

}  // namespace synth_detail

/// Value iteration to a fixed point. The error estimate is the largest
/// difference to the same scheme on the nested grid with half the nodes per
/// axis and twice the time step, over nodes finite in both.
inline ValueOracle value_oracle(const BlackBoxProblem& p, const OracleSpec& spec) {
  ValueOracle fine = synth_detail::run_value_iteration(p, spec);
  if (!fine.converged()) throw std::runtime_error("value_oracle: value iteration did not converge within the sweep cap");
  if (!spec.estimate_error) return fine;
  OracleSpec cs = spec;
  for (int& c : cs.counts) {
    if (c % 2 == 0 || c < 5) throw std::invalid_argument("value_oracle: error estimate needs odd node counts >= 5");
    c = (c - 1) / 2 + 1;
  }
  cs.dt = 2.0 * spec.dt;
  const ValueOracle coarse = synth_detail::run_value_iteration(p, cs);
  double err = 0.0;
  for (std::size_t k = 0; k < coarse.size(); ++k) {
    const double vc = coarse.value(k);
    if (vc == ValueOracle::kInf) continue;
    const double vf = fine.interpolate(coarse.node(k));
    if (vf == ValueOracle::kInf) continue;
    err = std::max(err, std::abs(vf - vc));
  }
  // Convergence of order at least 1/2: |V_h - V| <= |V_h - V_2h| / (sqrt 2 - 1).
  fine.set_error_estimate(err / (std::numbers::sqrt2 - 1.0));
  return fine;
}

inline ValueOracle value_oracle(const PolyProblem& p, const OracleSpec& spec) {
  return value_oracle(to_black_box(p), spec);
}

struct Comparison {
  double max_overshoot = -std::numeric_limits<double>::infinity();
  double mean_gap = 0.0;
  std::size_t finite_nodes = 0;
  /// One row per compared node: coordinates, H, V.
  std::vector<std::vector<double>> rows;
};

/// H against the oracle on finite nodes, optionally restricted to `region`.
template <class HFn>
Comparison compare(HFn&& H, const ValueOracle& o, const std::optional<Box>& region = std::nullopt) {
  Comparison c;
  double sum = 0.0;
  for (std::size_t k = 0; k < o.size(); ++k) {
    const double v = o.value(k);
    if (v == ValueOracle::kInf) continue;
    const std::vector<double> z = o.node(k);
    if (region && !region->contains(z, 1e-12)) continue;
    const double h = H(std::span<const double>(z));
    c.max_overshoot = std::max(c.max_overshoot, h - v);
    sum += v - h;
    ++c.finite_nodes;
    std::vector<double> row = z;
    row.push_back(h);
    row.push_back(v);
    c.rows.push_back(std::move(row));
  }
  c.mean_gap = c.finite_nodes ? sum / c.finite_nodes : 0.0;
  return c;
}

inline Comparison compare(const Polynomial& H, const ValueOracle& o, const std::optional<Box>& region = std::nullopt) {
  if (H.nvars() != o.dim()) throw std::invalid_argument("compare: dimension mismatch");
  return compare([&](std::span<const double> z) { return H.eval(z); }, o, region);
}

/// CSV of a comparison: header x1..xn,H,V then one row per node.
inline void write_comparison_csv(std::ostream& os, const Comparison& c, std::size_t n) {
  os << std::setprecision(17);
  for (std::size_t i = 0; i < n; ++i) os << "x" << (i + 1) << ",";
  os << "H,V\n";
  for (const auto& row : c.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
    os << "\n";
  }
}

}  // namespace heursos

#endif  // HEURSOS_SYNTH_HPP
