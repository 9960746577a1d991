// Admissibility and consistency of candidate heuristics.
//
// certify_* produce SOS certificates for polynomial problems. falsify searches
// a grid plus low-discrepancy samples for points where
//
//   <grad H(x), f(x, u)> + g(x, u) < 0      (AH2)
//
// or H > 0 on the goal (AH1). A clean falsifier run is evidence, not proof.

#ifndef HEURSOS_VERIFY_HPP
#define HEURSOS_VERIFY_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "heursos/poly.hpp"
#include "heursos/sdp.hpp"
#include "heursos/semialg.hpp"
#include "heursos/sosprog.hpp"

namespace heursos {

namespace verify_detail {

// Calls fn(point) for every point of the tensor grid with counts[i] points on
// [lo_i, hi_i] (a single point sits at the midpoint).
template <class Fn>
void for_each_grid_point(const Box& box, std::span<const int> counts, Fn&& fn) {
  const std::size_t d = box.dim();
  std::vector<int> idx(d, 0);
  std::vector<double> z(d);
  auto coord = [&](std::size_t i, int k) {
    if (counts[i] <= 1) return 0.5 * (box.lo[i] + box.hi[i]);
    return box.lo[i] + (box.hi[i] - box.lo[i]) * k / (counts[i] - 1);
  };
  while (true) {
    for (std::size_t i = 0; i < d; ++i) z[i] = coord(i, idx[i]);
    fn(std::span<const double>(z));
    std::size_t i = d;
    while (i > 0) {
      --i;
      if (++idx[i] < std::max(1, counts[i])) break;
      idx[i] = 0;
      if (i == 0) return;
    }
    if (d == 0) return;
  }
}

inline double radical_inverse(std::uint64_t k, int base) {
  double inv = 1.0 / base, f = inv, r = 0.0;
  while (k > 0) {
    r += f * static_cast<double>(k % base);
    k /= base;
    f *= inv;
  }
  return r;
}

inline int nth_prime(std::size_t i) {
  static const int kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};
  if (i >= std::size(kPrimes)) throw std::invalid_argument("halton: dimension too large");
  return kPrimes[i];
}

}  // namespace verify_detail

/// Point k (k >= 1) of the Halton sequence mapped into `box`.
inline std::vector<double> halton_point(std::uint64_t k, const Box& box) {
  std::vector<double> z(box.dim());
  for (std::size_t i = 0; i < box.dim(); ++i) {
    z[i] = box.lo[i] + (box.hi[i] - box.lo[i]) * verify_detail::radical_inverse(k, verify_detail::nth_prime(i));
  }
  return z;
}

/// Polynomial optimal control problem: dynamics f and running cost g over the
/// joint (state, control) variables, free space and control set as
/// semialgebraic sets.
class PolyProblem {
 public:
  PolyProblem(PolyVector f, Polynomial g, SemialgebraicSet xfree, SemialgebraicSet omega, GoalSpec goal)
      : data_{std::move(f), std::move(g), std::move(xfree), std::move(omega), std::move(goal)} {
    data_.validate();
    check_running_cost();
  }

  const ProblemData& data() const { return data_; }
  std::size_t state_dim() const { return data_.state_dim(); }
  std::size_t control_dim() const { return data_.control_dim(); }
  const PolyVector& f() const { return data_.f; }
  const Polynomial& g() const { return data_.g; }
  const SemialgebraicSet& xfree() const { return data_.xfree; }
  const SemialgebraicSet& omega() const { return data_.omega; }
  const GoalSpec& goal() const { return data_.goal; }

 private:
  // g >= 0 on a coarse grid of X_free x Omega (where bounding boxes are known).
  void check_running_cost() const {
    const std::size_t n = state_dim(), m = control_dim();
    Box box;
    auto append = [&](const SemialgebraicSet& s, std::size_t dim) {
      for (std::size_t i = 0; i < dim; ++i) {
        box.lo.push_back(s.bounds() ? s.bounds()->lo[i] : -1.0);
        box.hi.push_back(s.bounds() ? s.bounds()->hi[i] : 1.0);
      }
    };
    append(data_.xfree, n);
    append(data_.omega, m);
    std::vector<int> counts(n + m, 5);
    verify_detail::for_each_grid_point(box, counts, [&](std::span<const double> z) {
      if (!data_.xfree.contains(z.subspan(0, n))) return;
      if (m > 0 && !data_.omega.contains(z.subspan(n, m))) return;
      if (data_.g.eval(z) < -1e-9) throw std::invalid_argument("PolyProblem: running cost g is negative on X_free x Omega");
    });
  }

  ProblemData data_;
};

/// Problem given by evaluators; used for trigonometric dynamics.
struct BlackBoxProblem {
  std::size_t n = 0;
  std::size_t m = 0;
  std::function<std::vector<double>(std::span<const double> x, std::span<const double> u)> f;
  std::function<double(std::span<const double> x, std::span<const double> u)> g;
  std::function<bool(std::span<const double> x)> in_xfree;
  std::function<bool(std::span<const double> u)> in_omega;
  Box x_bounds;
  Box u_bounds;
  std::function<bool(std::span<const double> x)> in_goal;
  /// Goal points checked for AH1 in addition to goal-positive grid points.
  std::vector<std::vector<double>> goal_points;
};

inline BlackBoxProblem to_black_box(const PolyProblem& p, const std::optional<Box>& x_box = std::nullopt,
                                    const std::optional<Box>& u_box = std::nullopt) {
  const std::size_t n = p.state_dim(), m = p.control_dim();
  BlackBoxProblem b;
  b.n = n;
  b.m = m;
  auto joint = [n, m](std::span<const double> x, std::span<const double> u) {
    std::vector<double> z(n + m);
    std::copy(x.begin(), x.end(), z.begin());
    std::copy(u.begin(), u.end(), z.begin() + n);
    return z;
  };
  b.f = [f = p.f(), joint](std::span<const double> x, std::span<const double> u) { return f.eval(joint(x, u)); };
  b.g = [g = p.g(), joint](std::span<const double> x, std::span<const double> u) { return g.eval(joint(x, u)); };
  b.in_xfree = [s = p.xfree()](std::span<const double> x) { return s.contains(x); };
  b.in_omega = [s = p.omega(), m](std::span<const double> u) { return m == 0 || s.contains(u); };
  auto bounds = [](const std::optional<Box>& given, const SemialgebraicSet& s, std::size_t dim, const char* what) {
    if (given) return *given;
    if (s.bounds()) return *s.bounds();
    if (dim == 0) return Box{};
    throw std::invalid_argument(std::string("to_black_box: ") + what + " has no bounding box; supply one");
  };
  b.x_bounds = bounds(x_box, p.xfree(), n, "X_free");
  b.u_bounds = bounds(u_box, p.omega(), m, "Omega");
  b.in_goal = [goal = p.goal()](std::span<const double> x) { return goal.contains(x); };
  if (p.goal().is_point()) b.goal_points.push_back(p.goal().as_point().point);
  for (const auto& s : p.goal().is_point() ? std::vector<std::vector<double>>{} : p.goal().as_set().samples) {
    b.goal_points.push_back(s);
  }
  return b;
}

enum class KinkKind { None, Kink, Tie };

/// Heuristic with value and gradient evaluators. `kink` flags points where
/// the closed form is not differentiable; those are skipped by falsify.
struct Heuristic {
  std::size_t nvars = 0;
  std::function<double(std::span<const double>)> value;
  std::function<std::vector<double>(std::span<const double>)> gradient;
  std::function<KinkKind(std::span<const double>)> kink;

  static Heuristic from_polynomial(const Polynomial& H) {
    Heuristic h;
    h.nvars = H.nvars();
    h.value = [H](std::span<const double> x) { return H.eval(x); };
    h.gradient = [G = grad(H)](std::span<const double> x) { return G.eval(x); };
    return h;
  }
};

/// max{a, b}: gradient of the active branch; ties are reported separately.
inline Heuristic max_of(Heuristic a, Heuristic b, double tie_tol = 1e-12) {
  if (a.nvars != b.nvars) throw std::invalid_argument("max_of: dimension mismatch");
  Heuristic h;
  h.nvars = a.nvars;
  h.value = [a, b](std::span<const double> x) { return std::max(a.value(x), b.value(x)); };
  h.gradient = [a, b](std::span<const double> x) { return a.value(x) >= b.value(x) ? a.gradient(x) : b.gradient(x); };
  h.kink = [a, b, tie_tol](std::span<const double> x) {
    const double va = a.value(x), vb = b.value(x);
    if (std::abs(va - vb) <= tie_tol * std::max(1.0, std::abs(va))) return KinkKind::Tie;
    const Heuristic& act = va > vb ? a : b;
    return act.kink ? act.kink(x) : KinkKind::None;
  };
  return h;
}

enum class Condition { AH1, AH2 };

inline const char* to_string(Condition c) { return c == Condition::AH1 ? "AH1" : "AH2"; }

struct Counterexample {
  std::vector<double> state;
  std::vector<double> control;  // empty for AH1
  double value = 0.0;           // AH2 expression, or H at a goal state
  Condition condition = Condition::AH2;
};

struct FalsifySettings {
  /// Grid points per axis: state axes first, then control axes.
  std::vector<int> grid;
  std::size_t halton_samples = 10000;
  /// Values below -tolerance (AH2) or above +tolerance (AH1) are violations.
  double tolerance = 1e-9;
};

struct FalsifyReport {
  std::optional<Counterexample> counterexample;
  /// Smallest AH2 value seen (worst point even when no violation).
  double min_value = std::numeric_limits<double>::infinity();
  std::vector<double> min_state;
  std::vector<double> min_control;
  std::size_t evaluated = 0;
  std::size_t skipped_kinks = 0;
  std::size_t tie_points = 0;
  std::size_t outside = 0;

  bool none_found() const { return !counterexample; }
};

namespace verify_detail {

inline bool lex_less(std::span<const double> a, std::span<const double> b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

}  // namespace verify_detail

inline FalsifyReport falsify(const BlackBoxProblem& p, const Heuristic& H, const FalsifySettings& s) {
  const std::size_t n = p.n, m = p.m;
  if (H.nvars != n) throw std::invalid_argument("falsify: heuristic dimension mismatch");
  if (s.grid.size() != n + m) throw std::invalid_argument("falsify: grid needs one count per state and control axis");
  Box box = p.x_bounds;
  box.lo.insert(box.lo.end(), p.u_bounds.lo.begin(), p.u_bounds.lo.end());
  box.hi.insert(box.hi.end(), p.u_bounds.hi.begin(), p.u_bounds.hi.end());

  FalsifyReport r;
  std::optional<Counterexample> worst_ah1;
  std::vector<double> best_z;
  auto visit = [&](std::span<const double> z) {
    const auto x = z.subspan(0, n);
    const auto u = z.subspan(n, m);
    if (!p.in_xfree(x) || (m > 0 && !p.in_omega(u))) {
      ++r.outside;
      return;
    }
    if (H.kink) {
      const KinkKind k = H.kink(x);
      if (k == KinkKind::Tie) {
        ++r.tie_points;
        return;
      }
      if (k == KinkKind::Kink) {
        ++r.skipped_kinks;
        return;
      }
    }
    const std::vector<double> gH = H.gradient(x);
    const std::vector<double> fx = p.f(x, u);
    double v = p.g(x, u);
    for (std::size_t i = 0; i < n; ++i) v += gH[i] * fx[i];
    if (!std::isfinite(v)) throw std::runtime_error("falsify: evaluator returned a non-finite value");
    ++r.evaluated;
    if (v < r.min_value || (v == r.min_value && verify_detail::lex_less(z, best_z))) {
      r.min_value = v;
      best_z.assign(z.begin(), z.end());
    }
    if (p.in_goal && p.in_goal(x)) {
      const double h = H.value(x);
      if (h > s.tolerance && (!worst_ah1 || h > worst_ah1->value)) {
        worst_ah1 = Counterexample{{x.begin(), x.end()}, {}, h, Condition::AH1};
      }
    }
  };
  verify_detail::for_each_grid_point(box, s.grid, visit);
  for (std::size_t k = 1; k <= s.halton_samples; ++k) visit(halton_point(k, box));

  for (const auto& zg : p.goal_points) {
    const double h = H.value(zg);
    if (h > s.tolerance && (!worst_ah1 || h > worst_ah1->value)) worst_ah1 = Counterexample{zg, {}, h, Condition::AH1};
  }
  if (!best_z.empty()) {
    r.min_state.assign(best_z.begin(), best_z.begin() + n);
    r.min_control.assign(best_z.begin() + n, best_z.end());
  }
  if (r.min_value < -s.tolerance) {
    r.counterexample = Counterexample{r.min_state, r.min_control, r.min_value, Condition::AH2};
  } else if (worst_ah1) {
    r.counterexample = std::move(worst_ah1);
  }
  return r;
}

inline FalsifyReport falsify(const PolyProblem& p, const Polynomial& H, const FalsifySettings& s) {
  return falsify(to_black_box(p), Heuristic::from_polynomial(H), s);
}

// ---------------------------------------------------------------------------
// SOS certification.

struct CertifySettings {
  /// Largest multiplier degree tried before giving up.
  int max_lambda_degree = 8;
  SdpSettings sdp;
  bool normalize_variables = true;
  /// Tolerance on H at a point goal.
  double goal_tolerance = 1e-9;
};

struct CertifyResult {
  enum class Outcome {
    Certified,
    RelaxationInfeasible,  // no certificate up to the degree cap
    GoalConditionFailed,   // AH1 / CH1 violated
    SolverFailure,
  };
  Outcome outcome = Outcome::SolverFailure;
  std::optional<SosCertificate> certificate;
  /// Multiplier degree of the certificate (or of the last attempt).
  int lambda_degree = -1;
  std::vector<std::pair<int, SdpStatus>> attempts;
  std::string reason;

  bool certified() const { return outcome == Outcome::Certified; }
};

inline const char* to_string(CertifyResult::Outcome o) {
  switch (o) {
    case CertifyResult::Outcome::Certified: return "certified";
    case CertifyResult::Outcome::RelaxationInfeasible: return "relaxation infeasible";
    case CertifyResult::Outcome::GoalConditionFailed: return "goal condition failed";
    case CertifyResult::Outcome::SolverFailure: return "solver failure";
  }
  return "?";
}

namespace verify_detail {

// SOS program for the fixed-H conditions at multiplier degree `lambda_degree`.
// `goal_sides`: 1 adds -H SOS on a set goal, 2 adds H SOS as well.
inline SosProgram fixed_heuristic_program(const ProblemData& pd, const Polynomial& H, int lambda_degree, int goal_sides,
                                          int& used_degree) {
  const std::size_t n = pd.state_dim();
  const std::size_t nz = pd.joint_dim();
  const auto state_map = sos_detail::iota(0, n);
  const Polynomial Hz = H.embed(nz, state_map);
  Polynomial e = pd.g;
  for (std::size_t i = 0; i < n; ++i) {
    const Polynomial di = Hz.derivative(i);
    if (!di.is_zero()) e += di * pd.f[i];
  }
  SosProgram prog(nz);
  const auto hs = sos_detail::set_constraints(pd, true);
  int hmax = 0;
  for (const auto& c : hs) hmax = std::max(hmax, c.h.degree());
  int main_degree = std::max(sos_detail::even_ceil(e.degree()), sos_detail::even_ceil(hmax));
  if (lambda_degree < 0) lambda_degree = hs.empty() ? 0 : sos_detail::default_lambda_degree(hs, main_degree);
  main_degree = std::max(main_degree, lambda_degree + hmax);
  used_degree = lambda_degree;
  int block = -1;
  sos_detail::add_localized_sos(prog, PolyExpr(e), hs, lambda_degree, main_degree, "ah2", block);
  if (!pd.goal.is_point() && goal_sides > 0) {
    const SetGoal& sg = pd.goal.as_set();
    std::vector<sos_detail::Multiplied> gh;
    for (std::size_t i = 0; i < sg.set.constraints().size(); ++i) {
      Polynomial h = sg.set.constraints()[i].embed(nz, state_map);
      auto vars = sos_detail::support(h);
      gh.push_back({std::move(h), std::move(vars), "sigma_goal" + std::to_string(i + 1)});
    }
    for (int side = 0; side < goal_sides; ++side) {
      const Polynomial target = side == 0 ? -1.0 * Hz : Hz;
      int gd = sos_detail::even_ceil(target.degree());
      int ghmax = 0;
      for (const auto& c : gh) ghmax = std::max(ghmax, c.h.degree());
      const int gl = std::max(0, lambda_degree);
      gd = std::max(gd, gl + ghmax);
      sos_detail::add_localized_sos(prog, PolyExpr(target), gh, gl, gd, side == 0 ? "goal_nonpositive" : "goal_nonnegative",
                                    block);
    }
  }
  return prog;
}

inline CertifyResult certify(const PolyProblem& p, const Polynomial& H, int lambda_degree, const CertifySettings& s,
                             bool consistency) {
  if (H.nvars() != p.state_dim()) throw std::invalid_argument("certify: H must be a polynomial over the state variables");
  if (lambda_degree >= 0 && lambda_degree % 2 != 0) throw std::invalid_argument("certify: multiplier degree must be even");
  CertifyResult out;
  const ProblemData& pd0 = p.data();
  if (pd0.goal.is_point()) {
    const double hz = H.eval(pd0.goal.as_point().point);
    const bool ok = consistency ? std::abs(hz) <= s.goal_tolerance : hz <= s.goal_tolerance;
    if (!ok) {
      out.outcome = CertifyResult::Outcome::GoalConditionFailed;
      out.reason = std::string(consistency ? "CH1" : "AH1") + ": H(goal) = " + std::to_string(hz);
      return out;
    }
  }
  sos_detail::AffineMap xmap, umap;
  sos_detail::box_map(pd0.xfree, s.normalize_variables, xmap);
  if (pd0.control_dim() > 0) sos_detail::box_map(pd0.omega, s.normalize_variables, umap);
  const ProblemData pd = sos_detail::map_problem(pd0, xmap, umap);
  const Polynomial Ht = affine_substitute(H, xmap.center, xmap.scale);

  int degree = lambda_degree;
  bool any_failure = false;
  while (true) {
    int used = 0;
    SosProgram prog = fixed_heuristic_program(pd, Ht, degree, consistency ? 2 : 1, used);
    const SdpSolution sol = solve(to_sdp(prog), s.sdp);
    out.attempts.emplace_back(used, sol.status);
    out.lambda_degree = used;
    if (sol.ok()) {
      SosCertificate cert = make_certificate(prog, sol);
      if (cert.valid()) {
        out.outcome = CertifyResult::Outcome::Certified;
        out.certificate = std::move(cert);
        return out;
      }
      any_failure = true;
    } else if (sol.status != SdpStatus::PrimalInfeasible) {
      any_failure = true;
    }
    if (used + 2 > s.max_lambda_degree) break;
    degree = used + 2;
  }
  out.outcome = any_failure ? CertifyResult::Outcome::SolverFailure : CertifyResult::Outcome::RelaxationInfeasible;
  out.reason = any_failure ? "solver did not return a valid certificate"
                           : "no SOS certificate up to multiplier degree " + std::to_string(out.lambda_degree);
  return out;
}

}  // namespace verify_detail

/// AH1 and AH2 via SOS; retries with multiplier degree +2 up to the cap.
/// `lambda_degree < 0` starts from the default degree.
inline CertifyResult certify_admissible(const PolyProblem& p, const Polynomial& H, int lambda_degree = -1,
                                        const CertifySettings& s = {}) {
  return verify_detail::certify(p, H, lambda_degree, s, false);
}

/// CH1 (H = 0 on the goal) and CH2, whose certificate has the form of AH2.
inline CertifyResult certify_consistent(const PolyProblem& p, const Polynomial& H, int lambda_degree = -1,
                                        const CertifySettings& s = {}) {
  return verify_detail::certify(p, H, lambda_degree, s, true);
}

}  // namespace heursos

#endif  // HEURSOS_VERIFY_HPP
