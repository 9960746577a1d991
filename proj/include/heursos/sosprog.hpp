// Sum-of-squares programs compiled to block-diagonal SDPs.
//
// A program owns free scalar variables and Gram blocks. Polynomials whose
// coefficients are affine in those variables (PolyExpr) are constrained to be
// SOS by tying them coefficient-by-coefficient to m(z)' Q m(z) for a fresh Gram
// block Q. The heuristic-synthesis program
//
//   maximize    integral of H dm
//   subject to  H = 0 on the goal
//               <grad H, f> + g - sum_i lambda_i h_i  is SOS
//               lambda_i SOS
//
// is assembled by build_heuristic_program; check_sos is the single-block case.

#ifndef HEURSOS_SOSPROG_HPP
#define HEURSOS_SOSPROG_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "heursos/poly.hpp"
#include "heursos/sdp.hpp"
#include "heursos/semialg.hpp"

namespace heursos {

/// Raised when no multiplier degree keeps every lambda*h product within the
/// degree of the certified expression.
class DegreeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Gram parameterization p(z) = m(z)' Q m(z) over an ordered monomial basis.
class GramParam {
 public:
  explicit GramParam(std::vector<Monomial> basis) : basis_(std::move(basis)) {
    if (basis_.empty()) throw std::invalid_argument("GramParam: empty basis");
    for (int i = 0; i < dim(); ++i) {
      for (int j = i; j < dim(); ++j) products_[basis_[i] * basis_[j]].emplace_back(i, j);
    }
  }

  int dim() const { return static_cast<int>(basis_.size()); }
  const std::vector<Monomial>& basis() const { return basis_; }
  std::size_t nvars() const { return basis_.front().nvars(); }
  Monomial product(int i, int j) const { return basis_.at(i) * basis_.at(j); }

  /// Upper-triangle index pairs (i <= j) whose basis product is `m`.
  const std::vector<std::pair<int, int>>& pairs(const Monomial& m) const {
    static const std::vector<std::pair<int, int>> kNone;
    auto it = products_.find(m);
    return it == products_.end() ? kNone : it->second;
  }
  const std::map<Monomial, std::vector<std::pair<int, int>>>& product_map() const { return products_; }

  /// The polynomial m(z)' Q m(z) for a given symmetric Q.
  Polynomial polynomial(const Eigen::MatrixXd& Q) const {
    Polynomial p(nvars());
    for (const auto& [m, ps] : products_) {
      double c = 0.0;
      for (auto [i, j] : ps) c += i == j ? Q(i, i) : Q(i, j) + Q(j, i);
      p.add_term(m, c);
    }
    return p;
  }

 private:
  std::vector<Monomial> basis_;
  std::map<Monomial, std::vector<std::pair<int, int>>> products_;
};

/// Full basis for SOS polynomials of degree `degree2d` in `nvars` variables.
inline GramParam gram_parameterize(std::size_t nvars, int degree2d) {
  if (degree2d < 0 || degree2d % 2 != 0) throw std::invalid_argument("gram_parameterize: degree must be even and >= 0");
  return GramParam(monomials_up_to(nvars, degree2d / 2));
}

/// Gram basis over a subset of the ambient variables.
inline GramParam gram_parameterize(std::size_t nvars, std::span<const std::size_t> support, int degree2d) {
  if (degree2d < 0 || degree2d % 2 != 0) throw std::invalid_argument("gram_parameterize: degree must be even and >= 0");
  if (support.empty()) return GramParam({Monomial::one(nvars)});
  std::vector<Monomial> basis;
  for (const auto& m : monomials_up_to(support.size(), degree2d / 2)) {
    std::vector<int> e(nvars, 0);
    for (std::size_t k = 0; k < support.size(); ++k) e.at(support[k]) = m[k];
    basis.emplace_back(std::move(e));
  }
  return GramParam(std::move(basis));
}

/// Reference to one scalar decision variable: a free variable (block < 0,
/// index i) or the Gram entry Q_ij (i <= j) of a block.
struct VarRef {
  int block;
  int i;
  int j;
  auto operator<=>(const VarRef&) const = default;
};

/// constant + sum coef * var.
struct LinExpr {
  double constant = 0.0;
  std::map<VarRef, double> terms;

  void add(const VarRef& v, double c) {
    if (c == 0.0) return;
    auto [it, ins] = terms.try_emplace(v, c);
    if (!ins) {
      it->second += c;
      if (it->second == 0.0) terms.erase(it);
    }
  }
};

/// Polynomial whose coefficients are affine in the decision variables.
class PolyExpr {
 public:
  explicit PolyExpr(std::size_t nvars) : nvars_(nvars) {}
  explicit PolyExpr(const Polynomial& p) : nvars_(p.nvars()) {
    for (const auto& [m, c] : p.terms()) coeffs_[m].constant += c;
  }

  std::size_t nvars() const { return nvars_; }
  const std::map<Monomial, LinExpr>& coeffs() const { return coeffs_; }

  void add_constant(const Monomial& m, double c) {
    if (c != 0.0) coeffs_[m].constant += c;
  }
  void add_var(const Monomial& m, const VarRef& v, double c) {
    if (c != 0.0) coeffs_[m].add(v, c);
  }
  /// Adds scale * p.
  void add_poly(const Polynomial& p, double scale = 1.0) {
    for (const auto& [m, c] : p.terms()) add_constant(m, scale * c);
  }
  /// Adds var * p.
  void add_var_times(const VarRef& v, const Polynomial& p, double scale = 1.0) {
    for (const auto& [m, c] : p.terms()) add_var(m, v, scale * c);
  }

  int degree() const {
    int d = 0;
    for (const auto& [m, e] : coeffs_) {
      if (e.constant != 0.0 || !e.terms.empty()) d = std::max(d, m.degree());
    }
    return d;
  }

  /// Numeric polynomial obtained by substituting variable values.
  template <class Lookup>
  Polynomial evaluate(Lookup&& value_of) const {
    Polynomial p(nvars_);
    for (const auto& [m, e] : coeffs_) {
      double c = e.constant;
      for (const auto& [v, a] : e.terms) c += a * value_of(v);
      p.add_term(m, c);
    }
    return p;
  }

 private:
  std::size_t nvars_;
  std::map<Monomial, LinExpr> coeffs_;
};

/// Linear equality sum coef * var = rhs.
struct LinearEquality {
  std::string name;
  std::map<VarRef, double> terms;
  double rhs = 0.0;
};

/// expr == m' Q m for Gram block `block`.
struct SosConstraint {
  std::string name;
  PolyExpr expr;
  int block;
};

class SosProgram {
 public:
  explicit SosProgram(std::size_t nvars) : nvars_(nvars) {}

  std::size_t nvars() const { return nvars_; }
  int num_free() const { return num_free_; }
  const std::vector<GramParam>& blocks() const { return blocks_; }
  const std::vector<std::string>& block_names() const { return block_names_; }
  const std::vector<SosConstraint>& sos_constraints() const { return sos_; }
  const std::vector<LinearEquality>& equalities() const { return equalities_; }
  const std::vector<double>& objective() const { return objective_; }

  int add_free(int count) {
    const int first = num_free_;
    num_free_ += count;
    objective_.resize(num_free_, 0.0);
    return first;
  }
  void set_objective(int free_index, double c) { objective_.at(free_index) = c; }

  /// New SOS polynomial variable; returns its block index.
  int add_gram(GramParam g, std::string name) {
    if (g.nvars() != nvars_) throw std::invalid_argument("SosProgram: Gram basis dimension mismatch");
    blocks_.push_back(std::move(g));
    block_names_.push_back(std::move(name));
    return static_cast<int>(blocks_.size()) - 1;
  }

  /// The SOS polynomial of block k as a PolyExpr in its Gram entries.
  PolyExpr gram_expr(int k) const {
    PolyExpr e(nvars_);
    for (const auto& [m, ps] : blocks_.at(k).product_map()) {
      for (auto [i, j] : ps) e.add_var(m, VarRef{k, i, j}, i == j ? 1.0 : 2.0);
    }
    return e;
  }

  /// Constrains `expr` to be SOS with a full Gram basis of the smallest even
  /// degree covering it; returns the new block index.
  int add_sos_constraint(PolyExpr expr, std::string name, std::optional<GramParam> basis = std::nullopt) {
    if (expr.nvars() != nvars_) throw std::invalid_argument("SosProgram: expression dimension mismatch");
    int deg = expr.degree();
    deg += deg % 2;
    GramParam g = basis ? std::move(*basis) : gram_parameterize(nvars_, deg);
    const int k = add_gram(std::move(g), name);
    sos_.push_back({std::move(name), std::move(expr), k});
    return k;
  }

  void add_equality(LinearEquality eq) { equalities_.push_back(std::move(eq)); }

 private:
  std::size_t nvars_;
  int num_free_ = 0;
  std::vector<GramParam> blocks_;
  std::vector<std::string> block_names_;
  std::vector<SosConstraint> sos_;
  std::vector<LinearEquality> equalities_;
  std::vector<double> objective_;
};

/// Standard-form SDP: one PSD block per Gram block, free variables native, one
/// equality row per monomial of each SOS constraint plus the linear equalities.
inline SdpProblem to_sdp(const SosProgram& prog) {
  SdpProblem p;
  for (const auto& g : prog.blocks()) p.block_dims.push_back(g.dim());
  p.num_free = prog.num_free();
  for (int i = 0; i < prog.num_free(); ++i) {
    if (prog.objective()[i] != 0.0) p.objective_free.push_back({i, prog.objective()[i]});
  }
  auto emit = [&](SdpRow& row, const VarRef& v, double c) {
    if (v.block < 0) {
      row.free.push_back({v.i, c});
    } else {
      row.entries.push_back({v.block, v.i, v.j, c});
    }
  };
  for (const auto& con : prog.sos_constraints()) {
    const GramParam& g = prog.blocks().at(con.block);
    std::set<Monomial> monos;
    for (const auto& [m, e] : con.expr.coeffs()) monos.insert(m);
    for (const auto& [m, ps] : g.product_map()) monos.insert(m);
    for (const auto& m : monos) {
      // sum over Gram pairs - expr variable terms = expr constant
      SdpRow row;
      std::map<VarRef, double> acc;
      for (auto [i, j] : g.pairs(m)) acc[VarRef{con.block, i, j}] += i == j ? 1.0 : 2.0;
      double rhs = 0.0;
      auto it = con.expr.coeffs().find(m);
      if (it != con.expr.coeffs().end()) {
        rhs = it->second.constant;
        for (const auto& [v, c] : it->second.terms) acc[v] -= c;
      }
      for (const auto& [v, c] : acc) {
        if (c != 0.0) emit(row, v, c);
      }
      if (row.entries.empty() && row.free.empty() && rhs == 0.0) continue;
      row.rhs = rhs;
      p.rows.push_back(std::move(row));
    }
  }
  for (const auto& eq : prog.equalities()) {
    SdpRow row;
    for (const auto& [v, c] : eq.terms) {
      if (c != 0.0) emit(row, v, c);
    }
    row.rhs = eq.rhs;
    p.rows.push_back(std::move(row));
  }
  return p;
}

struct SosCertificate {
  std::vector<std::string> names;
  std::vector<Eigen::MatrixXd> grams;
  std::vector<double> min_eigenvalues;
  /// Largest |coefficient| of (m'Qm - expr) over all SOS constraints.
  double max_residual = 0.0;
  /// Largest |lhs - rhs| over the linear equalities.
  double max_equality_residual = 0.0;

  double min_eigenvalue() const {
    return min_eigenvalues.empty() ? 0.0 : *std::min_element(min_eigenvalues.begin(), min_eigenvalues.end());
  }
  bool valid(double eig_tol = 1e-8, double residual_tol = 1e-7) const {
    return min_eigenvalue() >= -eig_tol && max_residual <= residual_tol && max_equality_residual <= residual_tol;
  }
};

/// Recomputes eigenvalues and coefficient residuals from the returned blocks.
inline SosCertificate make_certificate(const SosProgram& prog, const SdpSolution& sol) {
  SosCertificate cert;
  auto value_of = [&](const VarRef& v) {
    if (v.block < 0) return sol.free(v.i);
    const auto& X = sol.X.at(v.block);
    return v.i == v.j ? X(v.i, v.i) : 0.5 * (X(v.i, v.j) + X(v.j, v.i));
  };
  for (std::size_t k = 0; k < prog.blocks().size(); ++k) {
    Eigen::MatrixXd Q = 0.5 * (sol.X.at(k) + sol.X.at(k).transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Q, Eigen::EigenvaluesOnly);
    cert.names.push_back(prog.block_names()[k]);
    cert.min_eigenvalues.push_back(es.eigenvalues()(0));
    cert.grams.push_back(std::move(Q));
  }
  for (const auto& con : prog.sos_constraints()) {
    const Polynomial target = con.expr.evaluate(value_of);
    const Polynomial gram = prog.blocks()[con.block].polynomial(cert.grams[con.block]);
    cert.max_residual = std::max(cert.max_residual, gram.max_coeff_diff(target));
  }
  for (const auto& eq : prog.equalities()) {
    double lhs = 0.0;
    for (const auto& [v, c] : eq.terms) lhs += c * value_of(v);
    cert.max_equality_residual = std::max(cert.max_equality_residual, std::abs(lhs - eq.rhs));
  }
  return cert;
}

// ---------------------------------------------------------------------------
// Single-polynomial SOS check.

struct SosCheck {
  enum class Outcome { Certified, Refuted, SolverFailure };
  Outcome outcome = Outcome::SolverFailure;
  std::optional<SosCertificate> certificate;
  SdpStatus solver_status = SdpStatus::NumericalFailure;
  std::string reason;

  bool certified() const { return outcome == Outcome::Certified; }
};

inline SosCheck check_sos(const Polynomial& p, const SdpSettings& settings = {}) {
  SosCheck out;
  if (p.degree() % 2 != 0) {
    out.outcome = SosCheck::Outcome::Refuted;
    out.reason = "odd degree";
    return out;
  }
  SosProgram prog(p.nvars());
  prog.add_sos_constraint(PolyExpr(p), "p");
  const SdpSolution sol = solve(to_sdp(prog), settings);
  out.solver_status = sol.status;
  if (sol.status == SdpStatus::PrimalInfeasible) {
    out.outcome = SosCheck::Outcome::Refuted;
    out.reason = "no PSD Gram matrix matches the coefficients";
    return out;
  }
  if (!sol.ok()) {
    out.reason = std::string("solver: ") + to_string(sol.status) + " (" + sol.message + ")";
    return out;
  }
  SosCertificate cert = make_certificate(prog, sol);
  if (!cert.valid()) {
    out.reason = "returned Gram matrix fails the eigenvalue/residual re-check";
    out.certificate = std::move(cert);
    return out;
  }
  out.outcome = SosCheck::Outcome::Certified;
  out.certificate = std::move(cert);
  return out;
}

// ---------------------------------------------------------------------------
// Heuristic synthesis program.

enum class GoalMode {
  Equality,     // H = 0 on the goal (admissible and consistent)
  Nonpositive,  // H <= 0 on the goal (admissible only)
};

struct HeuristicProgramOptions {
  GoalMode goal_mode = GoalMode::Equality;
  /// Multipliers depend only on the variables of their constraint (true), or
  /// on every state (resp. control) variable (false).
  bool multipliers_on_constraint_support = true;
  /// Multiplier degree for the goal-set condition; < 0 picks it automatically.
  int goal_lambda_degree = -1;
  /// Map boxed state and control variables affinely onto [-1, 1] before
  /// building the program. The certified statement is unchanged; only the
  /// conditioning of the SDP improves.
  bool normalize_variables = true;
};

/// Data shared by synthesis and certification: dynamics and cost over the
/// joint (state, control) space, sets over the state and control spaces.
struct ProblemData {
  PolyVector f;
  Polynomial g;
  SemialgebraicSet xfree;
  SemialgebraicSet omega;
  GoalSpec goal;

  std::size_t state_dim() const { return f.size(); }
  std::size_t control_dim() const { return f.nvars() - f.size(); }
  std::size_t joint_dim() const { return f.nvars(); }

  void validate() const {
    const std::size_t n = state_dim();
    if (f.nvars() < n) throw std::invalid_argument("problem: f must be defined over (state, control)");
    if (g.nvars() != f.nvars()) throw std::invalid_argument("problem: g must share f's variable space");
    if (xfree.nvars() != n) throw std::invalid_argument("problem: X_free dimension must equal the state dimension");
    if (omega.nvars() != control_dim() && !(control_dim() == 0 && omega.is_whole_space())) {
      throw std::invalid_argument("problem: Omega dimension must equal the control dimension");
    }
    if (goal.nvars() != n) throw std::invalid_argument("problem: goal dimension must equal the state dimension");
  }
};

struct HeuristicProgram {
  SosProgram program;
  /// H's monomial basis over the state variables; free variable k holds the
  /// coefficient of h_basis[k].
  std::vector<Monomial> h_basis;
  std::size_t state_dim = 0;
  int lambda_degree = 0;
  /// Block indices: main AH2 certificate, then one per multiplier.
  int main_block = -1;
  std::vector<int> multiplier_blocks;
  int goal_block = -1;
  /// Program variables are (z - center) / scale; the state part of each.
  std::vector<double> state_center;
  std::vector<double> state_scale;

  /// H in original coordinates from the program's coefficient vector.
  Polynomial heuristic(const Eigen::VectorXd& coeffs) const {
    Polynomial Ht(state_dim);
    for (std::size_t k = 0; k < h_basis.size(); ++k) Ht.add_term(h_basis[k], coeffs(static_cast<Eigen::Index>(k)));
    std::vector<double> off(state_dim), sc(state_dim);
    for (std::size_t i = 0; i < state_dim; ++i) {
      sc[i] = 1.0 / state_scale[i];
      off[i] = -state_center[i] * sc[i];
    }
    return affine_substitute(Ht, off, sc);
  }
};

namespace sos_detail {

inline std::vector<std::size_t> iota(std::size_t from, std::size_t count) {
  std::vector<std::size_t> v(count);
  for (std::size_t k = 0; k < count; ++k) v[k] = from + k;
  return v;
}

inline std::vector<std::size_t> support(const Polynomial& p) {
  std::vector<std::size_t> s;
  for (std::size_t i = 0; i < p.nvars(); ++i) {
    for (const auto& [m, c] : p.terms()) {
      if (m[i] > 0) {
        s.push_back(i);
        break;
      }
    }
  }
  return s;
}

inline int even_ceil(int d) { return d + (d % 2); }

struct Multiplied {
  Polynomial h;                      // over the joint space
  std::vector<std::size_t> vars;     // multiplier variables (joint indices)
  std::string name;
};

inline std::vector<Multiplied> set_constraints(const ProblemData& pd, bool on_support) {
  const std::size_t n = pd.state_dim();
  const std::size_t m = pd.control_dim();
  const std::size_t nz = pd.joint_dim();
  std::vector<Multiplied> out;
  const auto state_map = iota(0, n);
  const auto control_map = iota(n, m);
  for (std::size_t i = 0; i < pd.xfree.constraints().size(); ++i) {
    Polynomial h = pd.xfree.constraints()[i].embed(nz, state_map);
    auto vars = on_support ? support(h) : state_map;
    out.push_back({std::move(h), std::move(vars), "lambda_x" + std::to_string(i + 1)});
  }
  for (std::size_t i = 0; i < pd.omega.constraints().size(); ++i) {
    Polynomial h = pd.omega.constraints()[i].embed(nz, control_map);
    auto vars = on_support ? support(h) : control_map;
    out.push_back({std::move(h), std::move(vars), "lambda_u" + std::to_string(i + 1)});
  }
  return out;
}

// Largest even multiplier degree keeping every lambda*h within `main_degree`.
inline int default_lambda_degree(const std::vector<Multiplied>& hs, int main_degree) {
  int best = -1;
  for (const auto& c : hs) {
    const int room = main_degree - c.h.degree();
    if (room < 0) throw DegreeError("multiplier: constraint degree exceeds the certified expression degree");
    const int d = room - room % 2;
    best = best < 0 ? d : std::min(best, d);
  }
  return std::max(best, 0);
}

// Adds "expr - sum lambda_i h_i is SOS" with fresh multiplier blocks.
inline std::vector<int> add_localized_sos(SosProgram& prog, PolyExpr expr, const std::vector<Multiplied>& hs,
                                          int lambda_degree, int main_degree, const std::string& name, int& main_block) {
  std::vector<int> mult;
  for (const auto& c : hs) {
    if (lambda_degree + c.h.degree() > main_degree) {
      throw DegreeError("multiplier degree " + std::to_string(lambda_degree) + " times constraint degree " +
                        std::to_string(c.h.degree()) + " exceeds expression degree " + std::to_string(main_degree));
    }
    const int k = prog.add_gram(gram_parameterize(prog.nvars(), c.vars, lambda_degree), c.name);
    mult.push_back(k);
    for (const auto& [m, ps] : prog.blocks()[k].product_map()) {
      for (auto [i, j] : ps) {
        const double w = i == j ? 1.0 : 2.0;
        for (const auto& [hm, hc] : c.h.terms()) expr.add_var(m * hm, VarRef{k, i, j}, -w * hc);
      }
    }
  }
  main_block = prog.add_sos_constraint(std::move(expr), name, gram_parameterize(prog.nvars(), main_degree));
  return mult;
}

}  // namespace sos_detail

/// The expression <grad H, f> + g with H given by free variables
/// (`h_first` + k holds the coefficient of basis[k]) over the joint space.
inline PolyExpr ah2_expression(const ProblemData& pd, const std::vector<Monomial>& h_basis, int h_first) {
  const std::size_t n = pd.state_dim();
  const std::size_t nz = pd.joint_dim();
  PolyExpr e(nz);
  e.add_poly(pd.g);
  const auto state_map = sos_detail::iota(0, n);
  for (std::size_t k = 0; k < h_basis.size(); ++k) {
    const Polynomial hk = Polynomial::monomial(h_basis[k]).embed(nz, state_map);
    Polynomial lie(nz);
    for (std::size_t i = 0; i < n; ++i) {
      const Polynomial di = hk.derivative(i);
      if (!di.is_zero()) lie += di * pd.f[i];
    }
    e.add_var_times(VarRef{-1, h_first + static_cast<int>(k), 0}, lie);
  }
  return e;
}

/// Degree of <grad H, f> + g for deg H = deg_h.
inline int ah2_degree(const ProblemData& pd, int deg_h) {
  int d = pd.g.degree();
  if (deg_h >= 1) d = std::max(d, deg_h - 1 + pd.f.degree());
  return d;
}

namespace sos_detail {

struct AffineMap {
  std::vector<double> center;
  std::vector<double> scale;
};

inline void box_map(const SemialgebraicSet& set, bool enabled, AffineMap& map) {
  for (std::size_t i = 0; i < set.nvars(); ++i) {
    double c = 0.0, s = 1.0;
    if (enabled && set.bounds()) {
      c = 0.5 * (set.bounds()->lo[i] + set.bounds()->hi[i]);
      s = 0.5 * (set.bounds()->hi[i] - set.bounds()->lo[i]);
    }
    map.center.push_back(c);
    map.scale.push_back(s);
  }
}

inline Polynomial normalized(const Polynomial& p) {
  double mx = 0.0;
  for (const auto& [m, c] : p.terms()) mx = std::max(mx, std::abs(c));
  return mx > 0.0 ? p * (1.0 / mx) : p;
}

inline SemialgebraicSet map_set(const SemialgebraicSet& set, std::span<const double> c, std::span<const double> s) {
  std::vector<Polynomial> cons;
  for (const auto& h : set.constraints()) cons.push_back(normalized(affine_substitute(h, c, s)));
  std::optional<Box> bounds;
  if (set.bounds()) {
    Box b = *set.bounds();
    for (std::size_t i = 0; i < b.dim(); ++i) {
      b.lo[i] = (b.lo[i] - c[i]) / s[i];
      b.hi[i] = (b.hi[i] - c[i]) / s[i];
    }
    bounds = std::move(b);
  }
  return SemialgebraicSet(set.nvars(), std::move(cons), std::move(bounds));
}

inline std::vector<double> map_point(std::span<const double> z, std::span<const double> c, std::span<const double> s) {
  std::vector<double> out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = (z[i] - c[i]) / s[i];
  return out;
}

// The problem in variables z~ with z = center + scale .* z~.
inline ProblemData map_problem(const ProblemData& pd, const AffineMap& x, const AffineMap& u) {
  const std::size_t n = pd.state_dim();
  std::vector<double> c = x.center, s = x.scale;
  c.insert(c.end(), u.center.begin(), u.center.end());
  s.insert(s.end(), u.scale.begin(), u.scale.end());
  std::vector<Polynomial> f;
  for (std::size_t i = 0; i < n; ++i) f.push_back(affine_substitute(pd.f[i], c, s) * (1.0 / x.scale[i]));
  GoalSpec goal = pd.goal.is_point()
                      ? GoalSpec::point(map_point(pd.goal.as_point().point, x.center, x.scale))
                      : [&] {
                          std::vector<std::vector<double>> samples;
                          for (const auto& z : pd.goal.as_set().samples) samples.push_back(map_point(z, x.center, x.scale));
                          return GoalSpec::set(map_set(pd.goal.as_set().set, x.center, x.scale), std::move(samples));
                        }();
  SemialgebraicSet omega = pd.control_dim() > 0 ? map_set(pd.omega, u.center, u.scale) : pd.omega;
  return ProblemData{PolyVector(std::move(f)), affine_substitute(pd.g, c, s), map_set(pd.xfree, x.center, x.scale),
                     std::move(omega), std::move(goal)};
}

}  // namespace sos_detail

inline HeuristicProgram build_heuristic_program(const ProblemData& pd0, const Measure& m, int deg_h, int deg_lambda = -1,
                                                const HeuristicProgramOptions& opt = {}) {
  pd0.validate();
  if (deg_h < 0 || deg_h % 2 != 0) throw std::invalid_argument("build_heuristic_program: degH must be even and >= 0");
  if (deg_lambda >= 0 && deg_lambda % 2 != 0) throw std::invalid_argument("build_heuristic_program: degLambda must be even");
  if (m.nvars() != pd0.state_dim()) throw std::invalid_argument("build_heuristic_program: measure must live on the state space");
  const std::size_t n = pd0.state_dim();
  const std::size_t nz = pd0.joint_dim();
  sos_detail::AffineMap xmap, umap;
  sos_detail::box_map(pd0.xfree, opt.normalize_variables, xmap);
  if (pd0.control_dim() > 0) sos_detail::box_map(pd0.omega, opt.normalize_variables, umap);
  const ProblemData pd = sos_detail::map_problem(pd0, xmap, umap);

  HeuristicProgram hp{SosProgram(nz), monomials_up_to(n, deg_h), n, 0, -1, {}, -1, xmap.center, xmap.scale};
  SosProgram& prog = hp.program;
  const int h_first = prog.add_free(static_cast<int>(hp.h_basis.size()));
  // Objective: integral of each basis monomial of z~ against m in original
  // coordinates.
  std::vector<double> inv_off(n), inv_sc(n);
  for (std::size_t i = 0; i < n; ++i) {
    inv_sc[i] = 1.0 / xmap.scale[i];
    inv_off[i] = -xmap.center[i] * inv_sc[i];
  }
  for (std::size_t k = 0; k < hp.h_basis.size(); ++k) {
    const double w = integrate(m, affine_substitute(Polynomial::monomial(hp.h_basis[k]), inv_off, inv_sc));
    prog.set_objective(h_first + static_cast<int>(k), w);
  }

  const auto hs = sos_detail::set_constraints(pd, opt.multipliers_on_constraint_support);
  int main_degree = sos_detail::even_ceil(ah2_degree(pd, deg_h));
  for (const auto& c : hs) main_degree = std::max(main_degree, sos_detail::even_ceil(c.h.degree()));
  hp.lambda_degree = deg_lambda >= 0 ? deg_lambda : sos_detail::default_lambda_degree(hs, main_degree);
  hp.multiplier_blocks = sos_detail::add_localized_sos(prog, ah2_expression(pd, hp.h_basis, h_first), hs, hp.lambda_degree,
                                                       main_degree, "ah2", hp.main_block);

  auto h_at = [&](std::span<const double> z, const std::string& name, double slack_sign, int slack_block) {
    LinearEquality eq;
    eq.name = name;
    for (std::size_t k = 0; k < hp.h_basis.size(); ++k) {
      const double v = hp.h_basis[k].eval(z);
      if (v != 0.0) eq.terms[VarRef{-1, h_first + static_cast<int>(k), 0}] = v;
    }
    if (slack_block >= 0) eq.terms[VarRef{slack_block, 0, 0}] = slack_sign;
    prog.add_equality(std::move(eq));
  };

  if (pd.goal.is_point()) {
    int slack = -1;
    if (opt.goal_mode == GoalMode::Nonpositive) slack = prog.add_gram(GramParam({Monomial::one(nz)}), "goal_slack");
    h_at(pd.goal.as_point().point, "goal", 1.0, slack);
  } else {
    const SetGoal& sg = pd.goal.as_set();
    if (opt.goal_mode == GoalMode::Equality) {
      for (std::size_t s = 0; s < sg.samples.size(); ++s) h_at(sg.samples[s], "goal_sample" + std::to_string(s), 0.0, -1);
    }
    // -H - sum sigma_i h_goal_i is SOS (over the state space, embedded).
    PolyExpr negh(nz);
    const auto state_map = sos_detail::iota(0, n);
    for (std::size_t k = 0; k < hp.h_basis.size(); ++k) {
      negh.add_var_times(VarRef{-1, h_first + static_cast<int>(k), 0},
                         Polynomial::monomial(hp.h_basis[k]).embed(nz, state_map), -1.0);
    }
    std::vector<sos_detail::Multiplied> gh;
    for (std::size_t i = 0; i < sg.set.constraints().size(); ++i) {
      Polynomial h = sg.set.constraints()[i].embed(nz, state_map);
      auto vars = opt.multipliers_on_constraint_support ? sos_detail::support(h) : state_map;
      gh.push_back({std::move(h), std::move(vars), "sigma_goal" + std::to_string(i + 1)});
    }
    int goal_degree = sos_detail::even_ceil(deg_h);
    for (const auto& c : gh) goal_degree = std::max(goal_degree, sos_detail::even_ceil(c.h.degree()));
    const int gl = opt.goal_lambda_degree >= 0 ? opt.goal_lambda_degree : sos_detail::default_lambda_degree(gh, goal_degree);
    auto more = sos_detail::add_localized_sos(prog, std::move(negh), gh, gl, goal_degree, "ah1_goal", hp.goal_block);
    hp.multiplier_blocks.insert(hp.multiplier_blocks.end(), more.begin(), more.end());
  }
  return hp;
}

/// Extraction outcome: the heuristic and its recomputed certificate, or the
/// solver status when the solve did not reach optimality.
struct Extraction {
  std::optional<Polynomial> heuristic;
  std::optional<SosCertificate> certificate;
  SdpStatus status = SdpStatus::NumericalFailure;
  double objective = 0.0;
};

/// A positive `margin` returns H - margin, trading exactness of the goal
/// equality for slack against solver tolerance.
inline Extraction extract_heuristic(const HeuristicProgram& hp, const SdpSolution& sol, double margin = 0.0) {
  Extraction out;
  out.status = sol.status;
  if (!sol.ok()) return out;
  Polynomial H = hp.heuristic(sol.free.head(static_cast<Eigen::Index>(hp.h_basis.size())));
  if (margin > 0.0) H = H - margin;
  out.heuristic = std::move(H);
  out.certificate = make_certificate(hp.program, sol);
  out.objective = sol.primal_objective;
  return out;
}

}  // namespace heursos

#endif  // HEURSOS_SOSPROG_HPP
