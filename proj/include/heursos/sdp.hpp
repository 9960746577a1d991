// Dense primal-dual interior-point solver for block-diagonal semidefinite
// programs with free scalar variables.
//
// User-facing form (maximization):
//
//   maximize    <C, X> + c'x
//   subject to  <A_i, X> + f_i'x = b_i,   i = 1..m
//               X = diag(X_1, ..., X_K) PSD,  x free.
//
// Its dual is  minimize b'y  s.t.  sum_i y_i A_i - C = S PSD,  F'y = c.
//
// Internally the solver works on the equivalent minimization of <-C, X> with
// an infeasible-start path-following method using Nesterov-Todd scaling and
// Mehrotra predictor-corrector steps. Free variables enter an augmented Schur
// system that is reduced via a Cholesky factor of the Schur matrix.

#ifndef HEURSOS_SDP_HPP
#define HEURSOS_SDP_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

namespace heursos {

/// One coefficient on a symmetric matrix variable. Only the upper triangle is
/// addressed (i <= j); an off-diagonal entry multiplies the single shared
/// variable X_ij = X_ji, so `value` is the full coefficient of that variable
/// (a row containing X_01 + X_10 lists (0, 1, 2.0)).
struct SdpEntry {
  int block;
  int i;
  int j;
  double value;
};

struct SdpFreeEntry {
  int index;
  double value;
};

struct SdpRow {
  std::vector<SdpEntry> entries;
  std::vector<SdpFreeEntry> free;
  double rhs = 0.0;
};

struct SdpProblem {
  std::vector<int> block_dims;
  int num_free = 0;
  std::vector<SdpEntry> objective;
  std::vector<SdpFreeEntry> objective_free;
  std::vector<SdpRow> rows;

  std::size_t num_rows() const { return rows.size(); }

  void validate() const {
    auto check_entry = [&](const SdpEntry& e) {
      if (e.block < 0 || e.block >= static_cast<int>(block_dims.size())) {
        throw std::invalid_argument("SdpProblem: block index out of range");
      }
      const int n = block_dims[e.block];
      if (e.i < 0 || e.j < e.i || e.j >= n) throw std::invalid_argument("SdpProblem: entry must satisfy 0 <= i <= j < dim");
      if (!std::isfinite(e.value)) throw std::invalid_argument("SdpProblem: non-finite coefficient");
    };
    auto check_free = [&](const SdpFreeEntry& e) {
      if (e.index < 0 || e.index >= num_free) throw std::invalid_argument("SdpProblem: free index out of range");
      if (!std::isfinite(e.value)) throw std::invalid_argument("SdpProblem: non-finite coefficient");
    };
    for (int d : block_dims) {
      if (d <= 0) throw std::invalid_argument("SdpProblem: block dimensions must be positive");
    }
    if (num_free < 0) throw std::invalid_argument("SdpProblem: negative free count");
    for (const auto& e : objective) check_entry(e);
    for (const auto& e : objective_free) check_free(e);
    for (const auto& r : rows) {
      for (const auto& e : r.entries) check_entry(e);
      for (const auto& e : r.free) check_free(e);
      if (!std::isfinite(r.rhs)) throw std::invalid_argument("SdpProblem: non-finite right-hand side");
    }
  }
};

enum class SdpStatus {
  Optimal,
  NearOptimal,       // stalled with residuals and gap below sqrt(tol)-level thresholds
  PrimalInfeasible,  // no X, x satisfy the equalities with X PSD
  DualInfeasible,    // the maximization is unbounded
  IterationLimit,
  NumericalFailure,
};

inline const char* to_string(SdpStatus s) {
  switch (s) {
    case SdpStatus::Optimal: return "Optimal";
    case SdpStatus::NearOptimal: return "NearOptimal";
    case SdpStatus::PrimalInfeasible: return "PrimalInfeasible";
    case SdpStatus::DualInfeasible: return "DualInfeasible";
    case SdpStatus::IterationLimit: return "IterationLimit";
    case SdpStatus::NumericalFailure: return "NumericalFailure";
  }
  return "?";
}

struct SdpResiduals {
  double primal = 0.0;  // ||b - A(X) - F x||_2
  double dual = 0.0;    // ||A'y - C - S||_F + ||F'y - c||_2
  double gap = 0.0;     // |primal objective - dual objective|
};

struct SdpSettings {
  double tol = 1e-8;
  int max_iter = 200;
  double step_fraction = 0.98;
  /// Threshold on the normalized infeasibility-certificate ratio.
  double infeasibility_tol = 1e-8;
  /// Consecutive iterations the certificate test must pass.
  int infeasibility_streak = 10;
  /// Primal objective magnitude that is treated as divergence.
  double objective_limit = 1e10;
  /// Relative threshold for discarding dependent equality rows.
  double dependency_tol = 1e-10;
  bool verbose = false;
};

struct SdpSolution {
  SdpStatus status = SdpStatus::NumericalFailure;
  std::vector<Eigen::MatrixXd> X;
  Eigen::VectorXd free;
  Eigen::VectorXd y;
  std::vector<Eigen::MatrixXd> S;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  SdpResiduals residuals;
  int iterations = 0;
  int dropped_rows = 0;
  /// mu + relative primal and dual residuals, one entry per iterate.
  std::vector<double> merit;
  std::string message;

  bool ok() const { return status == SdpStatus::Optimal || status == SdpStatus::NearOptimal; }
};

namespace sdp_detail {

struct SymEntry {
  int a;
  int b;
  double v;
};

// Row i restricted to one block, listed over both triangles so that
// <A_i, X> = sum v * X(a, b).
struct BlockRow {
  int row;
  std::vector<SymEntry> entries;
};

struct Data {
  int m = 0;
  int nf = 0;
  std::vector<int> dims;
  std::vector<std::vector<BlockRow>> block_rows;  // per block
  Eigen::MatrixXd F;                              // m x nf
  Eigen::VectorXd b;
  std::vector<Eigen::MatrixXd> C;  // minimization objective
  Eigen::VectorXd c;
  std::vector<double> row_scale;   // internal row = original row * scale
};

inline double block_dot(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  return (A.array() * B.array()).sum();
}

inline Eigen::MatrixXd sym_matrix(int n, const std::vector<SdpEntry>& entries, int block) {
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
  for (const auto& e : entries) {
    if (e.block != block) continue;
    if (e.i == e.j) {
      M(e.i, e.i) += e.value;
    } else {
      M(e.i, e.j) += 0.5 * e.value;
      M(e.j, e.i) += 0.5 * e.value;
    }
  }
  return M;
}

// Applies the linear map A: blocks -> R^m.
inline Eigen::VectorXd apply_A(const Data& d, const std::vector<Eigen::MatrixXd>& X) {
  Eigen::VectorXd r = Eigen::VectorXd::Zero(d.m);
  for (std::size_t k = 0; k < d.dims.size(); ++k) {
    for (const auto& br : d.block_rows[k]) {
      double s = 0.0;
      for (const auto& e : br.entries) s += e.v * X[k](e.a, e.b);
      r(br.row) += s;
    }
  }
  return r;
}

inline std::vector<Eigen::MatrixXd> apply_At(const Data& d, const Eigen::VectorXd& y) {
  std::vector<Eigen::MatrixXd> out;
  out.reserve(d.dims.size());
  for (std::size_t k = 0; k < d.dims.size(); ++k) {
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(d.dims[k], d.dims[k]);
    for (const auto& br : d.block_rows[k]) {
      const double yi = y(br.row);
      if (yi == 0.0) continue;
      for (const auto& e : br.entries) M(e.a, e.b) += yi * e.v;
    }
    out.push_back(std::move(M));
  }
  return out;
}

// Builds internal data from the user problem, keeping only `keep` rows
// (indices into p.rows), each normalized to unit coefficient norm.
inline Data build_data(const SdpProblem& p, const std::vector<int>& keep) {
  Data d;
  d.m = static_cast<int>(keep.size());
  d.nf = p.num_free;
  d.dims = p.block_dims;
  d.block_rows.resize(p.block_dims.size());
  d.F = Eigen::MatrixXd::Zero(d.m, d.nf);
  d.b = Eigen::VectorXd::Zero(d.m);
  d.row_scale.assign(d.m, 1.0);
  for (int r = 0; r < d.m; ++r) {
    const SdpRow& row = p.rows[keep[r]];
    std::map<std::tuple<int, int, int>, double> acc;
    for (const auto& e : row.entries) acc[{e.block, e.i, e.j}] += e.value;
    double norm2 = 0.0;
    for (const auto& [key, v] : acc) norm2 += v * v;
    for (const auto& e : row.free) norm2 += e.value * e.value;
    const double scale = norm2 > 0.0 ? 1.0 / std::sqrt(norm2) : 1.0;
    d.row_scale[r] = scale;
    std::map<int, BlockRow> per_block;
    for (const auto& [key, v] : acc) {
      if (v == 0.0) continue;
      auto [blk, i, j] = key;
      auto& br = per_block[blk];
      br.row = r;
      if (i == j) {
        br.entries.push_back({i, i, v * scale});
      } else {
        br.entries.push_back({i, j, 0.5 * v * scale});
        br.entries.push_back({j, i, 0.5 * v * scale});
      }
    }
    for (auto& [blk, br] : per_block) d.block_rows[blk].push_back(std::move(br));
    for (const auto& e : row.free) d.F(r, e.index) += e.value * scale;
    d.b(r) = row.rhs * scale;
  }
  for (std::size_t k = 0; k < p.block_dims.size(); ++k) {
    d.C.push_back(-sym_matrix(p.block_dims[k], p.objective, static_cast<int>(k)));
  }
  d.c = Eigen::VectorXd::Zero(d.nf);
  for (const auto& e : p.objective_free) d.c(e.index) -= e.value;
  return d;
}

// Indices of a maximal linearly independent subset of the rows.
inline std::vector<int> independent_rows(const SdpProblem& p, double tol) {
  std::vector<int> offsets;
  int nvec = 0;
  for (int n : p.block_dims) {
    offsets.push_back(nvec);
    nvec += n * (n + 1) / 2;
  }
  const int free_off = nvec;
  nvec += p.num_free;
  const int m = static_cast<int>(p.rows.size());
  if (m == 0) return {};
  // Columns are rows of the constraint matrix in a scaled svec layout, so the
  // Euclidean geometry matches the trace inner product.
  Eigen::MatrixXd At = Eigen::MatrixXd::Zero(nvec, m);
  for (int r = 0; r < m; ++r) {
    for (const auto& e : p.rows[r].entries) {
      const int n = p.block_dims[e.block];
      const int idx = offsets[e.block] + e.i * n - e.i * (e.i - 1) / 2 + (e.j - e.i);
      At(idx, r) += e.i == e.j ? e.value : e.value / std::sqrt(2.0);
    }
    for (const auto& e : p.rows[r].free) At(free_off + e.index, r) += e.value;
    const double nrm = At.col(r).norm();
    if (nrm > 0.0) At.col(r) /= nrm;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(At);
  qr.setThreshold(tol);
  const int rank = static_cast<int>(qr.rank());
  std::vector<int> keep;
  keep.reserve(rank);
  const auto& perm = qr.colsPermutation().indices();
  for (int k = 0; k < rank; ++k) keep.push_back(perm(k));
  std::sort(keep.begin(), keep.end());
  return keep;
}

// Keeps a maximal independent set of free-variable columns of F. The dropped
// variables stay at zero, which loses nothing when c lies in the range of F';
// `consistent` is false otherwise (F'y = c has no solution).
inline std::vector<int> reduce_free(Data& d, double tol, bool& consistent) {
  consistent = true;
  std::vector<int> cols(d.nf);
  for (int j = 0; j < d.nf; ++j) cols[j] = j;
  if (d.nf == 0) return cols;
  if (d.m == 0) {
    consistent = d.c.norm() == 0.0;
    d.F.resize(0, 0);
    d.c.resize(0);
    d.nf = 0;
    return {};
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(d.F);
  qr.setThreshold(tol);
  const int rank = static_cast<int>(qr.rank());
  if (rank == d.nf) return cols;
  const Eigen::VectorXd y = d.F.transpose().colPivHouseholderQr().solve(d.c);
  consistent = (d.F.transpose() * y - d.c).norm() <= 1e-8 * (1.0 + d.c.norm());
  cols.clear();
  const auto& perm = qr.colsPermutation().indices();
  for (int k = 0; k < rank; ++k) cols.push_back(perm(k));
  std::sort(cols.begin(), cols.end());
  Eigen::MatrixXd F(d.m, rank);
  Eigen::VectorXd c(rank);
  for (int k = 0; k < rank; ++k) {
    F.col(k) = d.F.col(cols[k]);
    c(k) = d.c(cols[k]);
  }
  d.F = std::move(F);
  d.c = std::move(c);
  d.nf = rank;
  return cols;
}

struct Scaling {
  Eigen::MatrixXd G;     // W = G G'
  Eigen::MatrixXd Ginv;
  Eigen::MatrixXd W;
  Eigen::VectorXd d;     // G' S G = G^{-1} X G^{-T} = diag(d)
};

inline bool nt_scaling(const Eigen::MatrixXd& X, const Eigen::MatrixXd& S, Scaling& out) {
  Eigen::LLT<Eigen::MatrixXd> lx(X), ls(S);
  if (lx.info() != Eigen::Success || ls.info() != Eigen::Success) return false;
  const Eigen::MatrixXd Lx = lx.matrixL();
  const Eigen::MatrixXd Ls = ls.matrixL();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(Ls.transpose() * Lx, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::VectorXd sv = svd.singularValues();
  if (sv.minCoeff() <= 0.0 || !sv.allFinite()) return false;
  const Eigen::MatrixXd& V = svd.matrixV();
  const Eigen::VectorXd dinv_sqrt = sv.cwiseSqrt().cwiseInverse();
  out.d = sv;
  out.G = Lx * V * dinv_sqrt.asDiagonal();
  // G^{-1} = D^{1/2} V' Lx^{-1}
  Eigen::MatrixXd LxInv = lx.matrixL().solve(Eigen::MatrixXd::Identity(X.rows(), X.cols()));
  out.Ginv = sv.cwiseSqrt().asDiagonal() * V.transpose() * LxInv;
  out.W = out.G * out.G.transpose();
  return true;
}

// Largest alpha with X + alpha dX PSD (infinity if unbounded).
inline double max_step(const Eigen::MatrixXd& X, const Eigen::MatrixXd& dX) {
  Eigen::LLT<Eigen::MatrixXd> l(X);
  if (l.info() != Eigen::Success) return 0.0;
  Eigen::MatrixXd T = l.matrixL().solve(dX);
  T = l.matrixL().solve(T.transpose()).transpose();
  T = 0.5 * (T + T.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T, Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues()(0);
  return lmin < 0.0 ? -1.0 / lmin : std::numeric_limits<double>::infinity();
}

inline void symmetrize(Eigen::MatrixXd& M) { M = 0.5 * (M + M.transpose()); }

// Factorization of the augmented system [M F; F' 0].
class SchurSystem {
 public:
  bool factor(const Eigen::MatrixXd& M, const Eigen::MatrixXd& F) {
    M_ = &M;
    F_ = &F;
    const int m = static_cast<int>(M.rows());
    // Rows touching only free variables make M singular. Since F'dy = r2, the
    // system is unchanged by adding gamma F F' to M and gamma F r2 to r1.
    Eigen::MatrixXd Mr = M;
    gamma_ = 0.0;
    if (F.cols() > 0 && m > 0) {
      const Eigen::VectorXd fd = F.rowwise().squaredNorm();
      const double fmax = fd.maxCoeff();
      if (fmax > 0.0) {
        gamma_ = std::max(1.0, M.diagonal().cwiseAbs().maxCoeff()) / fmax;
        Mr.noalias() += gamma_ * F * F.transpose();
      }
    }
    const Eigen::MatrixXd Mg = Mr;
    double shift = 0.0;
    const double diag_max = m > 0 ? Mg.diagonal().cwiseAbs().maxCoeff() : 1.0;
    for (int attempt = 0; attempt < 6; ++attempt) {
      llt_.compute(Mr);
      if (llt_.info() == Eigen::Success) break;
      shift = shift == 0.0 ? 1e-14 * std::max(1.0, diag_max) : shift * 100.0;
      Mr = Mg;
      Mr.diagonal().array() += shift;
    }
    if (llt_.info() != Eigen::Success) return false;
    if (F.cols() > 0) {
      Z_ = llt_.solve(F);
      Eigen::MatrixXd K = F.transpose() * Z_;
      symmetrize(K);
      kfac_.compute(K);
      if (kfac_.info() != Eigen::Success) return false;
    }
    return true;
  }

  // Solves M dy + F dx = r1, F' dy = r2 with two rounds of iterative
  // refinement against the unshifted system.
  void solve(const Eigen::VectorXd& r1, const Eigen::VectorXd& r2, Eigen::VectorXd& dy, Eigen::VectorXd& dx) const {
    solve_once(r1, r2, dy, dx);
    for (int round = 0; round < 2; ++round) {
      Eigen::VectorXd e1 = r1 - (*M_) * dy;
      if (F_->cols() > 0) e1 -= (*F_) * dx;
      Eigen::VectorXd e2 = F_->cols() > 0 ? Eigen::VectorXd(r2 - F_->transpose() * dy) : Eigen::VectorXd();
      Eigen::VectorXd cy, cx;
      solve_once(e1, e2, cy, cx);
      dy += cy;
      if (F_->cols() > 0) dx += cx;
    }
  }

 private:
  void solve_once(const Eigen::VectorXd& r1, const Eigen::VectorXd& r2, Eigen::VectorXd& dy, Eigen::VectorXd& dx) const {
    Eigen::VectorXd dy0 = gamma_ > 0.0 ? Eigen::VectorXd(llt_.solve(r1 + gamma_ * (*F_) * r2)) : Eigen::VectorXd(llt_.solve(r1));
    if (F_->cols() > 0) {
      dx = kfac_.solve(F_->transpose() * dy0 - r2);
      dy = dy0 - Z_ * dx;
    } else {
      dx.resize(0);
      dy = dy0;
    }
  }

  const Eigen::MatrixXd* M_ = nullptr;
  const Eigen::MatrixXd* F_ = nullptr;
  double gamma_ = 0.0;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::MatrixXd Z_;
  Eigen::LDLT<Eigen::MatrixXd> kfac_;
};

inline Eigen::MatrixXd schur_matrix(const Data& d, const std::vector<Scaling>& sc) {
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(d.m, d.m);
  for (std::size_t k = 0; k < d.dims.size(); ++k) {
    const auto& rows = d.block_rows[k];
    const Eigen::MatrixXd& W = sc[k].W;
    const int n = d.dims[k];
    Eigen::MatrixXd B(n, n);
    for (std::size_t p = 0; p < rows.size(); ++p) {
      B.setZero();
      for (const auto& e : rows[p].entries) B.noalias() += e.v * W.col(e.a) * W.row(e.b);
      for (std::size_t q = p; q < rows.size(); ++q) {
        double s = 0.0;
        for (const auto& e : rows[q].entries) s += e.v * B(e.a, e.b);
        const int i = rows[p].row;
        const int j = rows[q].row;
        M(i, j) += s;
        if (i != j) M(j, i) += s;
      }
    }
  }
  return M;
}

}  // namespace sdp_detail

/// Residuals of (X, x, y, S) for the user-form problem, recomputed from data.
inline SdpResiduals residuals(const SdpProblem& p, const SdpSolution& s) {
  const std::size_t K = p.block_dims.size();
  if (s.X.size() != K || s.S.size() != K || s.free.size() != p.num_free ||
      s.y.size() != static_cast<Eigen::Index>(p.rows.size())) {
    throw std::invalid_argument("residuals: solution shape does not match problem");
  }
  for (std::size_t k = 0; k < K; ++k) {
    if (s.X[k].rows() != p.block_dims[k] || s.S[k].rows() != p.block_dims[k]) {
      throw std::invalid_argument("residuals: block dimension mismatch");
    }
  }
  auto entry_val = [&](const SdpEntry& e, const std::vector<Eigen::MatrixXd>& M) {
    return e.i == e.j ? M[e.block](e.i, e.i) : 0.5 * (M[e.block](e.i, e.j) + M[e.block](e.j, e.i));
  };
  SdpResiduals r;
  double rp2 = 0.0;
  std::vector<Eigen::MatrixXd> dual_res;
  for (std::size_t k = 0; k < K; ++k) {
    Eigen::MatrixXd C = sdp_detail::sym_matrix(p.block_dims[k], p.objective, static_cast<int>(k));
    dual_res.push_back(-C - s.S[k]);
  }
  Eigen::VectorXd fres = Eigen::VectorXd::Zero(p.num_free);
  for (const auto& e : p.objective_free) fres(e.index) -= e.value;
  for (std::size_t i = 0; i < p.rows.size(); ++i) {
    const auto& row = p.rows[i];
    double ax = 0.0;
    for (const auto& e : row.entries) ax += e.value * entry_val(e, s.X);
    for (const auto& e : row.free) ax += e.value * s.free(e.index);
    rp2 += (row.rhs - ax) * (row.rhs - ax);
    const double yi = s.y(static_cast<Eigen::Index>(i));
    for (const auto& e : row.entries) {
      if (e.i == e.j) {
        dual_res[e.block](e.i, e.i) += yi * e.value;
      } else {
        dual_res[e.block](e.i, e.j) += 0.5 * yi * e.value;
        dual_res[e.block](e.j, e.i) += 0.5 * yi * e.value;
      }
    }
    for (const auto& e : row.free) fres(e.index) += yi * e.value;
  }
  r.primal = std::sqrt(rp2);
  double rd2 = 0.0;
  for (const auto& D : dual_res) rd2 += D.squaredNorm();
  r.dual = std::sqrt(rd2) + fres.norm();

  double pobj = 0.0;
  for (const auto& e : p.objective) pobj += e.value * entry_val(e, s.X);
  for (const auto& e : p.objective_free) pobj += e.value * s.free(e.index);
  double dobj = 0.0;
  for (std::size_t i = 0; i < p.rows.size(); ++i) dobj += p.rows[i].rhs * s.y(static_cast<Eigen::Index>(i));
  r.gap = std::abs(pobj - dobj);
  return r;
}

/// Objective value <C, X> + c'x of the user-form problem.
inline double primal_objective(const SdpProblem& p, const std::vector<Eigen::MatrixXd>& X, const Eigen::VectorXd& x) {
  double v = 0.0;
  for (const auto& e : p.objective) {
    v += e.value * (e.i == e.j ? X[e.block](e.i, e.i) : 0.5 * (X[e.block](e.i, e.j) + X[e.block](e.j, e.i)));
  }
  for (const auto& e : p.objective_free) v += e.value * x(e.index);
  return v;
}

inline SdpSolution solve(const SdpProblem& p, const SdpSettings& settings = {}) {
  using namespace sdp_detail;
  using Eigen::MatrixXd;
  using Eigen::VectorXd;
  p.validate();

  const int K = static_cast<int>(p.block_dims.size());
  const int m_orig = static_cast<int>(p.rows.size());
  const std::vector<int> keep = independent_rows(p, settings.dependency_tol);
  Data d = build_data(p, keep);
  bool free_consistent = true;
  const std::vector<int> free_cols = reduce_free(d, settings.dependency_tol, free_consistent);
  const int m = d.m;
  const int nf = d.nf;
  int ntot = 0;
  for (int n : d.dims) ntot += n;

  SdpSolution sol;
  sol.dropped_rows = m_orig - m;

  // Norms of the (scaled) data for relative measures.
  double normC = 0.0;
  double maxC = 0.0;
  for (const auto& C : d.C) {
    normC += C.squaredNorm();
    if (C.size() > 0) maxC = std::max(maxC, C.cwiseAbs().maxCoeff());
  }
  normC = std::sqrt(normC + d.c.squaredNorm());
  if (nf > 0) maxC = std::max(maxC, d.c.cwiseAbs().maxCoeff());
  const double normb = d.b.norm();
  const double maxb = m > 0 ? d.b.cwiseAbs().maxCoeff() : 0.0;

  const double rho = 1.0 + maxb + maxC;
  std::vector<MatrixXd> X, S;
  for (int n : d.dims) {
    X.push_back(rho * MatrixXd::Identity(n, n));
    S.push_back(rho * MatrixXd::Identity(n, n));
  }
  VectorXd x = VectorXd::Zero(nf);
  VectorXd y = VectorXd::Zero(m);

  int pinf_streak = 0;
  int dinf_streak = 0;
  auto finish = [&](SdpStatus status, std::string msg) {
    // A blow-up while an infeasibility certificate is already being tracked
    // is reported as that infeasibility.
    if (status == SdpStatus::NumericalFailure && (pinf_streak > 0 || dinf_streak > 0)) {
      status = pinf_streak >= dinf_streak ? SdpStatus::PrimalInfeasible : SdpStatus::DualInfeasible;
      msg += " (after " + std::to_string(std::max(pinf_streak, dinf_streak)) + " certificate iterations)";
    }
    sol.status = status;
    sol.message = std::move(msg);
    sol.X = X;
    sol.free = VectorXd::Zero(p.num_free);
    for (int k = 0; k < nf; ++k) sol.free(free_cols[k]) = x(k);
    // Map the internal dual of the minimization back to user form.
    sol.y = VectorXd::Zero(m_orig);
    for (int r = 0; r < m; ++r) sol.y(keep[r]) = -y(r) * d.row_scale[r];
    sol.S = S;
    sol.primal_objective = primal_objective(p, X, sol.free);
    double dobj = 0.0;
    for (int i = 0; i < m_orig; ++i) dobj += p.rows[i].rhs * sol.y(i);
    sol.dual_objective = dobj;
    sol.residuals = residuals(p, sol);
    return sol;
  };

  if (!free_consistent) return finish(SdpStatus::DualInfeasible, "objective grows along free variables the rows do not constrain");

  double best_merit = std::numeric_limits<double>::infinity();
  int stall = 0;
  std::vector<Scaling> sc(K);

  for (int iter = 0; iter <= settings.max_iter; ++iter) {
    sol.iterations = iter;
    // Residuals (internal minimization form).
    const VectorXd Ax = apply_A(d, X) + d.F * x;
    const VectorXd Rp = d.b - Ax;
    std::vector<MatrixXd> AtY = apply_At(d, y);
    std::vector<MatrixXd> Rd(K);
    double rd2 = 0.0;
    for (int k = 0; k < K; ++k) {
      Rd[k] = d.C[k] - AtY[k] - S[k];
      symmetrize(Rd[k]);
      rd2 += Rd[k].squaredNorm();
    }
    const VectorXd rf = d.c - d.F.transpose() * y;
    const double rdn = std::sqrt(rd2 + rf.squaredNorm());
    double xs = 0.0;
    double pobj = d.c.dot(x);
    for (int k = 0; k < K; ++k) {
      xs += block_dot(X[k], S[k]);
      pobj += block_dot(d.C[k], X[k]);
    }
    const double dobj = d.b.dot(y);
    const double mu = ntot > 0 ? xs / ntot : 0.0;
    const double rel_p = Rp.norm() / (1.0 + normb);
    const double rel_d = rdn / (1.0 + normC);
    const double rel_gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
    const double merit = rel_gap + rel_p + rel_d;
    sol.merit.push_back(merit);
    if (settings.verbose) {
      std::fprintf(stderr, "%3d  pobj % .8e  dobj % .8e  gap %.2e  rp %.2e  rd %.2e  mu %.2e\n", iter, -pobj, -dobj,
                   rel_gap, rel_p, rel_d, mu);
    }
    if (!std::isfinite(merit)) return finish(SdpStatus::NumericalFailure, "non-finite iterate");

    if (rel_p <= settings.tol && rel_d <= settings.tol && rel_gap <= settings.tol) {
      // Confirm against the original rows, including any that were dropped.
      SdpSolution probe = finish(SdpStatus::Optimal, "converged");
      double bnorm = 0.0;
      for (const auto& r : p.rows) bnorm += r.rhs * r.rhs;
      if (probe.residuals.primal > 1e3 * settings.tol * (1.0 + std::sqrt(bnorm))) {
        return finish(SdpStatus::PrimalInfeasible, "dependent equality rows are inconsistent");
      }
      return probe;
    }

    // Infeasibility certificates.
    if (dobj > 0.0) {
      double cn = 0.0;
      for (int k = 0; k < K; ++k) cn += (d.C[k] - Rd[k]).squaredNorm();
      cn = std::sqrt(cn) + (d.c - rf).norm();
      const bool small = cn / dobj < settings.infeasibility_tol * (1.0 + normC) || dobj > settings.objective_limit * (1.0 + normC);
      pinf_streak = small ? pinf_streak + 1 : 0;
    } else {
      pinf_streak = 0;
    }
    if (pobj < 0.0) {
      const bool small = Ax.norm() / (-pobj) < settings.infeasibility_tol * (1.0 + normb) || -pobj > settings.objective_limit * (1.0 + normb);
      dinf_streak = small ? dinf_streak + 1 : 0;
    } else {
      dinf_streak = 0;
    }
    if (pinf_streak >= settings.infeasibility_streak) {
      return finish(SdpStatus::PrimalInfeasible, "primal infeasibility certificate");
    }
    if (dinf_streak >= settings.infeasibility_streak) {
      return finish(SdpStatus::DualInfeasible, "primal objective unbounded");
    }
    if (iter == settings.max_iter) break;

    if (merit < 0.5 * best_merit) {
      best_merit = merit;
      stall = 0;
    } else if (++stall > 30) {
      if (rel_p <= std::sqrt(settings.tol) && rel_d <= std::sqrt(settings.tol) && rel_gap <= std::sqrt(settings.tol)) {
        return finish(SdpStatus::NearOptimal, "progress stalled near optimality");
      }
    }

    // Scaling and Schur complement.
    bool ok = true;
    for (int k = 0; k < K && ok; ++k) ok = nt_scaling(X[k], S[k], sc[k]);
    if (!ok) return finish(SdpStatus::NumericalFailure, "lost positive definiteness of iterates");
    const MatrixXd M = schur_matrix(d, sc);
    SchurSystem schur;
    if (!schur.factor(M, d.F)) {
      if (rel_p <= std::sqrt(settings.tol) && rel_d <= std::sqrt(settings.tol) && rel_gap <= std::sqrt(settings.tol)) {
        return finish(SdpStatus::NearOptimal, "Schur complement became singular near optimality");
      }
      return finish(SdpStatus::NumericalFailure, "Schur complement factorization failed");
    }

    std::vector<MatrixXd> WRdW(K);
    for (int k = 0; k < K; ++k) WRdW[k] = sc[k].W * Rd[k] * sc[k].W;
    const VectorXd AWRdW = apply_A(d, WRdW);

    auto direction = [&](const std::vector<MatrixXd>& Rc, std::vector<MatrixXd>& dX, VectorXd& dx,
                         VectorXd& dy, std::vector<MatrixXd>& dS) {
      const VectorXd rhs = Rp - apply_A(d, Rc) + AWRdW;
      schur.solve(rhs, rf, dy, dx);
      std::vector<MatrixXd> Atdy = apply_At(d, dy);
      dX.resize(K);
      dS.resize(K);
      for (int k = 0; k < K; ++k) {
        dS[k] = Rd[k] - Atdy[k];
        symmetrize(dS[k]);
        dX[k] = Rc[k] - sc[k].W * dS[k] * sc[k].W;
        symmetrize(dX[k]);
      }
      // Refine against the operator itself so the step keeps A(dX) + F dx = Rp
      // even when M is badly conditioned.
      const double target = 1e-3 * settings.tol * (1.0 + Rp.norm());
      for (int round = 0; round < 3; ++round) {
        VectorXd e1 = Rp - apply_A(d, dX);
        if (nf > 0) e1 -= d.F * dx;
        VectorXd e2 = nf > 0 ? VectorXd(rf - d.F.transpose() * dy) : VectorXd();
        if (e1.norm() + (nf > 0 ? e2.norm() : 0.0) <= target) break;
        VectorXd cy, cx;
        schur.solve(e1, e2, cy, cx);
        if (!cy.allFinite()) break;
        const std::vector<MatrixXd> Atc = apply_At(d, cy);
        for (int k = 0; k < K; ++k) {
          MatrixXd corr = sc[k].W * Atc[k] * sc[k].W;
          symmetrize(corr);
          dX[k] += corr;
          dS[k] -= Atc[k];
          symmetrize(dS[k]);
        }
        dy += cy;
        if (nf > 0) dx += cx;
      }
    };
    auto step_lengths = [&](const std::vector<MatrixXd>& dX, const std::vector<MatrixXd>& dS, double& ap, double& ad) {
      double amp = std::numeric_limits<double>::infinity();
      double amd = std::numeric_limits<double>::infinity();
      for (int k = 0; k < K; ++k) {
        amp = std::min(amp, max_step(X[k], dX[k]));
        amd = std::min(amd, max_step(S[k], dS[k]));
      }
      ap = std::min(1.0, settings.step_fraction * amp);
      ad = std::min(1.0, settings.step_fraction * amd);
    };

    // Predictor: Rc = -X.
    std::vector<MatrixXd> Rc(K);
    for (int k = 0; k < K; ++k) Rc[k] = -X[k];
    std::vector<MatrixXd> dXa, dSa;
    VectorXd dxa, dya;
    direction(Rc, dXa, dxa, dya, dSa);
    double apa = 0.0, ada = 0.0;
    step_lengths(dXa, dSa, apa, ada);
    double xs_aff = 0.0;
    for (int k = 0; k < K; ++k) xs_aff += block_dot(X[k] + apa * dXa[k], S[k] + ada * dSa[k]);
    const double mu_aff = ntot > 0 ? xs_aff / ntot : 0.0;
    const double expon = std::max(1.0, 3.0 * std::pow(std::min(apa, ada), 2));
    const double sigma = mu > 0.0 ? std::clamp(std::pow(std::max(mu_aff, 0.0) / mu, expon), 0.0, 1.0) : 0.0;

    // Corrector: solve D T + T D = 2 sigma mu I - 2 D^2 - (dXa~ dSa~ + dSa~ dXa~)
    // in scaled space and map back with G.
    auto corrector_rhs = [&](double sig, bool second_order) {
      for (int k = 0; k < K; ++k) {
        const auto& s = sc[k];
        const int n = d.dims[k];
        MatrixXd R = MatrixXd::Zero(n, n);
        if (second_order) {
          const MatrixXd dXt = s.Ginv * dXa[k] * s.Ginv.transpose();
          const MatrixXd dSt = s.G.transpose() * dSa[k] * s.G;
          R = -(dXt * dSt + dSt * dXt);
        }
        R.diagonal().array() += 2.0 * sig * mu;
        R.diagonal() -= 2.0 * s.d.cwiseProduct(s.d);
        MatrixXd T(n, n);
        for (int i = 0; i < n; ++i) {
          for (int j = 0; j < n; ++j) T(i, j) = R(i, j) / (s.d(i) + s.d(j));
        }
        Rc[k] = s.G * T * s.G.transpose();
        symmetrize(Rc[k]);
      }
    };
    corrector_rhs(sigma, true);
    std::vector<MatrixXd> dX, dS;
    VectorXd dx, dy;
    direction(Rc, dX, dx, dy, dS);
    double ap = 0.0, ad = 0.0;
    step_lengths(dX, dS, ap, ad);
    if (std::min(ap, ad) < 0.2) {
      // Poorly centered iterate: fall back to a more centering direction.
      corrector_rhs(std::max(sigma, 0.5), false);
      std::vector<MatrixXd> cX, cS;
      VectorXd cx, cy;
      direction(Rc, cX, cx, cy, cS);
      double cp = 0.0, cd = 0.0;
      step_lengths(cX, cS, cp, cd);
      if (std::min(cp, cd) > std::min(ap, ad)) {
        dX = std::move(cX);
        dS = std::move(cS);
        dx = std::move(cx);
        dy = std::move(cy);
        ap = cp;
        ad = cd;
      }
    }
    if (!std::isfinite(ap) || !std::isfinite(ad) || !dy.allFinite() || (nf > 0 && !dx.allFinite())) {
      return finish(SdpStatus::NumericalFailure, "non-finite search direction");
    }
    // Rounding can leave a nominally interior step on the boundary; shorten
    // until every block keeps a Cholesky factor.
    auto take = [&](std::vector<MatrixXd>& Z, const std::vector<MatrixXd>& dZ, double& alpha) {
      for (int attempt = 0; attempt < 40; ++attempt) {
        bool pd = true;
        std::vector<MatrixXd> trial(K);
        for (int k = 0; k < K && pd; ++k) {
          trial[k] = Z[k] + alpha * dZ[k];
          symmetrize(trial[k]);
          pd = Eigen::LLT<MatrixXd>(trial[k]).info() == Eigen::Success;
        }
        if (pd) {
          Z = std::move(trial);
          return;
        }
        alpha *= 0.8;
      }
      alpha = 0.0;
    };
    take(X, dX, ap);
    take(S, dS, ad);
    if (settings.verbose) std::fprintf(stderr, "     sigma %.2e  ap %.2e  ad %.2e\n", sigma, ap, ad);
    if (nf > 0) x += ap * dx;
    y += ad * dy;
    if (ap < 1e-10 && ad < 1e-10) {
      if (rel_p <= std::sqrt(settings.tol) && rel_d <= std::sqrt(settings.tol) && rel_gap <= std::sqrt(settings.tol)) {
        return finish(SdpStatus::NearOptimal, "step length collapsed near optimality");
      }
      return finish(SdpStatus::NumericalFailure, "step length collapsed");
    }
  }
  return finish(SdpStatus::IterationLimit, "iteration limit reached");
}

/// Writes the problem in a line-oriented sparse text format:
///
///   heursos-sdp 1
///   blocks <K> <n_1> ... <n_K>
///   free <nf>
///   objective <count> then count tokens
///   rows <m>
///   row <rhs> <count> then count tokens
///
/// where a token is `b <block> <i> <j> <value>` or `f <index> <value>`.
/// Values are printed with 17 significant digits.
inline void dump_problem(std::ostream& os, const SdpProblem& p) {
  os << std::setprecision(17);
  os << "heursos-sdp 1\n";
  os << "blocks " << p.block_dims.size();
  for (int n : p.block_dims) os << ' ' << n;
  os << "\nfree " << p.num_free << "\n";
  auto tokens = [&](const std::vector<SdpEntry>& e, const std::vector<SdpFreeEntry>& f) {
    os << ' ' << (e.size() + f.size());
    for (const auto& t : e) os << " b " << t.block << ' ' << t.i << ' ' << t.j << ' ' << t.value;
    for (const auto& t : f) os << " f " << t.index << ' ' << t.value;
    os << '\n';
  };
  os << "objective";
  tokens(p.objective, p.objective_free);
  os << "rows " << p.rows.size() << '\n';
  for (const auto& r : p.rows) {
    os << "row " << r.rhs;
    tokens(r.entries, r.free);
  }
}

inline SdpProblem load_problem(std::istream& is) {
  auto expect = [&](std::string_view word) {
    std::string w;
    if (!(is >> w) || w != word) throw std::runtime_error("load_problem: expected '" + std::string(word) + "'");
  };
  auto read_tokens = [&](std::vector<SdpEntry>& e, std::vector<SdpFreeEntry>& f) {
    std::size_t count = 0;
    if (!(is >> count)) throw std::runtime_error("load_problem: bad token count");
    for (std::size_t t = 0; t < count; ++t) {
      std::string kind;
      is >> kind;
      if (kind == "b") {
        SdpEntry x{};
        is >> x.block >> x.i >> x.j >> x.value;
        e.push_back(x);
      } else if (kind == "f") {
        SdpFreeEntry x{};
        is >> x.index >> x.value;
        f.push_back(x);
      } else {
        throw std::runtime_error("load_problem: unknown token kind '" + kind + "'");
      }
      if (!is) throw std::runtime_error("load_problem: truncated token");
    }
  };
  SdpProblem p;
  int version = 0;
  expect("heursos-sdp");
  is >> version;
  if (version != 1) throw std::runtime_error("load_problem: unsupported version");
  expect("blocks");
  std::size_t K = 0;
  is >> K;
  p.block_dims.resize(K);
  for (auto& n : p.block_dims) is >> n;
  expect("free");
  is >> p.num_free;
  expect("objective");
  read_tokens(p.objective, p.objective_free);
  expect("rows");
  std::size_t m = 0;
  is >> m;
  p.rows.resize(m);
  for (auto& r : p.rows) {
    expect("row");
    is >> r.rhs;
    read_tokens(r.entries, r.free);
  }
  if (!is) throw std::runtime_error("load_problem: truncated input");
  p.validate();
  return p;
}

}  // namespace heursos

#endif  // HEURSOS_SDP_HPP
