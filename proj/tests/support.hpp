// Shared fixtures and independent oracles for the test binaries.

#ifndef HEURSOS_TESTS_SUPPORT_HPP
#define HEURSOS_TESTS_SUPPORT_HPP

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <random>
#include <utility>
#include <vector>

#include "heursos/poly.hpp"
#include "heursos/sdp.hpp"
#include "heursos/semialg.hpp"
#include "heursos/verify.hpp"

namespace heursos::testing {

/// Feasible SDP with a known optimum, built from a complementary pair
/// (X*, S*) sharing eigenvectors and a random dual vector y*.
struct PlantedSdp {
  SdpProblem problem;
  double optimum = 0.0;
};

inline PlantedSdp planted_sdp(std::mt19937& rng) {
  std::normal_distribution<double> N;
  std::uniform_int_distribution<int> nblocks(1, 3), ndim(1, 8), nrows(1, 30);
  PlantedSdp out;
  SdpProblem& p = out.problem;
  const int K = nblocks(rng);
  for (int k = 0; k < K; ++k) p.block_dims.push_back(ndim(rng));
  int total = 0;
  for (int n : p.block_dims) total += n * (n + 1) / 2;
  const int m = std::min(nrows(rng), total);

  std::vector<Eigen::MatrixXd> X, S;
  for (int n : p.block_dims) {
    const Eigen::MatrixXd G = Eigen::MatrixXd::NullaryExpr(n, n, [&] { return N(rng); });
    const Eigen::MatrixXd Q = Eigen::HouseholderQR<Eigen::MatrixXd>(G).householderQ();
    const int r = std::uniform_int_distribution<int>(0, n)(rng);
    Eigen::VectorXd lx = Eigen::VectorXd::Zero(n), ls = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) (i < r ? lx(i) : ls(i)) = 0.5 + std::abs(N(rng));
    X.push_back(Q * lx.asDiagonal() * Q.transpose());
    S.push_back(Q * ls.asDiagonal() * Q.transpose());
  }
  Eigen::VectorXd y(m);
  for (int i = 0; i < m; ++i) y(i) = N(rng);

  // C = sum_i y_i A_i - S*, so (X*, y*, S*) is an optimal primal-dual pair.
  std::vector<Eigen::MatrixXd> C(K);
  for (int k = 0; k < K; ++k) C[k] = -S[k];
  for (int i = 0; i < m; ++i) {
    SdpRow row;
    for (int k = 0; k < K; ++k) {
      const int n = p.block_dims[k];
      for (int a = 0; a < n; ++a) {
        for (int b = a; b < n; ++b) {
          const double v = N(rng);
          row.entries.push_back({k, a, b, v});
          row.rhs += v * X[k](a, b);
          if (a == b) {
            C[k](a, a) += y(i) * v;
          } else {
            C[k](a, b) += 0.5 * y(i) * v;
            C[k](b, a) += 0.5 * y(i) * v;
          }
        }
      }
    }
    out.optimum += row.rhs * y(i);
    p.rows.push_back(std::move(row));
  }
  for (int k = 0; k < K; ++k) {
    for (int a = 0; a < p.block_dims[k]; ++a) {
      for (int b = a; b < p.block_dims[k]; ++b) p.objective.push_back({k, a, b, a == b ? C[k](a, a) : 2.0 * C[k](a, b)});
    }
  }
  return out;
}

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n) {
  std::vector<double> x(n), w(n);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    x[i] = z;
    w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
  return {x, w};
}

/// Tensor Gauss-Legendre integral of p over a box.
inline double quadrature(const Polynomial& p, const Box& b, int points = 12) {
  const auto [x, w] = gauss_legendre(points);
  const std::size_t d = b.dim();
  std::vector<int> idx(d, 0);
  std::vector<double> z(d);
  double total = 0.0;
  while (true) {
    double weight = 1.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double half = 0.5 * (b.hi[i] - b.lo[i]);
      z[i] = b.lo[i] + half * (x[idx[i]] + 1.0);
      weight *= half * w[idx[i]];
    }
    total += weight * p.eval(z);
    std::size_t i = 0;
    while (i < d && ++idx[i] == points) idx[i++] = 0;
    if (i == d) break;
  }
  return total;
}

/// Random polynomial with coefficients in [-1, 1] on all monomials up to
/// `degree`, each kept with probability `density`.
inline Polynomial random_polynomial(std::mt19937& rng, std::size_t nvars, int degree, double density = 0.7) {
  std::uniform_real_distribution<double> U(-1.0, 1.0), keep(0.0, 1.0);
  Polynomial p(nvars);
  for (const auto& m : monomials_up_to(nvars, degree)) {
    if (keep(rng) < density) p.add_term(m, U(rng));
  }
  return p;
}

inline PolyProblem single_integrator() {
  return PolyProblem(PolyVector({Polynomial::variable(2, 1)}), Polynomial::constant(2, 1.0), box({-1.0}, {1.0}),
                     box({-1.0}, {1.0}), GoalSpec::point({0.0}));
}

inline Measure boundary_measure() { return Measure::discrete({{{-1.0}, 1.0}, {{1.0}, 1.0}}); }

inline Measure double_integrator_support() {
  return Measure::lebesgue({-2.0, -std::numbers::sqrt2}, {2.0, std::numbers::sqrt2});
}

}  // namespace heursos::testing

#endif  // HEURSOS_TESTS_SUPPORT_HPP
