#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>
#include <sstream>

#include "heursos/sdp.hpp"
#include "support.hpp"

namespace {

using namespace heursos;

double min_eig(const Eigen::MatrixXd& A) { return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(A).eigenvalues().minCoeff(); }

TEST(Sdp, ScalarEquality) {
  SdpProblem p;
  p.block_dims = {1};
  p.objective = {{0, 0, 0, -1.0}};
  p.rows = {{{{0, 0, 0, 1.0}}, {}, 2.0}};
  const auto s = solve(p);
  ASSERT_EQ(s.status, SdpStatus::Optimal);
  EXPECT_NEAR(s.primal_objective, -2.0, 1e-7);
  EXPECT_NEAR(s.X[0](0, 0), 2.0, 1e-7);
}

TEST(Sdp, OffDiagonalUsesFullCoefficient) {
  // maximize X01 + X10 subject to unit diagonal: optimum 2 at the all-ones matrix.
  SdpProblem p;
  p.block_dims = {2};
  p.objective = {{0, 0, 1, 2.0}};
  p.rows = {{{{0, 0, 0, 1.0}}, {}, 1.0}, {{{0, 1, 1, 1.0}}, {}, 1.0}};
  const auto s = solve(p);
  ASSERT_EQ(s.status, SdpStatus::Optimal);
  EXPECT_NEAR(s.primal_objective, 2.0, 1e-7);
  EXPECT_NEAR(s.dual_objective, 2.0, 1e-7);
  EXPECT_NEAR(s.X[0](0, 1), 1.0, 1e-6);
  EXPECT_GE(min_eig(s.X[0]), -1e-8);
  EXPECT_GE(min_eig(s.S[0]), -1e-8);
}

TEST(Sdp, FreeVariables) {
  // maximize -t subject to X00 - t = 0, X00 + X11 = 1.
  SdpProblem p;
  p.block_dims = {2};
  p.num_free = 1;
  p.objective_free = {{0, -1.0}};
  p.rows = {{{{0, 0, 0, 1.0}}, {{0, -1.0}}, 0.0}, {{{0, 0, 0, 1.0}, {0, 1, 1, 1.0}}, {}, 1.0}};
  const auto s = solve(p);
  ASSERT_TRUE(s.ok());
  EXPECT_NEAR(s.free(0), 0.0, 1e-6);
  EXPECT_NEAR(s.primal_objective, 0.0, 1e-7);
}

TEST(Sdp, RowTouchingOnlyFreeVariables) {
  // maximize X00 subject to t = 3, X00 + X11 = t.
  SdpProblem p;
  p.block_dims = {2};
  p.num_free = 1;
  p.objective = {{0, 0, 0, 1.0}};
  p.rows = {{{}, {{0, 1.0}}, 3.0}, {{{0, 0, 0, 1.0}, {0, 1, 1, 1.0}}, {{0, -1.0}}, 0.0}};
  const auto s = solve(p);
  ASSERT_TRUE(s.ok());
  EXPECT_NEAR(s.primal_objective, 3.0, 1e-6);
}

TEST(Sdp, DetectsUnboundedObjective) {
  SdpProblem p;
  p.block_dims = {2};
  p.objective = {{0, 1, 1, 1.0}};
  p.rows = {{{{0, 0, 0, 1.0}}, {}, 1.0}};
  EXPECT_EQ(solve(p).status, SdpStatus::DualInfeasible);
}

TEST(Sdp, DetectsInfeasibleConstraints) {
  SdpProblem p;
  p.block_dims = {2};
  p.rows = {{{{0, 0, 0, 1.0}}, {}, -1.0}};
  EXPECT_EQ(solve(p).status, SdpStatus::PrimalInfeasible);
}

TEST(Sdp, DependentRowsAreDropped) {
  SdpProblem p;
  p.block_dims = {2};
  p.objective = {{0, 0, 1, 2.0}};
  p.rows = {{{{0, 0, 0, 1.0}}, {}, 1.0}, {{{0, 1, 1, 1.0}}, {}, 1.0}, {{{0, 0, 0, 2.0}, {0, 1, 1, 2.0}}, {}, 4.0}};
  const auto s = solve(p);
  ASSERT_EQ(s.status, SdpStatus::Optimal);
  EXPECT_EQ(s.dropped_rows, 1);
  EXPECT_NEAR(s.primal_objective, 2.0, 1e-7);
}

TEST(Sdp, InconsistentDependentRowsAreInfeasible) {
  SdpProblem p;
  p.block_dims = {2};
  p.rows = {{{{0, 0, 0, 1.0}}, {}, 1.0}, {{{0, 0, 0, 2.0}}, {}, 3.0}};
  EXPECT_EQ(solve(p).status, SdpStatus::PrimalInfeasible);
}

TEST(Sdp, ValidatesInput) {
  SdpProblem p;
  p.block_dims = {2};
  p.rows = {{{{0, 1, 0, 1.0}}, {}, 1.0}};
  EXPECT_THROW(solve(p), std::invalid_argument);
  p.rows = {{{{1, 0, 0, 1.0}}, {}, 1.0}};
  EXPECT_THROW(solve(p), std::invalid_argument);
  p.rows = {{{}, {{0, 1.0}}, 1.0}};
  EXPECT_THROW(solve(p), std::invalid_argument);
}

TEST(Sdp, PlantedOptimaAreRecovered) {
  std::mt19937 rng(5);
  for (int t = 0; t < 25; ++t) {
    const auto planted = heursos::testing::planted_sdp(rng);
    const auto s = solve(planted.problem);
    ASSERT_EQ(s.status, SdpStatus::Optimal) << "instance " << t << ": " << s.message;
    const double gap = s.residuals.gap / (1.0 + std::abs(s.primal_objective) + std::abs(s.dual_objective));
    EXPECT_LE(gap, 1e-7);
    EXPECT_NEAR(s.primal_objective, planted.optimum, 1e-6 * (1.0 + std::abs(planted.optimum)));
    for (std::size_t k = 0; k < s.X.size(); ++k) EXPECT_GE(min_eig(s.X[k]), -1e-8);
  }
}

TEST(Sdp, DumpLoadRoundTrip) {
  std::mt19937 rng(6);
  const auto planted = heursos::testing::planted_sdp(rng);
  std::stringstream ss;
  dump_problem(ss, planted.problem);
  const SdpProblem q = load_problem(ss);
  EXPECT_EQ(q.block_dims, planted.problem.block_dims);
  ASSERT_EQ(q.rows.size(), planted.problem.rows.size());
  EXPECT_NEAR(solve(q).primal_objective, planted.optimum, 1e-6 * (1.0 + std::abs(planted.optimum)));
}

}  // namespace
