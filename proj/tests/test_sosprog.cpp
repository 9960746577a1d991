#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "heursos/sosprog.hpp"
#include "support.hpp"

namespace {

using namespace heursos;

Polynomial gram_polynomial(std::mt19937& rng, std::size_t n, int deg) {
  const GramParam g = gram_parameterize(n, deg);
  std::normal_distribution<double> N;
  const Eigen::MatrixXd L = Eigen::MatrixXd::NullaryExpr(g.dim(), g.dim(), [&] { return N(rng); });
  return g.polynomial(L * L.transpose() / g.dim());
}

ProblemData single_integrator_data() { return heursos::testing::single_integrator().data(); }

ProblemData double_integrator_data() {
  return ProblemData{PolyVector({Polynomial::variable(3, 1), Polynomial::variable(3, 2)}), Polynomial::constant(3, 1.0),
                     box({-3.0, -3.0}, {3.0, 3.0}), box({-1.0}, {1.0}), GoalSpec::point({0.0, 0.0})};
}

double solve_objective(const ProblemData& pd, const Measure& m, int deg, Polynomial* H = nullptr) {
  const HeuristicProgram hp = build_heuristic_program(pd, m, deg);
  const SdpSolution sol = solve(to_sdp(hp.program));
  EXPECT_EQ(sol.status, SdpStatus::Optimal) << sol.message;
  const Extraction ex = extract_heuristic(hp, sol);
  EXPECT_TRUE(ex.certificate && ex.certificate->valid());
  if (H && ex.heuristic) *H = *ex.heuristic;
  return ex.objective;
}

TEST(GramParam, BasisAndProducts) {
  const GramParam g = gram_parameterize(2, 4);
  EXPECT_EQ(g.dim(), 6);
  EXPECT_EQ(g.pairs(Monomial{1, 1}).size(), 2u);  // (1, x1*x2) and (x1, x2)
  EXPECT_THROW(gram_parameterize(2, 3), std::invalid_argument);
  Eigen::MatrixXd Q = Eigen::MatrixXd::Identity(g.dim(), g.dim());
  const Polynomial p = g.polynomial(Q);
  const Polynomial x = Polynomial::variable(2, 0), y = Polynomial::variable(2, 1);
  EXPECT_LE(p.max_coeff_diff(1.0 + x * x + y * y + x * x * x * x + x * x * y * y + y * y * y * y), 1e-15);
}

TEST(GramParam, RestrictedSupport) {
  const std::vector<std::size_t> support{1};
  const GramParam g = gram_parameterize(3, support, 4);
  EXPECT_EQ(g.dim(), 3);
  for (const auto& m : g.basis()) {
    EXPECT_EQ(m[0], 0);
    EXPECT_EQ(m[2], 0);
  }
}

TEST(CheckSos, CertifiesSimpleSquares) {
  const Polynomial x = Polynomial::variable(1, 0);
  const auto r = check_sos(x * x - 2.0 * x + 1.0);
  ASSERT_TRUE(r.certified()) << r.reason;
  EXPECT_LE(r.certificate->max_residual, 1e-7);
  EXPECT_GE(r.certificate->min_eigenvalue(), -1e-8);
  EXPECT_TRUE(check_sos(Polynomial::constant(2, 3.0)).certified());
}

TEST(CheckSos, RefutesNonSos) {
  const Polynomial x = Polynomial::variable(1, 0);
  EXPECT_EQ(check_sos(x).outcome, SosCheck::Outcome::Refuted);
  EXPECT_EQ(check_sos(-1.0 * x * x).outcome, SosCheck::Outcome::Refuted);
  EXPECT_EQ(check_sos(x * x * x).outcome, SosCheck::Outcome::Refuted);
  EXPECT_EQ(check_sos(x * x - 1.0).outcome, SosCheck::Outcome::Refuted);
}

TEST(CheckSos, RandomGramPolynomialsRoundTrip) {
  std::mt19937 rng(31);
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 1 + t % 2;
    const int deg = 2 * (1 + t % 4);
    const Polynomial p = gram_polynomial(rng, n, deg);
    const auto r = check_sos(p);
    ASSERT_TRUE(r.certified()) << "n=" << n << " deg=" << deg << ": " << r.reason;
    EXPECT_LE(r.certificate->max_residual, 1e-7);
  }
}

TEST(SosProgram, ToSdpEmitsOneRowPerMonomial) {
  SosProgram prog(1);
  const Polynomial x = Polynomial::variable(1, 0);
  prog.add_sos_constraint(PolyExpr(x * x + 1.0), "p");
  const SdpProblem p = to_sdp(prog);
  ASSERT_EQ(p.block_dims.size(), 1u);
  EXPECT_EQ(p.block_dims[0], 2);
  EXPECT_EQ(p.rows.size(), 3u);
  for (const auto& row : p.rows) {
    for (const auto& e : row.entries) EXPECT_DOUBLE_EQ(e.value, e.i == e.j ? 1.0 : 2.0);
  }
}

TEST(HeuristicProgram, SingleIntegratorDegreeTwoIsZero) {
  Polynomial H(1);
  const double obj = solve_objective(single_integrator_data(), heursos::testing::boundary_measure(), 2, &H);
  EXPECT_NEAR(obj, 1.0, 1e-6);
  EXPECT_NEAR(H.eval(std::vector<double>{0.0}), 0.0, 1e-7);
}

// Reference values from an independent conic solve of the same programs
// (tests/reference/sos_reference.py), multiplier degree deg - 2.
TEST(HeuristicProgram, SingleIntegratorObjectivesMatchReference) {
  const double expected[] = {1.0, 1.2408065, 1.5490381, 1.6043196, 1.7051631};
  double prev = -1.0;
  for (int k = 0; k < 5; ++k) {
    const int deg = 2 * (k + 1);
    Polynomial H(1);
    const double obj = solve_objective(single_integrator_data(), heursos::testing::boundary_measure(), deg, &H);
    EXPECT_NEAR(obj, expected[k], 2e-6) << "degree " << deg;
    EXPECT_GE(obj, prev - 1e-6);
    prev = obj;
    for (int i = 0; i <= 1000; ++i) {
      const double x = -1.0 + 2.0 * i / 1000.0;
      EXPECT_LE(H.eval(std::vector<double>{x}), std::abs(x) + 1e-6);
    }
  }
}

TEST(HeuristicProgram, DegreeTenReachesLpBound) {
  // Largest H(1) over all degree-10 polynomials with |H'| <= 1 on [-1, 1],
  // from a 4001-point linear program.
  Polynomial H(1);
  solve_objective(single_integrator_data(), heursos::testing::boundary_measure(), 10, &H);
  EXPECT_NEAR(H.eval(std::vector<double>{1.0}), 0.852582, 1e-6);
  EXPECT_NEAR(H.eval(std::vector<double>{-1.0}), 0.852582, 1e-6);
}

TEST(HeuristicProgram, DoubleIntegratorObjectivesMatchReference) {
  const Measure m = heursos::testing::double_integrator_support();
  EXPECT_NEAR(solve_objective(double_integrator_data(), m, 2), 5.165905, 1e-5);
  EXPECT_NEAR(solve_objective(double_integrator_data(), m, 4), 7.928385, 1e-5);
  EXPECT_NEAR(solve_objective(double_integrator_data(), m, 8), 16.39342, 1e-4);
}

TEST(HeuristicProgram, NormalizationDoesNotChangeTheOptimum) {
  HeuristicProgramOptions raw;
  raw.normalize_variables = false;
  const Measure m = heursos::testing::double_integrator_support();
  const auto hp = build_heuristic_program(double_integrator_data(), m, 4, -1, raw);
  const auto sol = solve(to_sdp(hp.program));
  ASSERT_TRUE(sol.ok());
  EXPECT_NEAR(extract_heuristic(hp, sol).objective, 7.928385, 1e-5);
}

TEST(HeuristicProgram, RejectsBadDegrees) {
  const Measure m = heursos::testing::boundary_measure();
  EXPECT_THROW(build_heuristic_program(single_integrator_data(), m, 3), std::invalid_argument);
  EXPECT_THROW(build_heuristic_program(single_integrator_data(), m, 4, 3), std::invalid_argument);
  EXPECT_THROW(build_heuristic_program(single_integrator_data(), Measure::lebesgue({0.0, 0.0}, {1.0, 1.0}), 4),
               std::invalid_argument);
}

}  // namespace
