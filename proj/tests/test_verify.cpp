#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "heursos/synth.hpp"
#include "heursos/verify.hpp"
#include "support.hpp"

namespace {

using namespace heursos;
using heursos::testing::single_integrator;

const Polynomial x = Polynomial::variable(1, 0);

TEST(Certify, IdentityHeuristicIsAdmissible) {
  const auto r = certify_admissible(single_integrator(), x);
  ASSERT_TRUE(r.certified()) << r.reason;
  EXPECT_GE(r.certificate->min_eigenvalue(), -1e-8);
  EXPECT_LE(r.certificate->max_residual, 1e-7);
}

TEST(Certify, HandMultiplierForIdentityHeuristic) {
  // 1 + u - (1/2)(1 - u^2) = (1/2)(1 + u)^2, so lambda_u = 1/2 certifies AH2.
  const Polynomial u = Polynomial::variable(1, 0);
  const Polynomial lhs = (1.0 + u) - 0.5 * (1.0 - u * u);
  EXPECT_LE(lhs.max_coeff_diff(0.5 * (1.0 + u) * (1.0 + u)), 1e-15);
  EXPECT_TRUE(check_sos(lhs).certified());
  EXPECT_TRUE(certify_admissible(single_integrator(), x, 0).certified());
}

TEST(Certify, SteepHeuristicIsRefused) {
  const auto r = certify_admissible(single_integrator(), 2.0 * x);
  EXPECT_EQ(r.outcome, CertifyResult::Outcome::RelaxationInfeasible);
  EXPECT_FALSE(r.attempts.empty());
  EXPECT_LE(r.lambda_degree, CertifySettings{}.max_lambda_degree);
}

TEST(Certify, GoalConditions) {
  EXPECT_TRUE(certify_admissible(single_integrator(), x - 1.0).certified());
  const auto c = certify_consistent(single_integrator(), x - 1.0);
  EXPECT_EQ(c.outcome, CertifyResult::Outcome::GoalConditionFailed);
  EXPECT_NE(c.reason.find("CH1"), std::string::npos);
  EXPECT_EQ(certify_admissible(single_integrator(), x + 1.0).outcome, CertifyResult::Outcome::GoalConditionFailed);
  EXPECT_TRUE(certify_admissible(single_integrator(), Polynomial(1)).certified());
  EXPECT_TRUE(certify_consistent(single_integrator(), Polynomial(1)).certified());
  EXPECT_TRUE(certify_consistent(single_integrator(), x).certified());
}

TEST(Certify, RejectsBadArguments) {
  EXPECT_THROW(certify_admissible(single_integrator(), Polynomial::variable(2, 0)), std::invalid_argument);
  EXPECT_THROW(certify_admissible(single_integrator(), x, 3), std::invalid_argument);
}

TEST(Falsify, SteepHeuristicCounterexample) {
  const auto r = falsify(single_integrator(), 2.0 * x, FalsifySettings{{101, 101}});
  ASSERT_FALSE(r.none_found());
  EXPECT_EQ(r.counterexample->condition, Condition::AH2);
  EXPECT_NEAR(r.counterexample->value, -1.0, 1e-12);
  EXPECT_NEAR(r.counterexample->control[0], -1.0, 1e-12);
}

TEST(Falsify, AdmissibleHeuristicsPass) {
  EXPECT_TRUE(falsify(single_integrator(), x, FalsifySettings{{101, 101}}).none_found());
  EXPECT_TRUE(falsify(single_integrator(), Polynomial(1), FalsifySettings{{101, 101}}).none_found());
}

TEST(Falsify, GoalViolationIsReported) {
  const auto r = falsify(single_integrator(), 0.5 * x + 0.25, FalsifySettings{{101, 101}});
  ASSERT_FALSE(r.none_found());
  EXPECT_EQ(r.counterexample->condition, Condition::AH1);
  EXPECT_DOUBLE_EQ(r.counterexample->value, 0.25);
}

TEST(Falsify, MaxOfAdmissibleHeuristicsIsAdmissible) {
  const Heuristic h = max_of(Heuristic::from_polynomial(x), Heuristic::from_polynomial(-1.0 * x));
  const auto r = falsify(to_black_box(single_integrator()), h, FalsifySettings{{101, 101}});
  EXPECT_TRUE(r.none_found());
  EXPECT_GT(r.tie_points, 0u);
}

TEST(Falsify, PendulumQuadraticBound) {
  const auto p = std::get<BlackBoxProblem>(builtin("pendulum"));
  const FalsifySettings s{{201, 201, 41}, 10000, 1e-9};
  EXPECT_TRUE(falsify(p, pendulum_heuristic(2.0 / 3.0), s).none_found());
  const auto bad = falsify(p, pendulum_heuristic(2.0), s);
  ASSERT_FALSE(bad.none_found());
  EXPECT_LT(bad.counterexample->value, -1e-3);
}

TEST(Falsify, EuclideanDistanceForShortestPath) {
  for (int n = 1; n <= 3; ++n) {
    const auto p = std::get<PolyProblem>(builtin("shortest_path_nd", BuiltinParams{n}));
    const std::vector<int> grid(2 * n, n == 3 ? 9 : 41);
    const auto r = falsify(to_black_box(p), euclidean_heuristic(n), FalsifySettings{grid, 5000, 1e-9});
    EXPECT_TRUE(r.none_found()) << "n=" << n << " min " << r.min_value;
    EXPECT_GT(r.evaluated, 0u);
    // 2|x| overestimates.
    Heuristic twice = euclidean_heuristic(n);
    twice.value = [v = twice.value](std::span<const double> z) { return 2.0 * v(z); };
    twice.gradient = [g = twice.gradient](std::span<const double> z) {
      auto out = g(z);
      for (double& c : out) c *= 2.0;
      return out;
    };
    EXPECT_FALSE(falsify(to_black_box(p), twice, FalsifySettings{grid, 5000, 1e-9}).none_found());
  }
}

TEST(Falsify, UnicycleHeuristic) {
  const auto p = std::get<BlackBoxProblem>(builtin("unicycle"));
  const auto r = falsify(p, unicycle_heuristic(), FalsifySettings{{21, 21, 21, 11}, 5000, 1e-9});
  EXPECT_TRUE(r.none_found()) << r.min_value;
}

TEST(Falsify, IsDeterministic) {
  const auto p = std::get<BlackBoxProblem>(builtin("pendulum"));
  const FalsifySettings s{{31, 31, 7}, 500, 1e-9};
  const auto a = falsify(p, pendulum_heuristic(2.0), s), b = falsify(p, pendulum_heuristic(2.0), s);
  EXPECT_EQ(a.min_value, b.min_value);
  EXPECT_EQ(a.min_state, b.min_state);
  EXPECT_EQ(a.evaluated, b.evaluated);
}

TEST(Falsify, GridMustMatchDimensions) {
  EXPECT_THROW(falsify(single_integrator(), x, FalsifySettings{{11}}), std::invalid_argument);
}

TEST(Halton, PointsStayInBox) {
  const Box b{{-1.0, 2.0}, {1.0, 5.0}};
  for (std::uint64_t k = 1; k < 200; ++k) EXPECT_TRUE(b.contains(halton_point(k, b)));
  EXPECT_DOUBLE_EQ(verify_detail::radical_inverse(1, 2), 0.5);
  EXPECT_DOUBLE_EQ(verify_detail::radical_inverse(3, 2), 0.75);
}

}  // namespace
