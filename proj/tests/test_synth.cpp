#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "heursos/synth.hpp"
#include "support.hpp"

namespace {

using namespace heursos;
using heursos::testing::single_integrator;

// Minimum time for x1' = x2, x2' = u, |u| <= 1: bang with u = a for t1, then
// u = -a until rest at the origin, best over a = +-1. The switch time is
// found by scanning and bisection on the arrival condition.
double bang_bang_time(double x1, double x2) {
  double best = std::numeric_limits<double>::infinity();
  for (double a : {1.0, -1.0}) {
    auto arrival = [&](double t1) {
      const double v = x2 + a * t1;
      return x1 + x2 * t1 + 0.5 * a * t1 * t1 + 0.5 * a * v * v;
    };
    const double step = 1e-3;
    for (double t = 0.0; t < 20.0; t += step) {
      const double f0 = arrival(t), f1 = arrival(t + step);
      if (f0 == 0.0 || (f0 < 0.0) != (f1 < 0.0)) {
        double lo = t, hi = f0 == 0.0 ? t : t + step;
        for (int it = 0; it < 60 && lo < hi; ++it) {
          const double mid = 0.5 * (lo + hi);
          ((arrival(lo) < 0.0) == (arrival(mid) < 0.0) ? lo : hi) = mid;
        }
        const double t1 = 0.5 * (lo + hi);
        const double t2 = a * (x2 + a * t1);
        if (t2 >= -1e-9) {
          best = std::min(best, t1 + std::max(t2, 0.0));
          break;
        }
      }
    }
  }
  return best;
}

PolyProblem double_integrator() { return std::get<PolyProblem>(builtin("double_integrator_1d")); }

TEST(Synthesize, SingleIntegratorDegreeFour) {
  SynthesisRequest rq{single_integrator(), heursos::testing::boundary_measure(), 4};
  const auto r = synthesize(rq);
  ASSERT_EQ(r.status, SynthesisStatus::Ok) << r.diagnostic;
  EXPECT_NEAR(r.objective, 1.2408065, 2e-6);
  EXPECT_EQ(r.lambda_degree, 2);
  ASSERT_TRUE(r.verification);
  EXPECT_TRUE(r.verification->none_found());
  EXPECT_TRUE(r.certificate->valid());
  EXPECT_TRUE(certify_admissible(single_integrator(), *r.heuristic).certified());
}

TEST(Synthesize, MarginLowersTheHeuristic) {
  SynthesisRequest rq{single_integrator(), heursos::testing::boundary_measure(), 4};
  rq.margin = 1e-3;
  const auto r = synthesize(rq);
  ASSERT_EQ(r.status, SynthesisStatus::Ok) << r.diagnostic;
  EXPECT_NEAR(r.objective, 1.2408065 - 2e-3, 2e-6);
  EXPECT_NEAR(r.heuristic->eval(std::vector<double>{0.0}), -1e-3, 1e-7);
}

TEST(Synthesize, UnconstrainedGrowthIsUnbounded) {
  // No motion and positive cost: every H with H(0) = 0 satisfies AH2.
  const PolyProblem p(PolyVector({Polynomial(2)}), Polynomial::constant(2, 1.0), box({-1.0}, {1.0}), box({-1.0}, {1.0}),
                      GoalSpec::point({0.0}));
  const auto r = synthesize(SynthesisRequest{p, Measure::lebesgue({-1.0}, {1.0}), 2});
  EXPECT_EQ(r.status, SynthesisStatus::Unbounded) << r.diagnostic;
  EXPECT_FALSE(r.heuristic);
  EXPECT_FALSE(r.diagnostic.empty());
}

TEST(Synthesize, NegativeCostIsRejected) {
  EXPECT_THROW(PolyProblem(PolyVector({Polynomial::variable(2, 1)}), Polynomial::constant(2, -1.0), box({-1.0}, {1.0}),
                           box({-1.0}, {1.0}), GoalSpec::point({0.0})),
               std::invalid_argument);
}

TEST(Synthesize, ValidatesRequest) {
  EXPECT_THROW(synthesize(SynthesisRequest{single_integrator(), heursos::testing::boundary_measure(), 3}),
               std::invalid_argument);
  EXPECT_THROW(synthesize(SynthesisRequest{single_integrator(), Measure::lebesgue({-2.0}, {1.0}), 2}),
               std::invalid_argument);
  EXPECT_THROW(synthesize(SynthesisRequest{single_integrator(), Measure::lebesgue({0.0, 0.0}, {1.0, 1.0}), 2}),
               std::invalid_argument);
}

TEST(Builtins, AllNamesConstruct) {
  for (const auto& name : builtin_names()) EXPECT_NO_THROW(builtin(name)) << name;
  EXPECT_THROW(builtin("nope"), std::invalid_argument);
  EXPECT_THROW(builtin("shortest_path_nd", BuiltinParams{0}), std::invalid_argument);
  BuiltinParams taylor;
  taylor.taylor = true;
  EXPECT_TRUE(std::holds_alternative<PolyProblem>(builtin("pendulum", taylor)));
}

TEST(ClosedForm, DoubleIntegratorMatchesBangBang) {
  for (double x1 = -2.0; x1 <= 2.0; x1 += 0.25) {
    for (double x2 = -1.5; x2 <= 1.5; x2 += 0.25) {
      EXPECT_NEAR(double_integrator_min_time(x1, x2), bang_bang_time(x1, x2), 1e-6) << x1 << "," << x2;
    }
  }
  EXPECT_DOUBLE_EQ(double_integrator_min_time(0.0, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(double_integrator_min_time(-0.5, 1.0), 1.0);
}

TEST(Oracle, SingleIntegratorWithinEstimate) {
  const auto o = value_oracle(single_integrator(), OracleSpec{Box{{-1.0}, {1.0}}, {201}});
  ASSERT_TRUE(o.converged());
  EXPECT_GT(o.error_estimate(), 0.0);
  for (std::size_t k = 0; k < o.size(); ++k) {
    const double z = o.node(k)[0];
    EXPECT_LE(std::abs(o.value(k) - std::abs(z)), o.error_estimate()) << z;
    EXPECT_GE(o.value(k), 0.0);
  }
  EXPECT_DOUBLE_EQ(o.interpolate(std::vector<double>{0.0}), 0.0);
  EXPECT_DOUBLE_EQ(o.spacing(0), 0.01);
}

TEST(Oracle, DoubleIntegratorWithinEstimateOnSupport) {
  const auto o = value_oracle(double_integrator(), OracleSpec{Box{{-3.0, -3.0}, {3.0, 3.0}}, {61, 61}});
  const Box S{{-2.0, -std::numbers::sqrt2}, {2.0, std::numbers::sqrt2}};
  std::size_t checked = 0, unreachable = 0;
  for (std::size_t k = 0; k < o.size(); ++k) {
    const auto z = o.node(k);
    if (!S.contains(z, 1e-12)) continue;
    if (o.value(k) == ValueOracle::kInf) {
      // Only states that brake to rest close to the wall x1 = +-3 may be lost.
      EXPECT_LT(3.0 - std::abs(z[0] + 0.5 * z[1] * std::abs(z[1])), 0.75) << z[0] << "," << z[1];
      ++unreachable;
      continue;
    }
    EXPECT_LE(std::abs(o.value(k) - bang_bang_time(z[0], z[1])), o.error_estimate());
    ++checked;
  }
  EXPECT_GT(checked, 500u);
  EXPECT_LT(unreachable, checked / 25);
  // Moving fast towards the wall at full speed cannot stop inside X_free.
  EXPECT_EQ(o.interpolate(std::vector<double>{3.0, 3.0}), ValueOracle::kInf);
}

TEST(Oracle, RefinementReducesError) {
  const Box S{{-2.0, -std::numbers::sqrt2}, {2.0, std::numbers::sqrt2}};
  double prev_err = std::numeric_limits<double>::infinity(), prev_est = prev_err;
  for (int N : {61, 121, 241}) {
    const auto o = value_oracle(double_integrator(), OracleSpec{Box{{-3.0, -3.0}, {3.0, 3.0}}, {N, N}});
    double err = 0.0;
    for (std::size_t k = 0; k < o.size(); ++k) {
      const auto z = o.node(k);
      if (S.contains(z, 1e-12) && o.value(k) < ValueOracle::kInf) {
        err = std::max(err, std::abs(o.value(k) - bang_bang_time(z[0], z[1])));
      }
    }
    EXPECT_LT(err, prev_err) << "N=" << N;
    EXPECT_LT(o.error_estimate(), prev_est) << "N=" << N;
    prev_err = err;
    prev_est = o.error_estimate();
  }
}

TEST(Oracle, RequiresOddCountsForEstimate) {
  EXPECT_THROW(value_oracle(single_integrator(), OracleSpec{Box{{-1.0}, {1.0}}, {20}}), std::invalid_argument);
  OracleSpec s{Box{{-1.0}, {1.0}}, {20}};
  s.estimate_error = false;
  EXPECT_NO_THROW(value_oracle(single_integrator(), s));
}

TEST(Compare, ZeroHeuristicAndSelfComparison) {
  const auto o = value_oracle(single_integrator(), OracleSpec{Box{{-1.0}, {1.0}}, {101}});
  double mean = 0.0;
  for (double v : o.values()) mean += v;
  mean /= o.size();
  const auto zero = compare(Polynomial(1), o);
  EXPECT_EQ(zero.finite_nodes, o.size());
  EXPECT_NEAR(zero.mean_gap, mean, 1e-12);
  EXPECT_DOUBLE_EQ(zero.max_overshoot, 0.0);
  const auto self = compare([&](std::span<const double> z) { return o.interpolate(z); }, o);
  EXPECT_NEAR(self.max_overshoot, 0.0, 1e-12);
  EXPECT_NEAR(self.mean_gap, 0.0, 1e-12);
  const auto region = compare(Polynomial(1), o, Box{{0.0}, {0.5}});
  EXPECT_EQ(region.finite_nodes, 26u);
}

TEST(Compare, CsvIsDeterministic) {
  const auto o = value_oracle(single_integrator(), OracleSpec{Box{{-1.0}, {1.0}}, {11}});
  const Polynomial x = Polynomial::variable(1, 0);
  std::ostringstream a, b;
  write_comparison_csv(a, compare(0.5 * x * x, o), 1);
  write_comparison_csv(b, compare(0.5 * x * x, o), 1);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_EQ(a.str().substr(0, 7), "x1,H,V\n");
}

}  // namespace
