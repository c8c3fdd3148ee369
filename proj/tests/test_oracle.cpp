#include "dgopt/oracle.hpp"

#include <gtest/gtest.h>

#include "dgopt/toy.hpp"

namespace dgopt {
namespace {

TEST(Oracle, ToyKktByHand) {
  const ProblemInstance p = make_toy_problem();
  const OracleResult r = oracle_solve(p);
  ASSERT_EQ(r.status, SolveStatus::kOptimal);
  EXPECT_NEAR(r.value, 0.5, 1e-7);
  EXPECT_NEAR(r.x(0), 0.5, 1e-6);
  EXPECT_NEAR(r.x(1), 0.5, 1e-6);
  // Stationarity 2x + z = 0 at x = 0.5.
  EXPECT_NEAR(r.z.z(0), -1.0, 1e-5);
  EXPECT_LT(r.eq_residual, 1e-7);
}

TEST(Oracle, DecoupledProblemSumsAgentMinima) {
  const ProblemInstance p = make_uncoupled_toy();
  const OracleResult r = oracle_solve(p);
  ASSERT_EQ(r.status, SolveStatus::kOptimal);
  // Each agent: min x^2 - 1.2x over [0,1] at x = 0.6, value -0.36.
  EXPECT_NEAR(r.value, -0.72, 1e-7);
}

TEST(Oracle, SelfConsistencyUnderAgentMerge) {
  const ProblemInstance p = make_toy_problem();
  const OracleResult split = oracle_solve(p);
  const OracleResult merged = oracle_solve(merge_agents(p));
  ASSERT_EQ(split.status, SolveStatus::kOptimal);
  ASSERT_EQ(merged.status, SolveStatus::kOptimal);
  EXPECT_LE(std::abs(split.value - merged.value),
            1e-6 * (1.0 + std::abs(split.value)));
}

TEST(Oracle, AugmentedLagrangianRouteMatchesInteriorPoint) {
  // Force the conic path with an inert ball slice; the two routes must agree.
  ProblemInstance p = make_toy_problem();
  SocSlice inert;
  inert.u_idx = {0};
  inert.radius = 10.0;
  p.agents[0].local_set.soc_slices.push_back(inert);
  p.validate();
  const OracleResult conic = oracle_solve(p);
  const OracleResult polyhedral = oracle_solve(make_toy_problem());
  ASSERT_EQ(conic.status, SolveStatus::kOptimal);
  EXPECT_NEAR(conic.value, polyhedral.value, 2e-5);
  EXPECT_NEAR(conic.z.z(0), -1.0, 1e-3);
  EXPECT_LT(conic.eq_residual, 1e-6);
}

TEST(Slater, ToyFound) {
  const SlaterReport rep = check_slater(make_toy_problem());
  EXPECT_EQ(rep.status, SlaterStatus::kFound);
  ASSERT_EQ(rep.witness.size(), 2u);
  EXPECT_NEAR(rep.witness[0](0), 0.5, 1e-5);
  EXPECT_NEAR(rep.witness[1](0), 0.5, 1e-5);
}

TEST(Slater, InfeasibleToyNotFound) {
  // sum x_j = 3 over [0,1]^2: the box caps the sum at 2.
  ProblemInstance p = make_toy_problem();
  for (auto& a : p.agents) a.coupling_eq_offset = Vec::Constant(1, -1.5);
  p.validate();
  const SlaterReport rep = check_slater(p);
  EXPECT_EQ(rep.status, SlaterStatus::kNotFound);
}

TEST(Slater, NoCouplingIsTrivial) {
  const SlaterReport rep = check_slater(make_uncoupled_toy());
  EXPECT_EQ(rep.status, SlaterStatus::kTrivial);
  EXPECT_EQ(rep.witness.size(), 2u);
}

TEST(Slater, StrictInequalityMargin) {
  // sum x_j <= 1.5 over [0,1]^2 admits slack 1.5 at the origin.
  ProblemInstance p;
  p.m_eq = 0;
  p.m_ineq = 1;
  for (int j = 0; j < 2; ++j) {
    AgentSpec a;
    a.local_set = ConvexSetSpec::box(Vec::Zero(1), Vec::Ones(1));
    a.objective.q = Mat::Zero(1, 1);
    a.objective.c = Vec::Zero(1);
    a.coupling_eq = Mat::Zero(0, 1);
    a.coupling_eq_offset = Vec::Zero(0);
    a.coupling_ineq = Mat::Ones(1, 1);
    a.coupling_ineq_offset = Vec::Constant(1, -0.75);
    p.agents.push_back(a);
  }
  p.validate();
  const SlaterReport rep = check_slater(p);
  EXPECT_EQ(rep.status, SlaterStatus::kFound);
  EXPECT_NEAR(rep.slack_margin, 1.5, 1e-5);
}

TEST(Oracle, ReportsKktResiduals) {
  const OracleResult r = oracle_solve(make_toy_problem());
  ASSERT_EQ(r.status, SolveStatus::kOptimal);
  EXPECT_LT(r.stationarity, 1e-5);
  EXPECT_LT(r.complementarity, 1e-6);
}

}  // namespace
}  // namespace dgopt
