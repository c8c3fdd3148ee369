#include "dgopt/grid/area.hpp"

#include <gtest/gtest.h>

#include "dgopt/fixtures.hpp"
#include "dgopt/oracle.hpp"

namespace dgopt {
namespace {

CaseData single_bus_case(const std::string& name, double load_pu,
                         double cost_linear) {
  CaseData c;
  c.name = name;
  c.base_mva = 1.0;
  c.buses.push_back({1, 3, load_pu, 0.0, 1.1, 0.9, 0.0, 0.0});
  c.gens.push_back({1, 0.0, 10.0, -10.0, 10.0});
  c.gencosts.push_back({2, 3, {0.0, cost_linear, 0.0}});
  return c;
}

MultiAreaData two_single_bus_areas(double tie_cap_pu) {
  StitchSpec spec;
  spec.ties.push_back({0, 1, 1, 1, 0.1, tie_cap_pu});  // b = 10
  spec.internal_capacity_mw = 0.0;                     // keep case values
  spec.cleanup_boundary = false;  // single-bus areas keep their load and gen
  return stitch_areas({single_bus_case("a1", 1.0, 1.0),
                       single_bus_case("a2", 0.0, 2.0)},
                      spec);
}

TEST(MultiArea, TwoSingleBusAreasOracle) {
  // Tie b = 10, cap 0.5; loads (1, 0); costs (1, 2). The cheap generator
  // serves its own load, no flow: P* = 1.
  const auto models = area_models_from(two_single_bus_areas(0.5));
  const ProblemInstance p = build_multiarea(models, area_graph(models));
  EXPECT_EQ(p.num_agents(), 2);
  EXPECT_EQ(p.m_eq, 2);   // one boundary balance row per area
  EXPECT_EQ(p.m_ineq, 2); // one tie, two directions
  const OracleResult r = oracle_solve(p);
  ASSERT_EQ(r.status, SolveStatus::kOptimal);
  EXPECT_NEAR(r.value, 1.0, 1e-6);
}

TEST(MultiArea, ZeroTieCapacitySeparates) {
  const auto joint_models = area_models_from(two_single_bus_areas(1e-9));
  const ProblemInstance joint =
      build_multiarea(joint_models, area_graph(joint_models));
  const OracleResult joint_r = oracle_solve(joint);
  ASSERT_EQ(joint_r.status, SolveStatus::kOptimal);
  // Per-area optima: area 1 serves its load alone (cost 1), area 2 idle.
  EXPECT_NEAR(joint_r.value, 1.0, 1e-5);
}

TEST(MultiArea, AssembledNetworkHasZeroRowSums) {
  std::vector<CaseData> cases = {parse_case(fixtures::kCase3a, "case3a"),
                                 parse_case(fixtures::kCase3b, "case3b")};
  const MultiAreaData data =
      stitch_areas(cases, parse_stitch_spec(fixtures::kStitch2Area));
  const auto models = area_models_from(data);
  // Global susceptance matrix over (areaA int, areaA bnd, areaB int, areaB bnd).
  const int na0 = models[0].n_internal, nb0 = models[0].n_boundary;
  const int na1 = models[1].n_internal, nb1 = models[1].n_boundary;
  const int n = na0 + nb0 + na1 + nb1;
  Mat b = Mat::Zero(n, n);
  b.block(0, 0, na0, na0) = models[0].b_ii;
  b.block(0, na0, na0, nb0) = models[0].b_ib;
  b.block(na0, 0, nb0, na0) = models[0].b_bi;
  b.block(na0, na0, nb0, nb0) = models[0].b_bb;
  const int off1 = na0 + nb0;
  b.block(off1, off1, na1, na1) = models[1].b_ii;
  b.block(off1, off1 + na1, na1, nb1) = models[1].b_ib;
  b.block(off1 + na1, off1, nb1, na1) = models[1].b_bi;
  b.block(off1 + na1, off1 + na1, nb1, nb1) = models[1].b_bb;
  for (const auto& tie : models[0].ties) {
    const int row = na0 + tie.local_boundary;
    const int col = off1 + na1 + tie.neighbor_boundary;
    b(row, col) -= tie.susceptance;
    b(col, row) -= tie.susceptance;
  }
  EXPECT_LT((b * Vec::Ones(n)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(MultiArea, StitchedFixtureOracleAndCongestion) {
  std::vector<CaseData> cases = {parse_case(fixtures::kCase3a, "case3a"),
                                 parse_case(fixtures::kCase3b, "case3b")};
  const MultiAreaData data =
      stitch_areas(cases, parse_stitch_spec(fixtures::kStitch2Area));
  const auto models = area_models_from(data);
  const ProblemInstance p = build_multiarea(models, area_graph(models));
  p.validate();
  const OracleResult r = oracle_solve(p);
  ASSERT_EQ(r.status, SolveStatus::kOptimal);
  // Loads after cleanup: 0.4 (area a) + 0.3 (area b) p.u. The 0.2 p.u. tie
  // congests: cheap unit covers 0.6, expensive unit 0.1.
  // P* = 1000 * 0.6 + 2500 * 0.1 = 850.
  EXPECT_NEAR(r.value, 850.0, 1e-3);
  // Congested tie: its first-direction multiplier is strictly positive.
  EXPECT_GT(r.z.ineq().maxCoeff(), 1.0);

  const SlaterReport slater = check_slater(p);
  EXPECT_EQ(slater.status, SlaterStatus::kFound);
  EXPECT_GT(slater.slack_margin, 0.0);
}

TEST(MultiArea, OracleSolutionPassesDcFeasibilityCheck) {
  std::vector<CaseData> cases = {parse_case(fixtures::kCase3a, "case3a"),
                                 parse_case(fixtures::kCase3b, "case3b")};
  const MultiAreaData data =
      stitch_areas(cases, parse_stitch_spec(fixtures::kStitch2Area));
  const auto models = area_models_from(data);
  const ProblemInstance p = build_multiarea(models, area_graph(models));
  const OracleResult r = oracle_solve(p);
  ASSERT_EQ(r.status, SolveStatus::kOptimal);

  // Independent check: rebuild the global DC network and verify balance and
  // limits at the oracle point.
  const auto xs = split_by_agents(p, r.x);
  const int n0 = models[0].n_internal + models[0].n_boundary;
  const int n1 = models[1].n_internal + models[1].n_boundary;
  Vec theta(n0 + n1);
  theta.head(n0) = xs[0].head(n0);
  theta.segment(n0, n1) = xs[1].head(n1);
  std::vector<DcBranch> branches;
  // Internal branches from the susceptance blocks (off-diagonal entries).
  auto add_area = [&](const AreaModel& m, int off) {
    const int ni = m.n_internal;
    Mat full(ni + m.n_boundary, ni + m.n_boundary);
    full.topLeftCorner(ni, ni) = m.b_ii;
    full.topRightCorner(ni, m.n_boundary) = m.b_ib;
    full.bottomLeftCorner(m.n_boundary, ni) = m.b_bi;
    full.bottomRightCorner(m.n_boundary, m.n_boundary) = m.b_bb;
    for (int i = 0; i < full.rows(); ++i)
      for (int j = i + 1; j < full.cols(); ++j)
        if (full(i, j) != 0.0)
          branches.push_back({off + i, off + j, -full(i, j), 0.0});
  };
  add_area(models[0], 0);
  add_area(models[1], n0);
  for (const auto& tie : models[0].ties)
    branches.push_back({models[0].n_internal + tie.local_boundary,
                        n0 + models[1].n_internal + tie.neighbor_boundary,
                        tie.susceptance, tie.capacity});
  Vec injection = Vec::Zero(n0 + n1);
  auto add_injections = [&](const AreaModel& m, const Vec& x, int off) {
    const int nth = m.n_internal + m.n_boundary;
    for (std::size_t g = 0; g < m.generators.size(); ++g)
      injection(off + m.generators[g].local_bus) +=
          x(nth + static_cast<int>(g));
    for (int i = 0; i < m.n_internal; ++i)
      injection(off + i) -= m.load_internal(i);
    for (int i = 0; i < m.n_boundary; ++i)
      injection(off + m.n_internal + i) -= m.load_boundary(i);
  };
  add_injections(models[0], xs[0], 0);
  add_injections(models[1], xs[1], n0);
  const DcCheckReport rep = dc_feasibility_check(branches, theta, injection);
  EXPECT_LT(rep.max_balance_residual, 1e-5);
  EXPECT_LT(rep.max_limit_violation, 1e-6);
}

TEST(DcCheck, SpecExamples) {
  const std::vector<DcBranch> branches = {{0, 1, 10.0, 0.0}};
  {
    const auto rep = dc_feasibility_check(
        branches, (Vec(2) << 0.1, 0.0).finished(), (Vec(2) << 1, -1).finished());
    EXPECT_NEAR(rep.flows(0), 1.0, 1e-15);
    EXPECT_NEAR(rep.max_balance_residual, 0.0, 1e-15);
  }
  {
    const auto rep = dc_feasibility_check(branches, Vec::Zero(2), Vec::Zero(2));
    EXPECT_EQ(rep.flows(0), 0.0);
  }
  {
    const std::vector<DcBranch> limited = {{0, 1, 10.0, 0.5}};
    const auto rep = dc_feasibility_check(
        limited, (Vec(2) << 0.1, 0.0).finished(), (Vec(2) << 1, -1).finished());
    EXPECT_NEAR(rep.max_limit_violation, 0.5, 1e-15);
  }
}

TEST(MultiArea, DecompositionFidelityOnRandomPoints) {
  // Membership verdicts agree between the agent-wise decomposition and a
  // monolithic rebuild of the same feasible set.
  std::vector<CaseData> cases = {parse_case(fixtures::kCase3a, "case3a"),
                                 parse_case(fixtures::kCase3b, "case3b")};
  const MultiAreaData data =
      stitch_areas(cases, parse_stitch_spec(fixtures::kStitch2Area));
  const auto models = area_models_from(data);
  const ProblemInstance p = build_multiarea(models, area_graph(models));
  const ProblemInstance mono = merge_agents(p);
  CounterRng rng(99);
  const double tol = 1e-9;
  int feasible_seen = 0;
  for (int t = 0; t < 100; ++t) {
    std::vector<Vec> xs;
    Vec stacked(p.total_dim());
    Index off = 0;
    const bool near_witness = t % 2 == 0;
    for (const auto& agent : p.agents) {
      Vec x(agent.dim());
      for (Index i = 0; i < x.size(); ++i) {
        const double lo = agent.local_set.lower(i);
        const double hi = agent.local_set.upper(i);
        x(i) = near_witness
                   ? agent.local_set.witness(i)
                   : lo + (hi - lo) * rng.uniform01();
      }
      xs.push_back(x);
      stacked.segment(off, x.size()) = x;
      off += x.size();
    }
    bool dec_ok = true;
    for (int j = 0; j < p.num_agents(); ++j)
      if (p.agents[static_cast<std::size_t>(j)].local_set.membership_residual(
              xs[static_cast<std::size_t>(j)]) > tol)
        dec_ok = false;
    const auto res = coupling_residual(p, xs);
    dec_ok = dec_ok && res.feasible(tol);

    bool mono_ok =
        mono.agents[0].local_set.membership_residual(stacked) <= tol;
    const auto mres = coupling_residual(mono, {stacked});
    mono_ok = mono_ok && mres.feasible(tol);
    EXPECT_EQ(dec_ok, mono_ok);
    if (dec_ok) ++feasible_seen;
  }
  (void)feasible_seen;
}

}  // namespace
}  // namespace dgopt
