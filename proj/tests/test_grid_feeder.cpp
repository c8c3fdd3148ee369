#include "dgopt/grid/feeder.hpp"

#include <gtest/gtest.h>

#include "dgopt/fixtures.hpp"
#include "dgopt/oracle.hpp"

namespace dgopt {
namespace {

FeederModel path_feeder(const std::vector<double>& r,
                        const std::vector<double>& x) {
  FeederModel f;
  f.name = "path";
  f.buses.resize(r.size() + 1);
  for (std::size_t e = 0; e < r.size(); ++e)
    f.lines.push_back({static_cast<int>(e), static_cast<int>(e) + 1, r[e],
                       x[e], 2.0, 4.0});
  return f;
}

TEST(LinDistFlow, SpecExamples) {
  {
    const auto m = lindistflow_matrices(path_feeder({0.1, 0.2}, {0.1, 0.1}));
    Mat want(2, 2);
    want << 0.2, 0.2, 0.2, 0.6;
    EXPECT_LT((m.rho - want).cwiseAbs().maxCoeff(), 1e-12);
  }
  {
    const auto m = lindistflow_matrices(path_feeder({0.3}, {0.1}));
    EXPECT_NEAR(m.rho(0, 0), 0.6, 1e-14);
  }
  {
    FeederModel star;
    star.name = "star";
    star.buses.resize(3);
    star.lines.push_back({0, 1, 0.2, 0.1, 2.0, 4.0});
    star.lines.push_back({0, 2, 0.5, 0.1, 2.0, 4.0});
    const auto m = lindistflow_matrices(star);
    Mat want(2, 2);
    want << 0.4, 0.0, 0.0, 1.0;
    EXPECT_LT((m.rho - want).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(LinDistFlow, RejectsNonTree) {
  FeederModel f = path_feeder({0.1, 0.1}, {0.1, 0.1});
  f.lines.push_back({2, 0, 0.1, 0.1, 2.0, 4.0});  // closes a cycle
  EXPECT_THROW(lindistflow_matrices(f), std::invalid_argument);
  FeederModel g = path_feeder({0.1, 0.1}, {0.1, 0.1});
  g.lines[1].from = 5;
  EXPECT_THROW(lindistflow_matrices(g), std::invalid_argument);
}

// Common-path-resistance oracle: rho_jk = 2 sum of r over the shared part of
// the root paths.
Mat common_path_rho(const FeederModel& f) {
  const int n = f.n_buses() - 1;
  std::vector<std::vector<int>> path_edges(static_cast<std::size_t>(n));
  std::vector<int> parent_edge(f.buses.size(), -1);
  for (std::size_t e = 0; e < f.lines.size(); ++e)
    parent_edge[static_cast<std::size_t>(f.lines[e].to)] =
        static_cast<int>(e);
  for (int b = 1; b <= n; ++b) {
    int v = b;
    while (v != 0) {
      const int e = parent_edge[static_cast<std::size_t>(v)];
      path_edges[static_cast<std::size_t>(b - 1)].push_back(e);
      v = f.lines[static_cast<std::size_t>(e)].from;
    }
  }
  Mat rho(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double sum = 0.0;
      for (int e1 : path_edges[static_cast<std::size_t>(i)])
        for (int e2 : path_edges[static_cast<std::size_t>(j)])
          if (e1 == e2) sum += f.lines[static_cast<std::size_t>(e1)].r;
      rho(i, j) = 2.0 * sum;
    }
  return rho;
}

FeederModel random_tree(CounterRng& rng, int n) {
  FeederModel f;
  f.name = "random";
  f.buses.resize(static_cast<std::size_t>(n));
  for (int b = 1; b < n; ++b) {
    const int parent = static_cast<int>(rng.below(static_cast<std::uint64_t>(b)));
    f.lines.push_back({parent, b, 0.05 + 0.3 * rng.uniform01(),
                       0.05 + 0.3 * rng.uniform01(), 2.0, 4.0});
  }
  return f;
}

TEST(LinDistFlow, MatchesCommonPathOracleOnRandomTrees) {
  CounterRng rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(9));
    const FeederModel f = random_tree(rng, n);
    const auto m = lindistflow_matrices(f);
    EXPECT_LT((m.rho - common_path_rho(f)).cwiseAbs().maxCoeff(), 1e-10);
    // PSD with strictly positive diagonal.
    EXPECT_GT(min_eigenvalue(m.rho), -1e-12);
    EXPECT_GT(m.rho.diagonal().minCoeff(), 0.0);
    EXPECT_GT(min_eigenvalue(m.chi), -1e-12);
  }
}

TEST(DerSocp, LosslessTwoBusHandValue) {
  // Lossless line, root procurement at 30, DER at 18 with cap 1, demand 1 at
  // bus 2: the DER serves everything, cost 18.
  FeederModel f;
  f.name = "lossless2";
  f.buses.resize(2);
  f.buses[0].der = {false, 0.0, 10.0, -10.0, 10.0, 0.0};
  f.buses[0].beta_p = 30.0;
  f.buses[1].pd = 1.0;
  f.buses[1].der = {false, 0.0, 1.0, -1.0, 1.0, 0.0};
  f.buses[1].beta_p = 18.0;
  f.lines.push_back({0, 1, 0.0, 0.0, 3.0, 5.0});
  const ProblemInstance p = build_der_socp(f, singleton_grouping(f));
  const OracleResult r = oracle_solve(p);
  ASSERT_EQ(r.status, SolveStatus::kOptimal);
  EXPECT_NEAR(r.value, 18.0, 1e-3);
}

TEST(DerSocp, FourBusBuilderWiring) {
  const FeederModel f =
      feeder_from_case(parse_case(fixtures::kCase4Der, "case4der"));
  const ProblemInstance p = build_der_socp(f, singleton_grouping(f));
  ASSERT_EQ(p.num_agents(), 4);
  EXPECT_EQ(p.m_ineq, 0);
  // Singleton grouping on a path: every balance row with an in-line and every
  // voltage drop straddles cells: P/Q balance at buses 2..4 and all 3 drops.
  // Balance at the root involves only its own cell's variables... except the
  // out-flow line is owned by the root cell, so it stays local.
  EXPECT_EQ(p.m_eq, 3 + 3 + 3);
  const double alpha_p[] = {0.0, 6.0, 7.0, 8.0};
  const double beta_p[] = {30.0, 19.0, 18.0, 17.0};
  const double alpha_q[] = {5.0, 5.1, 5.2, 5.3};
  for (int b = 0; b < 4; ++b) {
    const auto& agent = p.agents[static_cast<std::size_t>(b)];
    EXPECT_NEAR(agent.objective.q(0, 0), 2.0 * alpha_p[b], 1e-12);
    EXPECT_NEAR(agent.objective.c(0), beta_p[b], 1e-12);
    EXPECT_NEAR(agent.objective.q(1, 1), 2.0 * alpha_q[b], 1e-12);
  }
  // Rotated cone per owned line.
  for (int b = 0; b < 3; ++b)
    EXPECT_EQ(p.agents[static_cast<std::size_t>(b)]
                  .local_set.rotated_soc_slices.size(),
              1u);
  const SlaterReport slater = check_slater(p);
  EXPECT_EQ(slater.status, SlaterStatus::kFound);
}

TEST(DerSocp, WholeFeederGroupingIsFullyLocal) {
  const FeederModel f =
      feeder_from_case(parse_case(fixtures::kCase4Der, "case4der"));
  const ProblemInstance p = build_der_socp(f, whole_feeder_grouping(f));
  EXPECT_EQ(p.num_agents(), 1);
  EXPECT_EQ(p.m_eq, 0);
  EXPECT_EQ(p.m_ineq, 0);
  p.validate();
}

TEST(DerSocp, GroupingValidation) {
  const FeederModel f =
      feeder_from_case(parse_case(fixtures::kCase4Der, "case4der"));
  // {0, 2} skips bus 1 on the path: not a connected subtree.
  EXPECT_THROW(build_der_socp(f, {{0, 2}, {1, 3}}), std::invalid_argument);
  EXPECT_THROW(build_der_socp(f, {{0, 1}, {2}}), std::invalid_argument);
  EXPECT_THROW(build_der_socp(f, {{0, 1}, {1, 2, 3}}), std::invalid_argument);
}

TEST(DerSocp, DecompositionFidelityAcrossGroupings) {
  const FeederModel f =
      feeder_from_case(parse_case(fixtures::kCase4Der, "case4der"));
  const ProblemInstance singles = build_der_socp(f, singleton_grouping(f));
  const ProblemInstance halves = build_der_socp(f, {{0, 1}, {2, 3}});
  const ProblemInstance whole = build_der_socp(f, whole_feeder_grouping(f));
  const auto lay_s = grid_detail::feeder_layout(f, singleton_grouping(f));
  const auto lay_h = grid_detail::feeder_layout(f, {{0, 1}, {2, 3}});
  const auto lay_w = grid_detail::feeder_layout(f, whole_feeder_grouping(f));

  CounterRng rng(55);
  const double tol = 1e-7;
  auto fill = [&](const grid_detail::FeederLayout& lay,
                  const ProblemInstance& prob, const Vec& pq_w,
                  const Vec& flows) {
    std::vector<Vec> xs;
    for (const auto& agent : prob.agents)
      xs.push_back(Vec::Zero(agent.dim()));
    for (int b = 0; b < f.n_buses(); ++b) {
      const int c = lay.cell_of_bus[static_cast<std::size_t>(b)];
      xs[static_cast<std::size_t>(c)](lay.p_idx[static_cast<std::size_t>(b)]) =
          pq_w(3 * b);
      xs[static_cast<std::size_t>(c)](lay.q_idx[static_cast<std::size_t>(b)]) =
          pq_w(3 * b + 1);
      xs[static_cast<std::size_t>(c)](lay.w_idx[static_cast<std::size_t>(b)]) =
          pq_w(3 * b + 2);
    }
    for (std::size_t e = 0; e < f.lines.size(); ++e) {
      const int c = lay.cell_of_line[e];
      xs[static_cast<std::size_t>(c)](lay.pf_idx[e]) = flows(3 * static_cast<int>(e));
      xs[static_cast<std::size_t>(c)](lay.qf_idx[e]) =
          flows(3 * static_cast<int>(e) + 1);
      xs[static_cast<std::size_t>(c)](lay.l_idx[e]) =
          flows(3 * static_cast<int>(e) + 2);
    }
    return xs;
  };
  auto verdict = [&](const ProblemInstance& prob, const std::vector<Vec>& xs) {
    for (int j = 0; j < prob.num_agents(); ++j) {
      if (prob.agents[static_cast<std::size_t>(j)]
              .local_set.membership_residual(xs[static_cast<std::size_t>(j)]) >
          tol)
        return false;
    }
    return coupling_residual(prob, xs).feasible(tol);
  };
  const auto whole_targets = make_targets(whole.agents[0].local_set);
  int feasible_cases = 0;
  for (int t = 0; t < 100; ++t) {
    Vec pqw(3 * f.n_buses()), flows(3 * static_cast<int>(f.lines.size()));
    for (Index i = 0; i < pqw.size(); ++i)
      pqw(i) = 2.0 * rng.uniform01() - 0.5;
    for (Index i = 0; i < flows.size(); ++i)
      flows(i) = 2.0 * rng.uniform01() - 0.5;
    if (t % 2 == 1) {
      // Project onto the full feasible set so both verdict branches are hit.
      Vec stacked(whole.agents[0].dim());
      {
        const auto xs = fill(lay_w, whole, pqw, flows);
        stacked = xs[0];
      }
      const auto proj = dykstra_project(stacked, whole_targets, {1e-11, 20000});
      ASSERT_TRUE(proj.converged);
      const Vec& y = proj.point;
      for (int b = 0; b < f.n_buses(); ++b) {
        pqw(3 * b) = y(lay_w.p_idx[static_cast<std::size_t>(b)]);
        pqw(3 * b + 1) = y(lay_w.q_idx[static_cast<std::size_t>(b)]);
        pqw(3 * b + 2) = y(lay_w.w_idx[static_cast<std::size_t>(b)]);
      }
      for (std::size_t e = 0; e < f.lines.size(); ++e) {
        flows(3 * static_cast<int>(e)) = y(lay_w.pf_idx[e]);
        flows(3 * static_cast<int>(e) + 1) = y(lay_w.qf_idx[e]);
        flows(3 * static_cast<int>(e) + 2) = y(lay_w.l_idx[e]);
      }
    }
    const bool vs = verdict(singles, fill(lay_s, singles, pqw, flows));
    const bool vh = verdict(halves, fill(lay_h, halves, pqw, flows));
    const bool vw = verdict(whole, fill(lay_w, whole, pqw, flows));
    EXPECT_EQ(vs, vh);
    EXPECT_EQ(vs, vw);
    if (vs) ++feasible_cases;
  }
  EXPECT_GT(feasible_cases, 20);
}

TEST(DerSocp, FourBusOracleAndExactnessSurrogate) {
  const FeederModel f =
      feeder_from_case(parse_case(fixtures::kCase4Der, "case4der"));
  const ProblemInstance p = build_der_socp(f, whole_feeder_grouping(f));
  const OracleResult r = oracle_solve(p);
  ASSERT_EQ(r.status, SolveStatus::kOptimal);
  EXPECT_GT(r.value, 0.0);

  // Relaxation-exactness surrogate at the oracle point: reported, not fatal.
  const auto lay = grid_detail::feeder_layout(f, whole_feeder_grouping(f));
  double max_gap = 0.0, max_lw = 0.0;
  for (std::size_t e = 0; e < f.lines.size(); ++e) {
    const double l = r.x(lay.l_idx[e]);
    const double w =
        r.x(lay.w_idx[static_cast<std::size_t>(f.lines[e].from)]);
    const double pf = r.x(lay.pf_idx[e]);
    const double qf = r.x(lay.qf_idx[e]);
    max_gap = std::max(max_gap, l * w - pf * pf - qf * qf);
    max_lw = std::max(max_lw, l * w);
  }
  if (max_gap > 1e-5 * std::max(max_lw, 1e-12)) {
    std::cerr << "[ WARNING  ] SOC relaxation not tight at the oracle point: "
              << "max gap " << max_gap << " vs scale " << max_lw << "\n";
  }
  SUCCEED();
}

TEST(ModelDirection, SocpCostsAtLeastLinDistFlow) {
  // Losses are priced by the branch-flow relaxation but not by LinDistFlow.
  const FeederModel f =
      feeder_from_case(parse_case(fixtures::kFeeder3a, "feeder3a"));
  const ProblemInstance socp = build_der_socp(f, whole_feeder_grouping(f));
  const ProblemInstance ldf = build_lindistflow_feeder(f);
  const OracleResult rs = oracle_solve(socp);
  const OracleResult rl = oracle_solve(ldf);
  ASSERT_EQ(rs.status, SolveStatus::kOptimal);
  ASSERT_EQ(rl.status, SolveStatus::kOptimal);
  EXPECT_GE(rs.value, rl.value - 1e-6);
}

TEST(GroupingSpec, ParsesBuiltinFiles) {
  const GroupingSpec g = parse_grouping_spec(fixtures::kGroup4Singleton);
  ASSERT_EQ(g.cells.size(), 4u);
  EXPECT_EQ(g.cells[0], std::vector<int>{0});
  EXPECT_EQ(g.cells[3], std::vector<int>{3});
  EXPECT_EQ(g.ell_cap, 4.0);
  const GroupingSpec w = parse_grouping_spec(fixtures::kGroup4Whole);
  ASSERT_EQ(w.cells.size(), 1u);
  EXPECT_EQ(w.cells[0], (std::vector<int>{0, 1, 2, 3}));
}

}  // namespace
}  // namespace dgopt
