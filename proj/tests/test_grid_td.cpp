#include "dgopt/grid/td.hpp"

#include <gtest/gtest.h>

#include "dgopt/fixtures.hpp"
#include "dgopt/oracle.hpp"

namespace dgopt {
namespace {

TEST(PhiPsi, RealAdmittanceHandValues) {
  // y = 2 (purely real): Phi_11 = 2, Phi_12 = -1; Psi has zero diagonal and
  // off-diagonal y/(2i) = -i.
  const PhiPsi m = line_flow_matrices(2, 0, 1, Cplx{2.0, 0.0});
  EXPECT_NEAR(m.phi(0, 0).real(), 2.0, 1e-15);
  EXPECT_NEAR(m.phi(0, 1).real(), -1.0, 1e-15);
  EXPECT_NEAR(m.phi(0, 0).imag(), 0.0, 1e-15);
  EXPECT_NEAR(m.psi(0, 0).real(), 0.0, 1e-15);
  EXPECT_NEAR(m.psi(0, 0).imag(), 0.0, 1e-15);
  EXPECT_NEAR(m.psi(0, 1).real(), 0.0, 1e-15);
  EXPECT_NEAR(m.psi(0, 1).imag(), -1.0, 1e-15);
}

TEST(PhiPsi, ImaginaryAdmittanceHandValues) {
  // y = i: Phi diagonal vanishes; [Psi_12]_11 = (y^H - y)/(2i) = -1.
  const PhiPsi m = line_flow_matrices(2, 0, 1, Cplx{0.0, 1.0});
  EXPECT_NEAR(m.phi(0, 0).real(), 0.0, 1e-15);
  EXPECT_NEAR(m.phi(0, 0).imag(), 0.0, 1e-15);
  EXPECT_NEAR(m.psi(0, 0).real(), -1.0, 1e-15);
  EXPECT_NEAR(m.psi(0, 0).imag(), 0.0, 1e-15);
}

TEST(PhiPsi, HermitianWithinTolerance) {
  CounterRng rng(3);
  for (int t = 0; t < 50; ++t) {
    const Cplx y{2.0 * rng.uniform01() - 1.0, 2.0 * rng.uniform01() - 1.0};
    const PhiPsi m = line_flow_matrices(3, 0, 2, y);
    EXPECT_LT((m.phi - m.phi.adjoint()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((m.psi - m.psi.adjoint()).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TransmissionModel two_bus_tm() {
  return transmission_from_case(parse_case(fixtures::kCase2Tran, "case2t"));
}

TEST(PhiPsi, BusMatricesSatisfyDefiningSums) {
  const TransmissionModel tm = two_bus_tm();
  for (int l = 0; l < tm.n_buses; ++l) {
    const PhiPsi inj = bus_injection_matrices(tm, l);
    CMat phi_sum = CMat::Zero(tm.n_buses, tm.n_buses);
    CMat psi_sum = CMat::Zero(tm.n_buses, tm.n_buses);
    const Cplx ysh = tm.shunts[static_cast<std::size_t>(l)];
    phi_sum(l, l) += 0.5 * (ysh + std::conj(ysh));
    psi_sum(l, l) += (std::conj(ysh) - ysh) / Cplx{0.0, 2.0};
    for (const auto& line : tm.lines) {
      if (line.from != l && line.to != l) continue;
      const int other = line.from == l ? line.to : line.from;
      const PhiPsi lk = line_flow_matrices(tm.n_buses, l, other,
                                           line.admittance);
      phi_sum += lk.phi;
      psi_sum += lk.psi;
    }
    EXPECT_LT((inj.phi - phi_sum).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_LT((inj.psi - psi_sum).cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST(PhiPsi, PowerInjectionIdentity) {
  // For random V: Tr(Phi_l V V^H) + i Tr(Psi_l V V^H) equals the textbook
  // injection sum_k V_l (y_lk (V_l - V_k))^* plus the shunt term.
  TransmissionModel tm = two_bus_tm();
  tm.shunts[0] = Cplx{0.05, -0.02};  // exercise the shunt path too
  CounterRng rng(17);
  for (int t = 0; t < 100; ++t) {
    Eigen::VectorXcd v(tm.n_buses);
    for (int i = 0; i < tm.n_buses; ++i)
      v(i) = Cplx{0.9 + 0.2 * rng.uniform01(), 0.2 * rng.uniform01() - 0.1};
    const CMat gram = v * v.adjoint();
    for (int l = 0; l < tm.n_buses; ++l) {
      const PhiPsi inj = bus_injection_matrices(tm, l);
      const Cplx via_matrices = (inj.phi * gram).trace().real() +
                                Cplx{0.0, 1.0} * (inj.psi * gram).trace().real();
      Cplx textbook = v(l) * std::conj(tm.shunts[static_cast<std::size_t>(l)] * v(l));
      for (const auto& line : tm.lines) {
        if (line.from == l)
          textbook += v(l) * std::conj(line.admittance * (v(l) - v(line.to)));
        else if (line.to == l)
          textbook += v(l) * std::conj(line.admittance * (v(l) - v(line.from)));
      }
      EXPECT_LT(std::abs(via_matrices - textbook), 1e-10);
    }
  }
}

TEST(TraceCoefficients, MatchesComplexTrace) {
  CounterRng rng(23);
  const int n = 3;
  for (int t = 0; t < 50; ++t) {
    CMat h(n, n), w(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        const Cplx a{2.0 * rng.uniform01() - 1.0, 2.0 * rng.uniform01() - 1.0};
        h(i, j) = a;
        h(j, i) = std::conj(a);
        const Cplx b{2.0 * rng.uniform01() - 1.0, 2.0 * rng.uniform01() - 1.0};
        w(i, j) = b;
        w(j, i) = std::conj(b);
        if (i == j) {
          h(i, i) = Cplx{h(i, i).real(), 0.0};
          w(i, i) = Cplx{w(i, i).real(), 0.0};
        }
      }
    const Vec coef = trace_coefficients(h);
    Vec vecw(2 * n * n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        vecw(i * n + j) = w(i, j).real();
        vecw(n * n + i * n + j) = w(i, j).imag();
      }
    EXPECT_NEAR(coef.dot(vecw), (h * w).trace().real(), 1e-12);
    EXPECT_LT(std::abs((h * w).trace().imag()), 1e-12);
  }
}

std::vector<FeederModel> two_feeders() {
  return {feeder_from_case(parse_case(fixtures::kFeeder3a, "feeder3a")),
          feeder_from_case(parse_case(fixtures::kFeeder3b, "feeder3b"))};
}

TEST(BuildTd, RowCountsAndStarGraph) {
  const TransmissionModel tm = two_bus_tm();
  const ProblemInstance p = build_td(tm, two_feeders());
  EXPECT_EQ(p.num_agents(), 3);  // two aggregators + the system operator
  EXPECT_EQ(p.m_eq, 6);          // P, Q, consensus per transmission bus
  EXPECT_EQ(p.m_ineq, 8);        // 2 per non-root feeder bus
  EXPECT_EQ(p.agents[2].dim(), 2 * 2 + 2 * 4);
  const CommGraph star = td_star_graph(2);
  EXPECT_EQ(star.n_nodes, 3);
  EXPECT_TRUE(star.has_edge(0, 2));
  EXPECT_TRUE(star.has_edge(1, 2));
  EXPECT_FALSE(star.has_edge(0, 1));
  // SO local set carries the embedded PSD slice.
  ASSERT_EQ(p.agents[2].local_set.psd_slices.size(), 1u);
  EXPECT_EQ(p.agents[2].local_set.psd_slices[0].embedding,
            PsdEmbedding::kHermitianPair);
  EXPECT_EQ(p.agents[2].local_set.psd_slices[0].order, 2);
}

TEST(BuildTd, SingleBusReducesToJointDispatch) {
  // One transmission bus, no lines, one lossy 2-bus feeder: N = 2 agents and
  // M^E = 3 (P, Q, consensus).
  CaseData tc;
  tc.name = "t1";
  tc.base_mva = 1.0;
  tc.buses.push_back({1, 3, 0.0, 0.0, 1.05, 0.95, 0.0, 0.0});
  tc.gens.push_back({1, 0.0, 5.0, -5.0, 5.0});
  tc.gencosts.push_back({2, 3, {1.0, 10.0, 0.0}});
  tc.gencosts.push_back({2, 3, {0.5, 0.0, 0.0}});
  const TransmissionModel tm = transmission_from_case(tc);

  FeederModel f;
  f.name = "f1";
  f.buses.resize(2);
  f.buses[1].pd = 0.6;
  f.buses[1].qd = 0.2;
  f.buses[1].der = {false, 0.0, 0.3, -0.3, 0.3, 0.0};
  f.buses[1].alpha_p = 2.0;
  f.buses[1].beta_p = 5.0;
  f.buses[1].alpha_q = 1.0;
  f.lines.push_back({0, 1, 0.05, 0.1, 3.0, 5.0});
  const ProblemInstance p = build_td(tm, {f});
  EXPECT_EQ(p.num_agents(), 2);
  EXPECT_EQ(p.m_eq, 3);
  EXPECT_EQ(p.m_ineq, 2);
  const OracleResult r = oracle_solve(p);
  ASSERT_EQ(r.status, SolveStatus::kOptimal);
  EXPECT_GT(r.value, 0.0);
  const SlaterReport slater = check_slater(p);
  EXPECT_EQ(slater.status, SlaterStatus::kFound);
}

TEST(BuildTd, ZeroDemandFreeGenerationCostsNothing) {
  CaseData tc;
  tc.name = "t1z";
  tc.base_mva = 1.0;
  tc.buses.push_back({1, 3, 0.0, 0.0, 1.05, 0.95, 0.0, 0.0});
  tc.gens.push_back({1, 0.0, 5.0, -5.0, 5.0});
  tc.gencosts.push_back({2, 3, {0.0, 7.0, 0.0}});
  const TransmissionModel tm = transmission_from_case(tc);
  FeederModel f;
  f.name = "fz";
  f.buses.resize(2);
  f.buses[1].der = {false, 0.0, 0.5, -0.5, 0.5, 0.0};
  f.buses[1].beta_p = 3.0;
  f.lines.push_back({0, 1, 0.05, 0.1, 3.0, 5.0});
  const ProblemInstance p = build_td(tm, {f});
  const OracleResult r = oracle_solve(p);
  ASSERT_EQ(r.status, SolveStatus::kOptimal);
  EXPECT_NEAR(r.value, 0.0, 1e-5);
}

TEST(BuildTd, RealEmbeddingMembership) {
  const TransmissionModel tm = two_bus_tm();
  const ProblemInstance p = build_td(tm, two_feeders());
  const auto& so = p.agents[2];
  // A rank-one flat profile is PSD; an indefinite Re W is rejected.
  Vec ok = so.local_set.witness;
  EXPECT_LE(so.local_set.membership_residual(ok), 1e-9);
  Vec bad = ok;
  const int re0 = 2 * tm.n_buses;
  bad(re0 + 0) = 1.0;   // Re W = [[1, 1.04...], [1.04..., 1]] stays PSD-ish;
  bad(re0 + 3) = -1.0;  // a negative diagonal makes it indefinite
  EXPECT_GT(so.local_set.membership_residual(bad), 1e-3);
}

TEST(BuildTd, FeederCountMismatchRejected) {
  const TransmissionModel tm = two_bus_tm();
  EXPECT_THROW(build_td(tm, {two_feeders()[0]}), std::invalid_argument);
}

TEST(TdSpec, ParsesBuiltinFile) {
  const TdSpec spec = parse_td_spec(fixtures::kTd2Bus);
  EXPECT_EQ(spec.tran_case, "builtin:case2t");
  ASSERT_EQ(spec.feeder_cases.size(), 2u);
  EXPECT_EQ(spec.feeder_cases[0], "builtin:feeder3a");
  EXPECT_EQ(spec.feeder_cases[1], "builtin:feeder3b");
}

}  // namespace
}  // namespace dgopt
