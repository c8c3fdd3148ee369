#include "dgopt/graph.hpp"

#include <gtest/gtest.h>

#include <Eigen/SVD>
#include <sstream>

namespace dgopt {
namespace {

TEST(Metropolis, PathOfThree) {
  const auto wm = metropolis_weights(CommGraph::path(3));
  Mat want(3, 3);
  const double third = 1.0 / 3.0;
  want << 2 * third, third, 0, third, third, third, 0, third, 2 * third;
  EXPECT_LT((wm.w - want).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_NEAR(wm.sigma2, 2.0 / 3.0, 1e-12);  // eigenvector (1, 0, -1)
}

TEST(Metropolis, CompleteTwoAndSingleton) {
  const auto k2 = metropolis_weights(CommGraph::complete(2));
  Mat want(2, 2);
  want << 0.5, 0.5, 0.5, 0.5;
  EXPECT_LT((k2.w - want).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_NEAR(k2.sigma2, 0.0, 1e-12);

  CommGraph one;
  one.n_nodes = 1;
  const auto w1 = metropolis_weights(one);
  EXPECT_EQ(w1.w.rows(), 1);
  EXPECT_EQ(w1.w(0, 0), 1.0);
  EXPECT_EQ(w1.sigma2, 0.0);
}

TEST(Metropolis, RejectsDisconnected) {
  CommGraph g;
  g.n_nodes = 3;
  g.add_edge(0, 1);
  EXPECT_THROW(metropolis_weights(g), std::invalid_argument);
}

TEST(Verify, MetropolisPassesByConstruction) {
  const auto g = CommGraph::path(4);
  const auto wm = metropolis_weights(g);
  const auto d = verify_weight_matrix(wm.w, g);
  EXPECT_TRUE(d.all_ok());
  EXPECT_LT(d.row_sum_residual, 1e-12);
  EXPECT_LT(d.col_sum_residual, 1e-12);
  EXPECT_TRUE(d.aperiodic);
}

TEST(Verify, IdentityFailsSupportIrreducibility) {
  const auto g = CommGraph::path(3);
  const auto d = verify_weight_matrix(Mat::Identity(3, 3), g);
  EXPECT_FALSE(d.support_irreducible);
  EXPECT_FALSE(d.sparsity_ok);
}

TEST(Verify, ReportsColumnResidual) {
  CommGraph g = CommGraph::complete(2);
  Mat w(2, 2);
  w << 0.9, 0.1, 0.5, 0.5;
  const auto d = verify_weight_matrix(w, g);
  EXPECT_LT(d.row_sum_residual, 1e-15);
  EXPECT_NEAR(d.col_sum_residual, 0.4, 1e-15);
  EXPECT_FALSE(d.all_ok());
}

CommGraph random_connected(CounterRng& rng, int n) {
  CommGraph g;
  g.n_nodes = n;
  for (int j = 1; j < n; ++j)
    g.add_edge(j, static_cast<int>(rng.below(static_cast<std::uint64_t>(j))));
  const int extra = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
  for (int e = 0; e < extra; ++e) {
    const int a = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    const int b = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    if (a != b) g.add_edge(a, b);
  }
  return g;
}

TEST(Properties, FiftyRandomGraphs) {
  CounterRng rng(101);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(11));
    const auto g = random_connected(rng, n);
    const auto wm = metropolis_weights(g);
    const auto d = verify_weight_matrix(wm.w, g);
    EXPECT_TRUE(d.all_ok()) << "n=" << n;
    EXPECT_LT(wm.sigma2, 1.0);
    EXPECT_LT(d.row_sum_residual, 1e-12);
    EXPECT_LT(d.col_sum_residual, 1e-12);

    // Brute-force SVD oracle.
    const Eigen::JacobiSVD<Mat> svd(wm.w);
    EXPECT_NEAR(wm.sigma2, svd.singularValues()(1), 1e-10);

    // Consensus contraction on mean-zero vectors (Courant-Fischer step).
    for (int rep = 0; rep < 5; ++rep) {
      Vec v(n);
      for (int i = 0; i < n; ++i) v(i) = 2.0 * rng.uniform01() - 1.0;
      v.array() -= v.mean();
      EXPECT_LE((wm.w * v).norm(), wm.sigma2 * v.norm() + 1e-10);
    }

    // Relabeling nodes conjugates W by the permutation.
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = n - 1; i > 0; --i)
      std::swap(perm[static_cast<std::size_t>(i)],
                perm[rng.below(static_cast<std::uint64_t>(i + 1))]);
    CommGraph gp;
    gp.n_nodes = n;
    for (const auto& [a, b] : g.edges)
      gp.add_edge(perm[static_cast<std::size_t>(a)],
                  perm[static_cast<std::size_t>(b)]);
    const auto wp = metropolis_weights(gp);
    Mat pmat = Mat::Zero(n, n);
    for (int i = 0; i < n; ++i) pmat(perm[static_cast<std::size_t>(i)], i) = 1.0;
    EXPECT_LT((wp.w - pmat * wm.w * pmat.transpose()).cwiseAbs().maxCoeff(),
              1e-14);
  }
}

TEST(EdgeList, ReadsOneIndexedPairs) {
  std::istringstream in("3\n1 2\n2 3  # comment\n\n");
  const auto g = read_edge_list(in);
  EXPECT_EQ(g.n_nodes, 3);
  EXPECT_TRUE(g.has_edge(0, 1));
  EXPECT_TRUE(g.has_edge(1, 2));
  EXPECT_FALSE(g.has_edge(0, 2));
  std::istringstream bad("");
  EXPECT_THROW(read_edge_list(bad), std::invalid_argument);
}

}  // namespace
}  // namespace dgopt
