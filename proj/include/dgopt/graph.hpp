#pragma once

#include <istream>
#include <queue>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "dgopt/linalg.hpp"
#include "dgopt/types.hpp"

namespace dgopt {

/// Undirected communication graph. Self-loops are not stored; self-weights
/// live on the weight matrix diagonal.
struct CommGraph {
  int n_nodes = 0;
  std::set<std::pair<int, int>> edges;  // (j, k) with j < k, 0-indexed

  void add_edge(int j, int k) {
    if (j == k) throw std::invalid_argument("CommGraph: self-loop");
    if (j < 0 || k < 0 || j >= n_nodes || k >= n_nodes)
      throw std::invalid_argument("CommGraph: node out of range");
    edges.insert({std::min(j, k), std::max(j, k)});
  }

  bool has_edge(int j, int k) const {
    return edges.count({std::min(j, k), std::max(j, k)}) > 0;
  }

  std::vector<int> degrees() const {
    std::vector<int> deg(static_cast<std::size_t>(n_nodes), 0);
    for (const auto& [j, k] : edges) {
      ++deg[static_cast<std::size_t>(j)];
      ++deg[static_cast<std::size_t>(k)];
    }
    return deg;
  }

  bool connected() const {
    if (n_nodes <= 0) return false;
    if (n_nodes == 1) return true;
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(n_nodes));
    for (const auto& [j, k] : edges) {
      adj[static_cast<std::size_t>(j)].push_back(k);
      adj[static_cast<std::size_t>(k)].push_back(j);
    }
    std::vector<bool> seen(static_cast<std::size_t>(n_nodes), false);
    std::queue<int> q;
    q.push(0);
    seen[0] = true;
    int count = 1;
    while (!q.empty()) {
      const int v = q.front();
      q.pop();
      for (int w : adj[static_cast<std::size_t>(v)]) {
        if (!seen[static_cast<std::size_t>(w)]) {
          seen[static_cast<std::size_t>(w)] = true;
          ++count;
          q.push(w);
        }
      }
    }
    return count == n_nodes;
  }

  static CommGraph path(int n) {
    CommGraph g;
    g.n_nodes = n;
    for (int j = 0; j + 1 < n; ++j) g.add_edge(j, j + 1);
    return g;
  }

  static CommGraph complete(int n) {
    CommGraph g;
    g.n_nodes = n;
    for (int j = 0; j < n; ++j)
      for (int k = j + 1; k < n; ++k) g.add_edge(j, k);
    return g;
  }

  /// Star with the hub at node `center`.
  static CommGraph star(int n, int center) {
    CommGraph g;
    g.n_nodes = n;
    for (int j = 0; j < n; ++j)
      if (j != center) g.add_edge(j, center);
    return g;
  }
};

/// Edge-list text format: first line "N", then one "j k" pair per line,
/// 1-indexed. Blank lines and '#' comments are skipped.
inline CommGraph read_edge_list(std::istream& in) {
  CommGraph g;
  std::string line;
  bool have_n = false;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::istringstream ls(line);
    if (!have_n) {
      if (ls >> g.n_nodes) have_n = true;
      continue;
    }
    int j, k;
    if (ls >> j >> k) {
      if (j < 1 || k < 1)
        throw std::invalid_argument("edge list: nodes are 1-indexed (line " +
                                    std::to_string(lineno) + ")");
      g.add_edge(j - 1, k - 1);
    }
  }
  if (!have_n) throw std::invalid_argument("edge list: missing node count");
  return g;
}

struct WeightMatrix {
  Mat w;
  double sigma2 = 0.0;  // second largest singular value, cached
};

/// sigma_2(W) through the deterministic symmetric eigendecomposition;
/// W symmetric makes singular values the absolute eigenvalues. Returns 0 for
/// N = 1 by convention.
inline double second_singular_value(const Mat& w) {
  if (w.rows() <= 1) return 0.0;
  Vec mags = jacobi_eigensymmetric(w).values.cwiseAbs();
  const auto order = sorted_indices_desc(mags);
  return mags(order[1]);
}

/// Metropolis weights W_jk = 1/(1 + max(deg_j, deg_k)) on edges, diagonal
/// filling each row to 1. Symmetric, doubly stochastic, strictly positive
/// diagonal, hence irreducible and aperiodic on connected graphs.
inline WeightMatrix metropolis_weights(const CommGraph& g) {
  if (!g.connected())
    throw std::invalid_argument("metropolis_weights: graph not connected");
  const int n = g.n_nodes;
  Mat w = Mat::Zero(n, n);
  const auto deg = g.degrees();
  for (const auto& [j, k] : g.edges) {
    const double v = 1.0 / (1.0 + std::max(deg[static_cast<std::size_t>(j)],
                                           deg[static_cast<std::size_t>(k)]));
    w(j, k) = v;
    w(k, j) = v;
  }
  for (int j = 0; j < n; ++j) w(j, j) = 1.0 - w.row(j).sum();
  WeightMatrix out;
  out.w = std::move(w);
  out.sigma2 = second_singular_value(out.w);
  return out;
}

struct WeightDiagnostics {
  double row_sum_residual = 0.0;
  double col_sum_residual = 0.0;
  double min_entry = 0.0;
  double symmetry_residual = 0.0;
  bool sparsity_ok = true;          // W_jk != 0 <=> (j,k) in E or j == k
  bool support_irreducible = true;  // support restricted to E is connected
  bool aperiodic = true;            // some positive diagonal entry
  double sigma2 = 0.0;

  bool all_ok(double tol = 1e-12) const {
    return row_sum_residual <= tol && col_sum_residual <= tol &&
           min_entry >= -tol && sparsity_ok && support_irreducible &&
           aperiodic && sigma2 < 1.0;
  }
};

inline WeightDiagnostics verify_weight_matrix(const Mat& w,
                                              const CommGraph& g) {
  WeightDiagnostics d;
  const int n = static_cast<int>(w.rows());
  d.row_sum_residual =
      (w.rowwise().sum() - Vec::Ones(n)).cwiseAbs().maxCoeff();
  d.col_sum_residual =
      (w.colwise().sum().transpose() - Vec::Ones(n)).cwiseAbs().maxCoeff();
  d.min_entry = w.minCoeff();
  d.symmetry_residual = (w - w.transpose()).cwiseAbs().maxCoeff();
  CommGraph support;
  support.n_nodes = n;
  d.aperiodic = false;
  for (int j = 0; j < n; ++j) {
    if (w(j, j) > 0.0) d.aperiodic = true;
    for (int k = 0; k < n; ++k) {
      if (j == k) continue;
      const bool nonzero = w(j, k) != 0.0;
      if (nonzero && !g.has_edge(j, k)) d.sparsity_ok = false;
      if (!nonzero && g.has_edge(j, k)) d.sparsity_ok = false;
      if (nonzero && j < k) support.add_edge(j, k);
    }
  }
  d.support_irreducible = support.connected();
  d.sigma2 = second_singular_value(w);
  return d;
}

}  // namespace dgopt
