#pragma once

#include <algorithm>
#include <numeric>
#include <vector>

#include "dgopt/types.hpp"

namespace dgopt {

struct SymmetricEig {
  Vec values;   // unsorted, values(i) pairs with vectors.col(i)
  Mat vectors;  // orthogonal
  int sweeps = 0;
};

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. The sweep order is
/// fixed (row-major over the upper triangle), so results are deterministic
/// and platform-stable for golden tests. Input is symmetrized first.
inline SymmetricEig jacobi_eigensymmetric(Mat a, int max_sweeps = 64) {
  const Index n = a.rows();
  a = 0.5 * (a + a.transpose()).eval();
  Mat v = Mat::Identity(n, n);
  SymmetricEig out;
  if (n == 0) {
    out.values = Vec();
    out.vectors = v;
    return out;
  }
  const double scale = std::max(a.cwiseAbs().maxCoeff(), 1e-300);
  const double stop = 1e-15 * scale;
  int sweep = 0;
  for (; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (Index p = 0; p + 1 < n; ++p)
      for (Index q = p + 1; q < n; ++q) off = std::max(off, std::abs(a(p, q)));
    if (off <= stop) break;
    for (Index p = 0; p + 1 < n; ++p) {
      for (Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) <= stop * 1e-2) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        const double tau = s / (1.0 + c);
        const double app = a(p, p), aqq = a(q, q);
        a(p, p) = app - t * apq;
        a(q, q) = aqq + t * apq;
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (Index k = 0; k < n; ++k) {
          if (k == p || k == q) continue;
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = akp - s * (akq + tau * akp);
          a(p, k) = a(k, p);
          a(k, q) = akq + s * (akp - tau * akq);
          a(q, k) = a(k, q);
        }
        for (Index k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = vkp - s * (vkq + tau * vkp);
          v(k, q) = vkq + s * (vkp - tau * vkq);
        }
      }
    }
  }
  out.values = a.diagonal();
  out.vectors = v;
  out.sweeps = sweep;
  return out;
}

/// Eigenvalues sorted descending (paired permutation of vectors available via
/// the returned index order when needed).
inline std::vector<Index> sorted_indices_desc(const Vec& values) {
  std::vector<Index> idx(static_cast<std::size_t>(values.size()));
  std::iota(idx.begin(), idx.end(), Index{0});
  std::stable_sort(idx.begin(), idx.end(), [&](Index i, Index j) {
    return values(i) > values(j);
  });
  return idx;
}

inline double min_eigenvalue(const Mat& sym) {
  if (sym.rows() == 0) return 0.0;
  return jacobi_eigensymmetric(sym).values.minCoeff();
}

/// Spectral norm ||g||_2 computed exactly through the symmetric
/// eigendecomposition of gᵀg.
inline double operator_2norm(const Mat& g) {
  if (g.rows() == 0 || g.cols() == 0) return 0.0;
  const Mat gram = g.cols() <= g.rows() ? Mat(g.transpose() * g)
                                        : Mat(g * g.transpose());
  const double lmax = jacobi_eigensymmetric(gram).values.maxCoeff();
  return std::sqrt(std::max(lmax, 0.0));
}

}  // namespace dgopt
