#pragma once

#include <algorithm>
#include <utility>

#include "dgopt/linalg.hpp"
#include "dgopt/types.hpp"

namespace dgopt {

/// Componentwise clamp onto [lower, upper]. Exact.
inline Vec project_box(const Vec& x, const Vec& lower, const Vec& upper) {
  return x.cwiseMax(lower).cwiseMin(upper);
}

/// Projection onto the halfspace aᵀx <= b.
inline Vec project_halfspace(const Vec& x, const Vec& a, double b) {
  const double viol = a.dot(x) - b;
  if (viol <= 0.0) return x;
  return x - (viol / a.squaredNorm()) * a;
}

/// Projection onto the closed ball ||x|| <= radius.
inline Vec project_ball(const Vec& x, double radius) {
  const double nrm = x.norm();
  if (nrm <= radius) return x;
  if (nrm == 0.0) return x;
  return (radius / nrm) * x;
}

struct SocPoint {
  Vec u;
  double s = 0.0;
};

/// Closed-form projection onto the standard second-order cone ||u|| <= s.
inline SocPoint project_soc(const Vec& u, double s) {
  const double nrm = u.norm();
  if (nrm <= s) return {u, s};
  if (nrm <= -s) return {Vec::Zero(u.size()), 0.0};
  const double scale = 0.5 * (nrm + s);
  SocPoint out;
  out.u = (scale / nrm) * u;
  out.s = scale;
  return out;
}

struct RotatedSocPoint {
  double a = 0.0;
  double b = 0.0;
  Vec u;
};

namespace detail {

// Secular function for the rotated-cone KKT system in the rotated frame
// (t, u, s):  psi(gamma) = t0²/(1+g)² + 2||u0||²/(1+2g)² − s0²/(1−g)².
inline double rotated_secular(double g, double t0sq, double u0sq, double s0sq) {
  return t0sq / sqr(1.0 + g) + 2.0 * u0sq / sqr(1.0 + 2.0 * g) -
         s0sq / sqr(1.0 - g);
}

inline double solve_secular(double lo, double hi, double t0sq, double u0sq,
                            double s0sq) {
  // Bracketing bisection; psi changes sign between lo and hi. 200 halvings
  // reach full double precision and are unconditionally safe.
  double flo = rotated_secular(lo, t0sq, u0sq, s0sq);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = rotated_secular(mid, t0sq, u0sq, s0sq);
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
    if (std::abs(hi - lo) <= 1e-17 * (1.0 + std::abs(lo))) break;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

/// Exact Euclidean projection onto the rotated second-order cone
/// {(a, b, u) : a >= 0, b >= 0, a·b >= ||u||²}. Solved in the orthogonally
/// rotated frame s=(a+b)/√2, t=(a−b)/√2 where the cone becomes the
/// ellipsoidal cone t² + 2||u||² <= s², s >= 0; the KKT multiplier is the
/// root of a scalar secular equation.
inline RotatedSocPoint project_rotated_soc(double a, double b, const Vec& u) {
  const double inv_sqrt2 = std::numbers::sqrt2 / 2.0;
  const double s0 = (a + b) * inv_sqrt2;
  const double t0 = (a - b) * inv_sqrt2;
  const double u0sq = u.squaredNorm();
  const double t0sq = t0 * t0;
  const double s0sq = s0 * s0;

  const double phi = std::sqrt(t0sq + 2.0 * u0sq);
  const double scale = std::max({std::abs(a), std::abs(b), std::sqrt(u0sq), 1.0});
  if (phi <= s0 + 1e-16 * scale) {  // already in the cone
    RotatedSocPoint out{std::max(a, 0.0), std::max(b, 0.0), u};
    return out;
  }
  if (s0 <= -std::sqrt(t0sq + 0.5 * u0sq) + 1e-18 * scale) {  // polar cone
    return {0.0, 0.0, Vec::Zero(u.size())};
  }

  double t, s;
  Vec uproj;
  if (std::abs(s0) <= 1e-14 * scale) {
    // Singular multiplier gamma = 1: stationarity fixes t and u, the surface
    // equation recovers s.
    t = 0.5 * t0;
    uproj = u / 3.0;
    s = std::sqrt(t * t + 2.0 * uproj.squaredNorm());
  } else {
    double gamma;
    if (s0 > 0.0) {
      // psi strictly decreases from psi(0) > 0 to −inf as gamma -> 1⁻.
      gamma = detail::solve_secular(0.0, 1.0 - 1e-16, t0sq, u0sq, s0sq);
    } else {
      // Root lies in (1, inf): psi(1⁺) = −inf, psi(+inf) -> positive since
      // the point is not in the polar cone.
      double hi = 2.0;
      while (detail::rotated_secular(hi, t0sq, u0sq, s0sq) <= 0.0 &&
             hi < 1e18) {
        hi *= 2.0;
      }
      const double lo = 1.0 + 1e-16;
      gamma = detail::solve_secular(hi, lo, t0sq, u0sq, s0sq);
    }
    t = t0 / (1.0 + gamma);
    uproj = u / (1.0 + 2.0 * gamma);
    s = s0 / (1.0 - gamma);
  }

  RotatedSocPoint out;
  out.a = std::max((s + t) * inv_sqrt2, 0.0);
  out.b = std::max((s - t) * inv_sqrt2, 0.0);
  out.u = std::move(uproj);
  // Snap to the surface: the secular root is accurate to ~1e-16 but the
  // cone inequality should hold exactly for downstream membership checks.
  const double need = out.u.squaredNorm();
  const double have = out.a * out.b;
  if (have < need && have >= 0.0 && need > 0.0) {
    const double lift = std::sqrt(need / std::max(have, 1e-300));
    if (std::isfinite(lift) && lift < 1.0 + 1e-12) {
      out.a *= lift;
      out.b *= lift;
    }
  }
  return out;
}

/// Frobenius-nearest positive semidefinite matrix: symmetrize, drop negative
/// eigenvalues, reassemble.
inline Mat project_psd(const Mat& m) {
  const SymmetricEig eig = jacobi_eigensymmetric(m);
  const Vec clipped = eig.values.cwiseMax(0.0);
  Mat out = eig.vectors * clipped.asDiagonal() * eig.vectors.transpose();
  return 0.5 * (out + out.transpose()).eval();
}

/// Nearest pair (Re W, Im W) with W Hermitian PSD, working entirely in the
/// real embedding [[Re W, Im W], [−Im W, Re W]] of the complex cone.
inline std::pair<Mat, Mat> project_hermitian_psd(const Mat& re, const Mat& im) {
  const Index n = re.rows();
  const Mat rs = 0.5 * (re + re.transpose());
  const Mat ia = 0.5 * (im - im.transpose());
  Mat embed(2 * n, 2 * n);
  embed.topLeftCorner(n, n) = rs;
  embed.topRightCorner(n, n) = ia;
  embed.bottomLeftCorner(n, n) = -ia;
  embed.bottomRightCorner(n, n) = rs;
  const Mat proj = project_psd(embed);
  Mat re_out = 0.5 * (proj.topLeftCorner(n, n) + proj.bottomRightCorner(n, n));
  re_out = 0.5 * (re_out + re_out.transpose()).eval();
  Mat im_out = 0.5 * (proj.topRightCorner(n, n) - proj.bottomLeftCorner(n, n));
  im_out = 0.5 * (im_out - im_out.transpose()).eval();
  return {re_out, im_out};
}

}  // namespace dgopt
