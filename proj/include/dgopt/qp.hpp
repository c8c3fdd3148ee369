#pragma once

#include <Eigen/Cholesky>

#include <string>

#include "dgopt/types.hpp"

namespace dgopt {

enum class SolveStatus { kOptimal, kMaxIterations, kInfeasible, kNumericalError };

inline std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kOptimal: return "optimal";
    case SolveStatus::kMaxIterations: return "max_iterations";
    case SolveStatus::kInfeasible: return "infeasible";
    case SolveStatus::kNumericalError: return "numerical_error";
  }
  return "unknown";
}

struct QpResult {
  SolveStatus status = SolveStatus::kNumericalError;
  Vec x;
  Vec y;    // multipliers of the equality rows, sign convention Qx+c+Cᵀy+Gᵀλ=0
  Vec lam;  // multipliers of the stacked inequality rows (A, upper box, lower box)
  double objective = 0.0;
  int iterations = 0;
  double stationarity = 0.0;
  double primal_eq_residual = 0.0;
  double primal_ineq_residual = 0.0;
  double mu = 0.0;
};

struct QpOptions {
  double tolerance = 1e-8;
  int max_iterations = 100;
  double dual_blowup = 1e9;  // infeasibility certificate threshold
};

/// Dense Mehrotra predictor-corrector interior point for
///   min 0.5 xᵀQx + cᵀx  s.t.  A x <= b, C x = d, lower <= x <= upper.
/// The box is mandatory (compact feasible sets by construction) and is folded
/// into the inequality block. Starts from the analytic center of the box;
/// the whole iteration is deterministic.
inline QpResult solve_qp_polytope(const Mat& q, const Vec& c, const Mat& a,
                                  const Vec& b, const Mat& ceq, const Vec& d,
                                  const Vec& lower, const Vec& upper,
                                  const QpOptions& opt = {}) {
  const Index n = c.size();
  const Index ma = a.rows();
  const Index p = ceq.rows();
  const Index m = ma + 2 * n;

  Mat g(m, n);
  Vec h(m);
  if (ma > 0) {
    g.topRows(ma) = a;
    h.head(ma) = b;
  }
  g.middleRows(ma, n) = Mat::Identity(n, n);
  h.segment(ma, n) = upper;
  g.bottomRows(n) = -Mat::Identity(n, n);
  h.tail(n) = -lower;

  QpResult res;
  res.x = 0.5 * (lower + upper);
  res.y = Vec::Zero(p);

  Vec s = (h - g * res.x).cwiseMax(1.0);
  Vec lam = Vec::Ones(m);
  Vec& x = res.x;
  Vec& y = res.y;

  const double cscale = 1.0 + c.cwiseAbs().maxCoeff();
  const double hscale = 1.0 + h.cwiseAbs().maxCoeff() +
                        (p > 0 ? d.cwiseAbs().maxCoeff() : 0.0);
  const double reg = 1e-11 * (1.0 + (n > 0 ? q.cwiseAbs().maxCoeff() : 0.0));

  for (int it = 0; it < opt.max_iterations; ++it) {
    res.iterations = it;
    const Vec rd = q * x + c + g.transpose() * lam +
                   (p > 0 ? Vec(ceq.transpose() * y) : Vec::Zero(n));
    const Vec rp = p > 0 ? Vec(ceq * x - d) : Vec();
    const Vec rg = g * x + s - h;
    const double mu = s.dot(lam) / static_cast<double>(m);

    res.stationarity = rd.cwiseAbs().maxCoeff();
    res.primal_eq_residual = p > 0 ? rp.cwiseAbs().maxCoeff() : 0.0;
    res.primal_ineq_residual = rg.cwiseAbs().maxCoeff();
    res.mu = mu;

    if (res.stationarity <= opt.tolerance * cscale &&
        res.primal_eq_residual <= opt.tolerance * hscale &&
        res.primal_ineq_residual <= opt.tolerance * hscale &&
        mu <= opt.tolerance * cscale) {
      res.status = SolveStatus::kOptimal;
      break;
    }

    // Infeasibility: growing multipliers aligned with a Farkas certificate
    // (Cᵀy + Gᵀλ = 0, λ >= 0, dᵀy + hᵀλ < 0), or outright dual blow-up with
    // a stuck primal residual.
    const double dual_norm =
        lam.cwiseAbs().maxCoeff() + (p > 0 ? y.cwiseAbs().maxCoeff() : 0.0);
    if (dual_norm > 1e2 * cscale) {
      const Vec cert = g.transpose() * lam +
                       (p > 0 ? Vec(ceq.transpose() * y) : Vec::Zero(n));
      const double gap = h.dot(lam) + (p > 0 ? d.dot(y) : 0.0);
      if (cert.cwiseAbs().maxCoeff() <= 1e-7 * dual_norm &&
          gap < -1e-9 * dual_norm) {
        res.status = SolveStatus::kInfeasible;
        break;
      }
    }
    if (dual_norm > opt.dual_blowup * cscale &&
        (res.primal_eq_residual > opt.tolerance * hscale ||
         res.primal_ineq_residual > opt.tolerance * hscale)) {
      res.status = SolveStatus::kInfeasible;
      break;
    }

    const Vec w = lam.cwiseQuotient(s);
    Mat k = q;
    k += g.transpose() * w.asDiagonal() * g;
    k.diagonal().array() += reg;
    Eigen::LLT<Mat> kfac(k);
    if (kfac.info() != Eigen::Success) {
      k.diagonal().array() += 1e-8 * (1.0 + k.diagonal().cwiseAbs().maxCoeff());
      kfac.compute(k);
      if (kfac.info() != Eigen::Success) {
        res.status = SolveStatus::kNumericalError;
        break;
      }
    }
    Eigen::LLT<Mat> schur_fac;
    Mat kinv_ct;
    if (p > 0) {
      kinv_ct = kfac.solve(ceq.transpose());
      Mat schur = ceq * kinv_ct;
      schur.diagonal().array() += 1e-11;
      schur_fac.compute(schur);
      if (schur_fac.info() != Eigen::Success) {
        res.status = SolveStatus::kNumericalError;
        break;
      }
    }

    // One Newton solve for a given complementarity target rc.
    auto newton = [&](const Vec& rc, Vec& dx, Vec& dy, Vec& dlam, Vec& ds) {
      const Vec tmp = rc.cwiseQuotient(s);  // S^{-1} rc
      const Vec rhs1 = -rd - g.transpose() * Vec(w.cwiseProduct(rg) - tmp);
      if (p > 0) {
        const Vec kinv_rhs1 = kfac.solve(rhs1);
        dy = schur_fac.solve(ceq * kinv_rhs1 + rp);
        dx = kinv_rhs1 - kinv_ct * dy;
      } else {
        dy = Vec();
        dx = kfac.solve(rhs1);
      }
      ds = -rg - g * dx;
      dlam = -tmp - w.cwiseProduct(ds);
    };

    auto max_step = [](const Vec& v, const Vec& dv) {
      double alpha = 1.0;
      for (Index i = 0; i < v.size(); ++i)
        if (dv(i) < 0.0) alpha = std::min(alpha, -v(i) / dv(i));
      return alpha;
    };

    // Predictor.
    Vec dx, dy, dlam, ds;
    Vec rc = s.cwiseProduct(lam);
    newton(rc, dx, dy, dlam, ds);
    const double ap_aff = max_step(s, ds);
    const double ad_aff = max_step(lam, dlam);
    const double mu_aff = (s + ap_aff * ds).dot(lam + ad_aff * dlam) /
                          static_cast<double>(m);
    const double sigma =
        mu > 0.0 ? std::pow(std::max(mu_aff / mu, 0.0), 3.0) : 0.0;

    // Corrector with centering.
    rc = s.cwiseProduct(lam) + ds.cwiseProduct(dlam) -
         Vec::Constant(m, sigma * mu);
    newton(rc, dx, dy, dlam, ds);

    const double tau = 0.995;
    const double ap = std::min(1.0, tau * max_step(s, ds));
    const double ad = std::min(1.0, tau * max_step(lam, dlam));
    x += ap * dx;
    s += ap * ds;
    lam += ad * dlam;
    if (p > 0) y += ad * dy;

    if (it + 1 == opt.max_iterations) res.status = SolveStatus::kMaxIterations;
  }

  if (res.status == SolveStatus::kMaxIterations) {
    // The last update is not re-checked inside the loop; accept it if the
    // final iterate already meets the tolerances.
    const Vec rd = q * x + c + g.transpose() * lam +
                   (p > 0 ? Vec(ceq.transpose() * y) : Vec::Zero(n));
    res.stationarity = rd.cwiseAbs().maxCoeff();
    res.primal_eq_residual =
        p > 0 ? (ceq * x - d).cwiseAbs().maxCoeff() : 0.0;
    res.primal_ineq_residual = (g * x + s - h).cwiseAbs().maxCoeff();
    res.mu = s.dot(lam) / static_cast<double>(m);
    if (res.stationarity <= opt.tolerance * cscale &&
        res.primal_eq_residual <= opt.tolerance * hscale &&
        res.primal_ineq_residual <= opt.tolerance * hscale &&
        res.mu <= opt.tolerance * cscale) {
      res.status = SolveStatus::kOptimal;
    }
  }

  res.lam = lam;
  res.objective = 0.5 * x.dot(q * x) + c.dot(x);
  return res;
}

}  // namespace dgopt
