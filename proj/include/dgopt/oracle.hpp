#pragma once

#include <functional>
#include <string>
#include <vector>

#include "dgopt/ddsa.hpp"
#include "dgopt/dykstra.hpp"
#include "dgopt/local_solver.hpp"
#include "dgopt/problem.hpp"
#include "dgopt/qp.hpp"

namespace dgopt {

struct OracleOptions {
  double tolerance = 1e-7;  // coupling residuals at the reported solution
  int max_outer = 80;       // augmented-Lagrangian outer iterations
  double rho0 = 10.0;
  QpOptions qp{1e-9, 200, 1e9};
  SubsolverConfig inner;
};

struct OracleResult {
  SolveStatus status = SolveStatus::kNumericalError;
  double value = 0.0;
  Vec x;  // stacked in agent order
  DualPoint z;
  double stationarity = 0.0;
  double eq_residual = 0.0;
  double ineq_residual = 0.0;
  double complementarity = 0.0;
  int iterations = 0;
};

inline std::vector<Vec> split_by_agents(const ProblemInstance& p, const Vec& x) {
  std::vector<Vec> xs;
  Index off = 0;
  for (const auto& a : p.agents) {
    xs.push_back(x.segment(off, a.dim()));
    off += a.dim();
  }
  return xs;
}

namespace detail {

/// FISTA over an arbitrary smooth objective and a target-list feasible set;
/// used by the augmented-Lagrangian oracle.
struct ApgOut {
  Vec x;
  double pg_norm = 0.0;
  int iterations = 0;
};

inline ApgOut apg_generic(const ConvexSetSpec& set,
                          const std::vector<ProjectionTarget>& targets,
                          const std::function<double(const Vec&)>& value,
                          const std::function<Vec(const Vec&)>& grad,
                          double lipschitz, Vec x0, double tol, int max_iters,
                          const DykstraOptions& dopt) {
  ApgOut out;
  const double lip = std::max(lipschitz, 1e-8);
  Vec x = project_onto_set(set, std::move(x0), targets, dopt).point;
  Vec y = x;
  double fx = value(x);
  double tk = 1.0;
  for (int it = 1; it <= max_iters; ++it) {
    out.iterations = it;
    const Vec g = grad(y);
    Vec x_new = project_onto_set(set, y - g / lip, targets, dopt).point;
    const double pg = lip * (y - x_new).cwiseAbs().maxCoeff();
    out.pg_norm = pg;
    const double fnew = value(x_new);
    if (pg <= tol) {
      out.x = std::move(x_new);
      return out;
    }
    if (fnew > fx) {
      tk = 1.0;
      y = x;
      continue;
    }
    const double tnext = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * tk * tk));
    y = x_new + ((tk - 1.0) / tnext) * (x_new - x);
    x = std::move(x_new);
    fx = fnew;
    tk = tnext;
  }
  out.x = x;
  return out;
}

}  // namespace detail

/// Centralized solve of the monolithic problem: all agents stacked, coupling
/// rows appended. Polyhedral instances go through the interior-point solver;
/// instances with cone slices run accelerated projected gradient inside an
/// augmented-Lagrangian loop on the coupling rows.
inline OracleResult oracle_solve(const ProblemInstance& p,
                                 const OracleOptions& opt = {}) {
  const ProblemInstance mono = p.num_agents() == 1 ? p : merge_agents(p);
  const AgentSpec& big = mono.agents[0];
  const ConvexSetSpec& set = big.local_set;
  const Index n = set.dim;
  OracleResult res;

  if (set.is_polyhedral()) {
    // Append coupling rows to the local polyhedron and read the coupling
    // multipliers straight off the interior point solution.
    const Index la = set.a_ineq.rows();
    const Index lc = set.c_eq.rows();
    Mat a(la + p.m_ineq, n);
    Vec b(la + p.m_ineq);
    if (la > 0) {
      a.topRows(la) = set.a_ineq;
      b.head(la) = set.b_ineq;
    }
    if (p.m_ineq > 0) {
      a.bottomRows(p.m_ineq) = big.coupling_ineq;
      b.tail(p.m_ineq) = -big.coupling_ineq_offset;
    }
    Mat c(lc + p.m_eq, n);
    Vec d(lc + p.m_eq);
    if (lc > 0) {
      c.topRows(lc) = set.c_eq;
      d.head(lc) = set.d_eq;
    }
    if (p.m_eq > 0) {
      c.bottomRows(p.m_eq) = big.coupling_eq;
      d.tail(p.m_eq) = -big.coupling_eq_offset;
    }
    const QpResult qr = solve_qp_polytope(big.objective.q, big.objective.c, a,
                                          b, c, d, set.lower, set.upper, opt.qp);
    res.status = qr.status;
    res.x = qr.x;
    res.value = qr.objective + big.objective.constant;
    res.iterations = qr.iterations;
    res.stationarity = qr.stationarity;
    Vec z(p.m_eq + p.m_ineq);
    if (p.m_eq > 0) z.head(p.m_eq) = qr.y.tail(p.m_eq);
    if (p.m_ineq > 0)
      z.tail(p.m_ineq) = qr.lam.segment(la, p.m_ineq).cwiseMax(0.0);
    res.z = DualPoint{z, p.m_eq};
    const Vec ge = big.coupling_eq_value(qr.x);
    const Vec gi = big.coupling_ineq_value(qr.x);
    res.eq_residual = ge.size() > 0 ? ge.cwiseAbs().maxCoeff() : 0.0;
    res.ineq_residual = gi.size() > 0 ? std::max(gi.maxCoeff(), 0.0) : 0.0;
    res.complementarity =
        gi.size() > 0 ? std::abs(res.z.ineq().dot(gi)) : 0.0;
    return res;
  }

  // Augmented Lagrangian on the coupling rows; the local set (with its cone
  // slices) is handled by projection.
  const auto targets = make_targets(set);
  const Mat& e_mat = big.coupling_eq;
  const Vec& e_off = big.coupling_eq_offset;
  const Mat& i_mat = big.coupling_ineq;
  const Vec& i_off = big.coupling_ineq_offset;
  const double e_norm2 = p.m_eq > 0 ? sqr(operator_2norm(e_mat)) : 0.0;
  const double i_norm2 = p.m_ineq > 0 ? sqr(operator_2norm(i_mat)) : 0.0;
  const double q_lip =
      big.objective.q.rows() > 0 ? operator_2norm(big.objective.q) : 0.0;

  Vec x = set.witness;
  Vec y = Vec::Zero(p.m_eq);
  Vec lam = Vec::Zero(p.m_ineq);
  double rho = opt.rho0;
  double inner_tol = 1e-3;
  double prev_res = std::numeric_limits<double>::infinity();

  for (int outer = 0; outer < opt.max_outer; ++outer) {
    res.iterations = outer + 1;
    auto he = [&](const Vec& v) -> Vec {
      return p.m_eq > 0 ? Vec(e_mat * v + e_off) : Vec();
    };
    auto hi = [&](const Vec& v) -> Vec {
      return p.m_ineq > 0 ? Vec(i_mat * v + i_off) : Vec();
    };
    auto value = [&](const Vec& v) {
      double f = big.objective.value(v);
      if (p.m_eq > 0) {
        const Vec r = he(v);
        f += y.dot(r) + 0.5 * rho * r.squaredNorm();
      }
      if (p.m_ineq > 0) {
        const Vec r = (lam + rho * hi(v)).cwiseMax(0.0);
        f += (r.squaredNorm() - lam.squaredNorm()) / (2.0 * rho);
      }
      return f;
    };
    auto grad = [&](const Vec& v) -> Vec {
      Vec g = big.objective.gradient(v);
      if (p.m_eq > 0) g += e_mat.transpose() * Vec(y + rho * he(v));
      if (p.m_ineq > 0)
        g += i_mat.transpose() * Vec((lam + rho * hi(v)).cwiseMax(0.0));
      return g;
    };
    const double lip = q_lip + rho * (e_norm2 + i_norm2);
    const auto apg = detail::apg_generic(set, targets, value, grad, lip, x,
                                         inner_tol, opt.inner.max_iters,
                                         opt.inner.dykstra);
    x = apg.x;
    const Vec re = he(x);
    const Vec ri = hi(x);
    const double coupling_res =
        std::max(re.size() > 0 ? re.cwiseAbs().maxCoeff() : 0.0,
                 ri.size() > 0 ? std::max(ri.maxCoeff(), 0.0) : 0.0);
    if (p.m_eq > 0) y += rho * re;
    if (p.m_ineq > 0) lam = (lam + rho * ri).cwiseMax(0.0);
    const bool tight = inner_tol <= 10.0 * opt.tolerance;
    if (coupling_res <= opt.tolerance && tight && apg.pg_norm <= inner_tol) {
      res.status = SolveStatus::kOptimal;
      break;
    }
    if (coupling_res > 0.5 * prev_res && rho < 1e8) rho *= 2.0;
    prev_res = std::max(coupling_res, 1e-300);
    inner_tol = std::max(inner_tol * 0.3, opt.tolerance * 0.3);
    if (outer + 1 == opt.max_outer) res.status = SolveStatus::kMaxIterations;
  }

  res.x = x;
  res.value = big.objective.value(x);
  Vec z(p.m_eq + p.m_ineq);
  if (p.m_eq > 0) z.head(p.m_eq) = y;
  if (p.m_ineq > 0) z.tail(p.m_ineq) = lam;
  res.z = DualPoint{z, p.m_eq};
  const Vec ge = big.coupling_eq_value(x);
  const Vec gi = big.coupling_ineq_value(x);
  res.eq_residual = ge.size() > 0 ? ge.cwiseAbs().maxCoeff() : 0.0;
  res.ineq_residual = gi.size() > 0 ? std::max(gi.maxCoeff(), 0.0) : 0.0;
  res.complementarity = gi.size() > 0 ? std::abs(lam.dot(gi)) : 0.0;
  // Stationarity of the true Lagrangian at (x, z) through the gradient map.
  {
    Vec g = big.objective.gradient(x);
    if (p.m_eq > 0) g += e_mat.transpose() * y;
    if (p.m_ineq > 0) g += i_mat.transpose() * lam;
    const double lip = std::max(q_lip, 1.0);
    const Vec moved =
        project_onto_set(set, x - g / lip, targets, opt.inner.dykstra).point;
    res.stationarity = lip * (x - moved).cwiseAbs().maxCoeff();
  }
  return res;
}

// ---------------------------------------------------------------------------
// Slater diagnostic: search for a strictly coupling-feasible point.
// ---------------------------------------------------------------------------

enum class SlaterStatus { kFound, kNotFound, kIndeterminate, kTrivial };

struct SlaterReport {
  SlaterStatus status = SlaterStatus::kIndeterminate;
  std::vector<Vec> witness;
  double slack_margin = 0.0;   // a strictly feasible point has margin > 0
  double eq_residual = 0.0;
};

/// Feasibility search by minimizing the worst inequality slack tau subject to
/// the coupling equalities, via the centralized oracle. Never claims
/// infeasibility on solver nonconvergence.
inline SlaterReport check_slater(const ProblemInstance& p,
                                 const OracleOptions& opt = {},
                                 double strict_margin = 1e-9) {
  SlaterReport rep;
  if (p.m_eq == 0 && p.m_ineq == 0) {
    rep.status = SlaterStatus::kTrivial;
    for (const auto& a : p.agents) rep.witness.push_back(a.local_set.witness);
    return rep;
  }

  // Zero the objectives; append a slack agent tau when inequalities exist:
  //   minimize tau  s.t.  sum g^E = 0,  sum g^I - tau 1 <= 0.
  ProblemInstance aux = p;
  aux.name = p.name + "/slater";
  for (auto& a : aux.agents) {
    a.objective.q.setZero();
    a.objective.c.setZero();
    a.objective.constant = 0.0;
  }
  if (p.m_ineq > 0) {
    double big = 1.0;
    for (const auto& a : p.agents) {
      const Vec box = (a.local_set.upper - a.local_set.lower).cwiseAbs();
      if (a.coupling_ineq.rows() > 0)
        big += a.coupling_ineq.cwiseAbs().rowwise().sum().maxCoeff() *
                   (box.maxCoeff() + a.local_set.lower.cwiseAbs().maxCoeff() +
                    1.0) +
               a.coupling_ineq_offset.cwiseAbs().maxCoeff();
    }
    AgentSpec slack;
    slack.local_set = ConvexSetSpec::box(Vec::Constant(1, -10.0 * big),
                                         Vec::Constant(1, 10.0 * big));
    slack.objective.q = Mat::Zero(1, 1);
    slack.objective.c = Vec::Ones(1);
    slack.coupling_eq = Mat::Zero(p.m_eq, 1);
    slack.coupling_eq_offset = Vec::Zero(p.m_eq);
    slack.coupling_ineq = Mat::Constant(p.m_ineq, 1, -1.0);
    slack.coupling_ineq_offset = Vec::Zero(p.m_ineq);
    slack.variable_names = {"slater_slack"};
    aux.agents.push_back(std::move(slack));
  }

  const OracleResult sol = oracle_solve(aux, opt);
  if (sol.status == SolveStatus::kInfeasible) {
    rep.status = SlaterStatus::kNotFound;  // equalities certified infeasible
    return rep;
  }
  if (sol.status != SolveStatus::kOptimal) {
    rep.status = SlaterStatus::kIndeterminate;
    return rep;
  }
  auto xs = split_by_agents(aux, sol.x);
  double tau = 0.0;
  if (p.m_ineq > 0) {
    tau = xs.back()(0);
    xs.pop_back();
  }
  rep.witness = xs;
  rep.slack_margin = -tau;
  rep.eq_residual = sol.eq_residual;
  if (rep.eq_residual > 100.0 * opt.tolerance) {
    rep.status = SlaterStatus::kIndeterminate;
  } else if (p.m_ineq == 0) {
    rep.status = SlaterStatus::kFound;
  } else {
    rep.status = tau < -strict_margin ? SlaterStatus::kFound
                                      : SlaterStatus::kNotFound;
  }
  return rep;
}

}  // namespace dgopt
