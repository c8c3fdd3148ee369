#pragma once

#include <optional>

#include "dgopt/dykstra.hpp"
#include "dgopt/problem.hpp"
#include "dgopt/qp.hpp"

namespace dgopt {

enum class StepRule { kFixed, kBacktracking };

struct SubsolverConfig {
  int max_iters = 20000;          // accelerated projected gradient iterations
  StepRule step_rule = StepRule::kFixed;
  double tolerance = 1e-6;        // projected-gradient norm target
  double qp_tolerance = 1e-8;     // interior-point KKT tolerance
  DykstraOptions dykstra{1e-10, 5000};
};

struct LocalSolveResult {
  SolveStatus status = SolveStatus::kNumericalError;
  Vec x;
  double optimality = 0.0;  // projected-gradient norm or KKT stationarity
  double dykstra_change = 0.0;
  int iterations = 0;
};

/// Per-agent scratch reused across calls: projection targets, the gradient
/// Lipschitz constant, and the warm-start point (previous minimizer).
struct AgentSolveContext {
  std::vector<ProjectionTarget> targets;
  double lipschitz = 0.0;
  std::optional<Vec> warm;

  static AgentSolveContext make(const AgentSpec& agent) {
    AgentSolveContext ctx;
    ctx.targets = make_targets(agent.local_set);
    ctx.lipschitz = agent.objective.q.rows() > 0 &&
                            agent.objective.q.cwiseAbs().maxCoeff() > 0.0
                        ? operator_2norm(agent.objective.q)
                        : 0.0;
    return ctx;
  }
};

namespace detail {

/// FISTA with function-value restart over the set intersection. Projection is
/// exact (Dykstra), so the iteration is plain accelerated projected gradient.
inline LocalSolveResult apg_minimize(const AgentSpec& agent, const Mat& q,
                                     const Vec& c, const SubsolverConfig& cfg,
                                     AgentSolveContext& ctx) {
  const ConvexSetSpec& set = agent.local_set;
  const double cscale = 1.0 + c.cwiseAbs().maxCoeff();
  double lip = std::max(ctx.lipschitz, 1e-6 * cscale);

  LocalSolveResult res;
  Vec x = ctx.warm ? *ctx.warm : set.witness;
  {
    auto pr = project_onto_set(set, x, ctx.targets, cfg.dykstra);
    x = std::move(pr.point);
    res.dykstra_change = pr.change;
  }
  auto value = [&](const Vec& v) { return 0.5 * v.dot(q * v) + c.dot(v); };

  Vec y = x;
  double fx = value(x);
  double tk = 1.0;
  for (int it = 1; it <= cfg.max_iters; ++it) {
    res.iterations = it;
    const Vec grad = q * y + c;
    Vec cand = y - grad / lip;
    auto pr = project_onto_set(set, std::move(cand), ctx.targets, cfg.dykstra);
    Vec x_new = std::move(pr.point);
    res.dykstra_change = std::max(res.dykstra_change, pr.change);

    if (cfg.step_rule == StepRule::kBacktracking) {
      double fnew = value(x_new);
      int guard = 0;
      while (fnew > value(y) + grad.dot(x_new - y) +
                        0.5 * lip * (x_new - y).squaredNorm() + 1e-14 &&
             guard++ < 60) {
        lip *= 2.0;
        Vec c2 = y - grad / lip;
        auto pr2 = project_onto_set(set, std::move(c2), ctx.targets, cfg.dykstra);
        x_new = std::move(pr2.point);
        fnew = value(x_new);
      }
    }

    // Gradient map at y comes free from the quantities at hand.
    const double pg_norm = lip * (y - x_new).cwiseAbs().maxCoeff();
    const double fnew = value(x_new);

    if (pg_norm <= cfg.tolerance * cscale) {
      res.x = std::move(x_new);
      res.status = SolveStatus::kOptimal;
      res.optimality = pg_norm;
      ctx.warm = res.x;
      return res;
    }

    if (fnew > fx) {  // momentum restart; the plain step from x descends
      tk = 1.0;
      y = x;
      res.optimality = pg_norm;
      continue;
    }
    const double tnext = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * tk * tk));
    y = x_new + ((tk - 1.0) / tnext) * (x_new - x);
    x = std::move(x_new);
    fx = fnew;
    tk = tnext;
    res.optimality = pg_norm;
  }
  res.x = x;
  res.status = SolveStatus::kMaxIterations;
  ctx.warm = res.x;
  return res;
}

}  // namespace detail

/// Minimizer of the agent Lagrangian L_j(., z) = f_j(.) + zᵀ g_j(.) over the
/// local set. Pure polyhedral sets go to the interior-point solver (exact);
/// sets with cone slices go to accelerated projected gradient with Dykstra
/// projections. g_j evaluated at the returned point is a dual subgradient up
/// to the reported optimality measure.
inline LocalSolveResult minimize_local_lagrangian(
    const AgentSpec& agent, const DualPoint& z, const SubsolverConfig& cfg = {},
    AgentSolveContext* ctx = nullptr) {
  if (!z.in_dual_cone(1e-12))
    throw std::invalid_argument(
        "minimize_local_lagrangian: z outside the dual cone");
  Vec c_eff = agent.objective.c;
  if (agent.coupling_eq.rows() > 0)
    c_eff += agent.coupling_eq.transpose() * z.eq();
  if (agent.coupling_ineq.rows() > 0)
    c_eff += agent.coupling_ineq.transpose() * z.ineq();

  if (agent.local_set.is_polyhedral()) {
    const auto& s = agent.local_set;
    QpOptions qopt;
    qopt.tolerance = cfg.qp_tolerance;
    const QpResult qr = solve_qp_polytope(agent.objective.q, c_eff, s.a_ineq,
                                          s.b_ineq, s.c_eq, s.d_eq, s.lower,
                                          s.upper, qopt);
    LocalSolveResult res;
    res.status = qr.status;
    res.x = qr.x;
    res.optimality = qr.stationarity + qr.mu;
    res.iterations = qr.iterations;
    return res;
  }

  AgentSolveContext local_ctx;
  if (ctx == nullptr) {
    local_ctx = AgentSolveContext::make(agent);
    ctx = &local_ctx;
  }
  return detail::apg_minimize(agent, agent.objective.q, c_eff, cfg, *ctx);
}

/// Lagrangian value L_j(x, z) for a single agent.
inline double agent_lagrangian_value(const AgentSpec& agent, const Vec& x,
                                     const DualPoint& z) {
  return agent.objective.value(x) + z.z.dot(agent.coupling_value(x));
}

/// Dual function term D_j(z) = min over the local set of L_j(., z),
/// evaluated with a cold start so results do not depend on call history.
inline double dual_function_term(const AgentSpec& agent, const DualPoint& z,
                                 const SubsolverConfig& cfg,
                                 SolveStatus* status = nullptr) {
  LocalSolveResult r = minimize_local_lagrangian(agent, z, cfg, nullptr);
  if (status != nullptr) *status = r.status;
  return agent_lagrangian_value(agent, r.x, z);
}

}  // namespace dgopt
