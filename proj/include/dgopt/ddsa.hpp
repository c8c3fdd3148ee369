#pragma once

#include <chrono>
#include <charconv>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "dgopt/graph.hpp"
#include "dgopt/local_solver.hpp"
#include "dgopt/problem.hpp"

namespace dgopt {

/// Final primal-dual state of a run, reusable as a warm restart for the
/// tracking protocol.
struct WarmState {
  std::vector<Vec> x_avg;
  std::vector<Vec> x_last_min;
  std::vector<Vec> z;
  std::vector<Vec> z_accum;
  std::vector<Vec> g_prev;
};

struct RunConfig {
  long long horizon = 1000;  // T
  double eta0 = 1.0;         // eta = eta0 / sqrt(T)
  std::optional<double> eta_override;  // fixed eta (tracking restarts)
  std::uint64_t seed = 0;
  long long record_every = 0;  // 0 = geometric stride, factor ~1.3
  int threads = 1;
  bool record_dual_metrics = true;
  std::optional<WarmState> warm_start;

  double eta() const {
    return eta_override ? *eta_override
                        : eta0 / std::sqrt(static_cast<double>(horizon));
  }
};

struct AgentState {
  Vec x_avg;       // x_j(t), running primal average
  Vec x_last_min;  // X_j(t), last subproblem minimizer
  Vec z;           // z_j(t), local dual iterate
  Vec z_accum;     // Z_j(t), local subgradient accumulator
  Vec g_prev;      // g_j(x_j(t-1))
  Vec z_accum_carry;  // compensated-summation carry for z_accum
};

struct TraceRow {
  long long t = 0;
  double objective = 0.0;
  double dual_value = 0.0;
  double eq_viol = 0.0;
  double ineq_viol = 0.0;
  double v_metric = 0.0;
  double z_dispersion = 0.0;
  double subsolver_tol_max = 0.0;
  double wall_ms = 0.0;
};

namespace detail {

inline std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

}  // namespace detail

struct IterateTrace {
  std::vector<TraceRow> rows;

  static constexpr const char* kHeader =
      "t,objective,dual_value,eq_viol,ineq_viol,v_metric,z_dispersion,"
      "subsolver_tol_max,wall_ms";

  std::string to_csv() const {
    std::string out = kHeader;
    out += '\n';
    for (const auto& r : rows) {
      out += std::to_string(r.t);
      for (double v : {r.objective, r.dual_value, r.eq_viol, r.ineq_viol,
                       r.v_metric, r.z_dispersion, r.subsolver_tol_max,
                       r.wall_ms}) {
        out += ',';
        out += detail::format_double(v);
      }
      out += '\n';
    }
    return out;
  }
};

struct RunResult {
  SolveStatus status = SolveStatus::kOptimal;
  int failed_agent = -1;
  long long failed_t = -1;
  IterateTrace trace;
  std::vector<AgentState> states;
  std::vector<Vec> x_final;  // x_j(T) (or the averaged point for classic runs)
  double objective = std::numeric_limits<double>::quiet_NaN();
  CouplingResidual residual;
  double eta = 0.0;
  // Aligned with trace.rows: ||Zbar(t) - Zbar(0) - (t/N) sum_j g_j(x_j(t))||_inf,
  // the exact-algebra consequence of the Z-update under doubly stochastic W.
  std::vector<double> centroid_deviation;

  WarmState warm_state() const {
    WarmState w;
    for (const auto& s : states) {
      w.x_avg.push_back(s.x_avg);
      w.x_last_min.push_back(s.x_last_min);
      w.z.push_back(s.z);
      w.z_accum.push_back(s.z_accum);
      w.g_prev.push_back(s.g_prev);
    }
    return w;
  }
};

struct MetricV {
  double value = 0.0;
  double primal = 0.0;   // sum_j f_j(x_j)
  double dual = 0.0;     // sum_j D_j(z_bar)
  double penalty = 0.0;  // (eta t / 2N) ||pi_Z[sum g]||^2
  Vec z_bar;
  bool dual_ok = true;
};

/// V_t metric: primal objective minus the dual function at the averaged
/// multiplier plus the scaled squared constraint violation. Each D_j is a
/// fresh cold subproblem solve at z_bar.
inline MetricV metric_v(const ProblemInstance& p, const std::vector<Vec>& xs,
                        const std::vector<Vec>& z_locals, double eta,
                        long long t, const SubsolverConfig& cfg = {}) {
  const int n = p.num_agents();
  if (static_cast<int>(z_locals.size()) != n)
    throw DimensionError("z_locals count", -1, n,
                         static_cast<Index>(z_locals.size()));
  MetricV out;
  out.z_bar = Vec::Zero(p.m_eq + p.m_ineq);
  for (const auto& z : z_locals) out.z_bar += z;
  out.z_bar /= static_cast<double>(n);
  const DualPoint zbar{project_dual(out.z_bar, p.m_eq), p.m_eq};

  out.primal = objective_total(p, xs);
  for (int j = 0; j < n; ++j) {
    SolveStatus st = SolveStatus::kOptimal;
    out.dual +=
        dual_function_term(p.agents[static_cast<std::size_t>(j)], zbar, cfg, &st);
    if (st != SolveStatus::kOptimal) out.dual_ok = false;
  }
  const CouplingResidual r = coupling_residual(p, xs);
  const double viol = r.violation_norm();
  out.penalty = eta * static_cast<double>(t) / (2.0 * n) * viol * viol;
  out.value = out.primal - out.dual + out.penalty;
  return out;
}

/// Update increment of step 5 for agent j: consensus mixing in difference
/// form (the diagonal weight is implied, never materialized) plus the scaled
/// subgradient difference.
inline Vec consensus_update_delta(const std::vector<Vec>& z_accum_old,
                                  const Mat& w, int j, long long t,
                                  const Vec& g_now_j, const Vec& g_prev_j) {
  const double td = static_cast<double>(t);
  Vec u = td * g_now_j - (td - 1.0) * g_prev_j;
  for (int k = 0; k < static_cast<int>(z_accum_old.size()); ++k) {
    if (k == j || w(j, k) == 0.0) continue;
    u += w(j, k) * (z_accum_old[static_cast<std::size_t>(k)] -
                    z_accum_old[static_cast<std::size_t>(j)]);
  }
  return u;
}

/// Full step 5 applied to explicit inputs; sum_j Z_j(t) depends only on the
/// subgradient terms, not on the (doubly stochastic) W.
inline std::vector<Vec> consensus_subgradient_step(
    const std::vector<Vec>& z_accum_old, const Mat& w, long long t,
    const std::vector<Vec>& g_now, const std::vector<Vec>& g_prev) {
  std::vector<Vec> out(z_accum_old.size());
  for (int j = 0; j < static_cast<int>(z_accum_old.size()); ++j) {
    out[static_cast<std::size_t>(j)] =
        z_accum_old[static_cast<std::size_t>(j)] +
        consensus_update_delta(z_accum_old, w, j, t,
                               g_now[static_cast<std::size_t>(j)],
                               g_prev[static_cast<std::size_t>(j)]);
  }
  return out;
}

namespace detail {

class RecordSchedule {
 public:
  RecordSchedule(long long stride, long long horizon)
      : stride_(stride), horizon_(horizon), next_(1) {}

  bool due(long long t) const {
    if (t == horizon_) return true;
    if (stride_ > 0) return t % stride_ == 0;
    return t >= next_;
  }

  void advance(long long t) {
    if (stride_ == 0 && t >= next_) {
      next_ = std::max(t + 1,
                       static_cast<long long>(std::ceil(1.3 * static_cast<double>(t))));
    }
  }

 private:
  long long stride_;
  long long horizon_;
  long long next_;
};

/// Compensated (Kahan) accumulation z += u elementwise; keeps the centroid
/// identity tight over 1e5+ iterations.
inline void kahan_add(Vec& acc, Vec& carry, const Vec& u) {
  for (Index i = 0; i < acc.size(); ++i) {
    const double y = u(i) - carry(i);
    const double t = acc(i) + y;
    carry(i) = (t - acc(i)) - y;
    acc(i) = t;
  }
}

inline double wall_ms_since(
    const std::chrono::steady_clock::time_point& start) {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now() - start)
      .count();
}

}  // namespace detail

/// Distributed dual subgradient with averaging (per-iteration order:
/// local minimization, primal averaging, consensus + subgradient update of
/// the accumulator, ergodic dual update with projection).
inline RunResult run_ddsa(const ProblemInstance& p, const WeightMatrix& w,
                          const RunConfig& cfg,
                          const SubsolverConfig& sub = {}) {
  const int n = p.num_agents();
  if (w.w.rows() != n)
    throw DimensionError("weight matrix size", -1, n, w.w.rows());
  const Index m = p.m_eq + p.m_ineq;
  const double eta = cfg.eta();
  const auto start = std::chrono::steady_clock::now();

  RunResult res;
  res.eta = eta;
  res.states.resize(static_cast<std::size_t>(n));
  std::vector<AgentSolveContext> ctx;
  ctx.reserve(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    const auto& agent = p.agents[static_cast<std::size_t>(j)];
    auto& s = res.states[static_cast<std::size_t>(j)];
    if (cfg.warm_start) {
      const auto& ws = *cfg.warm_start;
      s.x_avg = ws.x_avg[static_cast<std::size_t>(j)];
      s.x_last_min = ws.x_last_min[static_cast<std::size_t>(j)];
      s.z = ws.z[static_cast<std::size_t>(j)];
      s.z_accum = ws.z_accum[static_cast<std::size_t>(j)];
      s.g_prev = agent.coupling_value(s.x_avg);
    } else {
      // Flat start: z_j(1) = 0, Z_j(0) = 0, x_j(0) = stored set witness. The
      // witness choice is inert in step 5 (the t-1 factor vanishes at t = 1)
      // but seeds the running average.
      s.x_avg = agent.local_set.witness;
      s.x_last_min = s.x_avg;
      s.z = Vec::Zero(m);
      s.z_accum = Vec::Zero(m);
      s.g_prev = agent.coupling_value(s.x_avg);
    }
    s.z_accum_carry = Vec::Zero(m);
    auto c = AgentSolveContext::make(agent);
    c.warm = s.x_last_min;
    ctx.push_back(std::move(c));
  }

  Vec z_accum_init_mean = Vec::Zero(m);
  for (const auto& s : res.states) z_accum_init_mean += s.z_accum;
  z_accum_init_mean /= static_cast<double>(n);

  detail::RecordSchedule sched(cfg.record_every, cfg.horizon);
  std::vector<Vec> z_accum_old(static_cast<std::size_t>(n));
  std::vector<Vec> g_now(static_cast<std::size_t>(n));
  std::vector<LocalSolveResult> solves(static_cast<std::size_t>(n));
  std::vector<Vec> z_used(static_cast<std::size_t>(n));

  for (long long t = 1; t <= cfg.horizon; ++t) {
    const double td = static_cast<double>(t);
    for (int j = 0; j < n; ++j)
      z_used[static_cast<std::size_t>(j)] = res.states[static_cast<std::size_t>(j)].z;

    // Step 3: X_j(t) = argmin L_j(., z_j(t)); independent across agents.
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(std::max(cfg.threads, 1)) \
    if (cfg.threads > 1 && n > 1)
#endif
    for (int j = 0; j < n; ++j) {
      const auto& agent = p.agents[static_cast<std::size_t>(j)];
      const DualPoint zj{z_used[static_cast<std::size_t>(j)], p.m_eq};
      solves[static_cast<std::size_t>(j)] = minimize_local_lagrangian(
          agent, zj, sub, &ctx[static_cast<std::size_t>(j)]);
    }
    for (int j = 0; j < n; ++j) {
      const auto st = solves[static_cast<std::size_t>(j)].status;
      if (st != SolveStatus::kOptimal) {
        res.status = st;
        res.failed_agent = j;
        res.failed_t = t;
        break;
      }
    }
    if (res.failed_agent >= 0) break;

    double tol_max = 0.0;
    for (int j = 0; j < n; ++j) {
      auto& s = res.states[static_cast<std::size_t>(j)];
      const auto& sol = solves[static_cast<std::size_t>(j)];
      tol_max = std::max(tol_max, sol.optimality);
      s.x_last_min = sol.x;
      // Step 4: x_j(t) = ((t-1) x_j(t-1) + X_j(t)) / t.
      s.x_avg = ((td - 1.0) * s.x_avg + sol.x) / td;
      g_now[static_cast<std::size_t>(j)] =
          p.agents[static_cast<std::size_t>(j)].coupling_value(s.x_avg);
      z_accum_old[static_cast<std::size_t>(j)] = s.z_accum;
    }

    // Step 5: Z_j(t) = sum_k W_jk Z_k(t-1) + t g_j(x_j(t)) - (t-1) g_j(x_j(t-1)).
    // Difference-form mixing plus compensated accumulation keep the centroid
    // identity tight over long horizons.
    for (int j = 0; j < n; ++j) {
      auto& s = res.states[static_cast<std::size_t>(j)];
      const Vec update = consensus_update_delta(
          z_accum_old, w.w, j, t, g_now[static_cast<std::size_t>(j)], s.g_prev);
      detail::kahan_add(s.z_accum, s.z_accum_carry, update);
      s.g_prev = g_now[static_cast<std::size_t>(j)];
    }

    // Step 6: z_j(t+1) = (t z_j(t) + pi_Z[eta Z_j(t)]) / (t+1); convex
    // combination of dual-cone members, so z stays in Z exactly.
    for (int j = 0; j < n; ++j) {
      auto& s = res.states[static_cast<std::size_t>(j)];
      s.z = (td * s.z + project_dual(eta * s.z_accum, p.m_eq)) / (td + 1.0);
    }

    if (sched.due(t)) {
      sched.advance(t);
      TraceRow row;
      row.t = t;
      std::vector<Vec> xs;
      xs.reserve(static_cast<std::size_t>(n));
      for (const auto& s : res.states) xs.push_back(s.x_avg);
      row.objective = objective_total(p, xs);
      const CouplingResidual r = coupling_residual(p, xs);
      row.eq_viol = r.eq.norm();
      row.ineq_viol = r.ineq.size() > 0 ? r.ineq.cwiseMax(0.0).norm() : 0.0;
      Vec z_accum_bar = Vec::Zero(m);
      for (const auto& s : res.states) z_accum_bar += s.z_accum;
      z_accum_bar /= static_cast<double>(n);
      double disp = 0.0;
      for (const auto& s : res.states) disp += (s.z_accum - z_accum_bar).norm();
      row.z_dispersion = disp;
      Vec g_sum = Vec::Zero(m);
      for (const auto& g : g_now) g_sum += g;
      res.centroid_deviation.push_back(
          m == 0 ? 0.0
                 : (z_accum_bar - z_accum_init_mean -
                    (td / static_cast<double>(n)) * g_sum)
                       .cwiseAbs()
                       .maxCoeff());
      row.subsolver_tol_max = tol_max;
      if (cfg.record_dual_metrics) {
        const MetricV mv = metric_v(p, xs, z_used, eta, t, sub);
        row.dual_value = mv.dual_ok
                             ? mv.dual
                             : std::numeric_limits<double>::quiet_NaN();
        row.v_metric = mv.dual_ok
                           ? mv.value
                           : std::numeric_limits<double>::quiet_NaN();
      } else {
        row.dual_value = std::numeric_limits<double>::quiet_NaN();
        row.v_metric = std::numeric_limits<double>::quiet_NaN();
      }
      row.wall_ms = detail::wall_ms_since(start);
      res.trace.rows.push_back(row);
    }
  }

  res.x_final.clear();
  for (const auto& s : res.states) res.x_final.push_back(s.x_avg);
  if (res.failed_agent < 0) {
    res.objective = objective_total(p, res.x_final);
    res.residual = coupling_residual(p, res.x_final);
  }
  return res;
}

/// Classical distributed dual subgradient (Algorithm 2): plain local
/// minimization followed by projected consensus on the dual copies. With
/// primal averaging the trace reports metrics at the running average.
inline RunResult run_classic(const ProblemInstance& p, const WeightMatrix& w,
                             const RunConfig& cfg, bool primal_averaging,
                             const SubsolverConfig& sub = {}) {
  const int n = p.num_agents();
  if (w.w.rows() != n)
    throw DimensionError("weight matrix size", -1, n, w.w.rows());
  const Index m = p.m_eq + p.m_ineq;
  const double eta = cfg.eta();
  const auto start = std::chrono::steady_clock::now();

  RunResult res;
  res.eta = eta;
  res.states.resize(static_cast<std::size_t>(n));
  std::vector<AgentSolveContext> ctx;
  for (int j = 0; j < n; ++j) {
    const auto& agent = p.agents[static_cast<std::size_t>(j)];
    auto& s = res.states[static_cast<std::size_t>(j)];
    s.x_avg = agent.local_set.witness;  // running average x_hat when enabled
    s.x_last_min = s.x_avg;
    s.z = cfg.warm_start ? cfg.warm_start->z[static_cast<std::size_t>(j)]
                         : Vec::Zero(m);
    s.z_accum = Vec::Zero(m);
    s.g_prev = Vec::Zero(m);
    s.z_accum_carry = Vec::Zero(m);
    auto c = AgentSolveContext::make(agent);
    c.warm = s.x_last_min;
    ctx.push_back(std::move(c));
  }

  detail::RecordSchedule sched(cfg.record_every, cfg.horizon);
  std::vector<LocalSolveResult> solves(static_cast<std::size_t>(n));
  std::vector<Vec> z_used(static_cast<std::size_t>(n));
  std::vector<Vec> mixed(static_cast<std::size_t>(n));

  for (long long t = 1; t <= cfg.horizon; ++t) {
    const double td = static_cast<double>(t);
    for (int j = 0; j < n; ++j)
      z_used[static_cast<std::size_t>(j)] = res.states[static_cast<std::size_t>(j)].z;

#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(std::max(cfg.threads, 1)) \
    if (cfg.threads > 1 && n > 1)
#endif
    for (int j = 0; j < n; ++j) {
      const auto& agent = p.agents[static_cast<std::size_t>(j)];
      const DualPoint zj{z_used[static_cast<std::size_t>(j)], p.m_eq};
      solves[static_cast<std::size_t>(j)] = minimize_local_lagrangian(
          agent, zj, sub, &ctx[static_cast<std::size_t>(j)]);
    }
    for (int j = 0; j < n; ++j) {
      if (solves[static_cast<std::size_t>(j)].status != SolveStatus::kOptimal) {
        res.status = solves[static_cast<std::size_t>(j)].status;
        res.failed_agent = j;
        res.failed_t = t;
        break;
      }
    }
    if (res.failed_agent >= 0) break;

    double tol_max = 0.0;
    for (int j = 0; j < n; ++j) {
      auto& s = res.states[static_cast<std::size_t>(j)];
      const auto& sol = solves[static_cast<std::size_t>(j)];
      tol_max = std::max(tol_max, sol.optimality);
      s.x_last_min = sol.x;
      s.x_avg = ((td - 1.0) * s.x_avg + sol.x) / td;  // x_hat_j(t)
    }

    // z_j(t+1) = sum_k W_jk pi_Z[z_k(t) + eta g_k(x_k(t))].
    for (int j = 0; j < n; ++j) {
      const auto& agent = p.agents[static_cast<std::size_t>(j)];
      mixed[static_cast<std::size_t>(j)] = project_dual(
          z_used[static_cast<std::size_t>(j)] +
              eta * agent.coupling_value(
                        res.states[static_cast<std::size_t>(j)].x_last_min),
          p.m_eq);
    }
    for (int j = 0; j < n; ++j) {
      Vec znew = Vec::Zero(m);
      for (int k = 0; k < n; ++k) {
        if (w.w(j, k) == 0.0) continue;
        znew += w.w(j, k) * mixed[static_cast<std::size_t>(k)];
      }
      res.states[static_cast<std::size_t>(j)].z = znew;
    }

    if (sched.due(t)) {
      sched.advance(t);
      TraceRow row;
      row.t = t;
      std::vector<Vec> xs;
      for (const auto& s : res.states)
        xs.push_back(primal_averaging ? s.x_avg : s.x_last_min);
      row.objective = objective_total(p, xs);
      const CouplingResidual r = coupling_residual(p, xs);
      row.eq_viol = r.eq.norm();
      row.ineq_viol = r.ineq.size() > 0 ? r.ineq.cwiseMax(0.0).norm() : 0.0;
      Vec z_bar = Vec::Zero(m);
      for (const auto& zj : z_used) z_bar += zj;
      z_bar /= static_cast<double>(n);
      double disp = 0.0;
      for (const auto& zj : z_used) disp += (zj - z_bar).norm();
      row.z_dispersion = disp;
      row.subsolver_tol_max = tol_max;
      res.centroid_deviation.push_back(0.0);
      if (cfg.record_dual_metrics) {
        const MetricV mv = metric_v(p, xs, z_used, eta, t, sub);
        row.dual_value = mv.dual_ok
                             ? mv.dual
                             : std::numeric_limits<double>::quiet_NaN();
        row.v_metric = mv.dual_ok
                           ? mv.value
                           : std::numeric_limits<double>::quiet_NaN();
      } else {
        row.dual_value = std::numeric_limits<double>::quiet_NaN();
        row.v_metric = std::numeric_limits<double>::quiet_NaN();
      }
      row.wall_ms = detail::wall_ms_since(start);
      res.trace.rows.push_back(row);
    }
  }

  res.x_final.clear();
  for (const auto& s : res.states)
    res.x_final.push_back(primal_averaging ? s.x_avg : s.x_last_min);
  if (res.failed_agent < 0) {
    res.objective = objective_total(p, res.x_final);
    res.residual = coupling_residual(p, res.x_final);
  }
  return res;
}

// ---------------------------------------------------------------------------
// Rate diagnostics.
// ---------------------------------------------------------------------------

struct RatePoint {
  double horizon = 0.0;
  double v_value = 0.0;
  double violation = 0.0;
};

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double viol_slope = 0.0;
  double viol_intercept = 0.0;
  int points = 0;
  bool flagged_nonpositive = false;
};

/// Least-squares slope of log V_T against log T over fresh runs at distinct
/// horizons. The theory predicts slope near -1/2 for V_T and a worst-case
/// -1/4 for the violation norm.
inline RateFit rate_fit(const std::vector<RatePoint>& pts) {
  if (pts.size() < 4)
    throw std::invalid_argument("rate_fit: needs at least 4 horizons");
  RateFit out;
  out.points = static_cast<int>(pts.size());
  auto fit = [&](auto value_of, double& slope, double& intercept) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& p : pts) {
      double v = value_of(p);
      if (v <= 0.0) {
        v = 1e-16;
        out.flagged_nonpositive = true;
      }
      const double x = std::log(p.horizon);
      const double y = std::log(v);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    const double nn = static_cast<double>(pts.size());
    slope = (nn * sxy - sx * sy) / (nn * sxx - sx * sx);
    intercept = (sy - slope * sx) / nn;
  };
  fit([](const RatePoint& p) { return p.v_value; }, out.slope, out.intercept);
  fit([](const RatePoint& p) { return p.violation; }, out.viol_slope,
      out.viol_intercept);
  return out;
}

/// Total variation of the recorded objective series; diagnostic for the
/// "flutter" contrast between the two algorithms.
inline double total_variation(const IterateTrace& trace) {
  double tv = 0.0;
  for (std::size_t i = 1; i < trace.rows.size(); ++i)
    tv += std::abs(trace.rows[i].objective - trace.rows[i - 1].objective);
  return tv;
}

// ---------------------------------------------------------------------------
// Constants from the convergence analysis, as runtime diagnostics.
// ---------------------------------------------------------------------------

struct BoundDiagnostics {
  double d_x = 0.0;     // max set diameter (box diameter, exact)
  double d_g = 0.0;     // max ||g_j|| over sampled points (lower bound)
  double l_g = 0.0;     // max operator norm of stacked coupling maps (exact)
  double d_z = 0.0;     // L_g D_X + D_g
  double sigma2 = 0.0;
  bool d_g_is_lower_bound = true;
};

inline BoundDiagnostics bound_diagnostics(const ProblemInstance& p,
                                          const WeightMatrix& w, int samples,
                                          std::uint64_t seed = 0) {
  if (samples < 1) throw std::invalid_argument("bound_diagnostics: samples >= 1");
  BoundDiagnostics out;
  out.sigma2 = w.sigma2;
  CounterRng rng(seed, 0xB0D1A6ULL);
  for (int j = 0; j < p.num_agents(); ++j) {
    const auto& agent = p.agents[static_cast<std::size_t>(j)];
    const auto& set = agent.local_set;
    out.d_x = std::max(out.d_x, (set.upper - set.lower).norm());
    Mat stacked(p.m_eq + p.m_ineq, agent.dim());
    if (p.m_eq > 0) stacked.topRows(p.m_eq) = agent.coupling_eq;
    if (p.m_ineq > 0) stacked.bottomRows(p.m_ineq) = agent.coupling_ineq;
    out.l_g = std::max(out.l_g, operator_2norm(stacked));

    auto targets = make_targets(set);
    auto eval = [&](const Vec& x) { return agent.coupling_value(x).norm(); };
    auto consider = [&](Vec x) {
      x = project_onto_set(set, std::move(x), targets).point;
      double best = eval(x);
      // Projected-ascent polish of the convex map norm; a flagged lower
      // bound, not a certificate.
      for (int step = 0; step < 8; ++step) {
        const Vec g = agent.coupling_value(x);
        Vec dir = Vec::Zero(agent.dim());
        if (p.m_eq > 0)
          dir += agent.coupling_eq.transpose() * g.head(p.m_eq);
        if (p.m_ineq > 0)
          dir += agent.coupling_ineq.transpose() * g.tail(p.m_ineq);
        const double dn = dir.norm();
        if (dn < 1e-14) break;
        const double tau =
            (set.upper - set.lower).norm() / std::pow(2.0, step);
        Vec cand = project_onto_set(set, x + (tau / dn) * dir, targets).point;
        const double v = eval(cand);
        if (v > best) {
          best = v;
          x = std::move(cand);
        }
      }
      out.d_g = std::max(out.d_g, best);
    };
    consider(set.witness);
    for (int s = 0; s < samples; ++s) {
      Vec corner(agent.dim());
      Vec interior(agent.dim());
      for (Index i = 0; i < agent.dim(); ++i) {
        corner(i) = rng.next_u64() & 1 ? set.upper(i) : set.lower(i);
        interior(i) = rng.uniform(set.lower(i), set.upper(i));
      }
      consider(std::move(corner));
      consider(std::move(interior));
    }
  }
  out.d_z = out.l_g * out.d_x + out.d_g;
  return out;
}

}  // namespace dgopt
