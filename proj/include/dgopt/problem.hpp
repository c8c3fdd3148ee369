#pragma once

#include <string>
#include <utility>
#include <vector>

#include "dgopt/projections.hpp"
#include "dgopt/types.hpp"

namespace dgopt {

// ---------------------------------------------------------------------------
// Convex set specification. A set is the intersection of a finite box (always
// present; every coordinate carries finite bounds so sets are compact by
// construction), optional affine parts A x <= b and C x = d, and optional
// second-order / rotated second-order / PSD cone slices over index subsets.
// ---------------------------------------------------------------------------

/// ||x[u_idx]|| <= x[s_idx], or the fixed-radius ball ||x[u_idx]|| <= radius
/// when s_idx < 0.
struct SocSlice {
  std::vector<int> u_idx;
  int s_idx = -1;
  double radius = 0.0;
  bool is_ball() const { return s_idx < 0; }
};

/// x[a_idx] * x[b_idx] >= ||x[u_idx]||², with x[a_idx] >= 0, x[b_idx] >= 0.
struct RotatedSocSlice {
  int a_idx = -1;
  int b_idx = -1;
  std::vector<int> u_idx;
};

enum class PsdEmbedding {
  kRealSymmetric,  // idx = row-major vec of an order x order symmetric matrix
  kHermitianPair,  // idx = row-major vec(Re W) then vec(Im W), W Hermitian
};

struct PsdSlice {
  std::vector<int> idx;
  int order = 0;
  PsdEmbedding embedding = PsdEmbedding::kRealSymmetric;
};

struct ConvexSetSpec {
  Index dim = 0;
  Vec lower, upper;  // finite box bounds, lower <= upper componentwise
  Mat a_ineq;        // A x <= b_ineq (may have zero rows)
  Vec b_ineq;
  Mat c_eq;  // C x = d_eq (may have zero rows)
  Vec d_eq;
  std::vector<SocSlice> soc_slices;
  std::vector<RotatedSocSlice> rotated_soc_slices;
  std::vector<PsdSlice> psd_slices;
  Vec witness;  // stored nonemptiness witness

  bool is_polyhedral() const {
    return soc_slices.empty() && rotated_soc_slices.empty() &&
           psd_slices.empty();
  }
  bool is_box_only() const {
    return is_polyhedral() && a_ineq.rows() == 0 && c_eq.rows() == 0;
  }

  static ConvexSetSpec box(Vec lo, Vec hi) {
    ConvexSetSpec s;
    s.dim = lo.size();
    s.lower = std::move(lo);
    s.upper = std::move(hi);
    s.a_ineq.resize(0, s.dim);
    s.b_ineq.resize(0);
    s.c_eq.resize(0, s.dim);
    s.d_eq.resize(0);
    s.witness = 0.5 * (s.lower + s.upper);
    return s;
  }

  /// Max violation across all parts; distances for cone slices are measured
  /// through their exact projections so the residual is comparable to the
  /// box/affine violations.
  double membership_residual(const Vec& x) const;

  /// Consistency checks: finite ordered bounds, dimension agreement across
  /// blocks and slices, and witness membership. Throws std::invalid_argument.
  void validate(double tol = 1e-6) const;
};

inline double ConvexSetSpec::membership_residual(const Vec& x) const {
  double r = 0.0;
  if (lower.size() > 0) {
    r = std::max(r, (lower - x).maxCoeff());
    r = std::max(r, (x - upper).maxCoeff());
  }
  if (a_ineq.rows() > 0) r = std::max(r, (a_ineq * x - b_ineq).maxCoeff());
  if (c_eq.rows() > 0) r = std::max(r, (c_eq * x - d_eq).cwiseAbs().maxCoeff());
  for (const auto& s : soc_slices) {
    Vec u(static_cast<Index>(s.u_idx.size()));
    for (Index i = 0; i < u.size(); ++i) u(i) = x(s.u_idx[i]);
    const double cap = s.is_ball() ? s.radius : x(s.s_idx);
    r = std::max(r, u.norm() - cap);
  }
  for (const auto& s : rotated_soc_slices) {
    Vec u(static_cast<Index>(s.u_idx.size()));
    for (Index i = 0; i < u.size(); ++i) u(i) = x(s.u_idx[i]);
    const auto p = project_rotated_soc(x(s.a_idx), x(s.b_idx), u);
    double d2 = sqr(p.a - x(s.a_idx)) + sqr(p.b - x(s.b_idx));
    d2 += (p.u - u).squaredNorm();
    r = std::max(r, std::sqrt(d2));
  }
  for (const auto& s : psd_slices) {
    const Index n = s.order;
    if (s.embedding == PsdEmbedding::kRealSymmetric) {
      Mat m(n, n);
      for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) m(i, j) = x(s.idx[i * n + j]);
      const Mat p = project_psd(m);
      r = std::max(r, (p - m).norm());
    } else {
      Mat re(n, n), im(n, n);
      for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) {
          re(i, j) = x(s.idx[i * n + j]);
          im(i, j) = x(s.idx[n * n + i * n + j]);
        }
      const auto [pre, pim] = project_hermitian_psd(re, im);
      r = std::max(r, std::sqrt((pre - re).squaredNorm() +
                                (pim - im).squaredNorm()));
    }
  }
  return std::max(r, 0.0);
}

inline void ConvexSetSpec::validate(double tol) const {
  auto fail = [](const std::string& msg) {
    throw std::invalid_argument("ConvexSetSpec: " + msg);
  };
  if (dim <= 0) fail("dimension must be positive");
  if (lower.size() != dim || upper.size() != dim)
    fail("box bounds must cover every coordinate");
  if (!lower.allFinite() || !upper.allFinite())
    fail("box bounds must be finite (compactness)");
  if ((upper - lower).minCoeff() < 0.0) fail("box lower > upper");
  if (a_ineq.rows() != b_ineq.size() || (a_ineq.rows() > 0 && a_ineq.cols() != dim))
    fail("inconsistent A/b block");
  if (c_eq.rows() != d_eq.size() || (c_eq.rows() > 0 && c_eq.cols() != dim))
    fail("inconsistent C/d block");
  auto check_idx = [&](int i) {
    if (i < 0 || i >= dim) fail("slice index out of range");
  };
  for (const auto& s : soc_slices) {
    for (int i : s.u_idx) check_idx(i);
    if (!s.is_ball()) check_idx(s.s_idx);
    if (s.is_ball() && s.radius < 0.0) fail("negative ball radius");
  }
  for (const auto& s : rotated_soc_slices) {
    check_idx(s.a_idx);
    check_idx(s.b_idx);
    for (int i : s.u_idx) check_idx(i);
  }
  for (const auto& s : psd_slices) {
    const std::size_t n = static_cast<std::size_t>(s.order);
    const std::size_t want =
        s.embedding == PsdEmbedding::kRealSymmetric ? n * n : 2 * n * n;
    if (s.idx.size() != want) fail("psd slice index count mismatch");
    for (int i : s.idx) check_idx(i);
  }
  if (witness.size() != dim) fail("missing nonemptiness witness");
  if (membership_residual(witness) > tol)
    fail("stored witness violates the set by " +
         std::to_string(membership_residual(witness)));
}

// ---------------------------------------------------------------------------
// Agents and the multi-agent program.
// ---------------------------------------------------------------------------

/// f(x) = 0.5 xᵀ Q x + cᵀ x + constant with Q symmetric PSD.
struct QuadraticObjective {
  Mat q;
  Vec c;
  double constant = 0.0;

  double value(const Vec& x) const {
    return 0.5 * x.dot(q * x) + c.dot(x) + constant;
  }
  Vec gradient(const Vec& x) const { return q * x + c; }
};

struct AgentSpec {
  ConvexSetSpec local_set;
  QuadraticObjective objective;
  Mat coupling_eq;  // g^E(x) = coupling_eq x + coupling_eq_offset
  Vec coupling_eq_offset;
  Mat coupling_ineq;  // g^I(x) = coupling_ineq x + coupling_ineq_offset
  Vec coupling_ineq_offset;
  std::vector<std::string> variable_names;

  Index dim() const { return local_set.dim; }

  Vec coupling_eq_value(const Vec& x) const {
    if (coupling_eq.rows() == 0) return coupling_eq_offset;
    return coupling_eq * x + coupling_eq_offset;
  }
  Vec coupling_ineq_value(const Vec& x) const {
    if (coupling_ineq.rows() == 0) return coupling_ineq_offset;
    return coupling_ineq * x + coupling_ineq_offset;
  }
  /// Stacked g(x) = (g^E(x); g^I(x)).
  Vec coupling_value(const Vec& x) const {
    Vec g(coupling_eq.rows() + coupling_ineq.rows());
    g.head(coupling_eq.rows()) = coupling_eq_value(x);
    g.tail(coupling_ineq.rows()) = coupling_ineq_value(x);
    return g;
  }

  void validate(Index m_eq, Index m_ineq, int agent_index,
                double psd_tol = 1e-10) const {
    local_set.validate();
    const Index n = dim();
    if (objective.q.rows() != n || objective.q.cols() != n)
      throw DimensionError("objective Q size", agent_index, n,
                           objective.q.rows());
    if (objective.c.size() != n)
      throw DimensionError("objective c size", agent_index, n,
                           objective.c.size());
    if ((objective.q - objective.q.transpose()).cwiseAbs().maxCoeff() >
        1e-10 * (1.0 + objective.q.cwiseAbs().maxCoeff()))
      throw std::invalid_argument("agent " + std::to_string(agent_index) +
                                  ": objective Q not symmetric");
    if (objective.q.rows() > 0 && min_eigenvalue(objective.q) < -psd_tol)
      throw std::invalid_argument("agent " + std::to_string(agent_index) +
                                  ": objective Q not PSD");
    if (coupling_eq.rows() != m_eq)
      throw DimensionError("coupling equality rows", agent_index, m_eq,
                           coupling_eq.rows());
    if (coupling_eq.rows() > 0 && coupling_eq.cols() != n)
      throw DimensionError("coupling equality cols", agent_index, n,
                           coupling_eq.cols());
    if (coupling_eq_offset.size() != m_eq)
      throw DimensionError("coupling equality offset", agent_index, m_eq,
                           coupling_eq_offset.size());
    if (coupling_ineq.rows() != m_ineq)
      throw DimensionError("coupling inequality rows", agent_index, m_ineq,
                           coupling_ineq.rows());
    if (coupling_ineq.rows() > 0 && coupling_ineq.cols() != n)
      throw DimensionError("coupling inequality cols", agent_index, n,
                           coupling_ineq.cols());
    if (coupling_ineq_offset.size() != m_ineq)
      throw DimensionError("coupling inequality offset", agent_index, m_ineq,
                           coupling_ineq_offset.size());
  }
};

struct ProblemInstance {
  std::vector<AgentSpec> agents;
  Index m_eq = 0;
  Index m_ineq = 0;
  std::string name;
  std::string provenance;

  int num_agents() const { return static_cast<int>(agents.size()); }

  Index total_dim() const {
    Index n = 0;
    for (const auto& a : agents) n += a.dim();
    return n;
  }

  void validate() const {
    if (agents.empty())
      throw std::invalid_argument("ProblemInstance: needs at least one agent");
    if (m_eq < 0 || m_ineq < 0)
      throw std::invalid_argument("ProblemInstance: negative coupling counts");
    for (int j = 0; j < num_agents(); ++j)
      agents[static_cast<std::size_t>(j)].validate(m_eq, m_ineq, j);
  }

  void check_point_dims(const std::vector<Vec>& xs) const {
    if (static_cast<int>(xs.size()) != num_agents())
      throw DimensionError("per-agent point count", -1, num_agents(),
                           static_cast<Index>(xs.size()));
    for (int j = 0; j < num_agents(); ++j) {
      const Index want = agents[static_cast<std::size_t>(j)].dim();
      if (xs[static_cast<std::size_t>(j)].size() != want)
        throw DimensionError("agent point size", j, want,
                             xs[static_cast<std::size_t>(j)].size());
    }
  }
};

/// Multiplier z in the dual cone Z = R^{m_eq} x R^{m_ineq}_+.
struct DualPoint {
  Vec z;
  Index m_eq = 0;

  Index m_ineq() const { return z.size() - m_eq; }
  Eigen::VectorBlock<const Vec> eq() const { return z.head(m_eq); }
  Eigen::VectorBlock<const Vec> ineq() const {
    return z.tail(z.size() - m_eq);
  }
  bool in_dual_cone(double tol = 0.0) const {
    return m_ineq() == 0 || ineq().minCoeff() >= -tol;
  }

  static DualPoint zero(Index m_eq, Index m_ineq) {
    return {Vec::Zero(m_eq + m_ineq), m_eq};
  }
};

/// pi_Z: leaves the first m_eq coordinates, clamps the rest at zero.
/// Idempotent and 1-Lipschitz.
inline Vec project_dual(const Vec& v, Index m_eq) {
  Vec out = v;
  if (out.size() > m_eq) {
    out.tail(out.size() - m_eq) = out.tail(out.size() - m_eq).cwiseMax(0.0);
  }
  return out;
}

inline DualPoint project_dual_point(const Vec& v, Index m_eq) {
  return {project_dual(v, m_eq), m_eq};
}

/// Per-agent Lagrangian terms L_j(x_j, z) = f_j(x_j) + zᵀ g_j(x_j); the dual
/// function separates agent-wise through these.
inline Vec lagrangian_terms(const ProblemInstance& p, const std::vector<Vec>& xs,
                            const DualPoint& z) {
  p.check_point_dims(xs);
  if (z.z.size() != p.m_eq + p.m_ineq)
    throw DimensionError("dual point size", -1, p.m_eq + p.m_ineq, z.z.size());
  Vec terms(p.num_agents());
  for (int j = 0; j < p.num_agents(); ++j) {
    const auto& a = p.agents[static_cast<std::size_t>(j)];
    const Vec& x = xs[static_cast<std::size_t>(j)];
    terms(j) = a.objective.value(x) + z.z.dot(a.coupling_value(x));
  }
  return terms;
}

inline double lagrangian_eval(const ProblemInstance& p,
                              const std::vector<Vec>& xs, const DualPoint& z) {
  return lagrangian_terms(p, xs, z).sum();
}

struct CouplingResidual {
  Vec eq;    // sum_j g_j^E(x_j)
  Vec ineq;  // sum_j g_j^I(x_j)

  /// ||pi_Z[sum g]||: equality block in full, inequality block clamped at 0.
  double violation_norm() const {
    double v = eq.squaredNorm();
    if (ineq.size() > 0) v += ineq.cwiseMax(0.0).squaredNorm();
    return std::sqrt(v);
  }
  bool feasible(double tol) const {
    const bool eq_ok = eq.size() == 0 || eq.cwiseAbs().maxCoeff() <= tol;
    const bool in_ok = ineq.size() == 0 || ineq.maxCoeff() <= tol;
    return eq_ok && in_ok;
  }
};

inline CouplingResidual coupling_residual(const ProblemInstance& p,
                                          const std::vector<Vec>& xs) {
  p.check_point_dims(xs);
  CouplingResidual r{Vec::Zero(p.m_eq), Vec::Zero(p.m_ineq)};
  for (int j = 0; j < p.num_agents(); ++j) {
    const auto& a = p.agents[static_cast<std::size_t>(j)];
    const Vec& x = xs[static_cast<std::size_t>(j)];
    r.eq += a.coupling_eq_value(x);
    r.ineq += a.coupling_ineq_value(x);
  }
  return r;
}

inline double objective_total(const ProblemInstance& p,
                              const std::vector<Vec>& xs) {
  p.check_point_dims(xs);
  double f = 0.0;
  for (int j = 0; j < p.num_agents(); ++j)
    f += p.agents[static_cast<std::size_t>(j)].objective.value(
        xs[static_cast<std::size_t>(j)]);
  return f;
}

/// Collapses all agents into one (block-diagonal sets and objectives,
/// horizontally concatenated coupling blocks). Used by the oracle
/// self-consistency check.
inline ProblemInstance merge_agents(const ProblemInstance& p) {
  const Index n = p.total_dim();
  AgentSpec merged;
  ConvexSetSpec& set = merged.local_set;
  set.dim = n;
  set.lower.resize(n);
  set.upper.resize(n);
  set.witness.resize(n);
  Index a_rows = 0, c_rows = 0;
  for (const auto& a : p.agents) {
    a_rows += a.local_set.a_ineq.rows();
    c_rows += a.local_set.c_eq.rows();
  }
  set.a_ineq = Mat::Zero(a_rows, n);
  set.b_ineq.resize(a_rows);
  set.c_eq = Mat::Zero(c_rows, n);
  set.d_eq.resize(c_rows);
  merged.objective.q = Mat::Zero(n, n);
  merged.objective.c.resize(n);
  merged.coupling_eq = Mat::Zero(p.m_eq, n);
  merged.coupling_eq_offset = Vec::Zero(p.m_eq);
  merged.coupling_ineq = Mat::Zero(p.m_ineq, n);
  merged.coupling_ineq_offset = Vec::Zero(p.m_ineq);

  Index off = 0, arow = 0, crow = 0;
  for (const auto& a : p.agents) {
    const Index d = a.dim();
    const auto& s = a.local_set;
    set.lower.segment(off, d) = s.lower;
    set.upper.segment(off, d) = s.upper;
    set.witness.segment(off, d) = s.witness;
    if (s.a_ineq.rows() > 0) {
      set.a_ineq.block(arow, off, s.a_ineq.rows(), d) = s.a_ineq;
      set.b_ineq.segment(arow, s.a_ineq.rows()) = s.b_ineq;
      arow += s.a_ineq.rows();
    }
    if (s.c_eq.rows() > 0) {
      set.c_eq.block(crow, off, s.c_eq.rows(), d) = s.c_eq;
      set.d_eq.segment(crow, s.c_eq.rows()) = s.d_eq;
      crow += s.c_eq.rows();
    }
    const int ioff = static_cast<int>(off);
    for (auto sl : s.soc_slices) {
      for (auto& i : sl.u_idx) i += ioff;
      if (!sl.is_ball()) sl.s_idx += ioff;
      set.soc_slices.push_back(sl);
    }
    for (auto sl : s.rotated_soc_slices) {
      sl.a_idx += ioff;
      sl.b_idx += ioff;
      for (auto& i : sl.u_idx) i += ioff;
      set.rotated_soc_slices.push_back(sl);
    }
    for (auto sl : s.psd_slices) {
      for (auto& i : sl.idx) i += ioff;
      set.psd_slices.push_back(sl);
    }
    merged.objective.q.block(off, off, d, d) = a.objective.q;
    merged.objective.c.segment(off, d) = a.objective.c;
    merged.objective.constant += a.objective.constant;
    if (p.m_eq > 0) {
      merged.coupling_eq.middleCols(off, d) = a.coupling_eq;
      merged.coupling_eq_offset += a.coupling_eq_offset;
    }
    if (p.m_ineq > 0) {
      merged.coupling_ineq.middleCols(off, d) = a.coupling_ineq;
      merged.coupling_ineq_offset += a.coupling_ineq_offset;
    }
    for (const auto& nm : a.variable_names) merged.variable_names.push_back(nm);
    off += d;
  }

  ProblemInstance out;
  out.agents.push_back(std::move(merged));
  out.m_eq = p.m_eq;
  out.m_ineq = p.m_ineq;
  out.name = p.name + "/merged";
  out.provenance = p.provenance;
  return out;
}

}  // namespace dgopt
