#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "dgopt/dykstra.hpp"
#include "dgopt/matpower.hpp"
#include "dgopt/problem.hpp"
#include "dgopt/qp.hpp"

namespace dgopt {

// ---------------------------------------------------------------------------
// Radial feeder model in branch-flow variables: squared voltages w, directed
// line flows (P, Q), squared currents l, and DER injections (p^G, q^G).
// Bus 0 is the root / interface to the upstream grid.
// ---------------------------------------------------------------------------

struct FeederLine {
  int from = 0, to = 0;   // 0-indexed, directed away from the root
  double r = 0.0, x = 0.0;
  double flow_cap = 0.0;     // |P|, |Q| box, p.u.
  double current_cap = 0.0;  // l upper bound, p.u.
};

/// DER capability: a (p, q) box or an apparent-power disc p² + q² <= s².
struct DerCapability {
  bool is_disc = false;
  double pmin = 0.0, pmax = 0.0;
  double qmin = 0.0, qmax = 0.0;
  double s_cap = 0.0;
};

struct FeederBus {
  double pd = 0.0, qd = 0.0;  // p.u.
  double wmin = 0.81, wmax = 1.21;
  DerCapability der;  // zero box when no dispatchable asset
  double alpha_p = 0.0, beta_p = 0.0, alpha_q = 0.0;  // cost coefficients
};

struct FeederModel {
  std::string name;
  std::vector<FeederBus> buses;   // index 0 = root
  std::vector<FeederLine> lines;  // tree, directed away from the root

  int n_buses() const { return static_cast<int>(buses.size()); }

  std::vector<std::vector<int>> out_lines() const {
    std::vector<std::vector<int>> out(buses.size());
    for (std::size_t e = 0; e < lines.size(); ++e)
      out[static_cast<std::size_t>(lines[e].from)].push_back(
          static_cast<int>(e));
    return out;
  }
  std::vector<std::vector<int>> in_lines() const {
    std::vector<std::vector<int>> in(buses.size());
    for (std::size_t e = 0; e < lines.size(); ++e)
      in[static_cast<std::size_t>(lines[e].to)].push_back(static_cast<int>(e));
    return in;
  }

  void validate() const {
    const int n = n_buses();
    if (n < 1) throw std::invalid_argument("feeder " + name + ": empty");
    if (static_cast<int>(lines.size()) != n - 1)
      throw std::invalid_argument("feeder " + name + ": not a tree");
    std::set<int> reached = {0};
    std::vector<FeederLine> pending(lines.begin(), lines.end());
    bool progress = true;
    while (!pending.empty() && progress) {
      progress = false;
      for (auto it = pending.begin(); it != pending.end();) {
        if (reached.count(it->from) > 0) {
          if (reached.count(it->to) > 0)
            throw std::invalid_argument("feeder " + name + ": cycle at bus " +
                                        std::to_string(it->to));
          reached.insert(it->to);
          it = pending.erase(it);
          progress = true;
        } else {
          ++it;
        }
      }
    }
    if (!pending.empty())
      throw std::invalid_argument("feeder " + name +
                                  ": lines not rooted at bus 0");
    for (const auto& l : lines)
      if (l.r < 0.0)
        throw std::invalid_argument("feeder " + name + ": negative resistance");
    for (const auto& b : buses)
      if (b.wmin > b.wmax)
        throw std::invalid_argument("feeder " + name + ": empty voltage box");
  }
};

struct FeederOptions {
  double default_current_cap = 4.0;  // p.u. squared current
  double default_flow_cap = 2.0;     // p.u.
  double root_wmin = 0.81, root_wmax = 1.21;
};

/// Builds a FeederModel from a radial case file; gencost rows ng..2ng-1 hold
/// reactive cost coefficients when present. Bus 1 of the case is the root.
inline FeederModel feeder_from_case(const CaseData& c,
                                    const FeederOptions& opt = {}) {
  FeederModel f;
  f.name = c.name;
  const double base = c.base_mva;
  f.buses.resize(c.buses.size());
  for (std::size_t i = 0; i < c.buses.size(); ++i) {
    const auto& b = c.buses[i];
    FeederBus& fb = f.buses[i];
    fb.pd = b.pd / base;
    fb.qd = b.qd / base;
    fb.wmin = b.vmin * b.vmin;
    fb.wmax = b.vmax * b.vmax;
  }
  const std::size_t ng = c.gens.size();
  for (std::size_t g = 0; g < ng; ++g) {
    const auto& gen = c.gens[g];
    FeederBus& fb = f.buses[static_cast<std::size_t>(c.bus_index(gen.bus))];
    fb.der.pmin = gen.pmin / base;
    fb.der.pmax = gen.pmax / base;
    fb.der.qmin = gen.qmin / base;
    fb.der.qmax = gen.qmax / base;
    auto poly = [&](std::size_t row, double& quad, double& lin) {
      if (row >= c.gencosts.size()) return;
      const auto& gc = c.gencosts[row];
      const auto k = static_cast<std::size_t>(gc.ncost);
      if (k >= 3 && gc.coeffs.size() >= 3) {
        quad = gc.coeffs[k - 3] * base * base;
        lin = gc.coeffs[k - 2] * base;
      } else if (k == 2 && gc.coeffs.size() >= 2) {
        lin = gc.coeffs[k - 2] * base;
      }
    };
    double aq = 0.0, bq_unused = 0.0;
    poly(g, fb.alpha_p, fb.beta_p);
    poly(ng + g, aq, bq_unused);
    fb.alpha_q = aq;
  }
  for (const auto& br : c.branches) {
    FeederLine l;
    l.from = c.bus_index(br.from);
    l.to = c.bus_index(br.to);
    l.r = br.r;
    l.x = br.x;
    l.flow_cap = br.rate_a > 0.0 ? br.rate_a / base : opt.default_flow_cap;
    l.current_cap = opt.default_current_cap;
    f.lines.push_back(l);
  }
  f.validate();
  return f;
}

// ---------------------------------------------------------------------------
// LinDistFlow matrices.
// ---------------------------------------------------------------------------

struct LinDistFlowMatrices {
  Mat rho;                 // 2 M^{-T} diag(r) M^{-1}
  Mat chi;                 // 2 M^{-T} diag(x) M^{-1}
  Mat reduced_incidence;   // M: root row removed, +1 tail, -1 head
};

/// Builds the reduced incidence matrix (root row dropped) and the voltage
/// sensitivity matrices of the linearized distribution flow model.
inline LinDistFlowMatrices lindistflow_matrices(const FeederModel& f) {
  f.validate();
  const int n = f.n_buses() - 1;  // non-root buses = edges in a tree
  Mat m = Mat::Zero(n, n);
  Vec r(n), x(n);
  for (int e = 0; e < n; ++e) {
    const auto& l = f.lines[static_cast<std::size_t>(e)];
    if (l.from != 0) m(l.from - 1, e) = 1.0;  // root row removed
    m(l.to - 1, e) = -1.0;
    r(e) = l.r;
    x(e) = l.x;
  }
  LinDistFlowMatrices out;
  out.reduced_incidence = m;
  const Mat minv = m.inverse();
  out.rho = 2.0 * minv.transpose() * r.asDiagonal() * minv;
  out.chi = 2.0 * minv.transpose() * x.asDiagonal() * minv;
  out.rho = 0.5 * (out.rho + out.rho.transpose()).eval();
  out.chi = 0.5 * (out.chi + out.chi.transpose()).eval();
  return out;
}

// ---------------------------------------------------------------------------
// DER coordination program (branch-flow SOCP relaxation).
// ---------------------------------------------------------------------------

/// Bus grouping: cells must be connected subtrees covering every bus.
using Grouping = std::vector<std::vector<int>>;

inline Grouping singleton_grouping(const FeederModel& f) {
  Grouping g;
  for (int i = 0; i < f.n_buses(); ++i) g.push_back({i});
  return g;
}

inline Grouping whole_feeder_grouping(const FeederModel& f) {
  Grouping g(1);
  for (int i = 0; i < f.n_buses(); ++i) g[0].push_back(i);
  return g;
}

namespace grid_detail {

struct FeederLayout {
  // Per cell: variable offsets of each owned bus and line.
  std::vector<int> cell_of_bus;
  std::vector<int> cell_of_line;  // owned by the tail bus's cell
  std::vector<int> agent_dim;
  // Variable index of each quantity inside its agent vector.
  std::vector<int> p_idx, q_idx, w_idx;     // per bus
  std::vector<int> pf_idx, qf_idx, l_idx;   // per line
};

inline FeederLayout feeder_layout(const FeederModel& f, const Grouping& cells) {
  FeederLayout lay;
  const int n = f.n_buses();
  lay.cell_of_bus.assign(static_cast<std::size_t>(n), -1);
  for (std::size_t c = 0; c < cells.size(); ++c)
    for (int b : cells[c]) {
      if (b < 0 || b >= n)
        throw std::invalid_argument("grouping: bus out of range");
      if (lay.cell_of_bus[static_cast<std::size_t>(b)] >= 0)
        throw std::invalid_argument("grouping: bus listed twice");
      lay.cell_of_bus[static_cast<std::size_t>(b)] = static_cast<int>(c);
    }
  for (int b = 0; b < n; ++b)
    if (lay.cell_of_bus[static_cast<std::size_t>(b)] < 0)
      throw std::invalid_argument("grouping: bus " + std::to_string(b) +
                                  " not covered");
  // Connected-subtree check: a cell is a connected subtree iff it has
  // exactly one top node (a member whose tree parent lies outside the cell;
  // the root is always a top node).
  std::vector<int> parent(static_cast<std::size_t>(n), -1);
  for (const auto& l : f.lines) parent[static_cast<std::size_t>(l.to)] = l.from;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    std::set<int> members(cells[c].begin(), cells[c].end());
    int tops = 0;
    for (int v : cells[c])
      if (v == 0 || members.count(parent[static_cast<std::size_t>(v)]) == 0)
        ++tops;
    if (tops != 1)
      throw std::invalid_argument("grouping: cell " + std::to_string(c) +
                                  " is not a connected subtree");
  }

  lay.agent_dim.assign(cells.size(), 0);
  lay.p_idx.assign(static_cast<std::size_t>(n), -1);
  lay.q_idx.assign(static_cast<std::size_t>(n), -1);
  lay.w_idx.assign(static_cast<std::size_t>(n), -1);
  lay.pf_idx.assign(f.lines.size(), -1);
  lay.qf_idx.assign(f.lines.size(), -1);
  lay.l_idx.assign(f.lines.size(), -1);
  lay.cell_of_line.assign(f.lines.size(), -1);
  for (std::size_t c = 0; c < cells.size(); ++c) {
    int off = 0;
    for (int b : cells[c]) {
      lay.p_idx[static_cast<std::size_t>(b)] = off++;
      lay.q_idx[static_cast<std::size_t>(b)] = off++;
      lay.w_idx[static_cast<std::size_t>(b)] = off++;
    }
    for (std::size_t e = 0; e < f.lines.size(); ++e) {
      if (lay.cell_of_bus[static_cast<std::size_t>(f.lines[e].from)] !=
          static_cast<int>(c))
        continue;
      lay.cell_of_line[e] = static_cast<int>(c);
      lay.pf_idx[e] = off++;
      lay.qf_idx[e] = off++;
      lay.l_idx[e] = off++;
    }
    lay.agent_dim[c] = off;
  }
  return lay;
}

}  // namespace grid_detail

/// DER coordination as a multi-agent program: one agent per grouping cell.
/// Capability sets, voltage/current boxes and the rotated-cone relaxation
/// stay local to the owning cell; the balance and voltage-drop equalities
/// that straddle two cells become shared coupling rows.
inline ProblemInstance build_der_socp(const FeederModel& f,
                                      const Grouping& cells) {
  f.validate();
  const auto lay = grid_detail::feeder_layout(f, cells);
  const int n_cells = static_cast<int>(cells.size());
  const auto in_lines = f.in_lines();
  const auto out_lines = f.out_lines();

  // Coupling rows: per-bus real and reactive balance when any involved
  // variable lives outside the bus's cell, then voltage drops per line whose
  // head lives in another cell. Deterministic order: balance P (bus order),
  // balance Q, voltage drops (line order).
  struct Row {
    char kind;  // 'P', 'Q', 'V'
    int index;  // bus for balance, line for voltage drop
  };
  std::vector<Row> rows;
  auto straddles_balance = [&](int bus) {
    const int c = lay.cell_of_bus[static_cast<std::size_t>(bus)];
    for (int e : in_lines[static_cast<std::size_t>(bus)])
      if (lay.cell_of_line[static_cast<std::size_t>(e)] != c) return true;
    return false;
  };
  for (int b = 0; b < f.n_buses(); ++b)
    if (straddles_balance(b)) rows.push_back({'P', b});
  for (int b = 0; b < f.n_buses(); ++b)
    if (straddles_balance(b)) rows.push_back({'Q', b});
  for (std::size_t e = 0; e < f.lines.size(); ++e)
    if (lay.cell_of_line[e] !=
        lay.cell_of_bus[static_cast<std::size_t>(f.lines[e].to)])
      rows.push_back({'V', static_cast<int>(e)});

  ProblemInstance p;
  p.name = "der_socp_" + f.name;
  p.provenance = "build_der_socp";
  p.m_eq = static_cast<Index>(rows.size());
  p.m_ineq = 0;

  std::vector<AgentSpec> agents(static_cast<std::size_t>(n_cells));

  for (int c = 0; c < n_cells; ++c) {
    AgentSpec& agent = agents[static_cast<std::size_t>(c)];
    const Index dim = lay.agent_dim[static_cast<std::size_t>(c)];
    agent.local_set.dim = dim;
    agent.local_set.lower = Vec::Constant(dim, -1e3);
    agent.local_set.upper = Vec::Constant(dim, 1e3);
    agent.objective.q = Mat::Zero(dim, dim);
    agent.objective.c = Vec::Zero(dim);
    agent.coupling_eq = Mat::Zero(p.m_eq, dim);
    agent.coupling_eq_offset = Vec::Zero(p.m_eq);
    agent.coupling_ineq = Mat::Zero(0, dim);
    agent.coupling_ineq_offset = Vec::Zero(0);
    agent.local_set.witness = Vec::Zero(dim);
  }

  // Local boxes, cones, costs, and witnesses.
  for (int b = 0; b < f.n_buses(); ++b) {
    const auto& bus = f.buses[static_cast<std::size_t>(b)];
    AgentSpec& agent =
        agents[static_cast<std::size_t>(lay.cell_of_bus[static_cast<std::size_t>(b)])];
    const int pi = lay.p_idx[static_cast<std::size_t>(b)];
    const int qi = lay.q_idx[static_cast<std::size_t>(b)];
    const int wi = lay.w_idx[static_cast<std::size_t>(b)];
    auto& set = agent.local_set;
    if (bus.der.is_disc) {
      const double s = bus.der.s_cap;
      set.lower(pi) = -s;
      set.upper(pi) = s;
      set.lower(qi) = -s;
      set.upper(qi) = s;
      SocSlice disc;
      disc.u_idx = {pi, qi};
      disc.radius = s;
      set.soc_slices.push_back(disc);
      set.witness(pi) = 0.0;
      set.witness(qi) = 0.0;
    } else {
      set.lower(pi) = bus.der.pmin;
      set.upper(pi) = bus.der.pmax;
      set.lower(qi) = bus.der.qmin;
      set.upper(qi) = bus.der.qmax;
      set.witness(pi) = 0.5 * (bus.der.pmin + bus.der.pmax);
      set.witness(qi) = 0.5 * (bus.der.qmin + bus.der.qmax);
    }
    set.lower(wi) = bus.wmin;
    set.upper(wi) = bus.wmax;
    set.witness(wi) = 0.5 * (bus.wmin + bus.wmax);
    agent.objective.q(pi, pi) = 2.0 * bus.alpha_p;
    agent.objective.q(qi, qi) = 2.0 * bus.alpha_q;
    agent.objective.c(pi) = bus.beta_p;
    agent.variable_names.resize(static_cast<std::size_t>(agent.dim()));
  }
  for (std::size_t e = 0; e < f.lines.size(); ++e) {
    const auto& l = f.lines[e];
    AgentSpec& agent = agents[static_cast<std::size_t>(lay.cell_of_line[e])];
    auto& set = agent.local_set;
    const int pf = lay.pf_idx[e], qf = lay.qf_idx[e], li = lay.l_idx[e];
    set.lower(pf) = -l.flow_cap;
    set.upper(pf) = l.flow_cap;
    set.lower(qf) = -l.flow_cap;
    set.upper(qf) = l.flow_cap;
    set.lower(li) = 0.0;
    set.upper(li) = l.current_cap;
    set.witness(pf) = 0.0;
    set.witness(qf) = 0.0;
    set.witness(li) = 0.0;
    RotatedSocSlice cone;  // l_e * w_from >= P² + Q²
    cone.a_idx = li;
    cone.b_idx = lay.w_idx[static_cast<std::size_t>(l.from)];
    cone.u_idx = {pf, qf};
    set.rotated_soc_slices.push_back(cone);
  }

  // Balance and voltage-drop relations; local when the cell owns every
  // variable, shared otherwise.
  Index shared_row = 0;
  std::vector<std::vector<std::pair<Vec, double>>> local_eq(
      static_cast<std::size_t>(n_cells));
  auto emit = [&](char kind, int index) {
    const bool shared = [&] {
      for (const auto& r : rows) {
        if (r.kind == kind && r.index == index) return true;
      }
      return false;
    }();
    Index row = -1;
    if (shared) {
      for (std::size_t r = 0; r < rows.size(); ++r)
        if (rows[r].kind == kind && rows[r].index == index)
          row = static_cast<Index>(r);
    }

    // Accumulate coefficients per cell.
    std::map<int, std::pair<Vec, double>> parts;
    auto coef = [&](int cell, int idx, double v) {
      auto it = parts.find(cell);
      if (it == parts.end()) {
        it = parts
                 .emplace(cell,
                          std::pair<Vec, double>{
                              Vec::Zero(lay.agent_dim[static_cast<std::size_t>(
                                  cell)]),
                              0.0})
                 .first;
      }
      it->second.first(idx) += v;
    };
    auto offset = [&](int cell, double v) {
      auto it = parts.find(cell);
      if (it == parts.end()) {
        it = parts
                 .emplace(cell,
                          std::pair<Vec, double>{
                              Vec::Zero(lay.agent_dim[static_cast<std::size_t>(
                                  cell)]),
                              0.0})
                 .first;
      }
      it->second.second += v;
    };

    if (kind == 'P' || kind == 'Q') {
      const int b = index;
      const auto& bus = f.buses[static_cast<std::size_t>(b)];
      const int cell = lay.cell_of_bus[static_cast<std::size_t>(b)];
      const bool real = kind == 'P';
      // sum_out F - sum_in (F - z l) - gen = -demand.
      coef(cell, real ? lay.p_idx[static_cast<std::size_t>(b)]
                      : lay.q_idx[static_cast<std::size_t>(b)],
           -1.0);
      offset(cell, real ? bus.pd : bus.qd);
      for (int e : out_lines[static_cast<std::size_t>(b)])
        coef(lay.cell_of_line[static_cast<std::size_t>(e)],
             real ? lay.pf_idx[static_cast<std::size_t>(e)]
                  : lay.qf_idx[static_cast<std::size_t>(e)],
             1.0);
      for (int e : in_lines[static_cast<std::size_t>(b)]) {
        const auto& l = f.lines[static_cast<std::size_t>(e)];
        const int lc = lay.cell_of_line[static_cast<std::size_t>(e)];
        coef(lc,
             real ? lay.pf_idx[static_cast<std::size_t>(e)]
                  : lay.qf_idx[static_cast<std::size_t>(e)],
             -1.0);
        coef(lc, lay.l_idx[static_cast<std::size_t>(e)], real ? l.r : l.x);
      }
    } else {  // voltage drop on line e: w_to - w_from + 2(rP + xQ) - z² l = 0
      const auto& l = f.lines[static_cast<std::size_t>(index)];
      const int lc = lay.cell_of_line[static_cast<std::size_t>(index)];
      coef(lay.cell_of_bus[static_cast<std::size_t>(l.to)],
           lay.w_idx[static_cast<std::size_t>(l.to)], 1.0);
      coef(lay.cell_of_bus[static_cast<std::size_t>(l.from)],
           lay.w_idx[static_cast<std::size_t>(l.from)], -1.0);
      coef(lc, lay.pf_idx[static_cast<std::size_t>(index)], 2.0 * l.r);
      coef(lc, lay.qf_idx[static_cast<std::size_t>(index)], 2.0 * l.x);
      coef(lc, lay.l_idx[static_cast<std::size_t>(index)],
           -(l.r * l.r + l.x * l.x));
    }

    if (shared) {
      for (auto& [cell, part] : parts) {
        agents[static_cast<std::size_t>(cell)].coupling_eq.row(row) +=
            part.first.transpose();
        agents[static_cast<std::size_t>(cell)].coupling_eq_offset(row) +=
            part.second;
      }
      ++shared_row;
    } else {
      // Entirely inside one cell: a local equality.
      const int cell = parts.begin()->first;
      local_eq[static_cast<std::size_t>(cell)].push_back(
          {parts.begin()->second.first, -parts.begin()->second.second});
    }
  };

  for (int b = 0; b < f.n_buses(); ++b) emit('P', b);
  for (int b = 0; b < f.n_buses(); ++b) emit('Q', b);
  for (std::size_t e = 0; e < f.lines.size(); ++e)
    emit('V', static_cast<int>(e));

  for (int c = 0; c < n_cells; ++c) {
    AgentSpec& agent = agents[static_cast<std::size_t>(c)];
    const auto& eqs = local_eq[static_cast<std::size_t>(c)];
    agent.local_set.c_eq =
        Mat::Zero(static_cast<Index>(eqs.size()), agent.local_set.dim);
    agent.local_set.d_eq = Vec::Zero(static_cast<Index>(eqs.size()));
    for (std::size_t r = 0; r < eqs.size(); ++r) {
      agent.local_set.c_eq.row(static_cast<Index>(r)) =
          eqs[r].first.transpose();
      agent.local_set.d_eq(static_cast<Index>(r)) = eqs[r].second;
    }
  }

  // Witnesses must satisfy the local equalities too. With all flows, currents
  // and DER outputs at their witness values the local rows are generally not
  // met, so project the assembled witness onto the full local set.
  for (int c = 0; c < n_cells; ++c) {
    AgentSpec& agent = agents[static_cast<std::size_t>(c)];
    if (agent.local_set.c_eq.rows() == 0) continue;
    auto targets = make_targets(agent.local_set);
    DykstraOptions dopt;
    dopt.tolerance = 1e-12;
    dopt.max_sweeps = 20000;
    const auto proj =
        project_onto_set(agent.local_set, agent.local_set.witness, targets,
                         dopt);
    agent.local_set.witness = proj.point;
    if (agent.local_set.membership_residual(proj.point) > 1e-6)
      throw std::invalid_argument("build_der_socp: cell " + std::to_string(c) +
                                  " witness projection failed");
  }

  p.agents = std::move(agents);
  p.validate();
  if (shared_row != p.m_eq)
    throw std::logic_error("build_der_socp: row bookkeeping mismatch");
  return p;
}

// ---------------------------------------------------------------------------
// Single-agent LinDistFlow dispatch of the same feeder: lossless balance at
// the root, voltages affine in the injections. Used for the model-direction
// comparison against the SOCP relaxation.
// ---------------------------------------------------------------------------

inline ProblemInstance build_lindistflow_feeder(const FeederModel& f,
                                                double root_w = 1.0) {
  f.validate();
  const int n = f.n_buses();
  const int nd = n - 1;
  const LinDistFlowMatrices ldf = lindistflow_matrices(f);

  // Variables: (p^G_0, q^G_0) at the root then (p^G_b, q^G_b) per non-root bus.
  const Index dim = 2 * n;
  AgentSpec agent;
  agent.local_set.dim = dim;
  agent.local_set.lower = Vec::Zero(dim);
  agent.local_set.upper = Vec::Zero(dim);
  agent.objective.q = Mat::Zero(dim, dim);
  agent.objective.c = Vec::Zero(dim);
  for (int b = 0; b < n; ++b) {
    const auto& bus = f.buses[static_cast<std::size_t>(b)];
    agent.local_set.lower(2 * b) = bus.der.pmin;
    agent.local_set.upper(2 * b) = bus.der.pmax;
    agent.local_set.lower(2 * b + 1) = bus.der.qmin;
    agent.local_set.upper(2 * b + 1) = bus.der.qmax;
    agent.objective.q(2 * b, 2 * b) = 2.0 * bus.alpha_p;
    agent.objective.q(2 * b + 1, 2 * b + 1) = 2.0 * bus.alpha_q;
    agent.objective.c(2 * b) = bus.beta_p;
  }

  // Lossless power balance: total generation = total demand (P and Q).
  Mat c_eq = Mat::Zero(2, dim);
  Vec d_eq = Vec::Zero(2);
  for (int b = 0; b < n; ++b) {
    c_eq(0, 2 * b) = 1.0;
    c_eq(1, 2 * b + 1) = 1.0;
    d_eq(0) += f.buses[static_cast<std::size_t>(b)].pd;
    d_eq(1) += f.buses[static_cast<std::size_t>(b)].qd;
  }
  agent.local_set.c_eq = c_eq;
  agent.local_set.d_eq = d_eq;

  // Voltage box: wmin <= rho (p - pd) + chi (q - qd) + root_w <= wmax.
  Mat a = Mat::Zero(2 * nd, dim);
  Vec b = Vec::Zero(2 * nd);
  Vec const_term = Vec::Constant(nd, root_w);
  for (int i = 0; i < nd; ++i) {
    for (int jb = 1; jb < n; ++jb) {
      a(i, 2 * jb) = ldf.rho(i, jb - 1);
      a(i, 2 * jb + 1) = ldf.chi(i, jb - 1);
      a(nd + i, 2 * jb) = -ldf.rho(i, jb - 1);
      a(nd + i, 2 * jb + 1) = -ldf.chi(i, jb - 1);
    }
    double fixed = root_w;
    for (int jb = 1; jb < n; ++jb)
      fixed -= ldf.rho(i, jb - 1) * f.buses[static_cast<std::size_t>(jb)].pd +
               ldf.chi(i, jb - 1) * f.buses[static_cast<std::size_t>(jb)].qd;
    const auto& bus = f.buses[static_cast<std::size_t>(i + 1)];
    b(i) = bus.wmax - fixed;
    b(nd + i) = fixed - bus.wmin;
  }
  agent.local_set.a_ineq = a;
  agent.local_set.b_ineq = b;

  // Witness through the interior-point projection of the box midpoint.
  {
    const Vec mid = 0.5 * (agent.local_set.lower + agent.local_set.upper);
    QpOptions wopt;
    wopt.tolerance = 1e-10;
    const QpResult wit = solve_qp_polytope(
        Mat::Identity(dim, dim), -mid, agent.local_set.a_ineq,
        agent.local_set.b_ineq, agent.local_set.c_eq, agent.local_set.d_eq,
        agent.local_set.lower, agent.local_set.upper, wopt);
    if (wit.status != SolveStatus::kOptimal)
      throw std::invalid_argument(
          "build_lindistflow_feeder: infeasible dispatch set");
    agent.local_set.witness = wit.x;
  }
  agent.coupling_eq = Mat::Zero(0, dim);
  agent.coupling_eq_offset = Vec::Zero(0);
  agent.coupling_ineq = Mat::Zero(0, dim);
  agent.coupling_ineq_offset = Vec::Zero(0);

  ProblemInstance p;
  p.name = "lindistflow_" + f.name;
  p.provenance = "build_lindistflow_feeder";
  p.m_eq = 0;
  p.m_ineq = 0;
  p.agents.push_back(std::move(agent));
  p.validate();
  return p;
}

/// Grouping file: `group.<i> = <bus ids, 1-indexed>` plus optional overrides
/// (ell_cap, flow_cap).
struct GroupingSpec {
  Grouping cells;
  double ell_cap = 0.0;   // 0 keeps the model default
  double flow_cap = 0.0;
};

inline GroupingSpec parse_grouping_spec(const std::string& text) {
  GroupingSpec out;
  std::istringstream in(text);
  std::string line;
  std::map<int, std::vector<int>> groups;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    key.erase(std::remove_if(key.begin(), key.end(),
                             [](unsigned char ch) { return std::isspace(ch); }),
              key.end());
    if (key.rfind("group.", 0) == 0) {
      std::istringstream vs(value);
      int bus;
      auto& cell = groups[std::stoi(key.substr(6))];
      while (vs >> bus) cell.push_back(bus - 1);
    } else if (key == "ell_cap") {
      out.ell_cap = std::stod(value);
    } else if (key == "flow_cap") {
      out.flow_cap = std::stod(value);
    }
  }
  for (const auto& [idx, cell] : groups) {
    if (idx != static_cast<int>(out.cells.size()))
      throw std::invalid_argument("grouping spec: group indices must be 0,1,...");
    out.cells.push_back(cell);
  }
  return out;
}

}  // namespace dgopt
