#pragma once

#include <numbers>
#include <string>
#include <vector>

#include "dgopt/graph.hpp"
#include "dgopt/matpower.hpp"
#include "dgopt/problem.hpp"
#include "dgopt/qp.hpp"

namespace dgopt {

// ---------------------------------------------------------------------------
// Multi-area DC optimal power flow. Area agents own (theta_int, theta_bnd,
// p^G); boundary power balance rows couple neighboring areas and tie-line
// limits become shared inequalities.
// ---------------------------------------------------------------------------

struct AreaGenerator {
  int local_bus = 0;  // index into the area's bus list
  double pmin = 0.0, pmax = 0.0;  // p.u.
  double cost_linear = 0.0;       // currency per p.u. (already scaled)
};

struct AreaTieEnd {
  int tie_index = 0;       // global tie index
  int local_boundary = 0;  // index into this area's boundary list
  int neighbor_area = 0;
  int neighbor_boundary = 0;  // index into the neighbor's boundary list
  double susceptance = 0.0;   // p.u.
  double capacity = 0.0;      // p.u.
  bool first_end = true;      // owns the flow sign and the capacity offset
};

struct AreaModel {
  std::string name;
  int n_internal = 0;
  int n_boundary = 0;
  Mat b_ii, b_ib, b_bi, b_bb;  // susceptance blocks; b_bb includes tie terms
  Mat h_lines;                 // internal line rows over (theta_i, theta_b)
  Vec line_limits;             // p.u., one per row of h_lines
  std::vector<AreaGenerator> generators;
  Vec load_internal;  // p.u.
  Vec load_boundary;  // p.u. (zero after boundary cleanup)
  std::vector<AreaTieEnd> ties;
  double theta_bound = std::numbers::pi / 6.0;

  int dim() const {
    return n_internal + n_boundary + static_cast<int>(generators.size());
  }
};

namespace grid_detail {

inline bool is_boundary(const std::vector<int>& boundary_ids, int id) {
  for (int b : boundary_ids)
    if (b == id) return true;
  return false;
}

}  // namespace grid_detail

/// Splits stitched cases into AreaModel blocks: boundary buses are the tie
/// endpoints, susceptance blocks come from b = 1/x, and tie susceptances are
/// folded into the boundary diagonal.
inline std::vector<AreaModel> area_models_from(const MultiAreaData& data,
                                               double theta_bound =
                                                   std::numbers::pi / 6.0) {
  const int n_areas = static_cast<int>(data.areas.size());
  std::vector<AreaModel> models(static_cast<std::size_t>(n_areas));

  // Boundary bus lists per area, in tie order (first appearance wins).
  std::vector<std::vector<int>> boundary_ids(
      static_cast<std::size_t>(n_areas));
  for (const auto& tie : data.ties) {
    auto& ba = boundary_ids[static_cast<std::size_t>(tie.area_a)];
    if (!grid_detail::is_boundary(ba, tie.bus_a)) ba.push_back(tie.bus_a);
    auto& bb = boundary_ids[static_cast<std::size_t>(tie.area_b)];
    if (!grid_detail::is_boundary(bb, tie.bus_b)) bb.push_back(tie.bus_b);
  }

  for (int a = 0; a < n_areas; ++a) {
    const CaseData& c = data.areas[static_cast<std::size_t>(a)];
    AreaModel& m = models[static_cast<std::size_t>(a)];
    m.name = c.name;
    m.theta_bound = theta_bound;
    const auto& bids = boundary_ids[static_cast<std::size_t>(a)];
    std::vector<int> internal_ids;
    for (const auto& bus : c.buses)
      if (!grid_detail::is_boundary(bids, bus.id)) internal_ids.push_back(bus.id);
    m.n_internal = static_cast<int>(internal_ids.size());
    m.n_boundary = static_cast<int>(bids.size());

    auto local_of = [&](int id, bool& bnd) -> int {
      for (std::size_t i = 0; i < internal_ids.size(); ++i)
        if (internal_ids[i] == id) {
          bnd = false;
          return static_cast<int>(i);
        }
      for (std::size_t i = 0; i < bids.size(); ++i)
        if (bids[i] == id) {
          bnd = true;
          return static_cast<int>(i);
        }
      throw std::invalid_argument("area " + c.name + ": unknown bus " +
                                  std::to_string(id));
    };

    m.b_ii = Mat::Zero(m.n_internal, m.n_internal);
    m.b_ib = Mat::Zero(m.n_internal, m.n_boundary);
    m.b_bi = Mat::Zero(m.n_boundary, m.n_internal);
    m.b_bb = Mat::Zero(m.n_boundary, m.n_boundary);
    std::vector<Vec> line_rows;
    std::vector<double> limits;
    for (const auto& br : c.branches) {
      if (br.x == 0.0)
        throw std::invalid_argument("area " + c.name +
                                    ": zero-reactance branch");
      const double b = 1.0 / br.x;  // DC convention, resistance ignored
      bool fb = false, tb = false;
      const int fi = local_of(br.from, fb);
      const int ti = local_of(br.to, tb);
      auto add = [&](int i, bool ib, int j, bool jb, double v) {
        Mat& block = !ib ? (!jb ? m.b_ii : m.b_ib) : (!jb ? m.b_bi : m.b_bb);
        block(i, j) += v;
      };
      add(fi, fb, fi, fb, b);
      add(ti, tb, ti, tb, b);
      add(fi, fb, ti, tb, -b);
      add(ti, tb, fi, fb, -b);
      if (br.rate_a > 0.0) {
        Vec row = Vec::Zero(m.n_internal + m.n_boundary);
        row(fb ? m.n_internal + fi : fi) += b;
        row(tb ? m.n_internal + ti : ti) -= b;
        line_rows.push_back(row);
        limits.push_back(br.rate_a / c.base_mva);
      }
    }
    m.h_lines = Mat::Zero(static_cast<Index>(line_rows.size()),
                          m.n_internal + m.n_boundary);
    m.line_limits = Vec::Zero(static_cast<Index>(line_rows.size()));
    for (std::size_t r = 0; r < line_rows.size(); ++r) {
      m.h_lines.row(static_cast<Index>(r)) = line_rows[r].transpose();
      m.line_limits(static_cast<Index>(r)) = limits[r];
    }

    m.load_internal = Vec::Zero(m.n_internal);
    m.load_boundary = Vec::Zero(m.n_boundary);
    for (const auto& bus : c.buses) {
      bool bnd = false;
      const int i = local_of(bus.id, bnd);
      (bnd ? m.load_boundary(i) : m.load_internal(i)) = bus.pd / c.base_mva;
    }
    for (std::size_t g = 0; g < c.gens.size(); ++g) {
      AreaGenerator gen;
      bool bnd = false;
      const int i = local_of(c.gens[g].bus, bnd);
      gen.local_bus = bnd ? m.n_internal + i : i;
      gen.pmin = c.gens[g].pmin / c.base_mva;
      gen.pmax = c.gens[g].pmax / c.base_mva;
      double lin = 0.0;
      if (g < c.gencosts.size()) {
        const auto& gc = c.gencosts[g];
        // Quadratic coefficients are dropped; the linear one is scaled so
        // the objective stays in currency units with p.u. variables.
        if (gc.ncost >= 2 && !gc.coeffs.empty())
          lin = gc.coeffs[static_cast<std::size_t>(gc.ncost - 2)];
      }
      gen.cost_linear = lin * c.base_mva;
      m.generators.push_back(gen);
    }
  }

  // Tie ends with local indexing on both sides.
  for (std::size_t t = 0; t < data.ties.size(); ++t) {
    const TieLine& tie = data.ties[t];
    const double base =
        data.areas[static_cast<std::size_t>(tie.area_a)].base_mva;
    AreaTieEnd ea, eb;
    ea.tie_index = eb.tie_index = static_cast<int>(t);
    ea.susceptance = eb.susceptance = 1.0 / tie.reactance;
    ea.capacity = eb.capacity = tie.capacity_mw / base;
    auto boundary_slot = [&](int area, int bus) {
      const auto& ids = boundary_ids[static_cast<std::size_t>(area)];
      for (std::size_t i = 0; i < ids.size(); ++i)
        if (ids[i] == bus) return static_cast<int>(i);
      throw std::logic_error("tie endpoint not registered as boundary");
    };
    ea.local_boundary = boundary_slot(tie.area_a, tie.bus_a);
    ea.neighbor_area = tie.area_b;
    ea.neighbor_boundary = boundary_slot(tie.area_b, tie.bus_b);
    ea.first_end = true;
    eb.local_boundary = ea.neighbor_boundary;
    eb.neighbor_area = tie.area_a;
    eb.neighbor_boundary = ea.local_boundary;
    eb.first_end = false;
    models[static_cast<std::size_t>(tie.area_a)].ties.push_back(ea);
    models[static_cast<std::size_t>(tie.area_b)].ties.push_back(eb);
    // Tie susceptance joins the boundary diagonal of both areas.
    models[static_cast<std::size_t>(tie.area_a)]
        .b_bb(ea.local_boundary, ea.local_boundary) += ea.susceptance;
    models[static_cast<std::size_t>(tie.area_b)]
        .b_bb(eb.local_boundary, eb.local_boundary) += eb.susceptance;
  }
  return models;
}

inline CommGraph area_graph(const std::vector<AreaModel>& areas) {
  CommGraph g;
  g.n_nodes = static_cast<int>(areas.size());
  for (std::size_t a = 0; a < areas.size(); ++a)
    for (const auto& tie : areas[a].ties)
      if (tie.neighbor_area != static_cast<int>(a))
        g.add_edge(static_cast<int>(a), tie.neighbor_area);
  return g;
}

/// Assembles the multi-area program: local sets carry generation bounds,
/// internal balance and internal line limits plus the phase-angle box;
/// boundary balance rows are shared equalities and tie limits shared
/// inequalities, each touching only the two incident areas.
inline ProblemInstance build_multiarea(const std::vector<AreaModel>& areas,
                                       const CommGraph& graph) {
  const int n_areas = static_cast<int>(areas.size());
  if (graph.n_nodes != n_areas)
    throw std::invalid_argument("build_multiarea: graph size mismatch");
  for (const auto& m : areas)
    for (const auto& tie : m.ties) {
      const auto& nb = areas[static_cast<std::size_t>(tie.neighbor_area)];
      if (tie.neighbor_boundary >= nb.n_boundary)
        throw std::invalid_argument(
            "build_multiarea: tie " + std::to_string(tie.tie_index) +
            " references boundary bus " +
            std::to_string(tie.neighbor_boundary) + " missing in area " +
            std::to_string(tie.neighbor_area));
    }

  // Row layout: one equality per boundary bus (area-major order), then two
  // inequalities per tie.
  std::vector<Index> eq_row_base(static_cast<std::size_t>(n_areas));
  Index m_eq = 0;
  for (int a = 0; a < n_areas; ++a) {
    eq_row_base[static_cast<std::size_t>(a)] = m_eq;
    m_eq += areas[static_cast<std::size_t>(a)].n_boundary;
  }
  int n_ties = 0;
  for (const auto& m : areas)
    for (const auto& tie : m.ties) n_ties = std::max(n_ties, tie.tie_index + 1);
  const Index m_ineq = 2 * n_ties;

  ProblemInstance p;
  p.name = "multiarea_dcopf";
  p.provenance = "build_multiarea";
  p.m_eq = m_eq;
  p.m_ineq = m_ineq;

  for (int a = 0; a < n_areas; ++a) {
    const AreaModel& m = areas[static_cast<std::size_t>(a)];
    const int ng = static_cast<int>(m.generators.size());
    const int nth = m.n_internal + m.n_boundary;
    const Index dim = m.dim();
    AgentSpec agent;

    Vec lo(dim), hi(dim);
    lo.head(nth).setConstant(-m.theta_bound);
    hi.head(nth).setConstant(m.theta_bound);
    for (int g = 0; g < ng; ++g) {
      lo(nth + g) = m.generators[static_cast<std::size_t>(g)].pmin;
      hi(nth + g) = m.generators[static_cast<std::size_t>(g)].pmax;
    }
    agent.local_set.dim = dim;
    agent.local_set.lower = lo;
    agent.local_set.upper = hi;

    // Internal balance: B_ii theta_i + B_ib theta_b - sum(gen at bus) = -load.
    Mat c_eq = Mat::Zero(m.n_internal, dim);
    c_eq.block(0, 0, m.n_internal, m.n_internal) = m.b_ii;
    c_eq.block(0, m.n_internal, m.n_internal, m.n_boundary) = m.b_ib;
    for (int g = 0; g < ng; ++g) {
      const auto& gen = m.generators[static_cast<std::size_t>(g)];
      if (gen.local_bus < m.n_internal) c_eq(gen.local_bus, nth + g) = -1.0;
    }
    agent.local_set.c_eq = c_eq;
    agent.local_set.d_eq = -m.load_internal;

    // Internal line limits in both directions.
    const Index nl = m.h_lines.rows();
    Mat a_ineq = Mat::Zero(2 * nl, dim);
    Vec b_ineq(2 * nl);
    if (nl > 0) {
      a_ineq.block(0, 0, nl, nth) = m.h_lines;
      a_ineq.block(nl, 0, nl, nth) = -m.h_lines;
      b_ineq.head(nl) = m.line_limits;
      b_ineq.tail(nl) = m.line_limits;
    }
    agent.local_set.a_ineq = a_ineq;
    agent.local_set.b_ineq = b_ineq;

    // Objective: linear generation cost.
    agent.objective.q = Mat::Zero(dim, dim);
    agent.objective.c = Vec::Zero(dim);
    for (int g = 0; g < ng; ++g)
      agent.objective.c(nth + g) =
          m.generators[static_cast<std::size_t>(g)].cost_linear;

    // Coupling equalities: boundary balance. The area's own Laplacian rows
    // plus generation/load at the boundary bus; neighbor contributions are
    // attached to the neighbor agent below.
    Mat e = Mat::Zero(m_eq, dim);
    Vec e_off = Vec::Zero(m_eq);
    const Index base = eq_row_base[static_cast<std::size_t>(a)];
    for (int bb = 0; bb < m.n_boundary; ++bb) {
      const Index row = base + bb;
      e.block(row, 0, 1, m.n_internal) = m.b_bi.row(bb);
      e.block(row, m.n_internal, 1, m.n_boundary) = m.b_bb.row(bb);
      e_off(row) = m.load_boundary(bb);
      for (int g = 0; g < ng; ++g) {
        const auto& gen = m.generators[static_cast<std::size_t>(g)];
        if (gen.local_bus == m.n_internal + bb) e(row, nth + g) = -1.0;
      }
    }
    // Cross terms: this area's boundary angle enters the neighbor's row.
    for (const auto& tie : m.ties) {
      const Index nb_row =
          eq_row_base[static_cast<std::size_t>(tie.neighbor_area)] +
          tie.neighbor_boundary;
      e(nb_row, m.n_internal + tie.local_boundary) -= tie.susceptance;
    }
    agent.coupling_eq = e;
    agent.coupling_eq_offset = e_off;

    // Coupling inequalities: two rows per tie, flow = b (theta_a - theta_b).
    Mat iq = Mat::Zero(m_ineq, dim);
    Vec iq_off = Vec::Zero(m_ineq);
    for (const auto& tie : m.ties) {
      const Index r0 = 2 * tie.tie_index;
      const double sign = tie.first_end ? 1.0 : -1.0;
      iq(r0, m.n_internal + tie.local_boundary) += sign * tie.susceptance;
      iq(r0 + 1, m.n_internal + tie.local_boundary) -= sign * tie.susceptance;
      if (tie.first_end) {  // capacity offset carried once per row
        iq_off(r0) = -tie.capacity;
        iq_off(r0 + 1) = -tie.capacity;
      }
    }
    agent.coupling_ineq = iq;
    agent.coupling_ineq_offset = iq_off;

    for (int i = 0; i < m.n_internal; ++i)
      agent.variable_names.push_back(m.name + ".theta_int" + std::to_string(i));
    for (int i = 0; i < m.n_boundary; ++i)
      agent.variable_names.push_back(m.name + ".theta_bnd" + std::to_string(i));
    for (int g = 0; g < ng; ++g)
      agent.variable_names.push_back(m.name + ".pg" + std::to_string(g));

    // Witness: nearest feasible point to the box midpoint.
    {
      const Vec mid = 0.5 * (lo + hi);
      QpOptions wopt;
      wopt.tolerance = 1e-10;
      const QpResult wit = solve_qp_polytope(
          Mat::Identity(dim, dim), -mid, agent.local_set.a_ineq,
          agent.local_set.b_ineq, agent.local_set.c_eq, agent.local_set.d_eq,
          lo, hi, wopt);
      if (wit.status != SolveStatus::kOptimal)
        throw std::invalid_argument("build_multiarea: area " + m.name +
                                    " has an infeasible local set");
      agent.local_set.witness = wit.x;
    }
    p.agents.push_back(std::move(agent));
  }
  p.validate();
  return p;
}

// ---------------------------------------------------------------------------
// DC feasibility diagnostics.
// ---------------------------------------------------------------------------

struct DcBranch {
  int from = 0, to = 0;       // 0-indexed bus ids
  double susceptance = 0.0;   // p.u.
  double limit = 0.0;         // p.u.; 0 = unlimited
};

struct DcCheckReport {
  Vec flows;                  // per branch, from -> to
  double max_balance_residual = 0.0;
  double max_limit_violation = 0.0;
};

/// Residuals of the DC feasible-set relations for a candidate (theta, p):
/// flow definitions, nodal balance, and line limits.
inline DcCheckReport dc_feasibility_check(const std::vector<DcBranch>& branches,
                                          const Vec& theta,
                                          const Vec& injection) {
  DcCheckReport rep;
  rep.flows = Vec::Zero(static_cast<Index>(branches.size()));
  Vec balance = injection;
  for (std::size_t e = 0; e < branches.size(); ++e) {
    const auto& br = branches[e];
    const double f = br.susceptance * (theta(br.from) - theta(br.to));
    rep.flows(static_cast<Index>(e)) = f;
    balance(br.from) -= f;
    balance(br.to) += f;
    if (br.limit > 0.0)
      rep.max_limit_violation =
          std::max(rep.max_limit_violation, std::abs(f) - br.limit);
  }
  rep.max_limit_violation = std::max(rep.max_limit_violation, 0.0);
  rep.max_balance_residual = balance.cwiseAbs().maxCoeff();
  return rep;
}

}  // namespace dgopt
