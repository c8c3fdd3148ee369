#pragma once

#include "dgopt/problem.hpp"

namespace dgopt {

/// Two agents on [0,1] with f_j(x) = x² and one shared balance row
/// sum_j (x_j - 0.5) = 0. Optimum 0.5 at x = (0.5, 0.5), multiplier z* = -1.
inline ProblemInstance make_toy_problem() {
  ProblemInstance p;
  p.name = "toy";
  p.provenance = "built-in two-agent quadratic";
  p.m_eq = 1;
  p.m_ineq = 0;
  for (int j = 0; j < 2; ++j) {
    AgentSpec a;
    a.local_set = ConvexSetSpec::box(Vec::Zero(1), Vec::Ones(1));
    a.objective.q = Mat::Constant(1, 1, 2.0);  // 0.5 * 2 x² = x²
    a.objective.c = Vec::Zero(1);
    a.coupling_eq = Mat::Ones(1, 1);
    a.coupling_eq_offset = Vec::Constant(1, -0.5);
    a.coupling_ineq = Mat::Zero(0, 1);
    a.coupling_ineq_offset = Vec::Zero(0);
    a.variable_names = {"x" + std::to_string(j + 1)};
    p.agents.push_back(std::move(a));
  }
  p.validate();
  return p;
}

/// Variant with no coupling at all (m_eq = m_ineq = 0); the algorithms must
/// keep z identically zero on it.
inline ProblemInstance make_uncoupled_toy() {
  ProblemInstance p = make_toy_problem();
  p.m_eq = 0;
  for (auto& a : p.agents) {
    a.coupling_eq = Mat::Zero(0, 1);
    a.coupling_eq_offset = Vec::Zero(0);
    // Pull the minimizer inside the box so the average has to move.
    a.objective.c = Vec::Constant(1, -1.2);
  }
  p.validate();
  return p;
}

}  // namespace dgopt
