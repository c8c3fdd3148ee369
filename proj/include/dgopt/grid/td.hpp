#pragma once

#include <cctype>
#include <complex>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "dgopt/graph.hpp"
#include "dgopt/grid/feeder.hpp"
#include "dgopt/matpower.hpp"
#include "dgopt/problem.hpp"

namespace dgopt {

using Cplx = std::complex<double>;
using CMat = Eigen::MatrixXcd;

// ---------------------------------------------------------------------------
// Transmission model for the rank-relaxed SDP dispatch.
// ---------------------------------------------------------------------------

struct TransmissionLine {
  int from = 0, to = 0;   // 0-indexed
  Cplx admittance{0.0, 0.0};
  double flow_cap = 0.0;  // real-power cap per direction, p.u.
};

struct TransmissionGen {
  double pmin = 0.0, pmax = 0.0;
  double qmin = 0.0, qmax = 0.0;
  double alpha_p = 0.0, beta_p = 0.0, alpha_q = 0.0;
};

struct TransmissionModel {
  std::string name;
  int n_buses = 0;
  std::vector<TransmissionLine> lines;
  std::vector<Cplx> shunts;          // per bus
  std::vector<TransmissionGen> gens; // per bus
  std::vector<double> wmin, wmax;    // squared-voltage boxes
  std::vector<double> pd, qd;        // bus-level demand, p.u.
};

inline TransmissionModel transmission_from_case(const CaseData& c) {
  TransmissionModel tm;
  tm.name = c.name;
  tm.n_buses = static_cast<int>(c.buses.size());
  const double base = c.base_mva;
  tm.shunts.assign(static_cast<std::size_t>(tm.n_buses), Cplx{0.0, 0.0});
  tm.gens.assign(static_cast<std::size_t>(tm.n_buses), TransmissionGen{});
  tm.wmin.resize(static_cast<std::size_t>(tm.n_buses));
  tm.wmax.resize(static_cast<std::size_t>(tm.n_buses));
  tm.pd.resize(static_cast<std::size_t>(tm.n_buses));
  tm.qd.resize(static_cast<std::size_t>(tm.n_buses));
  for (int i = 0; i < tm.n_buses; ++i) {
    const auto& b = c.buses[static_cast<std::size_t>(i)];
    tm.wmin[static_cast<std::size_t>(i)] = b.vmin * b.vmin;
    tm.wmax[static_cast<std::size_t>(i)] = b.vmax * b.vmax;
    tm.pd[static_cast<std::size_t>(i)] = b.pd / base;
    tm.qd[static_cast<std::size_t>(i)] = b.qd / base;
    tm.shunts[static_cast<std::size_t>(i)] = Cplx{b.gs, b.bs} / base;
  }
  for (const auto& br : c.branches) {
    TransmissionLine l;
    l.from = c.bus_index(br.from);
    l.to = c.bus_index(br.to);
    l.admittance = 1.0 / Cplx{br.r, br.x};
    l.flow_cap = br.rate_a > 0.0 ? br.rate_a / base : 10.0;
    tm.lines.push_back(l);
  }
  const std::size_t ng = c.gens.size();
  for (std::size_t g = 0; g < ng; ++g) {
    const auto& gen = c.gens[g];
    auto& slot = tm.gens[static_cast<std::size_t>(c.bus_index(gen.bus))];
    slot.pmin = gen.pmin / base;
    slot.pmax = gen.pmax / base;
    slot.qmin = gen.qmin / base;
    slot.qmax = gen.qmax / base;
    if (g < c.gencosts.size()) {
      const auto& gc = c.gencosts[g];
      const auto k = static_cast<std::size_t>(gc.ncost);
      if (k >= 3 && gc.coeffs.size() >= 3) {
        slot.alpha_p = gc.coeffs[k - 3] * base * base;
        slot.beta_p = gc.coeffs[k - 2] * base;
      } else if (k == 2 && gc.coeffs.size() >= 2) {
        slot.beta_p = gc.coeffs[k - 2] * base;
      }
    }
    if (ng + g < c.gencosts.size()) {
      const auto& gc = c.gencosts[ng + g];
      const auto k = static_cast<std::size_t>(gc.ncost);
      if (k >= 3 && gc.coeffs.size() >= 3)
        slot.alpha_q = gc.coeffs[k - 3] * base * base;
    }
  }
  return tm;
}

// ---------------------------------------------------------------------------
// Flow and injection matrices. For a line (l,k) with admittance y the only
// nonzero entries are [Phi]_ll = (y + y^H)/2, [Phi]_lk = [Phi]_kl^H = -y/2;
// Psi carries the same pattern with 1/(2i) factors. The per-bus matrices add
// the shunt term on the diagonal and sum over incident lines.
// ---------------------------------------------------------------------------

struct PhiPsi {
  CMat phi;
  CMat psi;
};

inline PhiPsi line_flow_matrices(int n, int l, int k, Cplx y) {
  const Cplx i2{0.0, 2.0};
  PhiPsi out{CMat::Zero(n, n), CMat::Zero(n, n)};
  out.phi(l, l) = 0.5 * (y + std::conj(y));
  out.phi(l, k) = -0.5 * y;
  out.phi(k, l) = std::conj(out.phi(l, k));
  out.psi(l, l) = (std::conj(y) - y) / i2;
  out.psi(l, k) = y / i2;
  out.psi(k, l) = std::conj(out.psi(l, k));
  return out;
}

inline PhiPsi bus_injection_matrices(const TransmissionModel& tm, int l) {
  const int n = tm.n_buses;
  const Cplx i2{0.0, 2.0};
  PhiPsi out{CMat::Zero(n, n), CMat::Zero(n, n)};
  const Cplx ysh = tm.shunts[static_cast<std::size_t>(l)];
  out.phi(l, l) += 0.5 * (ysh + std::conj(ysh));
  out.psi(l, l) += (std::conj(ysh) - ysh) / i2;
  for (const auto& line : tm.lines) {
    if (line.from == l) {
      const PhiPsi lk = line_flow_matrices(n, l, line.to, line.admittance);
      out.phi += lk.phi;
      out.psi += lk.psi;
    } else if (line.to == l) {
      const PhiPsi lk = line_flow_matrices(n, l, line.from, line.admittance);
      out.phi += lk.phi;
      out.psi += lk.psi;
    }
  }
  return out;
}

/// Tr(phi W) for Hermitian phi, W expressed over (vec Re W, vec Im W):
/// vec(Re phi)ᵀ vec(Re W) + vec(Im phi)ᵀ vec(Im W).
inline Vec trace_coefficients(const CMat& phi) {
  const int n = static_cast<int>(phi.rows());
  Vec coef(2 * n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      coef(i * n + j) = phi(i, j).real();
      coef(n * n + i * n + j) = phi(i, j).imag();
    }
  return coef;
}

// ---------------------------------------------------------------------------
// T&D coordination program on a star graph: aggregator agents own their
// feeder injections and a local copy of the interface voltage square; the
// system operator owns transmission generation and the Gram matrix split
// into real and imaginary parts with the embedded PSD slice.
// ---------------------------------------------------------------------------

struct TdLayout {
  // Aggregator l: [p^G (nd), q^G (nd), w_copy] for feeder l.
  // SO (agent N): [P^G (nt), Q^G (nt), vec Re W (nt²), vec Im W (nt²)].
  int n_tran = 0;
  std::vector<int> feeder_sizes;  // non-root bus counts
  int so_dim() const { return 2 * n_tran + 2 * n_tran * n_tran; }
  int re_base() const { return 2 * n_tran; }
  int im_base() const { return 2 * n_tran + n_tran * n_tran; }
};

inline ProblemInstance build_td(const TransmissionModel& tm,
                                const std::vector<FeederModel>& feeders) {
  const int nt = tm.n_buses;
  if (static_cast<int>(feeders.size()) != nt)
    throw std::invalid_argument(
        "build_td: one feeder per transmission bus required (" +
        std::to_string(feeders.size()) + " vs " + std::to_string(nt) + ")");
  for (const auto& f : feeders) f.validate();

  TdLayout lay;
  lay.n_tran = nt;
  for (const auto& f : feeders) lay.feeder_sizes.push_back(f.n_buses() - 1);

  // Coupling rows: per transmission bus, P balance, Q balance, and the
  // w-copy consensus row tying the aggregator's voltage square to the SO's
  // diagonal Gram entry. Then per feeder the two-sided LinDistFlow voltage
  // boxes as inequalities over aggregator variables only.
  const Index m_eq = 3 * nt;
  Index m_ineq = 0;
  for (int l = 0; l < nt; ++l)
    m_ineq += 2 * lay.feeder_sizes[static_cast<std::size_t>(l)];

  ProblemInstance p;
  p.name = "td_" + tm.name;
  p.provenance = "build_td";
  p.m_eq = m_eq;
  p.m_ineq = m_ineq;

  double w_abs_cap = 0.0;
  for (int l = 0; l < nt; ++l)
    w_abs_cap = std::max(w_abs_cap, tm.wmax[static_cast<std::size_t>(l)]);

  Index ineq_base_for = 0;
  std::vector<Index> ineq_base(static_cast<std::size_t>(nt));
  for (int l = 0; l < nt; ++l) {
    ineq_base[static_cast<std::size_t>(l)] = ineq_base_for;
    ineq_base_for += 2 * lay.feeder_sizes[static_cast<std::size_t>(l)];
  }

  // Aggregator agents.
  for (int l = 0; l < nt; ++l) {
    const FeederModel& f = feeders[static_cast<std::size_t>(l)];
    const int nd = lay.feeder_sizes[static_cast<std::size_t>(l)];
    const Index dim = 2 * nd + 1;
    AgentSpec agent;
    agent.local_set.dim = dim;
    agent.local_set.lower = Vec::Zero(dim);
    agent.local_set.upper = Vec::Zero(dim);
    agent.objective.q = Mat::Zero(dim, dim);
    agent.objective.c = Vec::Zero(dim);
    agent.local_set.witness = Vec::Zero(dim);
    for (int b = 0; b < nd; ++b) {
      const auto& bus = f.buses[static_cast<std::size_t>(b + 1)];
      agent.local_set.lower(b) = bus.der.pmin;
      agent.local_set.upper(b) = bus.der.pmax;
      agent.local_set.lower(nd + b) = bus.der.qmin;
      agent.local_set.upper(nd + b) = bus.der.qmax;
      if (bus.der.is_disc) {
        const double s = bus.der.s_cap;
        agent.local_set.lower(b) = -s;
        agent.local_set.upper(b) = s;
        agent.local_set.lower(nd + b) = -s;
        agent.local_set.upper(nd + b) = s;
        SocSlice disc;
        disc.u_idx = {b, nd + b};
        disc.radius = s;
        agent.local_set.soc_slices.push_back(disc);
      } else {
        agent.local_set.witness(b) = 0.5 * (bus.der.pmin + bus.der.pmax);
        agent.local_set.witness(nd + b) = 0.5 * (bus.der.qmin + bus.der.qmax);
      }
      agent.objective.q(b, b) = 2.0 * bus.alpha_p;
      agent.objective.q(nd + b, nd + b) = 2.0 * bus.alpha_q;
      agent.objective.c(b) = bus.beta_p;
      agent.variable_names.push_back(f.name + ".pg" + std::to_string(b + 1));
    }
    for (int b = 0; b < nd; ++b)
      agent.variable_names.push_back(f.name + ".qg" + std::to_string(b + 1));
    agent.local_set.lower(2 * nd) = tm.wmin[static_cast<std::size_t>(l)];
    agent.local_set.upper(2 * nd) = tm.wmax[static_cast<std::size_t>(l)];
    agent.local_set.witness(2 * nd) =
        0.5 * (tm.wmin[static_cast<std::size_t>(l)] +
               tm.wmax[static_cast<std::size_t>(l)]);
    agent.variable_names.push_back(f.name + ".w_interface");

    agent.coupling_eq = Mat::Zero(m_eq, dim);
    agent.coupling_eq_offset = Vec::Zero(m_eq);
    // P balance row: 1ᵀ p^G enters; demand goes to the offset.
    double pdsum = 0.0, qdsum = 0.0;
    for (int b = 0; b < nd; ++b) {
      pdsum += f.buses[static_cast<std::size_t>(b + 1)].pd;
      qdsum += f.buses[static_cast<std::size_t>(b + 1)].qd;
    }
    for (int b = 0; b < nd; ++b) {
      agent.coupling_eq(3 * l, b) = 1.0;
      agent.coupling_eq(3 * l + 1, nd + b) = 1.0;
    }
    agent.coupling_eq_offset(3 * l) =
        -pdsum - tm.pd[static_cast<std::size_t>(l)];
    agent.coupling_eq_offset(3 * l + 1) =
        -qdsum - tm.qd[static_cast<std::size_t>(l)];
    // Consensus: w_copy - [Re W]_ll = 0; aggregator side.
    agent.coupling_eq(3 * l + 2, 2 * nd) = 1.0;

    // LinDistFlow voltage boxes over aggregator variables only.
    const LinDistFlowMatrices ldf = lindistflow_matrices(f);
    Mat iq = Mat::Zero(m_ineq, dim);
    Vec iq_off = Vec::Zero(m_ineq);
    const Index base = ineq_base[static_cast<std::size_t>(l)];
    for (int i = 0; i < nd; ++i) {
      double fixed = 0.0;
      for (int b = 0; b < nd; ++b) {
        iq(base + i, b) = ldf.rho(i, b);
        iq(base + i, nd + b) = ldf.chi(i, b);
        iq(base + nd + i, b) = -ldf.rho(i, b);
        iq(base + nd + i, nd + b) = -ldf.chi(i, b);
        fixed -= ldf.rho(i, b) * f.buses[static_cast<std::size_t>(b + 1)].pd +
                 ldf.chi(i, b) * f.buses[static_cast<std::size_t>(b + 1)].qd;
      }
      iq(base + i, 2 * nd) = 1.0;
      iq(base + nd + i, 2 * nd) = -1.0;
      iq_off(base + i) =
          fixed - f.buses[static_cast<std::size_t>(i + 1)].wmax;
      iq_off(base + nd + i) =
          -fixed - (-f.buses[static_cast<std::size_t>(i + 1)].wmin);
    }
    agent.coupling_ineq = iq;
    agent.coupling_ineq_offset = iq_off;
    p.agents.push_back(std::move(agent));
  }

  // System operator agent.
  {
    const Index dim = lay.so_dim();
    const int re0 = lay.re_base();
    const int im0 = lay.im_base();
    AgentSpec so;
    so.local_set.dim = dim;
    so.local_set.lower = Vec::Constant(dim, -w_abs_cap);
    so.local_set.upper = Vec::Constant(dim, w_abs_cap);
    so.objective.q = Mat::Zero(dim, dim);
    so.objective.c = Vec::Zero(dim);
    for (int l = 0; l < nt; ++l) {
      const auto& g = tm.gens[static_cast<std::size_t>(l)];
      so.local_set.lower(l) = g.pmin;
      so.local_set.upper(l) = g.pmax;
      so.local_set.lower(nt + l) = g.qmin;
      so.local_set.upper(nt + l) = g.qmax;
      so.objective.q(l, l) = 2.0 * g.alpha_p;
      so.objective.q(nt + l, nt + l) = 2.0 * g.alpha_q;
      so.objective.c(l) = g.beta_p;
      so.variable_names.push_back("so.PG" + std::to_string(l + 1));
    }
    for (int l = 0; l < nt; ++l)
      so.variable_names.push_back("so.QG" + std::to_string(l + 1));
    for (int i = 0; i < nt; ++i)
      for (int j = 0; j < nt; ++j)
        so.variable_names.push_back("so.ReW" + std::to_string(i + 1) +
                                    std::to_string(j + 1));
    for (int i = 0; i < nt; ++i)
      for (int j = 0; j < nt; ++j)
        so.variable_names.push_back("so.ImW" + std::to_string(i + 1) +
                                    std::to_string(j + 1));

    // Diagonal Gram entries carry the voltage boxes; imaginary diagonal is
    // pinned to zero by the Hermitian structure of the PSD slice.
    for (int l = 0; l < nt; ++l) {
      so.local_set.lower(re0 + l * nt + l) = tm.wmin[static_cast<std::size_t>(l)];
      so.local_set.upper(re0 + l * nt + l) = tm.wmax[static_cast<std::size_t>(l)];
    }

    // Line flow caps: Tr(Phi_lk W) <= f per direction.
    std::vector<Vec> flow_rows;
    std::vector<double> flow_caps;
    for (const auto& line : tm.lines) {
      for (const auto& [a, b] : {std::pair{line.from, line.to},
                                 std::pair{line.to, line.from}}) {
        const PhiPsi lk = line_flow_matrices(nt, a, b, line.admittance);
        const Vec coef = trace_coefficients(lk.phi);
        Vec row = Vec::Zero(dim);
        row.segment(re0, 2 * nt * nt) = coef;
        flow_rows.push_back(row);
        flow_caps.push_back(line.flow_cap);
      }
    }
    so.local_set.a_ineq =
        Mat::Zero(static_cast<Index>(flow_rows.size()), dim);
    so.local_set.b_ineq = Vec::Zero(static_cast<Index>(flow_rows.size()));
    for (std::size_t r = 0; r < flow_rows.size(); ++r) {
      so.local_set.a_ineq.row(static_cast<Index>(r)) = flow_rows[r].transpose();
      so.local_set.b_ineq(static_cast<Index>(r)) = flow_caps[r];
    }

    PsdSlice gram;
    gram.order = nt;
    gram.embedding = PsdEmbedding::kHermitianPair;
    for (int i = 0; i < 2 * nt * nt; ++i) gram.idx.push_back(re0 + i);
    so.local_set.psd_slices.push_back(gram);

    // Witness: flat rank-one voltage profile W = w_mid 1 1ᵀ (all flows zero,
    // PSD, diagonal inside the box), generators at midpoints.
    so.local_set.witness = Vec::Zero(dim);
    double wmid_min = tm.wmax[0];
    for (int l = 0; l < nt; ++l)
      wmid_min = std::min(wmid_min, tm.wmax[static_cast<std::size_t>(l)]);
    double wmid_max = tm.wmin[0];
    for (int l = 0; l < nt; ++l)
      wmid_max = std::max(wmid_max, tm.wmin[static_cast<std::size_t>(l)]);
    const double wflat = 0.5 * (wmid_max + wmid_min);
    for (int l = 0; l < nt; ++l) {
      so.local_set.witness(l) =
          0.5 * (tm.gens[static_cast<std::size_t>(l)].pmin +
                 tm.gens[static_cast<std::size_t>(l)].pmax);
      so.local_set.witness(nt + l) =
          0.5 * (tm.gens[static_cast<std::size_t>(l)].qmin +
                 tm.gens[static_cast<std::size_t>(l)].qmax);
    }
    for (int i = 0; i < nt; ++i)
      for (int j = 0; j < nt; ++j)
        so.local_set.witness(re0 + i * nt + j) = wflat;

    so.coupling_eq = Mat::Zero(m_eq, dim);
    so.coupling_eq_offset = Vec::Zero(m_eq);
    for (int l = 0; l < nt; ++l) {
      const PhiPsi inj = bus_injection_matrices(tm, l);
      Vec prow = Vec::Zero(dim);
      prow(l) = 1.0;
      prow.segment(re0, 2 * nt * nt) = -trace_coefficients(inj.phi);
      so.coupling_eq.row(3 * l) = prow.transpose();
      Vec qrow = Vec::Zero(dim);
      qrow(nt + l) = 1.0;
      qrow.segment(re0, 2 * nt * nt) = -trace_coefficients(inj.psi);
      so.coupling_eq.row(3 * l + 1) = qrow.transpose();
      // Consensus: SO side of w_copy - [Re W]_ll = 0.
      so.coupling_eq(3 * l + 2, re0 + l * nt + l) = -1.0;
    }
    so.coupling_ineq = Mat::Zero(m_ineq, dim);
    so.coupling_ineq_offset = Vec::Zero(m_ineq);
    p.agents.push_back(std::move(so));
  }

  p.validate();
  return p;
}

/// Star communication graph with the system operator (last agent) at the hub.
inline CommGraph td_star_graph(int n_tran) {
  return CommGraph::star(n_tran + 1, n_tran);
}

/// Key-value T&D spec: `tran = <case>` and `feeder.<bus> = <case>` (1-indexed
/// transmission bus).
struct TdSpec {
  std::string tran_case;
  std::vector<std::string> feeder_cases;  // index = transmission bus - 1
};

inline TdSpec parse_td_spec(const std::string& text) {
  TdSpec spec;
  std::istringstream in(text);
  std::string line;
  std::map<int, std::string> feeders;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    auto trim = [](std::string& s) {
      while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
        s.erase(s.begin());
      while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
        s.pop_back();
    };
    trim(key);
    trim(value);
    if (key == "tran") spec.tran_case = value;
    else if (key.rfind("feeder.", 0) == 0) feeders[std::stoi(key.substr(7))] = value;
  }
  for (const auto& [bus, name] : feeders) {
    if (bus != static_cast<int>(spec.feeder_cases.size()) + 1)
      throw std::invalid_argument("td spec: feeder buses must be 1,2,...");
    spec.feeder_cases.push_back(name);
  }
  return spec;
}

}  // namespace dgopt
