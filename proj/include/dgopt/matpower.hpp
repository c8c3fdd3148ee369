#pragma once

#include <array>
#include <cctype>
#include <charconv>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "dgopt/types.hpp"

namespace dgopt {

// ---------------------------------------------------------------------------
// Case data: the parsed subset of the MATPOWER case format. Column meanings
// follow the standard caseformat tables.
// ---------------------------------------------------------------------------

struct BusRow {
  int id = 0;
  int type = 1;  // 1 PQ, 2 PV, 3 ref
  double pd = 0.0, qd = 0.0;  // MW, MVAr
  double vmax = 1.1, vmin = 0.9;
  double gs = 0.0, bs = 0.0;  // shunt MW / MVAr at V = 1 p.u.
};

struct BranchRow {
  int from = 0, to = 0;
  double r = 0.0, x = 0.0, b = 0.0;
  double rate_a = 0.0;  // MVA; 0 = unlimited
};

struct GenRow {
  int bus = 0;
  double pmin = 0.0, pmax = 0.0;
  double qmin = 0.0, qmax = 0.0;
};

struct GenCostRow {
  int model = 2;  // 2 = polynomial
  int ncost = 0;
  std::vector<double> coeffs;  // highest degree first, MATPOWER convention
};

struct CaseData {
  std::string name;
  double base_mva = 100.0;
  std::vector<BusRow> buses;
  std::vector<BranchRow> branches;
  std::vector<GenRow> gens;
  std::vector<GenCostRow> gencosts;  // ng rows for P; optionally ng more for Q

  int bus_index(int id) const {
    for (std::size_t i = 0; i < buses.size(); ++i)
      if (buses[i].id == id) return static_cast<int>(i);
    throw std::invalid_argument("case " + name + ": unknown bus id " +
                                std::to_string(id));
  }

  void validate() const {
    for (std::size_t i = 0; i < buses.size(); ++i)
      for (std::size_t j = i + 1; j < buses.size(); ++j)
        if (buses[i].id == buses[j].id)
          throw std::invalid_argument("case " + name + ": duplicate bus id " +
                                      std::to_string(buses[i].id));
    for (const auto& br : branches) {
      bus_index(br.from);
      bus_index(br.to);
      if (br.rate_a < 0.0)
        throw std::invalid_argument("case " + name + ": negative rateA");
    }
    for (const auto& g : gens) bus_index(g.bus);
  }
};

// ---------------------------------------------------------------------------
// Parser. Tolerant line-oriented grammar for the five mpc.* assignments:
// comments stripped, bracketed numeric rows, semicolon or newline row
// terminators. Unknown assignments are ignored.
// ---------------------------------------------------------------------------

namespace matpower_detail {

inline std::string strip_comment(std::string line) {
  const auto pos = line.find('%');
  if (pos != std::string::npos) line.resize(pos);
  return line;
}

inline double parse_number(const std::string& tok, int lineno) {
  double v = 0.0;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last)
    throw std::invalid_argument("matpower parse: bad number '" + tok +
                                "' at line " + std::to_string(lineno));
  return v;
}

/// Shortest decimal text that round-trips the double exactly.
inline std::string format_number(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

struct RawTables {
  std::map<std::string, std::vector<std::vector<double>>> matrices;
  std::map<std::string, double> scalars;
  std::map<std::string, std::string> strings;
};

inline RawTables scan(const std::string& text) {
  RawTables out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  std::string current;  // table currently being filled
  std::vector<std::vector<double>> rows;
  std::vector<double> pending;  // row split across lines

  auto flush_pending = [&](int ln) {
    if (!pending.empty()) {
      if (!rows.empty() && rows.back().size() != pending.size())
        throw std::invalid_argument(
            "matpower parse: ragged row at line " + std::to_string(ln) +
            " (" + std::to_string(pending.size()) + " vs " +
            std::to_string(rows.back().size()) + " columns)");
      rows.push_back(std::move(pending));
      pending.clear();
    }
  };

  while (std::getline(in, line)) {
    ++lineno;
    line = strip_comment(line);
    std::string rest = line;

    if (current.empty()) {
      const auto eq = line.find('=');
      const auto mpc = line.find("mpc.");
      if (mpc == std::string::npos || eq == std::string::npos || eq < mpc)
        continue;
      std::string key = line.substr(mpc + 4, eq - mpc - 4);
      while (!key.empty() && (key.back() == ' ' || key.back() == '\t'))
        key.pop_back();
      std::string value = line.substr(eq + 1);
      const auto bracket = value.find('[');
      if (bracket == std::string::npos) {
        const auto quote = value.find('\'');
        if (quote != std::string::npos) {
          const auto endq = value.find('\'', quote + 1);
          out.strings[key] = value.substr(quote + 1, endq - quote - 1);
        } else {
          std::string tok;
          std::istringstream vs(value);
          vs >> tok;
          if (!tok.empty() && tok.back() == ';') tok.pop_back();
          if (!tok.empty()) out.scalars[key] = parse_number(tok, lineno);
        }
        continue;
      }
      current = key;
      rows.clear();
      pending.clear();
      rest = value.substr(bracket + 1);
    }

    // Inside a matrix: consume tokens until the closing bracket.
    std::string chunk = rest;
    const auto close = chunk.find(']');
    const bool closing = close != std::string::npos;
    if (closing) chunk.resize(close);
    std::istringstream ls(chunk);
    std::string tok;
    while (ls >> tok) {
      bool row_end = false;
      while (!tok.empty() && (tok.back() == ';' || tok.back() == ',')) {
        if (tok.back() == ';') row_end = true;
        tok.pop_back();
      }
      if (!tok.empty()) pending.push_back(parse_number(tok, lineno));
      if (row_end) flush_pending(lineno);
    }
    if (closing) {
      flush_pending(lineno);
      out.matrices[current] = std::move(rows);
      rows.clear();
      current.clear();
    }
  }
  if (!current.empty())
    throw std::invalid_argument("matpower parse: unterminated mpc." + current);
  return out;
}

inline double col(const std::vector<double>& row, std::size_t i,
                  double fallback = 0.0) {
  return i < row.size() ? row[i] : fallback;
}

}  // namespace matpower_detail

inline CaseData parse_case(const std::string& text,
                           const std::string& name = "case") {
  using namespace matpower_detail;
  const RawTables raw = scan(text);
  CaseData c;
  c.name = name;
  if (auto it = raw.strings.find("name"); it != raw.strings.end())
    c.name = it->second;

  if (auto it = raw.scalars.find("baseMVA"); it != raw.scalars.end())
    c.base_mva = it->second;
  else
    throw std::invalid_argument("matpower parse: missing mpc.baseMVA");

  const auto need = [&](const char* key)
      -> const std::vector<std::vector<double>>& {
    auto it = raw.matrices.find(key);
    if (it == raw.matrices.end())
      throw std::invalid_argument(std::string("matpower parse: missing mpc.") +
                                  key);
    return it->second;
  };

  for (const auto& row : need("bus")) {
    BusRow b;
    b.id = static_cast<int>(col(row, 0));
    b.type = static_cast<int>(col(row, 1, 1));
    b.pd = col(row, 2);
    b.qd = col(row, 3);
    b.gs = col(row, 4);
    b.bs = col(row, 5);
    b.vmax = col(row, 11, 1.1);
    b.vmin = col(row, 12, 0.9);
    c.buses.push_back(b);
  }
  for (const auto& row : need("branch")) {
    BranchRow b;
    b.from = static_cast<int>(col(row, 0));
    b.to = static_cast<int>(col(row, 1));
    b.r = col(row, 2);
    b.x = col(row, 3);
    b.b = col(row, 4);
    b.rate_a = col(row, 5);
    c.branches.push_back(b);
  }
  for (const auto& row : need("gen")) {
    GenRow g;
    g.bus = static_cast<int>(col(row, 0));
    g.qmax = col(row, 3);
    g.qmin = col(row, 4);
    g.pmax = col(row, 8);
    g.pmin = col(row, 9);
    c.gens.push_back(g);
  }
  for (const auto& row : need("gencost")) {
    GenCostRow g;
    g.model = static_cast<int>(col(row, 0, 2));
    g.ncost = static_cast<int>(col(row, 3));
    for (std::size_t i = 4; i < row.size(); ++i) g.coeffs.push_back(row[i]);
    c.gencosts.push_back(g);
  }
  c.validate();
  return c;
}

/// Serializer for the parsed subset; parse(serialize(parse(t))) is a fixed
/// point because numbers are printed with round-trip-exact shortest decimals.
inline std::string serialize_case(const CaseData& c) {
  using matpower_detail::format_number;
  std::string out;
  out += "function mpc = " + c.name + "\n";
  out += "mpc.baseMVA = " + format_number(c.base_mva) + ";\n";
  out += "mpc.bus = [\n";
  for (const auto& b : c.buses) {
    out += "\t" + std::to_string(b.id) + "\t" + std::to_string(b.type);
    for (double v : {b.pd, b.qd, b.gs, b.bs}) out += "\t" + format_number(v);
    out += "\t1\t1\t0\t1\t1";  // area, Vm, Va, baseKV, zone placeholders
    out += "\t" + format_number(b.vmax) + "\t" + format_number(b.vmin) + ";\n";
  }
  out += "];\n";
  out += "mpc.branch = [\n";
  for (const auto& b : c.branches) {
    out += "\t" + std::to_string(b.from) + "\t" + std::to_string(b.to);
    for (double v : {b.r, b.x, b.b, b.rate_a}) out += "\t" + format_number(v);
    out += ";\n";
  }
  out += "];\n";
  out += "mpc.gen = [\n";
  for (const auto& g : c.gens) {
    out += "\t" + std::to_string(g.bus) + "\t0\t0";
    out += "\t" + format_number(g.qmax) + "\t" + format_number(g.qmin);
    out += "\t1\t100\t1";  // Vg, mBase, status
    out += "\t" + format_number(g.pmax) + "\t" + format_number(g.pmin) + ";\n";
  }
  out += "];\n";
  out += "mpc.gencost = [\n";
  for (const auto& g : c.gencosts) {
    out += "\t" + std::to_string(g.model) + "\t0\t0\t" +
           std::to_string(g.ncost);
    for (double v : g.coeffs) out += "\t" + format_number(v);
    out += ";\n";
  }
  out += "];\n";
  return out;
}

// ---------------------------------------------------------------------------
// Appendix-style case modifications.
// ---------------------------------------------------------------------------

/// Drops quadratic terms, then scales each linear coefficient by
/// (0.99 + 0.02 xi) with the provided xi draws.
inline std::vector<double> perturb_costs(const std::vector<double>& linear,
                                         const std::vector<double>& xi) {
  if (xi.size() != linear.size())
    throw std::invalid_argument("perturb_costs: xi size mismatch");
  std::vector<double> out(linear.size());
  for (std::size_t i = 0; i < linear.size(); ++i)
    out[i] = linear[i] * (0.99 + 0.02 * xi[i]);
  return out;
}

inline std::vector<double> perturb_costs(const std::vector<double>& linear,
                                         std::uint64_t seed) {
  CounterRng rng(seed, 0xC057ULL);
  std::vector<double> xi(linear.size());
  for (auto& v : xi) v = rng.normal();
  return perturb_costs(linear, xi);
}

struct LoadScaleResult {
  std::vector<double> loads;
  int negative_scales = 0;  // Gaussian draws can flip signs; flagged, kept
};

/// Scales each load by [omega + (omega' - omega) xi], xi ~ N(0,1) per load.
inline LoadScaleResult randomize_loads(const std::vector<double>& loads,
                                       double omega, double omega_prime,
                                       const std::vector<double>& xi) {
  if (omega > omega_prime)
    throw std::invalid_argument("randomize_loads: omega > omega'");
  if (xi.size() != loads.size())
    throw std::invalid_argument("randomize_loads: xi size mismatch");
  LoadScaleResult out;
  out.loads.resize(loads.size());
  for (std::size_t i = 0; i < loads.size(); ++i) {
    const double scale = omega + (omega_prime - omega) * xi[i];
    if (scale < 0.0) ++out.negative_scales;
    out.loads[i] = loads[i] * scale;
  }
  return out;
}

inline LoadScaleResult randomize_loads(const std::vector<double>& loads,
                                       double omega, double omega_prime,
                                       std::uint64_t seed,
                                       std::uint64_t stream = 0) {
  CounterRng rng(seed, 0x10AD5ULL + stream);
  std::vector<double> xi(loads.size());
  for (auto& v : xi) v = rng.normal();
  return randomize_loads(loads, omega, omega_prime, xi);
}

/// The tracking experiment's change-point schedule of (omega, omega') pairs.
inline const std::vector<std::pair<double, double>>& tracking_schedule() {
  static const std::vector<std::pair<double, double>> schedule = {
      {0.70, 1.30}, {0.80, 1.20}, {0.85, 1.15}, {0.75, 1.20}, {0.95, 1.05}};
  return schedule;
}

// ---------------------------------------------------------------------------
// Multi-area stitching.
// ---------------------------------------------------------------------------

struct TieLine {
  int area_a = 0;
  int bus_a = 0;
  int area_b = 0;
  int bus_b = 0;
  double reactance = 0.25;   // p.u.
  double capacity_mw = 100.0;
};

struct StitchSpec {
  std::vector<std::string> area_names;
  std::vector<TieLine> ties;
  double internal_capacity_mw = 100.0;  // <= 0 keeps case values
  bool cleanup_boundary = true;  // remove loads and gens at boundary buses
};

struct MultiAreaData {
  std::vector<CaseData> areas;
  std::vector<TieLine> ties;
};

/// Applies the stitching recipe: uniform internal line capacities, tie lines
/// with default 0.25 p.u. reactance and 100 MW capacity, and removal of loads
/// and generators at boundary buses when the cleanup flag is set.
inline MultiAreaData stitch_areas(std::vector<CaseData> cases,
                                  const StitchSpec& spec) {
  MultiAreaData out;
  for (const auto& tie : spec.ties) {
    const auto check = [&](int area, int bus) {
      if (area < 0 || area >= static_cast<int>(cases.size()))
        throw std::invalid_argument("stitch_areas: tie references area " +
                                    std::to_string(area));
      cases[static_cast<std::size_t>(area)].bus_index(bus);
    };
    check(tie.area_a, tie.bus_a);
    check(tie.area_b, tie.bus_b);
    if (tie.area_a == tie.area_b)
      throw std::invalid_argument("stitch_areas: tie must join two areas");
  }

  for (std::size_t a = 0; a < cases.size(); ++a) {
    CaseData& c = cases[a];
    if (spec.internal_capacity_mw > 0.0)
      for (auto& br : c.branches) br.rate_a = spec.internal_capacity_mw;
    if (spec.cleanup_boundary) {
      for (const auto& tie : spec.ties) {
        const std::array<std::pair<int, int>, 2> ends = {
            {{tie.area_a, tie.bus_a}, {tie.area_b, tie.bus_b}}};
        for (const auto& [area, bus] : ends) {
          if (area != static_cast<int>(a)) continue;
          auto& b = c.buses[static_cast<std::size_t>(c.bus_index(bus))];
          b.pd = 0.0;
          b.qd = 0.0;
          std::vector<GenRow> kept;
          std::vector<GenCostRow> kept_costs;
          for (std::size_t g = 0; g < c.gens.size(); ++g) {
            if (c.gens[g].bus == bus) continue;
            kept.push_back(c.gens[g]);
            if (g < c.gencosts.size()) kept_costs.push_back(c.gencosts[g]);
          }
          c.gens = std::move(kept);
          c.gencosts = std::move(kept_costs);
        }
      }
    }
    // Every boundary bus must stay attached to its area network.
    for (const auto& tie : spec.ties) {
      const std::array<std::pair<int, int>, 2> ends = {
          {{tie.area_a, tie.bus_a}, {tie.area_b, tie.bus_b}}};
      for (const auto& [area, bus] : ends) {
        if (area != static_cast<int>(a) || c.buses.size() == 1) continue;
        bool attached = false;
        for (const auto& br : c.branches)
          if (br.from == bus || br.to == bus) attached = true;
        if (!attached)
          throw std::invalid_argument(
              "stitch_areas: boundary bus " + std::to_string(bus) +
              " in area " + std::to_string(area) +
              " has no remaining connectivity");
      }
    }
  }
  out.areas = std::move(cases);
  out.ties = spec.ties;
  return out;
}

/// Key-value stitch spec format:
///   area.<i> = <case path or builtin name>
///   tie = <area_a> <bus_a> <area_b> <bus_b> [reactance] [capacity_mw]
///   internal_capacity_mw = <value>
///   cleanup_boundary = 0|1
inline StitchSpec parse_stitch_spec(const std::string& text) {
  StitchSpec spec;
  std::istringstream in(text);
  std::string line;
  std::map<int, std::string> areas;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
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
    if (key.rfind("area.", 0) == 0) {
      areas[std::stoi(key.substr(5))] = value;
    } else if (key == "tie") {
      std::istringstream vs(value);
      TieLine t;
      if (!(vs >> t.area_a >> t.bus_a >> t.area_b >> t.bus_b))
        throw std::invalid_argument("stitch spec: bad tie at line " +
                                    std::to_string(lineno));
      vs >> t.reactance >> t.capacity_mw;
      spec.ties.push_back(t);
    } else if (key == "internal_capacity_mw") {
      spec.internal_capacity_mw = std::stod(value);
    } else if (key == "cleanup_boundary") {
      spec.cleanup_boundary = std::stoi(value) != 0;
    }
  }
  for (const auto& [idx, name] : areas) {
    if (idx != static_cast<int>(spec.area_names.size()))
      throw std::invalid_argument("stitch spec: area indices must be 0,1,...");
    spec.area_names.push_back(name);
  }
  return spec;
}

}  // namespace dgopt
