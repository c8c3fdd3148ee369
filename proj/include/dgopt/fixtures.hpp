#pragma once

#include <map>
#include <string>

namespace dgopt {
namespace fixtures {

// Bundled case and spec files. `dgopt fixtures` writes them to disk; configs
// and tests reference them as builtin:<name>.

inline const char* kCase2Parse = R"(function mpc = case2parse
% two-bus golden fixture for the parser
mpc.baseMVA = 100;
mpc.bus = [
	1	3	0	0	0	0	1	1	0	1	1	1.1	0.9;
	2	1	25	10	0	0	1	1	0	1	1	1.1	0.9;  % load bus
];
mpc.branch = [
	1	2	0.01	0.1	0	50;
];
mpc.gen = [
	1	0	0	30	-30	1	100	1	80	0;
];
mpc.gencost = [
	2	0	0	3	0.02	10	0;
];
)";

// Three-bus area, cheap generation. Bus 3 is the tie endpoint when stitched.
inline const char* kCase3a = R"(function mpc = case3a
mpc.baseMVA = 100;
mpc.bus = [
	1	3	0	0	0	0	1	1	0	1	1	1.1	0.9;
	2	1	40	12	0	0	1	1	0	1	1	1.1	0.9;
	3	1	10	3	0	0	1	1	0	1	1	1.1	0.9;
];
mpc.branch = [
	1	2	0.01	0.1	0	120;
	2	3	0.01	0.1	0	120;
];
mpc.gen = [
	1	0	0	60	-60	1	100	1	200	0;
];
mpc.gencost = [
	2	0	0	3	0.02	10	0;
];
)";

// Mirror area with expensive generation.
inline const char* kCase3b = R"(function mpc = case3b
mpc.baseMVA = 100;
mpc.bus = [
	1	3	0	0	0	0	1	1	0	1	1	1.1	0.9;
	2	1	30	9	0	0	1	1	0	1	1	1.1	0.9;
	3	1	10	3	0	0	1	1	0	1	1	1.1	0.9;
];
mpc.branch = [
	1	2	0.012	0.11	0	120;
	2	3	0.012	0.11	0	120;
];
mpc.gen = [
	1	0	0	60	-60	1	100	1	200	0;
];
mpc.gencost = [
	2	0	0	3	0.03	25	0;
];
)";

inline const char* kStitch2Area = R"(# two-area stitch: tie congests at 20 MW
area.0 = builtin:case3a
area.1 = builtin:case3b
tie = 0 3 1 3 0.25 20
internal_capacity_mw = 100
cleanup_boundary = 1
)";

// Four-bus radial feeder (path 1-2-3-4) with DERs at buses 2..4; costs from
// the published 4-bus coefficient table.
inline const char* kCase4Der = R"(function mpc = case4der
mpc.baseMVA = 1;
mpc.bus = [
	1	3	0	0	0	0	1	1	0	1	1	1.1	0.9;
	2	1	0.3	0.1	0	0	1	1	0	1	1	1.1	0.9;
	3	1	0.3	0.1	0	0	1	1	0	1	1	1.1	0.9;
	4	1	0.4	0.15	0	0	1	1	0	1	1	1.1	0.9;
];
mpc.branch = [
	1	2	0.01	0.02	0	2;
	2	3	0.015	0.03	0	2;
	3	4	0.02	0.035	0	2;
];
mpc.gen = [
	1	0	0	10	-10	1	1	1	10	0;
	2	0	0	1	-1	1	1	1	1	0;
	3	0	0	1	-1	1	1	1	1	0;
	4	0	0	1	-1	1	1	1	1	0;
];
mpc.gencost = [
	2	0	0	3	0	30	0;
	2	0	0	3	6	19	0;
	2	0	0	3	7	18	0;
	2	0	0	3	8	17	0;
	2	0	0	3	5	0	0;
	2	0	0	3	5.1	0	0;
	2	0	0	3	5.2	0	0;
	2	0	0	3	5.3	0	0;
];
)";

inline const char* kGroup4Singleton = R"(# one agent per bus
group.0 = 1
group.1 = 2
group.2 = 3
group.3 = 4
ell_cap = 4.0
)";

inline const char* kGroup4Whole = R"(# one agent owning the whole feeder
group.0 = 1 2 3 4
)";

// Two-bus transmission network for the T&D instance; costs from the 6-bus
// coefficient table (buses 1 and 2).
inline const char* kCase2Tran = R"(function mpc = case2t
mpc.baseMVA = 1;
mpc.bus = [
	1	3	0.5	0.2	0	0	1	1	0	1	1	1.05	0.95;
	2	1	0.5	0.2	0	0	1	1	0	1	1	1.05	0.95;
];
mpc.branch = [
	1	2	0.05	0.2	0	2;
];
mpc.gen = [
	1	0	0	3	-3	1	1	1	3	0;
	2	0	0	3	-3	1	1	1	3	0;
];
mpc.gencost = [
	2	0	0	3	8.7	11	0;
	2	0	0	3	5.9	12	0;
	2	0	0	3	3.2	0	0;
	2	0	0	3	3.5	0	0;
];
)";

// Lossy three-bus feeders (root + two buses). The root generator stands for
// upstream procurement in standalone runs and is ignored by the T&D builder.
inline const char* kFeeder3a = R"(function mpc = feeder3a
mpc.baseMVA = 1;
mpc.bus = [
	1	3	0	0	0	0	1	1	0	1	1	1.1	0.9;
	2	1	0.5	0.2	0	0	1	1	0	1	1	1.1	0.9;
	3	1	0.5	0.2	0	0	1	1	0	1	1	1.1	0.9;
];
mpc.branch = [
	1	2	0.04	0.08	0	3;
	2	3	0.05	0.1	0	3;
];
mpc.gen = [
	1	0	0	10	-10	1	1	1	10	0;
	3	0	0	1	-1	1	1	1	1	0;
];
mpc.gencost = [
	2	0	0	3	0	30	0;
	2	0	0	3	4.5	18	0;
	2	0	0	3	5	0	0;
	2	0	0	3	2.7	0	0;
];
)";

inline const char* kFeeder3b = R"(function mpc = feeder3b
mpc.baseMVA = 1;
mpc.bus = [
	1	3	0	0	0	0	1	1	0	1	1	1.1	0.9;
	2	1	0.4	0.15	0	0	1	1	0	1	1	1.1	0.9;
	3	1	0.6	0.25	0	0	1	1	0	1	1	1.1	0.9;
];
mpc.branch = [
	1	2	0.03	0.06	0	3;
	2	3	0.04	0.09	0	3;
];
mpc.gen = [
	1	0	0	10	-10	1	1	1	10	0;
	2	0	0	1.2	-1.2	1	1	1	1.2	0;
];
mpc.gencost = [
	2	0	0	3	0	30	0;
	2	0	0	3	5.5	19	0;
	2	0	0	3	5	0	0;
	2	0	0	3	3.1	0	0;
];
)";

inline const char* kTd2Bus = R"(# two transmission buses, one lossy feeder each
tran = builtin:case2t
feeder.1 = builtin:feeder3a
feeder.2 = builtin:feeder3b
)";

inline const std::map<std::string, const char*>& registry() {
  static const std::map<std::string, const char*> reg = {
      {"case2parse", kCase2Parse}, {"case3a", kCase3a},
      {"case3b", kCase3b},         {"stitch2area", kStitch2Area},
      {"case4der", kCase4Der},     {"group4singleton", kGroup4Singleton},
      {"group4whole", kGroup4Whole}, {"case2t", kCase2Tran},
      {"feeder3a", kFeeder3a},     {"feeder3b", kFeeder3b},
      {"td2bus", kTd2Bus},
  };
  return reg;
}

inline std::string lookup(const std::string& name) {
  const auto it = registry().find(name);
  if (it == registry().end())
    throw std::invalid_argument("unknown builtin fixture: " + name);
  return it->second;
}

}  // namespace fixtures
}  // namespace dgopt
