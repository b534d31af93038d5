#pragma once

// Built-in network data for the two benchmark feeders (BW-33 and TPC-94):
// branch tables in ohms, nominal loads in kW/kVAR, and the solar siting
// layouts. Values are kept exactly as published; conversion to per-unit
// happens in make_bw33()/make_tpc94().

#include "dnr/grid.hpp"

#include <map>
#include <string>
#include <vector>

namespace dnr::cases {

struct RawBranch {
    int id, from, to;  // 1-indexed nodes
    double r_ohm, x_ohm;
};

struct RawLoad {
    int node;  // 1-indexed
    double p_kw, q_kvar;
};

struct SolarSite {
    int node;  // 1-indexed
    double nameplate_kw;
};

// ---------------------------------------------------------------- BW-33 ----

inline const std::vector<RawBranch>& bw33_branches() {
    static const std::vector<RawBranch> t = {
        {1, 1, 2, 0.0922, 0.0470},   {2, 2, 3, 0.4930, 0.2511},
        {3, 3, 4, 0.3660, 0.1864},   {4, 4, 5, 0.3811, 0.1941},
        {5, 5, 6, 0.8190, 0.707},    {6, 6, 7, 0.1872, 0.6188},
        {7, 7, 8, 0.7114, 0.2351},   {8, 8, 9, 1.030, 0.7400},
        {9, 9, 10, 1.0440, 0.7400},  {10, 10, 11, 0.1966, 0.0650},
        {11, 11, 12, 0.3744, 0.1238},{12, 12, 13, 1.4680, 1.1550},
        {13, 13, 14, 0.5416, 0.7129},{14, 14, 15, 0.5910, 0.5260},
        {15, 15, 16, 0.7463, 0.5450},{16, 16, 17, 1.2890, 1.7210},
        {17, 17, 18, 0.7320, 0.5740},{18, 2, 19, 0.1640, 0.1565},
        {19, 19, 20, 1.5042, 1.3554},{20, 20, 21, 0.4095, 0.4784},
        {21, 21, 22, 0.7089, 0.9373},{22, 3, 23, 0.4512, 0.3083},
        {23, 23, 24, 0.8980, 0.7091},{24, 24, 25, 0.8960, 0.7011},
        {25, 6, 26, 0.2030, 0.1034}, {26, 26, 27, 0.2842, 0.1447},
        {27, 27, 28, 1.0590, 0.9337},{28, 28, 29, 0.8042, 0.7006},
        {29, 29, 30, 0.5075, 0.2585},{30, 30, 31, 0.9744, 0.9630},
        {31, 31, 32, 0.3105, 0.3619},{32, 32, 33, 0.3410, 0.5302},
        {33, 8, 21, 2.00, 2.00},     {34, 9, 15, 2.00, 2.00},
        {35, 12, 22, 2.00, 2.00},    {36, 18, 33, 0.500, 0.500},
        {37, 25, 29, 0.500, 0.500},
    };
    return t;
}

// Switchable branches: the 5 tie lines (33-37, normally open) plus
// sectionalizing lines 4, 10 and 26 (normally closed).
inline const std::vector<int>& bw33_switch_ids() {
    static const std::vector<int> s = {4, 10, 26, 33, 34, 35, 36, 37};
    return s;
}
inline const std::vector<int>& bw33_normally_closed_switch_ids() {
    static const std::vector<int> s = {4, 10, 26};
    return s;
}

inline const std::vector<RawLoad>& bw33_loads() {
    static const std::vector<RawLoad> t = {
        {2, 100, 60},  {3, 90, 40},   {4, 120, 80},  {5, 60, 30},   {6, 60, 20},
        {7, 200, 100}, {8, 200, 100}, {9, 60, 20},   {10, 60, 20},  {11, 45, 30},
        {12, 60, 35},  {13, 60, 35},  {14, 120, 80}, {15, 60, 10},  {16, 60, 20},
        {17, 60, 20},  {18, 90, 40},  {19, 90, 40},  {20, 90, 40},  {21, 90, 40},
        {22, 90, 40},  {23, 90, 50},  {24, 420, 200},{25, 420, 200},{26, 60, 25},
        {27, 60, 25},  {28, 60, 20},  {29, 120, 70}, {30, 200, 600},{31, 150, 70},
        {32, 210, 100},{33, 60, 40},
    };
    return t;
}

inline const std::map<std::string, std::vector<SolarSite>>& bw33_solar_layouts() {
    static const std::map<std::string, std::vector<SolarSite>> m = {
        {"DD-U", {{4, 60}, {7, 100}, {12, 120}, {14, 80}, {19, 110}, {23, 80},
                  {21, 110}, {26, 70}, {29, 60}, {32, 150}}},
        {"DD-I", {{2, 185}, {4, 160}, {7, 200}, {19, 185}, {23, 210}}},
        {"DD-II", {{12, 300}, {14, 160}, {15, 200}, {16, 280}}},
        {"DD-III", {{29, 300}, {30, 160}, {31, 200}, {32, 280}}},
        {"DD-II+III", {{12, 170}, {14, 100}, {15, 180}, {29, 160}, {31, 190}, {32, 140}}},
    };
    return m;
}

constexpr double kBw33BaseKv = 12.66;
constexpr double kBw33BaseKva = 10000.0;  // 10 MVA
constexpr double kBw33Vlo = 0.87 * 0.87;  // squared-magnitude pu
constexpr double kBw33Vhi = 1.05 * 1.05;

// --------------------------------------------------------------- TPC-94 ----

inline const std::vector<RawBranch>& tpc94_branches() {
    static const std::vector<RawBranch> t = {
        {1, 1, 12, 0.0085, 0.0290},  {2, 12, 13, 0.0092, 0.0188},
        {3, 13, 14, 0.0103, 0.0212}, {4, 14, 15, 0.0040, 0.0082},
        {5, 15, 16, 0.0092, 0.0188}, {6, 16, 17, 0.0017, 0.0035},
        {7, 17, 18, 0.0018, 0.0060}, {8, 18, 19, 0.0046, 0.0094},
        {9, 18, 20, 0.0103, 0.0212}, {10, 18, 21, 0.0046, 0.0094},
        {11, 2, 22, 0.0034, 0.0071}, {12, 22, 23, 0.0149, 0.0303},
        {13, 23, 24, 0.0011, 0.0024},{14, 23, 25, 0.0034, 0.0071},
        {15, 3, 26, 0.0050, 0.0169}, {16, 26, 27, 0.0023, 0.0047},
        {17, 27, 28, 0.0023, 0.0047},{18, 28, 29, 0.0069, 0.0141},
        {19, 29, 30, 0.0017, 0.0035},{20, 30, 31, 0.0074, 0.0153},
        {21, 31, 32, 0.0103, 0.0212},{22, 32, 33, 0.0069, 0.0141},
        {23, 32, 34, 0.0086, 0.0176},{24, 34, 35, 0.0057, 0.0118},
        {25, 4, 36, 0.0025, 0.0084}, {26, 36, 37, 0.0046, 0.0094},
        {27, 37, 38, 0.0109, 0.0223},{28, 38, 39, 0.0021, 0.0072},
        {29, 39, 40, 0.0057, 0.0118},{30, 5, 41, 0.0086, 0.0173},
        {31, 41, 42, 0.0057, 0.0118},{32, 42, 43, 0.0057, 0.0118},
        {33, 43, 44, 0.0011, 0.0024},{34, 44, 45, 0.0074, 0.0153},
        {35, 45, 46, 0.0023, 0.0047},{36, 46, 47, 0.0218, 0.0447},
        {37, 47, 48, 0.0017, 0.0035},{38, 48, 49, 0.0017, 0.0035},
        {39, 49, 50, 0.0034, 0.0071},{40, 50, 51, 0.0092, 0.0188},
        {41, 49, 52, 0.0086, 0.0176},{42, 52, 53, 0.0092, 0.0188},
        {43, 6, 54, 0.0021, 0.0072}, {44, 54, 55, 0.0017, 0.0035},
        {45, 55, 56, 0.0057, 0.0118},{46, 56, 57, 0.0103, 0.0212},
        {47, 7, 58, 0.0106, 0.0362}, {48, 58, 59, 0.0029, 0.0059},
        {49, 59, 60, 0.0029, 0.0059},{50, 60, 61, 0.0017, 0.0035},
        {51, 61, 62, 0.0034, 0.0071},{52, 62, 63, 0.0017, 0.0035},
        {53, 63, 64, 0.0034, 0.0071},{54, 64, 65, 0.0023, 0.0047},
        {55, 65, 66, 0.0057, 0.0118},{56, 8, 67, 0.0099, 0.0338},
        {57, 67, 68, 0.0235, 0.0482},{58, 68, 69, 0.0023, 0.0047},
        {59, 69, 70, 0.0018, 0.0060},{60, 70, 71, 0.0017, 0.0035},
        {61, 71, 72, 0.0011, 0.0024},{62, 72, 73, 0.0046, 0.0094},
        {63, 73, 74, 0.0103, 0.0212},{64, 74, 75, 0.0011, 0.0036},
        {65, 9, 76, 0.0021, 0.0072}, {66, 76, 77, 0.0074, 0.0153},
        {67, 77, 78, 0.0053, 0.0181},{68, 78, 79, 0.0096, 0.0326},
        {69, 79, 80, 0.0021, 0.0072},{70, 80, 81, 0.0032, 0.0109},
        {71, 81, 82, 0.0025, 0.0084},{72, 82, 83, 0.0011, 0.0023},
        {73, 10, 84, 0.0142, 0.0483},{74, 84, 85, 0.0014, 0.0048},
        {75, 85, 86, 0.0025, 0.0084},{76, 86, 87, 0.0021, 0.0072},
        {77, 11, 88, 0.0110, 0.0374},{78, 88, 89, 0.0057, 0.0193},
        {79, 89, 90, 0.0021, 0.0072},{80, 90, 91, 0.0057, 0.0115},
        {81, 91, 92, 0.0057, 0.0115},{82, 92, 93, 0.0040, 0.0082},
        {83, 93, 94, 0.0137, 0.0282},{84, 16, 66, 0.0057, 0.0118},
        {85, 18, 71, 0.0057, 0.0118},{86, 22, 54, 0.0057, 0.0118},
        {87, 23, 83, 0.0149, 0.0306},{88, 24, 87, 0.0200, 0.0411},
        {89, 25, 29, 0.0235, 0.0473},{90, 27, 37, 0.0040, 0.0082},
        {91, 31, 94, 0.0034, 0.0071},{92, 39, 43, 0.0023, 0.0047},
        {93, 40, 50, 0.0034, 0.0071},{94, 45, 57, 0.0011, 0.0024},
        {95, 51, 53, 0.0086, 0.0176},{96, 64, 75, 0.0017, 0.0035},
        {97, 70, 78, 0.0077, 0.0158},
    };
    return t;
}

// Switches: the 14 tie lines, branches 84-97. All normally open.
inline const std::vector<int>& tpc94_switch_ids() {
    static const std::vector<int> s = {84, 85, 86, 87, 88, 89, 90, 91, 92, 93, 94, 95, 96, 97};
    return s;
}

inline const std::vector<RawLoad>& tpc94_loads() {
    static const std::vector<RawLoad> t = {
        {13, 100, 50},   {14, 300, 200},  {15, 350, 250},  {16, 220, 100},
        {17, 1100, 800}, {18, 400, 320},  {19, 300, 200},  {20, 300, 230},
        {21, 300, 260},  {23, 1200, 800}, {24, 800, 600},  {25, 700, 500},
        {27, 300, 150},  {28, 500, 350},  {29, 700, 400},  {30, 1200, 1000},
        {31, 300, 300},  {32, 400, 350},  {33, 50, 20},    {34, 50, 20},
        {35, 50, 10},    {36, 50, 30},    {37, 100, 60},   {38, 100, 70},
        {39, 1800, 1300},{40, 200, 120},  {42, 1800, 1600},{43, 200, 150},
        {44, 200, 100},  {45, 800, 600},  {46, 100, 60},   {47, 100, 60},
        {48, 20, 10},    {49, 20, 10},    {50, 20, 10},    {51, 20, 10},
        {52, 200, 160},  {53, 50, 30},    {55, 30, 20},    {56, 800, 700},
        {57, 200, 150},  {61, 200, 160},  {62, 800, 600},  {63, 500, 300},
        {64, 500, 350},  {65, 500, 300},  {66, 200, 80},   {68, 30, 20},
        {69, 600, 420},  {71, 20, 10},    {72, 20, 10},    {73, 200, 130},
        {74, 300, 240},  {75, 300, 200},  {77, 50, 30},    {79, 400, 360},
        {82, 2000, 1500},{83, 200, 150},  {86, 1200, 950}, {87, 300, 180},
        {89, 400, 360},  {90, 2000, 1300},{91, 200, 140},  {92, 500, 360},
        {93, 100, 30},   {94, 400, 360},
    };
    return t;
}

inline const std::map<std::string, std::vector<SolarSite>>& tpc94_solar_layouts() {
    static const std::map<std::string, std::vector<SolarSite>> m = {
        {"S1",
         {{5, 150},  {8, 200},  {10, 330}, {20, 585}, {21, 340}, {22, 750}, {24, 400},
          {28, 350}, {40, 250}, {42, 450}, {43, 305}, {45, 250}, {46, 320}, {48, 240},
          {50, 120}, {53, 430}, {65, 180}, {69, 340}, {70, 250}, {74, 250}}},
        {"solar-error",
         {{3, 250},  {6, 310},  {8, 200},  {9, 280},  {20, 585}, {21, 380}, {22, 750},
          {24, 450}, {28, 350}, {29, 350}, {36, 250}, {42, 450}, {43, 325}, {45, 310},
          {46, 290}, {48, 240}, {50, 120}, {53, 430}, {65, 230}, {69, 380}, {70, 230},
          {74, 250}, {78, 120}, {81, 150}}},
    };
    return m;
}

// Commercial-load siting (node, profile kind) for the mixed dataset.
// Labels: 1 hospital, 2 office, 3 restaurant, 4 retail, 5 warehouse.
inline const std::vector<std::pair<int, int>>& tpc94_commercial_sites() {
    static const std::vector<std::pair<int, int>> t = {
        {13, 4}, {16, 2}, {17, 1}, {23, 2}, {28, 2}, {30, 1}, {34, 5}, {35, 5},
        {36, 5}, {37, 4}, {39, 1}, {40, 2}, {42, 4}, {47, 4}, {52, 2}, {55, 3},
        {61, 2}, {74, 2}, {77, 5}, {82, 2}, {86, 3}, {87, 2}, {90, 5}, {93, 4},
    };
    return t;
}

constexpr double kTpc94BaseKv = 11.4;
constexpr double kTpc94BaseKva = 10000.0;
constexpr double kTpc94Vlo = 0.95 * 0.95;
constexpr double kTpc94Vhi = 1.05 * 1.05;

// The 11 feeder-head (T-D substation) nodes, 1-indexed. Node 1 is the model
// slack; the remaining heads act as bulk-import generators.
inline const std::vector<int>& tpc94_feeder_heads() {
    static const std::vector<int> t = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11};
    return t;
}

// ------------------------------------------------------------ builders ----

struct CaseData {
    GridModel grid;
    Vec p_load_nom;          // pu
    Vec q_load_nom;          // pu
    std::vector<int> bulk_source_nodes;  // 0-indexed, excluding the PCC
    std::vector<double> default_switch_state;  // y for the datasheet topology
};

inline CaseData build_case(const std::vector<RawBranch>& branches,
                           const std::vector<int>& switch_ids,
                           const std::vector<RawLoad>& loads, double base_kv, double base_kva,
                           double v_lo, double v_hi, const std::vector<int>& closed_switch_ids,
                           const std::vector<int>& bulk_heads) {
    double z_base = base_kv * base_kv * 1000.0 / base_kva;
    int n = 0;
    std::vector<Line> lines;
    for (const RawBranch& b : branches) {
        Line ln;
        ln.id = b.id;
        ln.from = b.from - 1;
        ln.to = b.to - 1;
        ln.r = b.r_ohm / z_base;
        ln.x = b.x_ohm / z_base;
        ln.is_switch = std::find(switch_ids.begin(), switch_ids.end(), b.id) != switch_ids.end();
        n = std::max({n, b.from, b.to});
        lines.push_back(ln);
    }
    GridModel grid(n, 0, std::move(lines), base_kva, v_lo, v_hi);
    Vec pl = Vec::Zero(n), ql = Vec::Zero(n);
    for (const RawLoad& l : loads) {
        pl[l.node - 1] = l.p_kw / base_kva;
        ql[l.node - 1] = l.q_kvar / base_kva;
    }
    std::vector<double> y0(grid.switch_count(), 0.0);
    for (int s = 0; s < grid.switch_count(); ++s) {
        int id = grid.line(grid.switch_lines()[s]).id;
        if (std::find(closed_switch_ids.begin(), closed_switch_ids.end(), id) !=
            closed_switch_ids.end())
            y0[s] = 1.0;
    }
    std::vector<int> bulk;
    for (int h : bulk_heads)
        if (h - 1 != grid.pcc()) bulk.push_back(h - 1);
    return CaseData{std::move(grid), pl, ql, bulk, y0};
}

inline CaseData make_bw33() {
    return build_case(bw33_branches(), bw33_switch_ids(), bw33_loads(), kBw33BaseKv,
                      kBw33BaseKva, kBw33Vlo, kBw33Vhi, bw33_normally_closed_switch_ids(), {1});
}

inline CaseData make_tpc94() {
    return build_case(tpc94_branches(), tpc94_switch_ids(), tpc94_loads(), kTpc94BaseKv,
                      kTpc94BaseKva, kTpc94Vlo, kTpc94Vhi, /*closed=*/{},
                      tpc94_feeder_heads());
}

/// Small 6-node grid used throughout the test-suite: a 4-node fixed spine
/// plus two nodes reachable only over switches. L = 2.
inline CaseData make_test6() {
    std::vector<Line> lines = {
        {1, 0, 1, 0.05, 0.04, false}, {2, 1, 2, 0.08, 0.06, false},
        {3, 0, 3, 0.06, 0.05, false}, {4, 2, 4, 0.07, 0.05, true},
        {5, 3, 5, 0.09, 0.07, true},  {6, 4, 5, 0.06, 0.05, true},
    };
    GridModel grid(6, 0, std::move(lines), 10000.0, 0.8 * 0.8, 1.2 * 1.2);
    Vec pl = Vec::Zero(6), ql = Vec::Zero(6);
    pl << 0.0, 0.02, 0.03, 0.02, 0.01, 0.03;
    ql << 0.0, 0.01, 0.015, 0.01, 0.005, 0.015;
    return CaseData{std::move(grid), pl, ql, {}, {1.0, 1.0, 0.0}};
}

}  // namespace dnr::cases
