#pragma once

#include "dnr/cases.hpp"
#include "dnr/grid.hpp"

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace dnr {

/// One time step: per-node loads (pu), generator limits (pu), and the
/// flattened network input vector.
struct ScenarioInstance {
    int timestamp = 0;
    Vec p_load, q_load;          // per node, pu
    Vec p_gen_cap;               // per node, availability-scaled upper limit
    Vec p_gen_lo;                // per node, lower limit (0 everywhere here)
    Vec q_gen_lo, q_gen_hi;      // per node
    Vec x;                       // [P^L_j, Q^L_j] at all non-PCC nodes

    static ScenarioInstance zeros(int nodes) {
        ScenarioInstance s;
        s.p_load = Vec::Zero(nodes);
        s.q_load = Vec::Zero(nodes);
        s.p_gen_cap = Vec::Zero(nodes);
        s.p_gen_lo = Vec::Zero(nodes);
        s.q_gen_lo = Vec::Zero(nodes);
        s.q_gen_hi = Vec::Zero(nodes);
        s.x = Vec::Zero(2 * (nodes - 1));
        return s;
    }
};

/// Rebuilds the input vector from the load fields: (P, Q) per node in
/// ascending node order, skipping the PCC.
inline void refresh_x(const GridModel& grid, ScenarioInstance& s) {
    s.x = Vec::Zero(2 * (grid.node_count() - 1));
    int k = 0;
    for (int j = 0; j < grid.node_count(); ++j) {
        if (j == grid.pcc()) continue;
        s.x[k++] = s.p_load[j];
        s.x[k++] = s.q_load[j];
    }
}

enum class LoadMode { kPerturbed, kResidential, kMixed };
enum class SolarMode { kProfile, kFlat, kNone };

struct DatasetSpec {
    std::string grid_id = "bw33";      // bw33 | tpc94 | test6
    LoadMode load_mode = LoadMode::kPerturbed;
    std::string solar_layout = "DD-U";  // per-grid layout key, or "" for none
    SolarMode solar_mode = SolarMode::kProfile;
    int count = 0;
    std::uint64_t seed = 0;
};

// ------------------------------------------------------------- profiles ----

enum class ProfileKind {
    kResidentialNominal,
    kEarlyRiser,
    kWeekend,
    kCovid,
    kSummerPeak,
    kWinterPeak,
    kHospital,
    kOffice,
    kRestaurant,
    kRetail,
    kWarehouse,
    kSolar,
};

namespace detail {
inline double gauss(double t, double mu, double sigma) {
    double d = (t - mu) / sigma;
    return std::exp(-0.5 * d * d);
}
// Smooth plateau that is ~1 on (a, b) with logistic shoulders.
inline double plateau(double t, double a, double b, double k = 2.0) {
    return 1.0 / (1.0 + std::exp(-k * (t - a))) * 1.0 / (1.0 + std::exp(k * (t - b)));
}
}  // namespace detail

/// Deterministic parametric daily shapes, value in [0, 1.3]. `t` is hour of
/// day in [0, 24); `day` drives weekday/weekend and seasonal modulation.
inline double synth_profile(ProfileKind kind, double t, int day = 0) {
    using detail::gauss;
    using detail::plateau;
    bool weekday = (day % 7) < 5;
    switch (kind) {
        case ProfileKind::kResidentialNominal:
            return 0.35 + 0.30 * gauss(t, 7.5, 1.4) + 0.60 * gauss(t, 19.0, 2.4);
        case ProfileKind::kEarlyRiser:
            return 0.35 + 0.32 * gauss(t, 5.5, 1.4) + 0.55 * gauss(t, 17.0, 2.4);
        case ProfileKind::kWeekend:
            return 0.50 + 0.55 * gauss(t, 15.0, 4.5);
        case ProfileKind::kCovid:
            return 0.40 + 0.28 * gauss(t, 10.5, 2.2) + 0.62 * gauss(t, 19.5, 2.4);
        case ProfileKind::kSummerPeak:
            return 0.30 + 0.80 * gauss(t, 16.0, 4.0);
        case ProfileKind::kWinterPeak:
            return 0.32 + 0.30 * gauss(t, 8.0, 1.6) + 0.38 * gauss(t, 22.0, 2.0);
        case ProfileKind::kHospital:
            return 0.55 + 0.55 * plateau(t, 6.0, 18.0);
        case ProfileKind::kOffice:
            // Minimum load during weekends and overnight.
            return weekday ? 0.18 + 0.85 * plateau(t, 5.0, 19.0) : 0.18;
        case ProfileKind::kRestaurant:
        {
            double s = std::sin(M_PI * t / 6.0);
            return 0.30 + 0.45 * s * s;
        }
        case ProfileKind::kRetail:
            return 0.22 + 0.80 * plateau(t, 9.0, 17.0);
        case ProfileKind::kWarehouse:
            return 0.15 + 0.85 * gauss(t, 13.0, 2.6);
        case ProfileKind::kSolar:
        {
            if (t <= 6.0 || t >= 19.0) return 0.0;
            double s = std::sin(M_PI * (t - 6.0) / 13.0);
            double season = 0.80 + 0.20 * std::cos(2.0 * M_PI * (day - 172) / 365.0);
            return s * s * season;
        }
    }
    return 0.0;
}

inline ProfileKind commercial_profile(int label) {
    switch (label) {
        case 1: return ProfileKind::kHospital;
        case 2: return ProfileKind::kOffice;
        case 3: return ProfileKind::kRestaurant;
        case 4: return ProfileKind::kRetail;
        default: return ProfileKind::kWarehouse;
    }
}

// ------------------------------------------------------------ builders ----

/// Scales each node's nominal load by an independent delta ~ U[0.3, 1.7];
/// Q uses the same delta so the power factor stays fixed.
inline void perturb_loads(const Vec& p_nom, const Vec& q_nom, std::mt19937_64& rng,
                          Vec& p_out, Vec& q_out) {
    std::uniform_real_distribution<double> delta(0.3, 1.7);
    p_out = p_nom;
    q_out = q_nom;
    for (int j = 0; j < p_nom.size(); ++j) {
        double d = delta(rng);
        p_out[j] = p_nom[j] * d;
        q_out[j] = q_nom[j] * d;
    }
}

struct Dataset {
    DatasetSpec spec;
    cases::CaseData grid_case;
    std::vector<ScenarioInstance> instances;
    std::vector<int> solar_nodes;  // 0-indexed
    Vec nameplate;                 // per node, pu
    double minutes_per_step = 60.0;
};

inline cases::CaseData load_case(const std::string& grid_id) {
    if (grid_id == "bw33") return cases::make_bw33();
    if (grid_id == "tpc94") return cases::make_tpc94();
    if (grid_id == "test6") return cases::make_test6();
    throw Error("unknown grid id: " + grid_id);
}

inline const std::map<std::string, std::vector<cases::SolarSite>>& solar_layouts_for(
    const std::string& grid_id) {
    if (grid_id == "bw33") return cases::bw33_solar_layouts();
    if (grid_id == "tpc94") return cases::tpc94_solar_layouts();
    static const std::map<std::string, std::vector<cases::SolarSite>> empty;
    return empty;
}

/// Builds a full dataset from the embedded tables. Deterministic under the
/// spec seed; every instance keeps the nominal per-node power factor.
inline Dataset build_dataset(const DatasetSpec& spec) {
    if (spec.count <= 0) throw Error("build_dataset: instance count must be > 0");
    Dataset ds{spec, load_case(spec.grid_id)};
    const GridModel& grid = ds.grid_case.grid;
    const int n = grid.node_count();
    ds.minutes_per_step = spec.grid_id == "tpc94" ? 5.0 : 60.0;

    ds.nameplate = Vec::Zero(n);
    if (spec.solar_mode != SolarMode::kNone && !spec.solar_layout.empty()) {
        const auto& layouts = solar_layouts_for(spec.grid_id);
        auto it = layouts.find(spec.solar_layout);
        if (it == layouts.end() && spec.grid_id != "test6")
            throw UnknownLayout("unknown solar layout '" + spec.solar_layout + "' for " +
                                spec.grid_id);
        if (it != layouts.end()) {
            for (const auto& site : it->second) {
                ds.nameplate[site.node - 1] = site.nameplate_kw / grid.base_kva();
                ds.solar_nodes.push_back(site.node - 1);
            }
        }
    }

    // Bulk sources (PCC plus any extra feeder heads): wide boxes scaled from
    // the nominal totals.
    double p_total = ds.grid_case.p_load_nom.sum();
    double q_total = ds.grid_case.q_load_nom.sum();

    // Per-node residential profile assignment (stable under seed).
    std::vector<ProfileKind> node_profile(n, ProfileKind::kResidentialNominal);
    {
        auto rng = make_rng(derive_seed(spec.seed, 0xA551));
        std::uniform_int_distribution<int> pick(0, 5);
        static const ProfileKind kResidential[6] = {
            ProfileKind::kResidentialNominal, ProfileKind::kEarlyRiser, ProfileKind::kWeekend,
            ProfileKind::kCovid, ProfileKind::kSummerPeak, ProfileKind::kWinterPeak};
        for (int j = 0; j < n; ++j) node_profile[j] = kResidential[pick(rng)];
        if (spec.load_mode == LoadMode::kMixed && spec.grid_id == "tpc94") {
            for (const auto& [node, label] : cases::tpc94_commercial_sites())
                node_profile[node - 1] = commercial_profile(label);
        } else if (spec.load_mode == LoadMode::kMixed) {
            // No published siting outside TPC-94: every third loaded node is
            // commercial, cycling through the five kinds.
            int k = 0;
            for (int j = 0; j < n; ++j)
                if (ds.grid_case.p_load_nom[j] > 0 && (j % 3 == 0))
                    node_profile[j] = commercial_profile(1 + (k++ % 5));
        }
    }

    ds.instances.reserve(spec.count);
    for (int i = 0; i < spec.count; ++i) {
        auto rng = make_rng(derive_seed(spec.seed, static_cast<std::uint64_t>(i) + 1));
        std::uniform_real_distribution<double> noise(0.95, 1.05);
        ScenarioInstance inst = ScenarioInstance::zeros(n);
        inst.timestamp = i;
        double hours = i * ds.minutes_per_step / 60.0;
        double t = std::fmod(hours, 24.0);
        int day = static_cast<int>(hours / 24.0);

        if (spec.load_mode == LoadMode::kPerturbed) {
            perturb_loads(ds.grid_case.p_load_nom, ds.grid_case.q_load_nom, rng, inst.p_load,
                          inst.q_load);
        } else {
            for (int j = 0; j < n; ++j) {
                double mult = synth_profile(node_profile[j], t, day) * noise(rng);
                inst.p_load[j] = ds.grid_case.p_load_nom[j] * mult;
                inst.q_load[j] = ds.grid_case.q_load_nom[j] * mult;
            }
        }

        double avail = 1.0;
        if (spec.solar_mode == SolarMode::kProfile)
            avail = synth_profile(ProfileKind::kSolar, t, day) * noise(rng);
        for (int j : ds.solar_nodes) {
            inst.p_gen_cap[j] = ds.nameplate[j] * avail;
            // 0.9-pf inverter envelope, scaled with the available power so a
            // scenario round-trips through scenarios.csv exactly.
            inst.q_gen_hi[j] = 0.44 * inst.p_gen_cap[j];
            inst.q_gen_lo[j] = -0.44 * inst.p_gen_cap[j];
        }
        // PCC and any additional feeder heads import from the bulk grid.
        std::vector<int> heads = ds.grid_case.bulk_source_nodes;
        heads.push_back(grid.pcc());
        for (int j : heads) {
            inst.p_gen_cap[j] = 2.0 * p_total;
            inst.q_gen_hi[j] = 2.0 * q_total;
            inst.q_gen_lo[j] = -2.0 * q_total;
        }
        refresh_x(grid, inst);
        ds.instances.push_back(std::move(inst));
    }
    return ds;
}

/// Seeded random (non-contiguous) split; sizes within +-1 of the exact
/// ratios. Same seed => identical partition.
inline void split_dataset(int count, double train_ratio, double val_ratio, double test_ratio,
                          std::uint64_t seed, std::vector<int>& train, std::vector<int>& val,
                          std::vector<int>& test) {
    if (std::abs(train_ratio + val_ratio + test_ratio - 1.0) > 1e-9)
        throw Error("split_dataset: ratios must sum to 1");
    std::vector<int> idx(count);
    std::iota(idx.begin(), idx.end(), 0);
    auto rng = make_rng(derive_seed(seed, 0x5917));
    std::shuffle(idx.begin(), idx.end(), rng);
    int n_train = static_cast<int>(std::lround(train_ratio * count));
    int n_val = static_cast<int>(std::lround(val_ratio * count));
    n_val = std::min(n_val, count - n_train);
    train.assign(idx.begin(), idx.begin() + n_train);
    val.assign(idx.begin() + n_train, idx.begin() + n_train + n_val);
    test.assign(idx.begin() + n_train + n_val, idx.end());
    std::sort(train.begin(), train.end());
    std::sort(val.begin(), val.end());
    std::sort(test.begin(), test.end());
}

}  // namespace dnr
