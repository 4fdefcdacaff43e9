#pragma once

// Instance and report files.
//
// Coordinates travel as exact fraction strings ("1/3", "-7/12"); masses and
// function values as decimal doubles.  Reports are emitted with sorted keys
// and shortest-round-trip doubles, so a rerun with the same toolkit version
// and flags reproduces the file byte for byte.  Nothing time-dependent goes
// into a report; wall time is console/CSV output only.

#include "calibration.hpp"
#include "rng.hpp"
#include "verify.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>
#include <string>

namespace bfi {

using nlohmann::json;

// ---------------------------------------------------------------------------
// instance files

inline json measure_to_json(const DiscreteMeasure& m) {
    json arr = json::array();
    for (std::size_t i = 0; i < m.size(); ++i) {
        json atom;
        json pt = json::array();
        for (const auto& c : m.points[i]) pt.push_back(rational_str(c));
        atom["point"] = pt;
        atom["mass"] = m.masses[i];
        arr.push_back(atom);
    }
    return arr;
}

inline DiscreteMeasure measure_from_json(const json& j) {
    DiscreteMeasure m;
    for (const auto& atom : j) {
        RationalVec p;
        for (const auto& c : atom.at("point")) p.push_back(parse_rational(c.get<std::string>()));
        m.points.push_back(std::move(p));
        m.masses.push_back(atom.at("mass").get<double>());
    }
    m.validate();
    return m;
}

struct InstanceFile {
    int n = 1;
    double alpha = 1.0;
    double p1 = 2, p2 = 2, q = 2;
    bool force_exponents = false;
    DiscreteMeasure sigma1, sigma2, w;
    int k_min = -10, k_max = 12;
    std::vector<std::uint8_t> shift;  // per-coordinate 0/1 (1 means 1/3)
    std::optional<std::vector<DyadicCube>> sparse;  // supplied family
    std::uint64_t seed = 0;
    double delta = 0.25;

    json to_json() const {
        json j;
        j["n"] = n;
        j["alpha"] = alpha;
        j["p1"] = p1;
        j["p2"] = p2;
        j["q"] = q;
        if (force_exponents) j["force_exponents"] = true;
        j["sigma1"] = measure_to_json(sigma1);
        j["sigma2"] = measure_to_json(sigma2);
        j["w"] = measure_to_json(w);
        j["window"] = {{"k_min", k_min}, {"k_max", k_max}};
        j["shift"] = shift;
        if (sparse) {
            json arr = json::array();
            for (const auto& c : *sparse) {
                json jc;
                jc["scale"] = c.scale;
                jc["pos"] = c.pos;
                arr.push_back(jc);
            }
            j["sparse"] = arr;
        }
        j["seed"] = seed;
        j["delta"] = delta;
        return j;
    }

    static InstanceFile from_json(const json& j) {
        InstanceFile f;
        f.n = j.at("n").get<int>();
        f.alpha = j.at("alpha").get<double>();
        f.p1 = j.at("p1").get<double>();
        f.p2 = j.at("p2").get<double>();
        f.q = j.at("q").get<double>();
        f.force_exponents = j.value("force_exponents", false);
        f.sigma1 = measure_from_json(j.at("sigma1"));
        f.sigma2 = measure_from_json(j.at("sigma2"));
        f.w = measure_from_json(j.at("w"));
        if (j.contains("window")) {
            f.k_min = j.at("window").value("k_min", -10);
            f.k_max = j.at("window").value("k_max", 12);
        }
        if (j.contains("shift"))
            f.shift = j.at("shift").get<std::vector<std::uint8_t>>();
        else
            f.shift.assign(f.n, 0);
        if (static_cast<int>(f.shift.size()) != f.n)
            throw std::invalid_argument("shift dimension mismatch");
        if (j.contains("sparse")) {
            std::vector<DyadicCube> cubes;
            for (const auto& jc : j.at("sparse")) {
                DyadicCube c;
                c.scale = jc.at("scale").get<int>();
                c.pos = jc.at("pos").get<std::vector<long long>>();
                if (static_cast<int>(c.pos.size()) != f.n)
                    throw std::invalid_argument("sparse cube dimension mismatch");
                c.shift = GridShift(f.shift);
                cubes.push_back(std::move(c));
            }
            f.sparse = std::move(cubes);
        }
        f.seed = j.value("seed", std::uint64_t(0));
        f.delta = j.value("delta", 0.25);
        return f;
    }

    void save(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot write " + path);
        out << to_json().dump(2) << "\n";
    }

    static InstanceFile load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot read " + path);
        json j = json::parse(in);
        return from_json(j);
    }

    Instance to_instance() const {
        OperatorParams par{n, alpha};
        auto ex = ExponentTuple::make(p1, p2, q, force_exponents);
        SparseFamily fam;
        const SparseFamily* supplied = nullptr;
        if (sparse) {
            fam.cubes = *sparse;
            std::sort(fam.cubes.begin(), fam.cubes.end());
            fam.built = false;
            supplied = &fam;
        }
        return make_instance(par, ex, sigma1, sigma2, w, GridShift(shift), k_min, k_max,
                             supplied, delta, seed);
    }
};

// ---------------------------------------------------------------------------
// instance generation

struct GenSpec {
    std::uint64_t seed = 42;
    int n = 1;
    int atoms1 = 8, atoms2 = 8, atomsw = 8;
    double p1 = 2, p2 = 2, q = 2;
    bool force_exponents = false;
    double alpha = 1.0;
    int spread_log2 = 0;  // coordinates drawn from [0, 2^spread)
    int k_min = -10, k_max = 12;
    double delta = 0.25;
};

// Deterministic pseudo-random instance: coordinates on the grid
// j / (3 * 2^10), scaled by 2^spread, distinct across all three measures so
// kernels are never singular; masses log-uniform in [1e-2, 1e2].
inline InstanceFile gen_instance(const GenSpec& g) {
    ExponentTuple::make(g.p1, g.p2, g.q, g.force_exponents);  // reject early
    OperatorParams{g.n, g.alpha}.validate();
    InstanceFile f;
    f.n = g.n;
    f.alpha = g.alpha;
    f.p1 = g.p1;
    f.p2 = g.p2;
    f.q = g.q;
    f.force_exponents = g.force_exponents;
    f.k_min = g.k_min;
    f.k_max = g.k_max;
    f.seed = g.seed;
    f.delta = g.delta;
    f.shift.assign(g.n, 0);

    std::mt19937_64 eng(g.seed);
    const long long den = 3 * (1LL << 10);
    std::set<RationalVec> used;
    auto draw_point = [&]() {
        for (;;) {
            RationalVec p(g.n);
            for (int i = 0; i < g.n; ++i) {
                long long num = static_cast<long long>(uniform_below(eng, den));
                Rational c = q_of(num) / q_of(den);
                if (g.spread_log2 != 0) c *= pow2q(g.spread_log2);
                p[i] = c;
            }
            if (used.insert(p).second) return p;
        }
    };
    auto fill = [&](DiscreteMeasure& m, int count) {
        for (int i = 0; i < count; ++i) {
            m.points.push_back(draw_point());
            m.masses.push_back(log_uniform(eng, 1e-2, 1e2));
        }
    };
    fill(f.sigma1, g.atoms1);
    fill(f.sigma2, g.atoms2);
    fill(f.w, g.atomsw);
    return f;
}

// ---------------------------------------------------------------------------
// reports

inline json report_to_json(const VerificationReport& rep, const InstanceFile& inst,
                           const Calibration* cal) {
    json j;
    j["toolkit_version"] = kVersion;
    j["instance"] = {{"n", inst.n},
                     {"alpha", inst.alpha},
                     {"p1", inst.p1},
                     {"p2", inst.p2},
                     {"q", inst.q},
                     {"atoms", {inst.sigma1.size(), inst.sigma2.size(), inst.w.size()}},
                     {"window", {{"k_min", inst.k_min}, {"k_max", inst.k_max}}},
                     {"shift", inst.shift},
                     {"sparse_supplied", inst.sparse.has_value()},
                     {"seed", inst.seed},
                     {"delta", inst.delta}};
    j["constants"] = {{"T", rep.tc.T},
                      {"T1star", rep.tc.T1star},
                      {"T2star", rep.tc.T2star},
                      {"N_lower", rep.n_lower},
                      {"Nweak_lower", rep.nweak_lower}};
    if (rep.n_exhaustive) {
        j["constants"]["N_exhaustive"] = *rep.n_exhaustive;
        j["constants"]["oracle_gap"] = rep.oracle_gap;
    }
    if (rep.ratios_defined) {
        j["ratios"] = {{"strong", rep.ratio_strong}, {"weak", rep.ratio_weak}};
    } else {
        j["ratios"] = nullptr;
    }
    j["certified"] = {{"T_le_N", rep.certified.t_le_n},
                      {"T1star_le_N", rep.certified.t1_le_n},
                      {"T2star_le_N", rep.certified.t2_le_n},
                      {"T1star_le_qconj_Nweak", rep.certified.t1_le_qc_nweak},
                      {"T2star_le_qconj_Nweak", rep.certified.t2_le_qc_nweak},
                      {"Nweak_le_N", rep.certified.weak_le_strong}};
    j["sparsity"] = {{"ok", rep.sparsity_ok}, {"worst_ratio", rep.sparsity_worst}};
    j["domination"] = {{"C_dom", rep.c_dom},
                       {"max_ratio", rep.domination_max},
                       {"ok", rep.domination_ok}};
    j["equivalence"] = {{"checked", rep.equivalence_checked},
                        {"C1", rep.c1},
                        {"dyadic_vs_kernel_max", rep.prop22_upper_max},
                        {"upper_ok", rep.prop22_upper_ok},
                        {"kernel_vs_shifted_max", rep.kernel_vs_shifted_max},
                        {"C2_frozen", rep.c2_frozen ? json(*rep.c2_frozen) : json(nullptr)},
                        {"lower_ok", rep.c2_ok}};
    j["decomposition"] = {{"delta", rep.delta},
                          {"levels", rep.level_count},
                          {"max_principle_ok", rep.max_principle_ok},
                          {"parity_used", "even"}};
    j["probes"] = {{"special_case", rep.special_probe},
                   {"special_case_vs_T_plus_T2star", rep.special_probe_vs_t_t2},
                   {"general_cube_T", rep.general_cube_probe}};
    j["flags"] = {{"singular", rep.singular},
                  {"outside_hypotheses", rep.outside_hypotheses},
                  {"exhaustive_used", rep.n_exhaustive.has_value()}};
    j["violation"] = rep.violation;
    j["provenance"] = {{"seed", rep.seed},
                       {"tolerances", {{"rel", kRelTol}, {"abs", kAbsTol}}},
                       {"calibration_in_force", cal ? cal->to_json() : json(nullptr)}};
    return j;
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
}

inline std::string csv_header() {
    return "seed,n,alpha,p1,p2,q,atoms,T,T1star,T2star,N_lower,Nweak_lower,ratio_strong,"
           "ratio_weak,wall_ms";
}

inline std::string csv_row(const GenSpec& g, const VerificationReport& rep, long long wall_ms) {
    std::ostringstream os;
    auto d = [](double v) { return json(v).dump(); };
    os << g.seed << ',' << g.n << ',' << d(g.alpha) << ',' << d(g.p1) << ',' << d(g.p2) << ','
       << d(g.q) << ',' << g.atoms1 << ',' << d(rep.tc.T) << ',' << d(rep.tc.T1star) << ','
       << d(rep.tc.T2star) << ',' << d(rep.n_lower) << ',' << d(rep.nweak_lower) << ','
       << d(rep.ratio_strong) << ',' << d(rep.ratio_weak) << ',' << wall_ms;
    return os.str();
}

}  // namespace bfi
