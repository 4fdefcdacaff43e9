#pragma once

// Frozen calibration constants.  C1 and C_dom come from closed-form
// derivations and are recomputed; C2 (kernel vs. summed shifted grids) and
// the sufficiency ratios R_max have no usable closed form and are frozen
// from a declared batch by the `calibrate` subcommand, then replayed by the
// acceptance suite.

#include "version.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <string>

namespace bfi {

inline std::string num_key(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

inline std::string alpha_key(int n, double alpha) {
    return "n" + std::to_string(n) + "_a" + num_key(alpha);
}

inline std::string config_key(int n, double alpha, double p1, double p2, double q, int atoms) {
    return alpha_key(n, alpha) + "_p" + num_key(p1) + "_" + num_key(p2) + "_q" + num_key(q) +
           "_m" + std::to_string(atoms);
}

struct Calibration {
    std::map<std::string, double> c2;        // alpha_key -> frozen C2
    std::map<std::string, double> r_strong;  // config_key -> frozen max N/(T+T1*+T2*)
    std::map<std::string, double> r_weak;    // config_key -> frozen max Nweak/(T1*+T2*)

    std::optional<double> c2_for(int n, double alpha) const {
        auto it = c2.find(alpha_key(n, alpha));
        if (it == c2.end()) return std::nullopt;
        return it->second;
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["toolkit_version"] = kVersion;
        j["c2"] = c2;
        j["r_strong"] = r_strong;
        j["r_weak"] = r_weak;
        return j;
    }

    static Calibration from_json(const nlohmann::json& j) {
        Calibration c;
        if (j.contains("c2")) c.c2 = j.at("c2").get<std::map<std::string, double>>();
        if (j.contains("r_strong"))
            c.r_strong = j.at("r_strong").get<std::map<std::string, double>>();
        if (j.contains("r_weak")) c.r_weak = j.at("r_weak").get<std::map<std::string, double>>();
        return c;
    }

    void save(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot write " + path);
        out << to_json().dump(2) << "\n";
    }

    static Calibration load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot read " + path);
        nlohmann::json j;
        in >> j;
        return from_json(j);
    }
};

}  // namespace bfi
