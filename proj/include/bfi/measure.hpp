#pragma once

// Finite atomic measures, simple functions over their atoms, L^p and weak
// L^q norms, cube averages, and the dyadic weighted maximal operator.
//
// Atom coordinates are exact rationals so cube membership is never
// ambiguous; masses and function values are doubles.  Every reduction runs
// in atom-index order, which keeps results reproducible bit for bit.

#include "geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <vector>

namespace bfi {

struct DiscreteMeasure {
    std::vector<RationalVec> points;  // pairwise distinct
    std::vector<double> masses;       // strictly positive

    std::size_t size() const { return points.size(); }
    int dim() const { return points.empty() ? 0 : static_cast<int>(points[0].size()); }

    void validate() const {
        for (std::size_t i = 0; i < size(); ++i) {
            if (!(masses[i] > 0)) throw std::invalid_argument("atom mass must be positive");
            if (points[i].size() != points[0].size())
                throw std::invalid_argument("atom dimension mismatch");
        }
        for (std::size_t i = 0; i < size(); ++i)
            for (std::size_t j = i + 1; j < size(); ++j)
                if (points[i] == points[j]) throw std::invalid_argument("duplicate atom point");
    }

    double total() const {
        double s = 0;
        for (double m : masses) s += m;
        return s;
    }

    template <typename Cube>
    double mass_in(const Cube& q) const {
        double s = 0;
        for (std::size_t i = 0; i < size(); ++i)
            if (q.contains(points[i])) s += masses[i];
        return s;
    }
};

// Nonnegative values, one per atom of an associated measure.
using SimpleFunction = std::vector<double>;

inline void check_assoc(const SimpleFunction& f, const DiscreteMeasure& mu) {
    if (f.size() != mu.size())
        throw std::invalid_argument("function/measure atom count mismatch");
}

struct ExponentTuple {
    double p1 = 2, p2 = 2, q = 2;
    double p1c = 2, p2c = 2, qc = 2;  // Holder conjugates
    bool forced = false;              // outside the theorem hypotheses

    static ExponentTuple make(double p1, double p2, double q, bool force = false) {
        ExponentTuple e;
        e.p1 = p1;
        e.p2 = p2;
        e.q = q;
        e.forced = force;
        auto fail = [&](const std::string& what) {
            if (!force) throw std::invalid_argument("exponents rejected: " + what);
            e.forced = true;
        };
        if (!(p1 > 1)) fail("p1 > 1");
        if (!(p2 > 1)) fail("p2 > 1");
        if (!(q >= p1)) fail("q >= p1");
        if (!(q >= p2)) fail("q >= p2");
        if (!(p1 + p2 >= p1 * p2)) fail("p1 + p2 >= p1*p2");
        e.p1c = p1 / (p1 - 1);
        e.p2c = p2 / (p2 - 1);
        e.qc = q / (q - 1);
        return e;
    }

    bool valid() const { return !forced; }
};

inline double lp_norm(const SimpleFunction& f, double p, const DiscreteMeasure& mu) {
    check_assoc(f, mu);
    if (!(p >= 1)) throw std::invalid_argument("lp_norm: p must be >= 1");
    double s = 0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        if (f[i] == 0) continue;
        if (std::isinf(f[i])) return std::numeric_limits<double>::infinity();
        s += std::pow(f[i], p) * mu.masses[i];
    }
    return std::pow(s, 1.0 / p);
}

// sup_{lambda >= 0} lambda * w({g > lambda})^{1/q}.  The sup is approached
// as lambda increases to a value of g, hence is the max over the finite
// value set of v * w({g >= v})^{1/q}.
inline double weak_lq_norm(const SimpleFunction& g, double q, const DiscreteMeasure& w) {
    check_assoc(g, w);
    if (!(q > 0)) throw std::invalid_argument("weak_lq_norm: q must be positive");
    std::vector<double> values;
    for (double v : g)
        if (v > 0) values.push_back(v);
    if (values.empty()) return 0;
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    double best = 0;
    for (double v : values) {
        if (std::isinf(v)) return std::numeric_limits<double>::infinity();
        double tail = 0;
        for (std::size_t i = 0; i < w.size(); ++i)
            if (g[i] >= v) tail += w.masses[i];
        best = std::max(best, v * std::pow(tail, 1.0 / q));
    }
    return best;
}

// E_Q^mu f = mu(Q)^{-1} int_Q f dmu; empty cubes average to 0 so suprema
// downstream can skip them without special casing.
template <typename Cube>
inline double average(const SimpleFunction& f, const DiscreteMeasure& mu, const Cube& q) {
    check_assoc(f, mu);
    double num = 0, den = 0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        if (q.contains(mu.points[i])) {
            num += f[i] * mu.masses[i];
            den += mu.masses[i];
        }
    }
    return den > 0 ? num / den : 0.0;
}

// Dyadic weighted maximal operator over the cubes of one grid with scales
// in [k_min, k_max]: at each atom, the largest average over cubes of that
// family containing it.
inline SimpleFunction dyadic_maximal(const SimpleFunction& f, const DiscreteMeasure& mu,
                                     const GridShift& t, int k_min, int k_max) {
    check_assoc(f, mu);
    SimpleFunction out(mu.size(), 0.0);
    for (int k = k_min; k <= k_max; ++k) {
        // group atoms by containing cube at this scale
        std::map<std::vector<long long>, std::pair<double, double>> sums;  // pos -> (int f, mass)
        std::vector<std::vector<long long>> where(mu.size());
        for (std::size_t i = 0; i < mu.size(); ++i) {
            auto c = cube_at(mu.points[i], k, t);
            auto& acc = sums[c.pos];
            acc.first += f[i] * mu.masses[i];
            acc.second += mu.masses[i];
            where[i] = std::move(c.pos);
        }
        for (std::size_t i = 0; i < mu.size(); ++i) {
            const auto& acc = sums[where[i]];
            if (acc.second > 0) out[i] = std::max(out[i], acc.first / acc.second);
        }
    }
    return out;
}

}  // namespace bfi
