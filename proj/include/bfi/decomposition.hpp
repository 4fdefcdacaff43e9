#pragma once

// Level-set machinery for the truncated sparse operator.
//
// The operator restricted to S(R) = {Q in S : Q inside R} is a finite sum
// of cube indicators, so each superlevel set Omega_k = {value > 2^k} is a
// union of S(R)-cubes.  For Q in S(R) write A(Q) for the sum of summands
// over the S(R)-cubes containing Q (Q included); the minimum of the
// operator over Q is A(Q) because the strict descendants of Q never cover
// it (1/2-sparsity), hence Q lies in Omega_k iff A(Q) > 2^k and the
// maximal cubes of Omega_k are the selected cubes whose S(R)-parent is not
// selected.
//
// Also here: the principal (stopping) cubes of a forest with the 4-fold
// growth rule, and their Carleson sum.

#include "sparse.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <vector>

namespace bfi {

struct LevelSets {
    struct MaxCube {
        int cube;                 // index into `cubes`
        std::vector<int> e_atoms; // w-atoms in E(Q) = Q ∩ Omega_{k+1} \ Omega_{k+2}
        std::vector<int> f_atoms; // w-atoms in F(Q) = Q ∩ Omega_{k+1}
        double w_cube = 0;        // w(Q)
        double w_e = 0, w_f = 0;
    };
    struct Level {
        int k;
        std::vector<MaxCube> maximal;  // the Q_j^k
    };

    // S(R), sorted scale-major
    std::vector<DyadicCube> cubes;
    std::vector<double> summand;      // c_Q
    std::vector<double> cum;          // A(Q)
    std::vector<int> sparent;         // index of smallest strict S(R)-ancestor, -1 if none
    std::vector<double> point_value;  // operator value at each w-atom
    std::vector<Level> levels;        // k descending
    double delta = 0.25;
    std::vector<int> parity_even, parity_odd;  // the admitted levels (set K) per parity

    const Level* level(int k) const {
        for (const auto& l : levels)
            if (l.k == k) return &l;
        return nullptr;
    }
};

// Builds the full decomposition for the instance (f1 s1, f2 s2) against w.
inline LevelSets level_sets(const OperatorParams& par, const SparseFamily& fam,
                            const DyadicCube& root, const SimpleFunction& f1,
                            const DiscreteMeasure& s1, const SimpleFunction& f2,
                            const DiscreteMeasure& s2, const DiscreteMeasure& w,
                            double delta = 0.25) {
    LevelSets out;
    out.delta = delta;
    for (const auto& q : fam.cubes)
        if (root.contains_cube(q)) out.cubes.push_back(q);
    std::sort(out.cubes.begin(), out.cubes.end());
    const auto& cubes = out.cubes;
    const int m = static_cast<int>(cubes.size());

    out.summand.resize(m);
    out.cum.resize(m);
    out.sparent.assign(m, -1);
    std::map<DyadicCube, int> index;
    for (int i = 0; i < m; ++i) index.emplace(cubes[i], i);
    for (int i = 0; i < m; ++i) {
        double a = 0, b = 0;
        for (std::size_t t = 0; t < s1.size(); ++t)
            if (f1[t] != 0 && cubes[i].contains(s1.points[t])) a += f1[t] * s1.masses[t];
        for (std::size_t t = 0; t < s2.size(); ++t)
            if (f2[t] != 0 && cubes[i].contains(s2.points[t])) b += f2[t] * s2.masses[t];
        out.summand[i] = (a * b) * par.cube_weight(cubes[i].scale);
        // smallest strict ancestor within S(R)
        DyadicCube anc = cubes[i];
        while (anc.scale > cubes[0].scale) {
            anc = anc.parent();
            auto it = index.find(anc);
            if (it != index.end()) {
                out.sparent[i] = it->second;
                break;
            }
        }
        out.cum[i] = out.summand[i] + (out.sparent[i] >= 0 ? out.cum[out.sparent[i]] : 0.0);
    }

    out.point_value.assign(w.size(), 0.0);
    for (std::size_t t = 0; t < w.size(); ++t) {
        double v = 0;
        for (int i = 0; i < m; ++i)
            if (cubes[i].contains(w.points[t])) v += out.summand[i];
        out.point_value[t] = v;
    }

    if (m == 0) return out;
    double amax = 0, amin_pos = std::numeric_limits<double>::infinity();
    for (int i = 0; i < m; ++i) {
        amax = std::max(amax, out.cum[i]);
        if (out.cum[i] > 0) amin_pos = std::min(amin_pos, out.cum[i]);
    }
    if (amax <= 0) return out;

    // levels with 2^k in [min positive value, max value], padded so that
    // E(Q_j^k) references resolve; outside, Omega_k is trivially full/empty
    int k_hi = std::ilogb(amax) + 1;
    while (!(amax > std::ldexp(1.0, k_hi))) --k_hi;  // largest k with Omega_k nonempty
    int k_lo = std::ilogb(amin_pos) - 2;

    for (int k = k_hi; k >= k_lo; --k) {
        const double thr = std::ldexp(1.0, k);
        LevelSets::Level lev;
        lev.k = k;
        for (int i = 0; i < m; ++i) {
            if (!(out.cum[i] > thr)) continue;
            if (out.sparent[i] >= 0 && out.cum[out.sparent[i]] > thr) continue;  // not maximal
            LevelSets::MaxCube mc;
            mc.cube = i;
            const double up1 = std::ldexp(1.0, k + 1), up2 = std::ldexp(1.0, k + 2);
            for (std::size_t t = 0; t < w.size(); ++t) {
                if (!cubes[i].contains(w.points[t])) continue;
                mc.w_cube += w.masses[t];
                if (out.point_value[t] > up1) {
                    mc.f_atoms.push_back(static_cast<int>(t));
                    mc.w_f += w.masses[t];
                    if (!(out.point_value[t] > up2)) {
                        mc.e_atoms.push_back(static_cast<int>(t));
                        mc.w_e += w.masses[t];
                    }
                }
            }
            lev.maximal.push_back(std::move(mc));
        }
        out.levels.push_back(std::move(lev));
    }

    for (const auto& lev : out.levels) {
        bool admit = false;
        for (const auto& mc : lev.maximal)
            if (mc.w_e > delta * mc.w_cube) admit = true;
        if (!admit) continue;
        (lev.k % 2 == 0 ? out.parity_even : out.parity_odd).push_back(lev.k);
    }
    return out;
}

// Dyadic maximum principle plus the localized lower bound on E(Q_j^k):
//   sum over S(R)-cubes containing Q_j^k  > 2^k,
//   sum over strict ancestors            <= 2^k,
//   I^{S(R)}(1_Q f1 s1, 1_Q f2 s2)(x)    > 2^k  for w-atoms x in E(Q_j^k).
// Returns the first offending cube on failure.
inline std::optional<DyadicCube> check_maximum_principle(
    const LevelSets& ls, const OperatorParams& par, const SimpleFunction& f1,
    const DiscreteMeasure& s1, const SimpleFunction& f2, const DiscreteMeasure& s2,
    const DiscreteMeasure& w) {
    for (const auto& lev : ls.levels) {
        const double thr = std::ldexp(1.0, lev.k);
        for (const auto& mc : lev.maximal) {
            const int i = mc.cube;
            if (!(ls.cum[i] > thr)) return ls.cubes[i];
            const double strict = ls.sparent[i] >= 0 ? ls.cum[ls.sparent[i]] : 0.0;
            if (!(strict <= thr)) return ls.cubes[i];
            if (mc.e_atoms.empty()) continue;
            // localized operator: integrals clipped to Q_j^k
            SimpleFunction g1(f1), g2(f2);
            for (std::size_t t = 0; t < s1.size(); ++t)
                if (!ls.cubes[i].contains(s1.points[t])) g1[t] = 0;
            for (std::size_t t = 0; t < s2.size(); ++t)
                if (!ls.cubes[i].contains(s2.points[t])) g2[t] = 0;
            for (int t : mc.e_atoms) {
                double loc = eval_cubes(par, ls.cubes, g1, s1, g2, s2, w.points[t]);
                if (!(loc > thr)) return ls.cubes[i];
            }
        }
    }
    return std::nullopt;
}

// Principal cubes of a nested forest under the 4-fold stopping rule.
struct PrincipalForest {
    std::vector<DyadicCube> cubes;   // the forest, sorted scale-major
    std::vector<int> parent;         // smallest strict forest-ancestor, -1 at roots
    std::vector<double> avg;         // E_Q^sigma f per forest cube
    std::vector<int> generation;     // -1 if not principal
    std::vector<int> minimal_principal;  // G(Q): index of minimal principal cube containing Q
    std::vector<int> principal;      // indices of principal cubes, selection order

    bool is_principal(int i) const { return generation[i] >= 0; }
};

inline PrincipalForest principal_cubes(const SimpleFunction& f, const DiscreteMeasure& sigma,
                                       std::span<const DyadicCube> forest) {
    PrincipalForest pf;
    pf.cubes.assign(forest.begin(), forest.end());
    std::sort(pf.cubes.begin(), pf.cubes.end());
    pf.cubes.erase(std::unique(pf.cubes.begin(), pf.cubes.end()), pf.cubes.end());
    const int m = static_cast<int>(pf.cubes.size());
    pf.parent.assign(m, -1);
    pf.avg.resize(m);
    pf.generation.assign(m, -1);
    pf.minimal_principal.assign(m, -1);
    if (m == 0) return pf;

    std::map<DyadicCube, int> index;
    for (int i = 0; i < m; ++i) index.emplace(pf.cubes[i], i);
    std::vector<std::vector<int>> kids(m);
    for (int i = 0; i < m; ++i) {
        pf.avg[i] = average(f, sigma, pf.cubes[i]);
        DyadicCube anc = pf.cubes[i];
        while (anc.scale > pf.cubes[0].scale) {
            anc = anc.parent();
            auto it = index.find(anc);
            if (it != index.end()) {
                pf.parent[i] = it->second;
                kids[it->second].push_back(i);
                break;
            }
        }
    }

    // G_0: maximal forest cubes.  G_{n+1}: maximal forest cubes inside a
    // principal G' whose average jumps by more than a factor 4.
    std::vector<int> frontier;
    for (int i = 0; i < m; ++i)
        if (pf.parent[i] < 0) {
            pf.generation[i] = 0;
            frontier.push_back(i);
            pf.principal.push_back(i);
        }
    while (!frontier.empty()) {
        std::vector<int> next;
        for (int g : frontier) {
            // DFS below g, stopping at the maximal jump cubes
            std::vector<int> stack(kids[g].rbegin(), kids[g].rend());
            while (!stack.empty()) {
                int q = stack.back();
                stack.pop_back();
                if (pf.avg[q] > 4.0 * pf.avg[g]) {
                    pf.generation[q] = pf.generation[g] + 1;
                    pf.principal.push_back(q);
                    next.push_back(q);
                } else {
                    stack.insert(stack.end(), kids[q].rbegin(), kids[q].rend());
                }
            }
        }
        frontier = std::move(next);
    }

    for (int i = 0; i < m; ++i) {
        int g = i;
        while (g >= 0 && !pf.is_principal(g)) g = pf.parent[g];
        pf.minimal_principal[i] = g;  // self when principal
    }
    return pf;
}

// sum over principal G of (E_G^sigma f)^p sigma(G), to compare against
// (4/3) (p')^p ||f||_{L^p(sigma)}^p: the principal children of G carry at
// most a quarter of sigma(G) by the 4-fold rule, and E_G f <= M f on G.
inline double carleson_sum(const PrincipalForest& pf, const SimpleFunction& f,
                           const DiscreteMeasure& sigma, double p) {
    if (!(p > 1)) throw std::invalid_argument("carleson_sum: p must be > 1");
    double s = 0;
    for (int i : pf.principal) {
        double mass = 0;
        for (std::size_t t = 0; t < sigma.size(); ++t)
            if (pf.cubes[i].contains(sigma.points[t])) mass += sigma.masses[t];
        if (pf.avg[i] > 0) s += std::pow(pf.avg[i], p) * mass;
    }
    return s;
}

inline double carleson_bound(double p, double norm_f) {
    const double pc = p / (p - 1.0);
    return (4.0 / 3.0) * std::pow(pc, p) * std::pow(norm_f, p);
}

}  // namespace bfi
