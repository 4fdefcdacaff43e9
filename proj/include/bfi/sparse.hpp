#pragma once

// Sparse families: construction of a family dominating the truncated dyadic
// operator, and exact verification of the 1/2-sparsity condition.
//
// Construction.  With a = 2^{2(n+1)} and pi(Q) = prod_i |Q|^{-1} int_Q f_i,
// cubes with pi(Q) > 0 fall into classes a^k < pi(Q) <= a^{k+1}.  For each
// class k present in the window, S_k is the set of maximal cubes with
// pi > a^k, and S is the union of the S_k.  Maximality is taken over the
// window *extended by the ancestor chain of the root* until pi drops to
// a^{k_min} or below: every selected cube then has a father in the search
// set with pi(father) <= a^k, which is exactly what the Cauchy-Schwarz
// sparsity bound needs.  Maximality taken inside the bare window instead
// can leave the top cube with strict descendants covering more than half
// of it.  The extension adds at most a short chain of ancestors of the
// root to the family; the extended top cube itself never qualifies.
//
// Domination.  Every window cube with pi > 0 lies below a selected maximal
// cube of its class, at most one window cube per scale contains a given
// point, and a^{k+1} < a pi(P) on S_k, which gives
//
//   eval_dyadic(x) <= a (1 - 2^{-alpha})^{-1} eval_sparse(x).
//
// The coarser bookkeeping bound 2 a^2 (1 - 2^{-alpha})^{-1} is the constant
// reported and asserted; see domination_constant.

#include "operators.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <vector>

namespace bfi {

struct SparseFamily {
    std::vector<DyadicCube> cubes;  // single shift, sorted scale-major
    // Construction metadata (empty for supplied families): the class k in
    // which each cube was selected, aligned with `cubes`, and the inputs
    // the family was built from.
    std::vector<int> klass;
    bool built = false;
    struct Provenance {
        SimpleFunction f1, f2;
        DiscreteMeasure s1, s2;
    };
    std::optional<Provenance> provenance;

    const GridShift& shift() const { return cubes.front().shift; }
    bool empty() const { return cubes.empty(); }
    std::size_t size() const { return cubes.size(); }
};

inline double sparse_base(int n) { return std::ldexp(1.0, 2 * (n + 1)); }  // a = 2^{2(n+1)}

inline double domination_constant(const OperatorParams& par) {
    const double a = sparse_base(par.n);
    return 2.0 * a * a / (1.0 - std::pow(2.0, -par.alpha));
}

namespace detail {

// prod_i |Q|^{-1} int_Q f_i dsigma_i
inline double product_average(const DyadicCube& q, const SimpleFunction& f1,
                              const DiscreteMeasure& s1, const SimpleFunction& f2,
                              const DiscreteMeasure& s2) {
    double a = 0, b = 0;
    for (std::size_t i = 0; i < s1.size(); ++i)
        if (f1[i] != 0 && q.contains(s1.points[i])) a += f1[i] * s1.masses[i];
    if (a == 0) return 0;
    for (std::size_t j = 0; j < s2.size(); ++j)
        if (f2[j] != 0 && q.contains(s2.points[j])) b += f2[j] * s2.masses[j];
    if (b == 0) return 0;
    const double vol = std::ldexp(1.0, -q.scale * q.dim());
    return (a * b) / (vol * vol);
}

// Unique k with a^k < pi <= a^{k+1}.
inline int class_of(double pi, double a) {
    int k = static_cast<int>(std::floor(std::log(pi) / std::log(a)));
    while (std::pow(a, k) >= pi) --k;
    while (std::pow(a, k + 1) < pi) ++k;
    return k;
}

}  // namespace detail

// Proposition-style stopping construction.  f_i are the simple functions of
// the instance (bounded, finitely supported by definition).
inline SparseFamily build_sparse(const OperatorParams& par, const TruncationWindow& win,
                                 const SimpleFunction& f1, const DiscreteMeasure& s1,
                                 const SimpleFunction& f2, const DiscreteMeasure& s2) {
    par.validate();
    const double a = sparse_base(par.n);
    SparseFamily fam;

    // Window cubes with positive product average, by ancestor chains of
    // sigma-atoms (all other cubes have pi = 0).
    auto pts = std::vector<RationalVec>();
    for (std::size_t i = 0; i < s1.size(); ++i)
        if (f1[i] != 0) pts.push_back(s1.points[i]);
    for (std::size_t j = 0; j < s2.size(); ++j)
        if (f2[j] != 0) pts.push_back(s2.points[j]);
    if (pts.empty()) return fam;

    std::map<DyadicCube, double> pi;  // window cubes ∪ root ancestors, with pi > 0
    int k_lo = 0, k_hi = 0;
    bool have_class = false;
    for (int k = win.root.scale; k <= win.k_max; ++k) {
        for (const auto& p : pts) {
            DyadicCube c = cube_at(p, k, win.shift());
            if (!win.root.contains_cube(c)) continue;
            if (pi.count(c)) continue;
            double v = detail::product_average(c, f1, s1, f2, s2);
            if (v <= 0) continue;
            pi.emplace(std::move(c), v);
            int kc = detail::class_of(v, a);
            if (!have_class) {
                k_lo = k_hi = kc;
                have_class = true;
            } else {
                k_lo = std::min(k_lo, kc);
                k_hi = std::max(k_hi, kc);
            }
        }
    }
    if (!have_class) return fam;

    // Ancestor extension: climb from the root until pi <= a^{k_lo}.  The
    // averages above the root decrease strictly (the integrals are already
    // saturated), so this terminates.
    const double floor_pi = std::pow(a, k_lo);
    DyadicCube up = win.root;
    double up_pi = pi.count(up) ? pi[up] : detail::product_average(up, f1, s1, f2, s2);
    while (up_pi > floor_pi) {
        up = up.parent();
        up_pi = detail::product_average(up, f1, s1, f2, s2);
        pi.emplace(up, up_pi);  // keep the terminal cube too; it never qualifies
    }

    // Selection, coarse to fine.  A cube is maximal for class k iff
    // pi > a^k and every strict ancestor inside the search set fails that.
    std::map<DyadicCube, int> chosen;  // cube -> smallest class that selected it
    for (int k = k_lo; k <= k_hi; ++k) {
        const double thr = std::pow(a, k);
        for (const auto& [c, v] : pi) {
            if (!(v > thr)) continue;
            bool maximal = true;
            DyadicCube anc = c;
            while (anc.scale > up.scale) {
                anc = anc.parent();
                auto it = pi.find(anc);
                if (it != pi.end() && it->second > thr) {
                    maximal = false;
                    break;
                }
            }
            if (maximal && !chosen.count(c)) chosen.emplace(c, k);
        }
    }

    fam.built = true;
    fam.provenance = SparseFamily::Provenance{f1, f2, s1, s2};
    fam.cubes.reserve(chosen.size());
    fam.klass.reserve(chosen.size());
    for (const auto& [c, k] : chosen) {
        fam.cubes.push_back(c);
        fam.klass.push_back(k);
    }
    return fam;
}

// Exact rational check of |union of strict S-descendants| <= |Q|/2 for all
// Q in the family.  Returns (ok, worst ratio).  The union volume is exact:
// it is the volume sum of the maximal strict descendants, which are
// pairwise disjoint.
inline std::pair<bool, Rational> verify_sparsity(const SparseFamily& fam) {
    if (fam.empty()) return {true, Rational(0)};
    const auto& cubes = fam.cubes;  // sorted scale-major: ancestors first
    Rational worst(0);
    for (std::size_t i = 0; i < cubes.size(); ++i) {
        // maximal strict descendants of cubes[i] inside the family
        std::vector<const DyadicCube*> maximal;
        for (std::size_t j = 0; j < cubes.size(); ++j) {
            if (j == i) continue;
            if (cubes[j].scale <= cubes[i].scale) continue;
            if (!cubes[i].contains_cube(cubes[j])) continue;
            bool inside_other = false;
            for (const auto* m : maximal)
                if (m->contains_cube(cubes[j])) {
                    inside_other = true;
                    break;
                }
            if (!inside_other) maximal.push_back(&cubes[j]);
        }
        Rational covered(0);
        for (const auto* m : maximal) covered += m->volume();
        Rational ratio = covered / cubes[i].volume();
        worst = std::max(worst, ratio);
    }
    return {worst <= Rational(1, 2), worst};
}

// Sparse operator value; `root` restricts to the cubes inside it.
inline double eval_sparse(const OperatorParams& par, const SparseFamily& fam,
                          const SimpleFunction& f1, const DiscreteMeasure& s1,
                          const SimpleFunction& f2, const DiscreteMeasure& s2,
                          const RationalVec& x, const DyadicCube* root = nullptr) {
    if (fam.empty()) return 0.0;
    return eval_cubes(par, fam.cubes, f1, s1, f2, s2, x, root);
}

}  // namespace bfi
