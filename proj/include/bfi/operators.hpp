#pragma once

// The bilinear fractional integral over a pair of atomic measures,
//
//   K(f1 s1, f2 s2)(x) = sum over atom pairs (y1, y2) of
//       f1(y1) f2(y2) m1(y1) m2(y2) / (|x-y1| + |x-y2|)^{2n-alpha},
//
// together with its dyadic discretization over a truncated shifted grid,
//
//   D(f1 s1, f2 s2)(x) = sum over admitted cubes Q containing x of
//       prod_i |Q|^{alpha/(2n)-1} int_Q f_i ds_i,
//
// and the same sum restricted to an explicit cube family.  A point sitting
// on a common atom of both measures makes the kernel sum infinite; +inf is
// a legal value and propagates through norms, it is never an exception.

#include "measure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <vector>

namespace bfi {

struct OperatorParams {
    int n = 1;           // dimension
    double alpha = 1.0;  // 0 < alpha < 2n

    void validate() const {
        if (n < 1) throw std::invalid_argument("dimension must be positive");
        if (!(alpha > 0 && alpha < 2.0 * n))
            throw std::invalid_argument("alpha must satisfy 0 < alpha < 2n");
    }

    // |Q|^{alpha/n - 2} for a cube of scale k, the product of the two
    // per-slot factors |Q|^{alpha/(2n)-1}.
    double cube_weight(int scale) const {
        return std::pow(std::ldexp(1.0, -scale * n), alpha / n - 2.0);
    }
};

// Admitted cubes: Q inside root with root.scale <= scale(Q) <= k_max.
struct TruncationWindow {
    DyadicCube root;
    int k_max = 12;

    int k_min() const { return root.scale; }
    const GridShift& shift() const { return root.shift; }
};

// Window whose root is the smallest grid cube containing all points,
// coarsened to scale k_min when the natural root is finer.
inline TruncationWindow make_window(const GridShift& t, std::span<const RationalVec> pts,
                                    int k_min, int k_max) {
    if (k_min > k_max) throw std::invalid_argument("window: k_min > k_max");
    // smallest covering cube of side at least 2^{-k_min}, so the root scale
    // never exceeds k_min and coarse terms down to k_min are admitted
    DyadicCube root = covering_dyadic_cube(pts, t, pow2q(-k_min));
    TruncationWindow w{std::move(root), k_max};
    return w;
}

inline std::vector<RationalVec> all_points(const DiscreteMeasure& a, const DiscreteMeasure& b,
                                           const DiscreteMeasure& c) {
    std::vector<RationalVec> pts;
    pts.reserve(a.size() + b.size() + c.size());
    pts.insert(pts.end(), a.points.begin(), a.points.end());
    pts.insert(pts.end(), b.points.begin(), b.points.end());
    pts.insert(pts.end(), c.points.begin(), c.points.end());
    return pts;
}

namespace detail {

inline double dist(const RationalVec& a, const RationalVec& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = Rational(a[i] - b[i]).get_d();
        s += d * d;
    }
    return std::sqrt(s);
}

// Summation in ascending value order: a canonical order for the term
// multiset, so swapping the two slots reproduces the sum bit for bit.
inline double sorted_sum(std::vector<double>& terms) {
    std::sort(terms.begin(), terms.end());
    double s = 0;
    for (double t : terms) s += t;
    return s;
}

}  // namespace detail

inline double eval_kernel(const OperatorParams& par, const SimpleFunction& f1,
                          const DiscreteMeasure& s1, const SimpleFunction& f2,
                          const DiscreteMeasure& s2, const RationalVec& x) {
    check_assoc(f1, s1);
    check_assoc(f2, s2);
    const double expo = 2.0 * par.n - par.alpha;
    std::vector<double> terms;
    terms.reserve(s1.size() * s2.size());
    for (std::size_t i = 0; i < s1.size(); ++i) {
        if (f1[i] == 0) continue;
        const double d1 = detail::dist(x, s1.points[i]);
        for (std::size_t j = 0; j < s2.size(); ++j) {
            if (f2[j] == 0) continue;
            const double num = (f1[i] * s1.masses[i]) * (f2[j] * s2.masses[j]);
            const double d = d1 + detail::dist(x, s2.points[j]);
            if (d == 0) return std::numeric_limits<double>::infinity();
            terms.push_back(num / std::pow(d, expo));
        }
    }
    return detail::sorted_sum(terms);
}

// Dyadic sum over the window, walking the ancestor chain of x scale by
// scale (scale-major order is the fixed summation order).
inline double eval_dyadic(const OperatorParams& par, const TruncationWindow& win,
                          const SimpleFunction& f1, const DiscreteMeasure& s1,
                          const SimpleFunction& f2, const DiscreteMeasure& s2,
                          const RationalVec& x) {
    check_assoc(f1, s1);
    check_assoc(f2, s2);
    if (!win.root.contains(x)) return 0.0;
    double sum = 0;
    for (int k = win.root.scale; k <= win.k_max; ++k) {
        DyadicCube c = cube_at(x, k, win.shift());
        double a = 0, b = 0;
        for (std::size_t i = 0; i < s1.size(); ++i)
            if (f1[i] != 0 && c.contains(s1.points[i])) a += f1[i] * s1.masses[i];
        if (a == 0) continue;
        for (std::size_t j = 0; j < s2.size(); ++j)
            if (f2[j] != 0 && c.contains(s2.points[j])) b += f2[j] * s2.masses[j];
        if (b == 0) continue;
        sum += (a * b) * par.cube_weight(k);
    }
    return sum;
}

// Same summand restricted to an explicit cube list; an optional root
// implements the localized operator that only sees cubes inside it.
inline double eval_cubes(const OperatorParams& par, std::span<const DyadicCube> cubes,
                         const SimpleFunction& f1, const DiscreteMeasure& s1,
                         const SimpleFunction& f2, const DiscreteMeasure& s2,
                         const RationalVec& x, const DyadicCube* root = nullptr) {
    check_assoc(f1, s1);
    check_assoc(f2, s2);
    double sum = 0;
    for (const auto& q : cubes) {
        if (root && !root->contains_cube(q)) continue;
        if (!q.contains(x)) continue;
        double a = 0, b = 0;
        for (std::size_t i = 0; i < s1.size(); ++i)
            if (f1[i] != 0 && q.contains(s1.points[i])) a += f1[i] * s1.masses[i];
        if (a == 0) continue;
        for (std::size_t j = 0; j < s2.size(); ++j)
            if (f2[j] != 0 && q.contains(s2.points[j])) b += f2[j] * s2.masses[j];
        if (b == 0) continue;
        sum += (a * b) * par.cube_weight(q.scale);
    }
    return sum;
}

// Derived constant of the pointwise bound D <= C1 K: for x, y1, y2 in a
// cube of side 2^{-k} one has |x-y1| + |x-y2| <= 2 sqrt(n) 2^{-k}, and the
// telescoping over scales contracts by 2^{alpha-2n} per step.
inline double prop22_upper_constant(const OperatorParams& par) {
    return std::pow(2.0 * std::sqrt(double(par.n)), 2.0 * par.n - par.alpha) /
           (1.0 - std::pow(2.0, par.alpha - 2.0 * par.n));
}

// Ancestors of atom points at every admitted scale: the only grid cubes
// with a nonzero integral in either slot.  Sorted scale-major, position lex.
inline std::vector<DyadicCube> relevant_cubes(const GridShift& t,
                                              std::span<const RationalVec> pts, int k_coarse,
                                              int k_max) {
    std::set<DyadicCube> out;
    for (int k = k_coarse; k <= k_max; ++k)
        for (const auto& p : pts) out.insert(cube_at(p, k, t));
    return {out.begin(), out.end()};
}

}  // namespace bfi
