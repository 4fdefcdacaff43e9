#pragma once

// Shifted dyadic grids.
//
// The grid with shift t in {0, 1/3}^n consists of the half-open cubes
//
//     2^{-k} ([0,1)^n + m + (-1)^k t),   k in Z, m in Z^n,
//
// so a cube at scale k has side 2^{-k} and corner 2^{-k}(m + (-1)^k t).
// The sign alternation keeps consecutive scales nested: the children of a
// scale-k cube sit at scale k+1 with positions 2m + e + (-1)^k (3t),
// e in {0,1}^n, and 3t is integral because each t_i is 0 or 1/3.
//
// Every nonempty axis-parallel cube Q is contained in some grid cube of
// side at most 6 l(Q); see covering_cube below.

#include "rational.hpp"

#include <algorithm>
#include <array>
#include <cassert>
#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace bfi {

// Per-coordinate flag: 0 -> shift 0, 1 -> shift 1/3.
struct GridShift {
    std::vector<std::uint8_t> thirds;

    GridShift() = default;
    explicit GridShift(std::vector<std::uint8_t> bits) : thirds(std::move(bits)) {}

    static GridShift zero(int n) { return GridShift(std::vector<std::uint8_t>(n, 0)); }

    // All 2^n shifts, lexicographic in the flag vector.
    static std::vector<GridShift> all(int n) {
        std::vector<GridShift> out;
        out.reserve(std::size_t(1) << n);
        for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
            std::vector<std::uint8_t> bits(n);
            for (int i = 0; i < n; ++i) bits[i] = (mask >> i) & 1u;
            out.emplace_back(std::move(bits));
        }
        return out;
    }

    int dim() const { return static_cast<int>(thirds.size()); }
    Rational offset(int i) const { return thirds[i] ? Rational(1, 3) : Rational(0); }

    bool operator==(const GridShift&) const = default;
    auto operator<=>(const GridShift&) const = default;
};

struct AxisCube {
    RationalVec corner;
    Rational side;  // > 0, half-open in every coordinate

    int dim() const { return static_cast<int>(corner.size()); }

    bool contains(const RationalVec& x) const {
        for (int i = 0; i < dim(); ++i) {
            if (x[i] < corner[i] || x[i] - corner[i] >= side) return false;
        }
        return true;
    }

    // Q subset of this, both half-open.
    bool contains_cube(const AxisCube& q) const {
        for (int i = 0; i < dim(); ++i) {
            if (q.corner[i] < corner[i]) return false;
            if (q.corner[i] + q.side > corner[i] + side) return false;
        }
        return true;
    }

    Rational volume() const {
        Rational v = 1;
        for (int i = 0; i < dim(); ++i) v *= side;
        return v;
    }
};

struct DyadicCube {
    int scale = 0;               // side = 2^{-scale}
    std::vector<long long> pos;  // m
    GridShift shift;

    int dim() const { return static_cast<int>(pos.size()); }
    Rational side() const { return pow2q(-scale); }
    int sign() const { return (scale & 1) ? -1 : 1; }  // (-1)^k

    Rational corner(int i) const {
        Rational c = q_of(pos[i]);
        if (shift.thirds[i]) c += Rational(sign(), 3);
        return c * pow2q(-scale);
    }

    AxisCube realize() const {
        AxisCube a;
        a.corner.reserve(dim());
        for (int i = 0; i < dim(); ++i) a.corner.push_back(corner(i));
        a.side = side();
        return a;
    }

    Rational volume() const { return pow2q(-scale * dim()); }

    bool contains(const RationalVec& x) const {
        // m_i <= 2^k x_i - (-1)^k t_i < m_i + 1, exactly.
        const Rational two_k = pow2q(scale);
        for (int i = 0; i < dim(); ++i) {
            Rational y = x[i] * two_k;
            if (shift.thirds[i]) y -= Rational(sign(), 3);
            const Rational m = q_of(pos[i]);
            if (y < m || y - m >= 1) return false;
        }
        return true;
    }

    std::vector<DyadicCube> children() const {
        std::vector<DyadicCube> out;
        const int n = dim();
        out.reserve(std::size_t(1) << n);
        for (std::uint32_t e = 0; e < (1u << n); ++e) {
            DyadicCube c;
            c.scale = scale + 1;
            c.shift = shift;
            c.pos.resize(n);
            for (int i = 0; i < n; ++i) {
                long long s3 = shift.thirds[i] ? sign() : 0;  // (-1)^k * 3t_i
                c.pos[i] = 2 * pos[i] + ((e >> i) & 1u) + s3;
            }
            out.push_back(std::move(c));
        }
        return out;
    }

    DyadicCube parent() const {
        DyadicCube p;
        p.scale = scale - 1;
        p.shift = shift;
        p.pos.resize(dim());
        const int psign = (p.scale & 1) ? -1 : 1;
        for (int i = 0; i < dim(); ++i) {
            long long u = pos[i] - (shift.thirds[i] ? psign : 0);
            // floor(u/2) for either sign of u
            p.pos[i] = (u >= 0) ? u / 2 : -((-u + 1) / 2);
        }
        return p;
    }

    DyadicCube ancestor_at(int coarser_scale) const {
        assert(coarser_scale <= scale);
        DyadicCube a = *this;
        while (a.scale > coarser_scale) a = a.parent();
        return a;
    }

    // Same-shift cubes are disjoint or nested; containment reduces to an
    // ancestor walk.
    bool contains_cube(const DyadicCube& q) const {
        assert(shift == q.shift);
        if (q.scale < scale) return false;
        return q.ancestor_at(scale) == *this;
    }

    bool operator==(const DyadicCube&) const = default;
    auto operator<=>(const DyadicCube&) const = default;
};

// The unique cube of D_t at `scale` containing x.
inline DyadicCube cube_at(const RationalVec& x, int scale, const GridShift& t) {
    DyadicCube c;
    c.scale = scale;
    c.shift = t;
    const int n = static_cast<int>(x.size());
    c.pos.resize(n);
    const Rational two_k = pow2q(scale);
    const int sgn = (scale & 1) ? -1 : 1;
    for (int i = 0; i < n; ++i) {
        Rational y = x[i] * two_k;
        if (t.thirds[i]) y -= Rational(sgn, 3);
        c.pos[i] = to_ll(rfloor(y));
    }
    return c;
}

// Smallest cube of D_t containing all points, with side at least min_side.
// For a coordinate with shift 1/3 the boundaries at scale L are L(m +- 1/3),
// so none survives near a bounded set once L/3 exceeds its extent; a
// covering cube always exists.  For a zero-shift coordinate the origin is a
// boundary at every scale, so points straddling 0 there have no common
// cube and the call throws.
inline DyadicCube covering_dyadic_cube(std::span<const RationalVec> pts, const GridShift& t,
                                       const Rational& min_side = Rational(0)) {
    if (pts.empty()) throw std::invalid_argument("covering_dyadic_cube: no points");
    const int n = static_cast<int>(pts[0].size());
    Rational bound = 1;
    for (const auto& p : pts)
        for (const auto& c : p) {
            Rational a = abs(c);
            if (a > bound) bound = a;
        }
    for (int i = 0; i < n; ++i) {
        if (t.thirds[i]) continue;
        bool neg = false, nonneg = false;
        for (const auto& p : pts) (p[i] < 0 ? neg : nonneg) = true;
        if (neg && nonneg)
            throw std::invalid_argument(
                "covering_dyadic_cube: points straddle the origin in a zero-shift coordinate");
    }
    Rational safe = 6 * bound + 6;
    if (min_side > safe) safe = min_side;
    int k = 0;
    while (pow2q(-k) < safe) --k;

    auto contains_all = [&](const DyadicCube& c) {
        for (const auto& p : pts)
            if (!c.contains(p)) return false;
        return true;
    };

    DyadicCube cur = cube_at(pts[0], k, t);
    if (!contains_all(cur)) throw std::logic_error("covering_dyadic_cube: safe scale failed");
    for (;;) {
        if (min_side > 0 && pow2q(-(cur.scale + 1)) < min_side) break;
        if (cur.scale > 400)
            throw std::invalid_argument(
                "covering_dyadic_cube: coincident points need a positive min_side");
        DyadicCube child = cube_at(pts[0], cur.scale + 1, t);
        if (!contains_all(child)) break;
        cur = std::move(child);
    }
    return cur;
}

// A shifted grid cube containing Q with side at most 6 l(Q).  Scales with
// side in [l, 6l] are scanned from the smallest side up; for each scale the
// shifts are tried in lexicographic order, so the result is deterministic:
// smallest admissible side first, then smallest (t, m).  Success is
// guaranteed no later than the scale with side in [3l, 6l]: an interval of
// length l <= L/3 cannot cross a boundary of both the plain and the
// one-third shifted grid at scale L, and the shift components act
// independently per coordinate.
inline std::pair<GridShift, DyadicCube> covering_cube(const AxisCube& q) {
    if (q.side <= 0) throw std::invalid_argument("covering_cube: empty cube");
    const int n = q.dim();
    const auto shifts = GridShift::all(n);

    // k_small: largest k with 2^{-k} >= l.  k_big: smallest k with 2^{-k} <= 6l.
    int k_small = 0;
    while (pow2q(-k_small) < q.side) --k_small;
    while (pow2q(-(k_small + 1)) >= q.side) ++k_small;
    const Rational six_l = 6 * q.side;
    int k_big = k_small;
    while (pow2q(-k_big) < six_l) --k_big;
    if (pow2q(-k_big) > six_l) ++k_big;  // may land back at side > 6l; loop below re-checks

    for (int k = k_small; k >= k_big; --k) {
        for (const auto& t : shifts) {
            DyadicCube c = cube_at(q.corner, k, t);
            if (c.realize().contains_cube(q)) return {t, c};
        }
    }
    throw std::logic_error("covering_cube: no shifted cube found (invariant violation)");
}

}  // namespace bfi
