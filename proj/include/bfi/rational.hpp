#pragma once

// Exact rational scalars and points. Cube corners involve the shift 1/3,
// which has no binary-float representation, so all geometric predicates
// run on GMP rationals. Masses and function values stay as doubles.

#include <gmpxx.h>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace bfi {

using Rational = mpq_class;
using RationalVec = std::vector<Rational>;

// 2^k for any sign of k.
inline Rational pow2q(int k) {
    Rational r;
    if (k >= 0) {
        mpz_class num = 1;
        mpz_mul_2exp(num.get_mpz_t(), num.get_mpz_t(), k);
        r = num;
    } else {
        mpz_class den = 1;
        mpz_mul_2exp(den.get_mpz_t(), den.get_mpz_t(), -k);
        r = Rational(1, den);
    }
    return r;
}

// Largest integer <= x.
inline mpz_class rfloor(const Rational& x) {
    mpz_class q;
    mpz_fdiv_q(q.get_mpz_t(), x.get_num_mpz_t(), x.get_den_mpz_t());
    return q;
}

inline long long to_ll(const mpz_class& z) {
    if (!z.fits_slong_p())
        throw std::overflow_error("cube position out of range: " + z.get_str());
    return z.get_si();
}

// gmpxx has no long long constructors; positions fit in a long on LP64
inline Rational q_of(long long v) {
    static_assert(sizeof(long) == sizeof(long long), "LP64 platform expected");
    return Rational(static_cast<long>(v));
}

// Parses "p/q" or "p". Decimal notation is rejected on purpose: coordinates
// must round-trip exactly.
inline Rational parse_rational(const std::string& s) {
    if (s.empty() || s.find('.') != std::string::npos)
        throw std::invalid_argument("not an exact rational: '" + s + "'");
    Rational r;
    if (r.set_str(s, 10) != 0)
        throw std::invalid_argument("not an exact rational: '" + s + "'");
    r.canonicalize();
    return r;
}

inline std::string rational_str(const Rational& r) { return r.get_str(); }

inline RationalVec parse_point(const std::vector<std::string>& coords) {
    RationalVec p;
    p.reserve(coords.size());
    for (const auto& c : coords) p.push_back(parse_rational(c));
    return p;
}

}  // namespace bfi
