#include <bfi/measure.hpp>
#include <bfi/rng.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

using namespace bfi;

namespace {

DiscreteMeasure meas1(std::initializer_list<std::pair<const char*, double>> atoms) {
    DiscreteMeasure m;
    for (const auto& [p, mass] : atoms) {
        m.points.push_back({parse_rational(p)});
        m.masses.push_back(mass);
    }
    return m;
}

AxisCube box1(const char* corner, const char* side) {
    return {{parse_rational(corner)}, parse_rational(side)};
}

DiscreteMeasure random_measure(std::mt19937_64& eng, int count) {
    DiscreteMeasure m;
    std::set<long long> used;
    while (static_cast<int>(m.size()) < count) {
        long long j = static_cast<long long>(uniform_below(eng, 3 * 1024));
        if (!used.insert(j).second) continue;
        m.points.push_back({q_of(j) / q_of(3 * 1024)});
        m.masses.push_back(log_uniform(eng, 1e-2, 1e2));
    }
    return m;
}

SimpleFunction random_function(std::mt19937_64& eng, std::size_t size) {
    SimpleFunction f(size);
    for (auto& v : f) v = uniform01(eng) < 0.15 ? 0.0 : log_uniform(eng, 1e-2, 1e2);
    return f;
}

}  // namespace

TEST_CASE("lp_norm on point masses") {
    auto m = meas1({{"0", 3.0}});
    CHECK(lp_norm({2.0}, 2, m) == Catch::Approx(std::sqrt(12.0)).epsilon(1e-15));
    CHECK(lp_norm({0.0}, 2, m) == 0.0);

    auto m2 = meas1({{"0", 1.0}, {"1/2", 3.0}});
    CHECK(lp_norm({1.0, 1.0}, 2, m2) == 2.0);
    CHECK_THROWS_AS(lp_norm({1.0, 1.0}, 0.5, m2), std::invalid_argument);
    CHECK_THROWS_AS(lp_norm({1.0}, 2, m2), std::invalid_argument);
}

TEST_CASE("weak_lq_norm is a finite max over the value set") {
    auto m = meas1({{"0", 1.0}});
    CHECK(weak_lq_norm({2.0}, 2, m) == 2.0);

    auto m2 = meas1({{"0", 1.0}, {"1/2", 3.0}});
    // max(2 * 1^{1/2}, 1 * 4^{1/2}) = 2
    CHECK(weak_lq_norm({2.0, 1.0}, 2, m2) == 2.0);
    CHECK(weak_lq_norm({0.0, 0.0}, 2, m2) == 0.0);
}

TEST_CASE("weak norm is dominated by the strong norm") {
    std::mt19937_64 eng(23);
    for (int trial = 0; trial < 200; ++trial) {
        auto m = random_measure(eng, 1 + static_cast<int>(uniform_below(eng, 12)));
        auto g = random_function(eng, m.size());
        for (double q : {1.5, 2.0, 3.0})
            CHECK(weak_lq_norm(g, q, m) <= lp_norm(g, q, m) * (1 + 1e-12));
    }
}

TEST_CASE("average over a cube") {
    auto m = meas1({{"1/4", 1.0}, {"3/4", 3.0}});
    CHECK(average({8.0, 0.0}, m, box1("0", "1")) == 2.0);
    CHECK(average({8.0, 0.0}, m, box1("2", "1")) == 0.0);  // empty cube convention
    CHECK(average({5.5, 5.5}, m, box1("0", "1")) == Catch::Approx(5.5).epsilon(1e-15));
    // scaling f scales the average
    CHECK(average({16.0, 0.0}, m, box1("0", "1")) == 4.0);
}

TEST_CASE("dyadic maximal function over a small grid") {
    auto m = meas1({{"1/4", 1.0}, {"3/4", 1.0}});
    // cubes of scales 0 and 1: [0,1), [0,1/2), [1/2,1)
    auto mf = dyadic_maximal({4.0, 0.0}, m, GridShift::zero(1), 0, 1);
    REQUIRE(mf.size() == 2);
    CHECK(mf[0] == 4.0);
    CHECK(mf[1] == 2.0);

    auto cf = dyadic_maximal({3.0, 3.0}, m, GridShift::zero(1), 0, 1);
    CHECK(cf[0] == 3.0);
    CHECK(cf[1] == 3.0);
}

TEST_CASE("maximal function dominates f when atoms are isolated") {
    std::mt19937_64 eng(29);
    for (int trial = 0; trial < 50; ++trial) {
        auto m = random_measure(eng, 6);
        auto f = random_function(eng, m.size());
        // scale 12 isolates atoms with denominator 3*1024 (side 2^-12 < 1/3072)
        auto mf = dyadic_maximal(f, m, GridShift::zero(1), 0, 12);
        for (std::size_t i = 0; i < f.size(); ++i) CHECK(mf[i] >= f[i] * (1 - 1e-12));
    }
}

TEST_CASE("maximal operator norm bound p'") {
    std::mt19937_64 eng(31);
    for (int trial = 0; trial < 200; ++trial) {
        auto m = random_measure(eng, 1 + static_cast<int>(uniform_below(eng, 10)));
        auto f = random_function(eng, m.size());
        auto mf = dyadic_maximal(f, m, GridShift::zero(1), -6, 12);
        for (double p : {1.5, 2.0, 3.0}) {
            const double pc = p / (p - 1.0);
            CHECK(lp_norm(mf, p, m) <= pc * lp_norm(f, p, m) * (1 + 1e-12));
        }
    }
}

TEST_CASE("Kolmogorov inequality with constant q/(q-1)") {
    std::mt19937_64 eng(37);
    int tested = 0;
    while (tested < 1000) {
        auto m = random_measure(eng, 1 + static_cast<int>(uniform_below(eng, 10)));
        auto g = random_function(eng, m.size());
        int e = static_cast<int>(uniform_below(eng, 4));
        long long c = static_cast<long long>(uniform_below(eng, 1 << (10 - e)));
        AxisCube q{{q_of(c) / q_of(1LL << (10 - e))}, pow2q(-e + 1)};
        double wq = 0, integral = 0;
        for (std::size_t i = 0; i < m.size(); ++i) {
            if (!q.contains(m.points[i])) continue;
            wq += m.masses[i];
            integral += g[i] * m.masses[i];
        }
        if (wq == 0) continue;
        // restrict to Q and normalize the measure
        DiscreteMeasure rest;
        SimpleFunction grest;
        for (std::size_t i = 0; i < m.size(); ++i) {
            if (!q.contains(m.points[i])) continue;
            rest.points.push_back(m.points[i]);
            rest.masses.push_back(m.masses[i] / wq);
            grest.push_back(g[i]);
        }
        for (double qexp : {1.5, 2.0, 4.0}) {
            const double qc = qexp / (qexp - 1.0);
            CHECK(integral / wq <= qc * weak_lq_norm(grest, qexp, rest) * (1 + 1e-12) + 1e-15);
        }
        ++tested;
    }
}

TEST_CASE("exponent validation") {
    auto e = ExponentTuple::make(2, 2, 2);
    CHECK(e.p1c == 2.0);
    CHECK(e.p2c == 2.0);
    CHECK(e.qc == 2.0);
    CHECK(e.valid());

    auto b = ExponentTuple::make(1.5, 3, 3);  // 4.5 >= 4.5 boundary
    CHECK(b.valid());
    CHECK(b.p1c == 3.0);
    CHECK(b.p1c >= b.p2);

    CHECK_THROWS_WITH(ExponentTuple::make(3, 3, 3),
                      Catch::Matchers::ContainsSubstring("p1 + p2 >= p1*p2"));
    CHECK_THROWS_WITH(ExponentTuple::make(2, 2, 1.5),
                      Catch::Matchers::ContainsSubstring("q >= p1"));
    CHECK_THROWS_AS(ExponentTuple::make(1.0, 2, 2), std::invalid_argument);

    auto forced = ExponentTuple::make(3, 3, 3, true);
    CHECK_FALSE(forced.valid());
    CHECK(forced.forced);
}

TEST_CASE("measure validation rejects bad atoms") {
    DiscreteMeasure m = meas1({{"0", 1.0}, {"0", 2.0}});
    CHECK_THROWS_AS(m.validate(), std::invalid_argument);
    DiscreteMeasure z = meas1({{"0", 0.0}});
    CHECK_THROWS_AS(z.validate(), std::invalid_argument);
}
