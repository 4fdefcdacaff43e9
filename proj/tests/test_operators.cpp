#include <bfi/rng.hpp>
#include <bfi/sparse.hpp>

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

SimpleFunction ones(const DiscreteMeasure& m) { return SimpleFunction(m.size(), 1.0); }

DiscreteMeasure random_measure(std::mt19937_64& eng, int n, int count) {
    DiscreteMeasure m;
    std::set<std::vector<long long>> used;
    while (static_cast<int>(m.size()) < count) {
        std::vector<long long> key(n);
        for (auto& k : key) k = static_cast<long long>(uniform_below(eng, 3 * 1024));
        if (!used.insert(key).second) continue;
        RationalVec p(n);
        for (int i = 0; i < n; ++i) p[i] = q_of(key[i]) / q_of(3 * 1024);
        m.points.push_back(std::move(p));
        m.masses.push_back(log_uniform(eng, 1e-2, 1e2));
    }
    return m;
}

}  // namespace

TEST_CASE("kernel sum on point masses") {
    OperatorParams par{1, 1.0};  // exponent 2n - alpha = 1
    auto s = meas1({{"0", 1.0}});
    CHECK(eval_kernel(par, ones(s), s, ones(s), s, {parse_rational("3/4")}) ==
          Catch::Approx(2.0 / 3.0).epsilon(1e-15));

    auto s2 = meas1({{"1", 1.0}});
    CHECK(eval_kernel(par, ones(s), s, ones(s2), s2, {parse_rational("1/2")}) == 1.0);

    // evaluation on a shared atom is the infinite sentinel, not an error
    CHECK(std::isinf(eval_kernel(par, ones(s), s, ones(s), s, {parse_rational("0")})));
    // but a zero numerator there keeps the sum finite
    CHECK(eval_kernel(par, {0.0}, s, ones(s), s, {parse_rational("0")}) == 0.0);
}

TEST_CASE("dyadic sum telescopes along the ancestor chain") {
    OperatorParams par{1, 1.0};
    auto s = meas1({{"0", 1.0}});
    const RationalVec x = {parse_rational("3/4")};
    auto f = ones(s);

    // scales -3..0: cubes [0,1), [0,2), [0,4), [0,8) all contain 0 and 3/4;
    // per-cube weight |Q|^{-1} gives 1 + 1/2 + 1/4 + 1/8
    auto win = make_window(GridShift::zero(1), s.points, -3, 0);
    REQUIRE(win.root == DyadicCube{-3, {0}, GridShift::zero(1)});
    CHECK(eval_dyadic(par, win, f, s, f, s, x) == Catch::Approx(15.0 / 8.0).epsilon(1e-15));

    // enlarging the window only adds terms; the full sum converges to 2
    double prev = 0;
    for (int kmin : {-3, -6, -10, -20}) {
        auto w = make_window(GridShift::zero(1), s.points, kmin, 0);
        double v = eval_dyadic(par, w, f, s, f, s, x);
        CHECK(v >= prev);
        prev = v;
        CHECK(v == Catch::Approx(2.0 - std::ldexp(1.0, kmin)).epsilon(1e-12));
    }

    // a point outside every cube meeting the support contributes nothing
    CHECK(eval_dyadic(par, win, f, s, f, s, {parse_rational("-1/2")}) == 0.0);
}

TEST_CASE("explicit cube-family sum") {
    OperatorParams par{1, 1.0};
    auto s = meas1({{"1/10", 1.0}});
    auto f = ones(s);
    std::vector<DyadicCube> fam = {{0, {0}, GridShift::zero(1)}, {1, {0}, GridShift::zero(1)}};

    CHECK(eval_cubes(par, fam, f, s, f, s, {parse_rational("3/10")}) == 3.0);  // 1 + 2
    CHECK(eval_cubes(par, fam, f, s, f, s, {parse_rational("3/5")}) == 1.0);   // only [0,1)
    CHECK(eval_cubes(par, {}, f, s, f, s, {parse_rational("3/10")}) == 0.0);

    // root restriction drops the coarse cube
    CHECK(eval_cubes(par, fam, f, s, f, s, {parse_rational("3/10")}, &fam[1]) == 2.0);
}

TEST_CASE("slot symmetry is exact") {
    std::mt19937_64 eng(41);
    for (int trial = 0; trial < 30; ++trial) {
        const int n = 1 + static_cast<int>(uniform_below(eng, 2));
        OperatorParams par{n, log_uniform(eng, 0.3, 2.0 * n - 0.1)};
        auto s1 = random_measure(eng, n, 5), s2 = random_measure(eng, n, 4);
        auto w = random_measure(eng, n, 3);
        SimpleFunction f1(s1.size()), f2(s2.size());
        for (auto& v : f1) v = log_uniform(eng, 1e-1, 1e1);
        for (auto& v : f2) v = log_uniform(eng, 1e-1, 1e1);
        auto pts = all_points(s1, s2, w);
        auto win = make_window(GridShift::zero(n), pts, -6, 12);
        auto fam = build_sparse(par, win, f1, s1, f2, s2);
        for (const auto& x : w.points) {
            CHECK(eval_kernel(par, f1, s1, f2, s2, x) == eval_kernel(par, f2, s2, f1, s1, x));
            CHECK(eval_dyadic(par, win, f1, s1, f2, s2, x) ==
                  eval_dyadic(par, win, f2, s2, f1, s1, x));
            CHECK(eval_cubes(par, fam.cubes, f1, s1, f2, s2, x) ==
                  eval_cubes(par, fam.cubes, f2, s2, f1, s1, x));
        }
    }
}

TEST_CASE("linearity in each slot") {
    OperatorParams par{1, 0.7};
    std::mt19937_64 eng(43);
    auto s1 = random_measure(eng, 1, 4), s2 = random_measure(eng, 1, 4);
    SimpleFunction f1(s1.size(), 1.0), f2(s2.size(), 1.0);
    auto pts = all_points(s1, s2, s2);
    auto win = make_window(GridShift::zero(1), pts, -6, 12);
    const RationalVec x = s2.points[0];

    SimpleFunction f1x2(f1);
    for (auto& v : f1x2) v *= 2.0;  // power of two: scaling commutes exactly
    CHECK(eval_dyadic(par, win, f1x2, s1, f2, s2, x) ==
          2.0 * eval_dyadic(par, win, f1, s1, f2, s2, x));
    SimpleFunction f1x17(f1);
    for (auto& v : f1x17) v *= 1.7;
    CHECK(eval_dyadic(par, win, f1x17, s1, f2, s2, x) ==
          Catch::Approx(1.7 * eval_dyadic(par, win, f1, s1, f2, s2, x)).epsilon(1e-12));
    CHECK(eval_kernel(par, f1x2, s1, f2, s2, x) == 2.0 * eval_kernel(par, f1, s1, f2, s2, x));
}

TEST_CASE("dyadic sum is bounded by C1 times the kernel") {
    std::mt19937_64 eng(47);
    for (int trial = 0; trial < 60; ++trial) {
        const int n = 1 + static_cast<int>(uniform_below(eng, 2));
        OperatorParams par{n, log_uniform(eng, 0.3, 2.0 * n - 0.1)};
        const double c1 = prop22_upper_constant(par);
        auto s1 = random_measure(eng, n, 5), s2 = random_measure(eng, n, 5);
        auto w = random_measure(eng, n, 4);
        SimpleFunction f1(s1.size()), f2(s2.size());
        for (auto& v : f1) v = log_uniform(eng, 1e-1, 1e1);
        for (auto& v : f2) v = log_uniform(eng, 1e-1, 1e1);
        auto pts = all_points(s1, s2, w);
        auto win = make_window(GridShift::zero(n), pts, -10, 12);
        for (const auto& x : w.points) {
            const double ker = eval_kernel(par, f1, s1, f2, s2, x);
            const double dy = eval_dyadic(par, win, f1, s1, f2, s2, x);
            if (std::isfinite(ker)) CHECK(dy <= c1 * ker * (1 + 1e-12));
        }
    }
}

TEST_CASE("C1 formula at the worked parameters") {
    CHECK(prop22_upper_constant({1, 1.0}) == Catch::Approx(4.0));  // 2^1 / (1 - 1/2)
    CHECK(prop22_upper_constant({2, 2.0}) ==
          Catch::Approx(std::pow(2.0 * std::sqrt(2.0), 2.0) / (1.0 - std::pow(2.0, -2.0))));
}
