#include <bfi/decomposition.hpp>
#include <bfi/rng.hpp>

#include <catch2/catch_amalgamated.hpp>

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

DyadicCube cube1(int scale, long long pos) { return {scale, {pos}, GridShift::zero(1)}; }

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

struct RandomSetup {
    OperatorParams par{1, 1.0};
    DiscreteMeasure s1, s2, w;
    SimpleFunction f1, f2;
    TruncationWindow win;
    SparseFamily fam;
};

RandomSetup random_setup(std::mt19937_64& eng) {
    RandomSetup r;
    r.par.alpha = log_uniform(eng, 0.4, 1.6);
    r.s1 = random_measure(eng, 2 + static_cast<int>(uniform_below(eng, 7)));
    r.s2 = random_measure(eng, 2 + static_cast<int>(uniform_below(eng, 7)));
    r.w = random_measure(eng, 2 + static_cast<int>(uniform_below(eng, 7)));
    r.f1.resize(r.s1.size());
    r.f2.resize(r.s2.size());
    for (auto& v : r.f1) v = uniform01(eng) < 0.1 ? 0.0 : log_uniform(eng, 1e-2, 1e2);
    for (auto& v : r.f2) v = uniform01(eng) < 0.1 ? 0.0 : log_uniform(eng, 1e-2, 1e2);
    auto pts = all_points(r.s1, r.s2, r.w);
    r.win = make_window(GridShift::zero(1), pts, -8, 12);
    r.fam = build_sparse(r.par, r.win, r.f1, r.s1, r.f2, r.s2);
    return r;
}

}  // namespace

TEST_CASE("level sets of the two-cube family") {
    OperatorParams par{1, 1.0};
    auto s = meas1({{"1/10", 1.0}});
    auto w = meas1({{"3/10", 1.0}});
    SparseFamily fam;
    fam.cubes = {cube1(0, 0), cube1(1, 0)};
    // operator value: 3 on [0,1/2), 1 on [1/2,1)
    auto ls = level_sets(par, fam, cube1(0, 0), ones(s), s, ones(s), s, w, 0.25);

    REQUIRE(ls.cubes.size() == 2);
    CHECK(ls.cum[0] == 1.0);  // A([0,1))
    CHECK(ls.cum[1] == 3.0);  // A([0,1/2))

    const auto* l0 = ls.level(0);
    REQUIRE(l0);
    REQUIRE(l0->maximal.size() == 1);
    CHECK(ls.cubes[l0->maximal[0].cube] == cube1(1, 0));

    const auto* lm1 = ls.level(-1);
    REQUIRE(lm1);
    REQUIRE(lm1->maximal.size() == 1);
    CHECK(ls.cubes[lm1->maximal[0].cube] == cube1(0, 0));

    const auto* l1 = ls.level(1);
    REQUIRE(l1);
    REQUIRE(l1->maximal.size() == 1);
    CHECK(ls.cubes[l1->maximal[0].cube] == cube1(1, 0));  // nested in Omega_0

    // the w-atom has value 3 in (2^1, 2^2]: it lands in E(Q^0) and F(Q^0)
    const auto& mc = l0->maximal[0];
    CHECK(mc.w_f == 1.0);
    CHECK(mc.w_e == 1.0);
    CHECK(mc.w_cube == 1.0);
    REQUIRE(ls.parity_even.size() == 1);
    CHECK(ls.parity_even[0] == 0);

    CHECK_FALSE(check_maximum_principle(ls, par, ones(s), s, ones(s), s, w).has_value());
}

TEST_CASE("vanishing input produces no levels") {
    OperatorParams par{1, 1.0};
    auto s = meas1({{"1/10", 1.0}});
    auto w = meas1({{"3/10", 1.0}});
    SparseFamily fam;
    fam.cubes = {cube1(0, 0)};
    SimpleFunction zero(s.size(), 0.0);
    auto ls = level_sets(par, fam, cube1(0, 0), zero, s, ones(s), s, w, 0.25);
    CHECK(ls.levels.empty());
    CHECK_FALSE(check_maximum_principle(ls, par, zero, s, ones(s), s, w).has_value());
}

TEST_CASE("maximum principle and set bookkeeping on random instances") {
    std::mt19937_64 eng(61);
    for (int trial = 0; trial < 60; ++trial) {
        auto r = random_setup(eng);
        if (r.fam.empty()) continue;
        auto ls = level_sets(r.par, r.fam, r.win.root, r.f1, r.s1, r.f2, r.s2, r.w, 0.25);
        auto bad = check_maximum_principle(ls, r.par, r.f1, r.s1, r.f2, r.s2, r.w);
        CHECK_FALSE(bad.has_value());

        // superlevel sets are nested: every selected cube of level k+1 sits
        // inside a selected cube of level k
        for (std::size_t li = 0; li + 1 < ls.levels.size(); ++li) {
            const auto& finer = ls.levels[li];     // k_hi first: finer = higher level
            const auto& coarser = ls.levels[li + 1];
            for (const auto& mc : finer.maximal) {
                bool inside = false;
                for (const auto& out : coarser.maximal)
                    if (ls.cubes[out.cube].contains_cube(ls.cubes[mc.cube])) inside = true;
                CHECK(inside);
            }
        }

        // within one parity class the exceptional sets are pairwise
        // disjoint, and per level they fill at most Omega_{k+1}
        for (int parity : {0, 1}) {
            std::set<int> seen;
            for (const auto& lev : ls.levels) {
                if (((lev.k % 2) + 2) % 2 != parity) continue;
                for (const auto& mc : lev.maximal)
                    for (int t : mc.e_atoms) CHECK(seen.insert(t).second);
            }
        }
        for (const auto& lev : ls.levels) {
            double we = 0, womega = 0;
            const double thr = std::ldexp(1.0, lev.k + 1);
            for (const auto& mc : lev.maximal)
                for (int t : mc.e_atoms) we += r.w.masses[t];
            for (std::size_t t = 0; t < r.w.size(); ++t)
                if (ls.point_value[t] > thr) womega += r.w.masses[t];
            CHECK(we <= womega * (1 + 1e-12));
        }

        // weak-type sets: the localized operator also exceeds 2^k on
        // F(Q_j^k) = Q_j^k ∩ Omega_{k+1}
        for (const auto& lev : ls.levels) {
            const double thr = std::ldexp(1.0, lev.k);
            for (const auto& mc : lev.maximal) {
                if (mc.f_atoms.empty()) continue;
                SimpleFunction g1(r.f1), g2(r.f2);
                for (std::size_t t = 0; t < r.s1.size(); ++t)
                    if (!ls.cubes[mc.cube].contains(r.s1.points[t])) g1[t] = 0;
                for (std::size_t t = 0; t < r.s2.size(); ++t)
                    if (!ls.cubes[mc.cube].contains(r.s2.points[t])) g2[t] = 0;
                for (int t : mc.f_atoms)
                    CHECK(eval_cubes(r.par, ls.cubes, g1, r.s1, g2, r.s2, r.w.points[t]) > thr);
            }
        }

        // levels admitted by the delta filter: some cube witnesses the
        // threshold, and that cube is not a maximal cube two levels up
        for (int k : ls.parity_even) {
            const auto* lev = ls.level(k);
            REQUIRE(lev);
            bool witness = false;
            for (const auto& mc : lev->maximal) {
                if (mc.w_e > 0.25 * mc.w_cube) {
                    witness = true;
                    const auto* up = ls.level(k + 2);
                    if (up)
                        for (const auto& upmc : up->maximal)
                            CHECK(upmc.cube != mc.cube);
                }
            }
            CHECK(witness);
        }
    }
}

TEST_CASE("principal cubes of a two-cube forest") {
    auto sigma = meas1({{"1/8", 0.01}, {"3/4", 1.0}});
    SimpleFunction f = {100.0, 0.1};
    std::vector<DyadicCube> forest = {cube1(0, 0), cube1(1, 0)};
    auto pf = principal_cubes(f, sigma, forest);

    REQUIRE(pf.cubes.size() == 2);
    CHECK(pf.generation[0] == 0);           // [0,1) is the root
    CHECK(pf.generation[1] == 1);           // E jumps 1.089 -> 100
    CHECK(pf.avg[0] == Catch::Approx(1.1 / 1.01).epsilon(1e-14));
    CHECK(pf.avg[1] == Catch::Approx(100.0).epsilon(1e-14));
    CHECK(pf.minimal_principal[1] == 1);

    const double p = 2.0;
    const double sum = carleson_sum(pf, f, sigma, p);
    CHECK(sum == Catch::Approx(1.21 / 1.01 + 100.0).epsilon(1e-12));
    CHECK(sum <= carleson_bound(p, lp_norm(f, p, sigma)));
}

TEST_CASE("constant functions stop at generation zero") {
    auto sigma = meas1({{"1/8", 1.0}, {"3/4", 2.0}});
    SimpleFunction f = {7.0, 7.0};
    std::vector<DyadicCube> forest = {cube1(0, 0), cube1(1, 0), cube1(2, 0), cube1(2, 3)};
    auto pf = principal_cubes(f, sigma, forest);
    for (std::size_t i = 0; i < pf.cubes.size(); ++i)
        CHECK((pf.generation[i] <= 0));
    CHECK(carleson_sum(pf, f, sigma, 2.0) == Catch::Approx(49.0 * 3.0));  // c^p sigma(root)

    auto none = principal_cubes(f, sigma, {});
    CHECK(none.cubes.empty());
    CHECK(carleson_sum(none, f, sigma, 2.0) == 0.0);
}

TEST_CASE("principal-cube invariants on random forests") {
    std::mt19937_64 eng(67);
    int done = 0;
    while (done < 60) {
        auto r = random_setup(eng);
        if (r.fam.empty()) continue;
        ++done;
        std::vector<DyadicCube> forest;
        for (const auto& c : r.fam.cubes)
            if (r.win.root.contains_cube(c)) forest.push_back(c);
        auto pf = principal_cubes(r.f2, r.s2, forest);

        for (std::size_t i = 0; i < pf.cubes.size(); ++i) {
            const int g = pf.minimal_principal[i];
            REQUIRE(g >= 0);
            CHECK(pf.cubes[g].contains_cube(pf.cubes[i]));
            CHECK(pf.avg[i] <= 4.0 * pf.avg[g] * (1 + 1e-12));  // minimal-ancestor bound
            if (pf.generation[i] > 0) {
                int up = pf.parent[i];
                while (up >= 0 && !pf.is_principal(up)) up = pf.parent[up];
                REQUIRE(up >= 0);
                CHECK(pf.avg[i] > 4.0 * pf.avg[up] * (1 - 1e-12));  // the 4-fold rule
            }
        }
        for (double p : {1.5, 2.0, 3.0})
            CHECK(carleson_sum(pf, r.f2, r.s2, p) <=
                  carleson_bound(p, lp_norm(r.f2, p, r.s2)) * (1 + 1e-12));
    }
}
