#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "awbem/wavelet.hpp"

#include <cmath>
#include <random>

using namespace awbem;

namespace {
double u01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }
}

TEST_CASE("children / parent round trip") {
    const WaveletIndex root = scaling_index(0);
    const auto kids = children(root);
    REQUIRE(kids.size() == 3);
    for (const WaveletIndex& k : kids) {
        CHECK(k.level == 0);
        CHECK(k.k1 == 0);
        CHECK(k.k2 == 0);
        WaveletIndex par;
        REQUIRE(parent(k, par));
        CHECK(par == root);
    }

    const WaveletIndex w{2, 3, 5, 1, WaveletKind::Horiz};
    const auto kw = children(w);
    REQUIRE(kw.size() == 4);
    for (const WaveletIndex& k : kw) {
        CHECK(k.level == 4);
        CHECK(k.kind == w.kind);
        CHECK((k.k1 == 10 || k.k1 == 11));
        CHECK((k.k2 == 2 || k.k2 == 3));
        WaveletIndex par;
        REQUIRE(parent(k, par));
        CHECK(par == w);
    }
    WaveletIndex par;
    CHECK_FALSE(parent(root, par));
}

TEST_CASE("evaluate: scaling value, haar signs, outside support") {
    const Surface cube = make_cube();  // every face has jacobian 4
    CHECK(evaluate(cube, scaling_index(0), {0, 0.3, 0.9}) == doctest::Approx(0.5));

    const WaveletIndex h{0, 0, 0, 0, WaveletKind::Horiz};
    CHECK(evaluate(cube, h, {0, 0.25, 0.7}) == doctest::Approx(0.5));
    CHECK(evaluate(cube, h, {0, 0.75, 0.7}) == doctest::Approx(-0.5));

    const WaveletIndex d{0, 2, 1, 2, WaveletKind::Diag};
    CHECK(evaluate(cube, d, {0, 0.95, 0.95}) == 0.0);  // outside support
    CHECK(evaluate(cube, d, {1, 0.3, 0.6}) == 0.0);    // other patch
}

TEST_CASE("key packing is order preserving and invertible") {
    std::mt19937_64 rng(42);
    std::vector<WaveletIndex> idx;
    for (int it = 0; it < 500; ++it) {
        const int level = static_cast<int>(u01(rng) * 8);
        const int n = 1 << level;
        idx.push_back({static_cast<int>(u01(rng) * 11), level, static_cast<int>(u01(rng) * n),
                       static_cast<int>(u01(rng) * n),
                       static_cast<WaveletKind>(1 + static_cast<int>(u01(rng) * 3))});
        if (it % 37 == 0) idx.push_back(scaling_index(static_cast<int>(u01(rng) * 11)));
    }
    for (const WaveletIndex& a : idx) {
        CHECK(WaveletIndex::from_key(a.key()) == a);
        for (const WaveletIndex& b : idx) {
            const bool lt_fields =
                std::array{a.patch, a.level, static_cast<int>(a.kind), a.k1, a.k2} <
                std::array{b.patch, b.level, static_cast<int>(b.kind), b.k1, b.k2};
            CHECK(lt_fields == (a.key() < b.key()));
        }
    }
}

TEST_CASE("haar transforms: constants, unit vectors, parseval, round trip") {
    const Surface fichera = make_fichera();
    const int patch = 6;  // one of the half-area L pieces
    const double jac = fichera.patch(patch).jacobian;
    const int grid_level = 5;
    const std::size_t n = std::size_t{1} << grid_level;

    SUBCASE("constant input") {
        std::vector<double> values(n * n, 2.5);
        const CoeffVector c = haar_analysis(fichera, patch, values, grid_level);
        CHECK(c.size() == 1);
        CHECK(c.get(scaling_index(patch)) == doctest::Approx(2.5 * std::sqrt(jac)));
    }

    SUBCASE("sampled basis function gives a unit coefficient") {
        const WaveletIndex w{patch, 3, 4, 6, WaveletKind::Vert};
        std::vector<double> values(n * n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                values[i * n + j] =
                    evaluate(fichera, w, {patch, (i + 0.5) / n, (j + 0.5) / n});
        const CoeffVector c = haar_analysis(fichera, patch, values, grid_level);
        CHECK(c.get(w) == doctest::Approx(1.0).epsilon(1e-12));
        double off = 0.0;
        for (const auto& [idx, v] : c.entries())
            if (!(idx == w)) off = std::max(off, std::abs(v));
        CHECK(off <= 1e-12);
    }

    SUBCASE("parseval and synthesis inverse") {
        std::mt19937_64 rng(7);
        std::vector<double> values(n * n);
        for (double& v : values) v = -1.0 + 2.0 * u01(rng);
        const CoeffVector c = haar_analysis(fichera, patch, values, grid_level);
        double input_sq = 0.0;
        for (double v : values) input_sq += v * v * (jac / (n * n));
        CHECK(c.norm_sq() == doctest::Approx(input_sq).epsilon(1e-12));
        const std::vector<double> back = haar_synthesis(fichera, patch, c, grid_level);
        for (std::size_t i = 0; i < values.size(); ++i)
            CHECK(back[i] == doctest::Approx(values[i]).epsilon(1e-12));
    }

    SUBCASE("error paths") {
        std::vector<double> bad(n * n - 1, 0.0);
        CHECK_THROWS_AS((void)haar_analysis(fichera, patch, bad, grid_level),
                        std::invalid_argument);
        CoeffVector c;
        c.set({patch, grid_level, 0, 0, WaveletKind::Horiz}, 1.0);
        CHECK_THROWS_AS((void)haar_synthesis(fichera, patch, c, grid_level),
                        std::invalid_argument);
    }
}

TEST_CASE("tree completion") {
    const int patches = 12;
    SUBCASE("empty set gives roots only") {
        const Tree t = tree_complete({}, patches);
        CHECK(t.size() == 12);
        CHECK(t.is_valid(patches));
    }
    SUBCASE("single deep index pulls its ancestor chain") {
        const WaveletIndex w{3, 3, 5, 2, WaveletKind::Diag};
        const Tree t = tree_complete({w}, patches);
        // 12 roots + levels 0..3 of the diag chain on patch 3
        CHECK(t.size() == 12 + 4);
        CHECK(t.contains(w));
        CHECK(t.contains({3, 2, 2, 1, WaveletKind::Diag}));
        CHECK(t.contains({3, 1, 1, 0, WaveletKind::Diag}));
        CHECK(t.contains({3, 0, 0, 0, WaveletKind::Diag}));
        CHECK(t.is_valid(patches));
    }
    SUBCASE("idempotence") {
        const Tree t = tree_complete({{1, 4, 9, 9, WaveletKind::Horiz}}, patches);
        std::vector<WaveletIndex> all(t.indices().begin(), t.indices().end());
        CHECK(tree_complete(all, patches) == t);
    }
}

TEST_CASE("sobolev sequence norm") {
    CoeffVector v;
    CHECK(sobolev_seq_norm(v, 0.3) == 0.0);

    v.set({0, 3, 1, 1, WaveletKind::Horiz}, -2.0);
    CHECK(sobolev_seq_norm(v, 0.25) == doctest::Approx(2.0 * std::pow(2.0, 3 * 0.25)));

    v.set(scaling_index(0), 1.5);
    v.set({1, 1, 0, 1, WaveletKind::Vert}, 0.5);
    CHECK(sobolev_seq_norm(v, 0.0) == doctest::Approx(v.norm()).epsilon(1e-14));

    CHECK_THROWS_AS((void)sobolev_seq_norm(v, 0.5), std::invalid_argument);
    CHECK_THROWS_AS((void)sobolev_seq_norm(v, -0.7), std::invalid_argument);
}

TEST_CASE("besov norm: admissibility, single-coefficient scaling, p=q=2 coincidence") {
    const Surface cube = make_cube();

    BesovParams bad{1.0, 3.0, 2.0};  // 1/p < 1/2
    CHECK_FALSE(bad.admissible());
    CoeffVector v;
    v.set({0, 2, 1, 1, WaveletKind::Diag}, 3.0);
    CHECK_THROWS_AS((void)besov_norm(cube, v, bad), std::invalid_argument);

    // boundary of the admissible cone: q must not exceed 2
    BesovParams edge{1.0, 1.0, 2.0};
    CHECK(edge.admissible());
    edge.q = 3.0;
    CHECK_FALSE(edge.admissible());

    const BesovParams params{0.7, 1.25, 1.0};
    CHECK(params.admissible());
    const double expect =
        3.0 * std::pow(2.0, 2.0 * (params.alpha + 2.0 * (0.5 - 1.0 / params.p)));
    CHECK(besov_norm(cube, v, params) == doctest::Approx(expect).epsilon(1e-13));

    std::mt19937_64 rng(11);
    CoeffVector w;
    for (int it = 0; it < 200; ++it) {
        const int level = static_cast<int>(u01(rng) * 5);
        const int n = 1 << level;
        w.set({static_cast<int>(u01(rng) * 6), level, static_cast<int>(u01(rng) * n),
               static_cast<int>(u01(rng) * n),
               static_cast<WaveletKind>(1 + static_cast<int>(u01(rng) * 3))},
              -1.0 + 2.0 * u01(rng));
    }
    w.set(scaling_index(2), 0.7);
    const double alpha = 0.45;
    CHECK(besov_norm(cube, w, {alpha, 2.0, 2.0}) ==
          doctest::Approx(sobolev_seq_norm(w, alpha)).epsilon(1e-12));
}

TEST_CASE("besov norm against a direct level-sum oracle on a synthetic profile") {
    // level-l block of 4^l equal coefficients 2^{-l(alpha+1)} on one patch
    const Surface cube = make_cube();
    const double alpha = 1.0;
    const int levels = 8;
    CoeffVector v;
    for (int l = 0; l < levels; ++l) {
        const double c = std::pow(2.0, -l * (alpha + 1.0));
        const int n = 1 << l;
        int placed = 0;
        for (int k1 = 0; k1 < n && placed < (1 << (2 * l)); ++k1)
            for (int k2 = 0; k2 < n; ++k2) {
                v.set({0, l, k1, k2, WaveletKind::Horiz}, c);
                ++placed;
            }
    }
    // adaptivity-scale parameters 1/tau = alpha/2 + 1/2
    const double tau = 1.0 / (alpha / 2.0 + 0.5);
    const BesovParams params{alpha, tau, tau};
    REQUIRE(params.admissible());

    double oracle = 0.0;  // independent summation straight from the definition
    for (int l = 0; l < levels; ++l) {
        const double c = std::pow(2.0, -l * (alpha + 1.0));
        const double level_lp = std::pow(std::pow(2.0, 2.0 * l) * std::pow(c, tau), 1.0 / tau);
        oracle += std::pow(std::pow(2.0, l * (alpha + 2.0 * (0.5 - 1.0 / tau))) * level_lp, tau);
    }
    oracle = std::pow(oracle, 1.0 / tau);
    CHECK(besov_norm(cube, v, params) == doctest::Approx(oracle).epsilon(1e-12));
    CHECK(std::isfinite(besov_norm(cube, v, params)));
}

TEST_CASE("best n-term curve") {
    SUBCASE("drop-largest example and exhaustion") {
        CoeffVector v;
        v.set({0, 0, 0, 0, WaveletKind::Horiz}, 3.0);
        v.set({0, 0, 0, 0, WaveletKind::Vert}, -2.0);
        v.set({0, 0, 0, 0, WaveletKind::Diag}, 1.0);
        const auto curve = best_n_term_curve(v, {0, 1, 2, 3, 10});
        CHECK(curve[0].second == doctest::Approx(v.norm()));
        CHECK(curve[1].second == doctest::Approx(std::sqrt(5.0)));
        CHECK(curve[2].second == doctest::Approx(1.0));
        CHECK(curve[3].second == 0.0);
        CHECK(curve[4].second == 0.0);
        for (std::size_t i = 1; i < curve.size(); ++i)
            CHECK(curve[i].second <= curve[i - 1].second);
    }
    SUBCASE("geometric coefficients against the closed-form tail") {
        CoeffVector v;
        const int m_max = 20;
        for (int m = 0; m < m_max; ++m)
            v.set({0, 4, m / 4, m % 4, WaveletKind::Horiz}, std::pow(2.0, -m));
        std::vector<std::size_t> ns;
        for (std::size_t n = 0; n <= 20; ++n) ns.push_back(n);
        const auto curve = best_n_term_curve(v, ns);
        for (std::size_t n = 0; n <= 20; ++n) {
            double tail = 0.0;
            for (int m = static_cast<int>(n); m < m_max; ++m) tail += std::pow(4.0, -m);
            CHECK(curve[n].second == doctest::Approx(std::sqrt(tail)).epsilon(1e-12));
        }
    }
}

TEST_CASE("truncation rate on exact decay profiles: slope matches gamma/2") {
    for (const double gamma : {0.5, 1.0}) {
        CoeffVector v;
        for (int l = 0; l <= 8; ++l) {
            const double c = std::pow(2.0, -l * (gamma + 1.0));
            const int n = 1 << l;
            for (int k1 = 0; k1 < n; ++k1)
                for (int k2 = 0; k2 < n; ++k2) v.set({0, l, k1, k2, WaveletKind::Diag}, c);
        }
        std::vector<std::size_t> ns;
        for (int l = 1; l <= 7; ++l) ns.push_back(std::size_t{1} << (2 * l));
        const auto curve = best_n_term_curve(v, ns);
        // least-squares slope of log sigma_n vs log n
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (const auto& [n, sn] : curve) {
            const double x = std::log(static_cast<double>(n));
            const double y = std::log(sn);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        const double m = curve.size();
        const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
        CHECK(std::abs(-slope - gamma / 2.0) <= 0.05);
    }
}

TEST_CASE("coefficient vectors store no explicit zeros") {
    CoeffVector v;
    v.set({0, 1, 0, 0, WaveletKind::Horiz}, 2.0);
    v.set({0, 1, 0, 0, WaveletKind::Horiz}, 0.0);
    CHECK(v.empty());
    v.add({0, 1, 0, 0, WaveletKind::Horiz}, 1.5);
    v.add({0, 1, 0, 0, WaveletKind::Horiz}, -1.5);
    CHECK(v.empty());
}
