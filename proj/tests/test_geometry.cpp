#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "awbem/geometry.hpp"

#include <cmath>
#include <random>

using namespace awbem;

TEST_CASE("fichera surface: counts, area, reentrant corner") {
    const Surface s = make_fichera();
    CHECK(s.patch_count() == 12);
    CHECK(s.area() == doctest::Approx(6.0).epsilon(1e-12));

    bool has_corner = false;
    for (const Vec3& v : s.vertices())
        if ((v - Vec3(0.5, 0.5, 0.5)).norm() < 1e-14) has_corner = true;
    CHECK(has_corner);
}

TEST_CASE("cube surface: counts, area, face geometry") {
    const Surface s = make_cube();
    CHECK(s.patch_count() == 6);
    CHECK(s.area() == doctest::Approx(24.0).epsilon(1e-12));
    for (const Patch& p : s.patches()) {
        CHECK(p.jacobian == doctest::Approx(4.0).epsilon(1e-14));
        CHECK(p.normal.norm() == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(p.axis_aligned());
    }
}

TEST_CASE("patch invariants: planarity, parallelogram closure, unit normals") {
    for (const Surface& s : {make_fichera(), make_cube()}) {
        for (const Patch& p : s.patches()) {
            // coplanarity of the 4 corners
            const Vec3 n = p.normal;
            const double d = n.dot(p.corners[0]);
            for (const Vec3& c : p.corners)
                CHECK(std::abs(n.dot(c) - d) <= 1e-12 * p.diameter());
            // affine chart reproduces corner 2
            CHECK((p.map(1.0, 1.0) - p.corners[2]).norm() <= 1e-12 * p.diameter());
            CHECK(std::abs(p.normal.norm() - 1.0) <= 1e-14);
        }
    }
}

TEST_CASE("closedness: area-weighted normals cancel, outward orientation") {
    struct Case {
        Surface s;
        Vec3 interior;
    };
    for (const Case& c : {Case{make_fichera(), Vec3(0.75, 0.75, 0.75)},
                          Case{make_cube(), Vec3(0.0, 0.0, 0.0)}}) {
        Vec3 sum = Vec3::Zero();
        for (const Patch& p : c.s.patches()) {
            sum += p.jacobian * p.normal;
            const Vec3 centroid = 0.25 * (p.corners[0] + p.corners[1] + p.corners[2] + p.corners[3]);
            CHECK(p.normal.dot(centroid - c.interior) > 0.0);
        }
        CHECK(sum.norm() <= 1e-12);
    }
}

TEST_CASE("closedness: sampled open-edge points lie on exactly one other patch") {
    auto on_patch = [](const Patch& p, const Vec3& x) {
        const Vec3 r = x - p.corners[0];
        if (std::abs(p.normal.dot(r)) > 1e-9) return false;
        const Vec3 e1 = p.edge_s();
        const Vec3 e2 = p.edge_t();
        const double s = e1.dot(r) / e1.squaredNorm();
        const double t = e2.dot(r) / e2.squaredNorm();
        return s >= -1e-9 && s <= 1.0 + 1e-9 && t >= -1e-9 && t <= 1.0 + 1e-9;
    };
    for (const Surface& s : {make_fichera(), make_cube()}) {
        for (const Patch& p : s.patches()) {
            for (int e = 0; e < 4; ++e) {
                for (double f : {0.17, 0.53, 0.86}) {
                    const Vec3 x = p.corners[e] + f * (p.corners[(e + 1) % 4] - p.corners[e]);
                    int owners = 0;
                    for (const Patch& q : s.patches())
                        if (q.id != p.id && on_patch(q, x)) ++owners;
                    CHECK(owners == 1);
                }
            }
        }
    }
}

TEST_CASE("lift: corners, centers, fichera notch corner") {
    const Surface cube = make_cube();
    // top face of the cube is the patch in the plane z = 1
    int top = -1;
    for (const Patch& p : cube.patches())
        if (p.normal.z() > 0.5) top = p.id;
    REQUIRE(top >= 0);
    CHECK((cube.lift({top, 0.5, 0.5}) - Vec3(0.0, 0.0, 1.0)).norm() <= 1e-14);
    CHECK((cube.lift({top, 0.0, 0.0}) - cube.patch(top).corners[0]).norm() == 0.0);

    const Surface fichera = make_fichera();
    int notch = 0;
    for (const Patch& p : fichera.patches())
        if (std::abs(p.normal.x() + 1.0) < 1e-14 &&
            std::abs(p.corners[0].x() - 0.5) < 1e-14)
            notch = p.id;
    CHECK((fichera.lift({notch, 1.0, 1.0}) - Vec3(0.5, 0.5, 0.5)).norm() <= 1e-14);

    CHECK_THROWS_AS((void)fichera.lift({99, 0.5, 0.5}), std::out_of_range);
}

TEST_CASE("patch_relation: classification and symmetry") {
    const Surface cube = make_cube();
    // opposite faces are disjoint and not coplanar; share-an-edge pairs abound
    int disjoint = 0, edges = 0;
    for (int i = 0; i < 6; ++i) {
        CHECK(cube.relation(i, i).kind == RelationKind::Identical);
        CHECK(cube.relation(i, i).coplanar);
        for (int j = 0; j < 6; ++j) {
            if (i == j) continue;
            const PatchRelation& r = cube.relation(i, j);
            CHECK(r.kind == cube.relation(j, i).kind);
            CHECK(!r.coplanar);
            if (r.kind == RelationKind::Disjoint) ++disjoint;
            if (r.kind == RelationKind::CommonEdge) ++edges;
        }
    }
    CHECK(disjoint == 6);   // 3 opposite pairs, both orders
    CHECK(edges == 24);     // 12 cube edges, both orders

    const Surface fichera = make_fichera();
    int coplanar_edges = 0, vertex_pairs = 0;
    for (int i = 0; i < 12; ++i)
        for (int j = 0; j < 12; ++j) {
            if (i == j) continue;
            const PatchRelation& r = fichera.relation(i, j);
            CHECK(r.kind == fichera.relation(j, i).kind);
            if (r.coplanar && r.kind == RelationKind::CommonEdge) ++coplanar_edges;
            if (r.kind == RelationKind::CommonVertex) ++vertex_pairs;
        }
    CHECK(coplanar_edges == 6);  // the two halves of each L-shaped face, both orders
    CHECK(vertex_pairs > 0);
}

TEST_CASE("support_distance: touching, parallel faces, quarter rectangles") {
    const Surface cube = make_cube();
    const LocalRect full{0.0, 0.0, 1.0, 1.0};
    CHECK(support_distance(cube, 0, full, 0, full) == 0.0);

    // patches 0 and 1 are x=+1 and x=-1: parallel at distance 2
    CHECK(support_distance(cube, 0, full, 1, full) == doctest::Approx(2.0).epsilon(1e-14));
    const LocalRect quarter{0.375, 0.375, 0.625, 0.625};
    CHECK(support_distance(cube, 0, quarter, 1, quarter) ==
          doctest::Approx(2.0).epsilon(1e-14));

    // lower bound agrees with the exact distance on axis-aligned patches
    std::mt19937_64 rng(99);
    auto u01 = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
    for (int it = 0; it < 50; ++it) {
        const int a = static_cast<int>(u01() * 6), b = static_cast<int>(u01() * 6);
        const double s0 = 0.8 * u01(), t0 = 0.8 * u01();
        const LocalRect ra{s0, t0, s0 + 0.2, t0 + 0.2};
        const double s1 = 0.8 * u01(), t1 = 0.8 * u01();
        const LocalRect rb{s1, t1, s1 + 0.2, t1 + 0.2};
        const double exact = support_distance(cube, a, ra, b, rb);
        const double lower = support_distance_lower(cube, a, ra, b, rb);
        CHECK(lower <= exact + 1e-13);
        CHECK(exact == doctest::Approx(lower).epsilon(1e-12));
    }
}

TEST_CASE("generic quad distance agrees with sampling on rotated patches") {
    // non-axis-aligned parallelograms exercise the segment/point decomposition
    const std::array<Vec3, 4> qa{Vec3(0, 0, 0), Vec3(1, 0.3, 0), Vec3(1.2, 1.3, 0.1),
                                 Vec3(0.2, 1.0, 0.1)};
    const std::array<Vec3, 4> qb{Vec3(0.4, 0.2, 1.0), Vec3(1.3, 0.5, 1.2),
                                 Vec3(1.5, 1.4, 1.5), Vec3(0.6, 1.1, 1.3)};
    const double fast = geom::quad_quad_distance(qa, qb);
    double brute = 1e300;
    for (int i = 0; i <= 40; ++i)
        for (int j = 0; j <= 40; ++j)
            for (int k = 0; k <= 40; ++k)
                for (int l = 0; l <= 40; ++l) {
                    if ((i + j) % 4 || (k + l) % 4) continue;  // thin out the grid
                    const double s = i / 40.0, t = j / 40.0, u = k / 40.0, v = l / 40.0;
                    const Vec3 pa = qa[0] + s * (qa[1] - qa[0]) + t * (qa[3] - qa[0]);
                    const Vec3 pb = qb[0] + u * (qb[1] - qb[0]) + v * (qb[3] - qb[0]);
                    brute = std::min(brute, (pa - pb).norm());
                }
    CHECK(fast <= brute + 1e-12);
    CHECK(fast == doctest::Approx(brute).epsilon(0.02));
}
