#include "awbem/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace awbem {

namespace {

constexpr double kGeomTol = 1e-12;

Patch make_patch(int id, const Vec3& c0, const Vec3& c1, const Vec3& c2, const Vec3& c3) {
    Patch p;
    p.id = id;
    p.corners = {c0, c1, c2, c3};
    const Vec3 cross = p.edge_s().cross(p.edge_t());
    p.jacobian = cross.norm();
    if (p.jacobian <= 0.0)
        throw std::invalid_argument("degenerate patch");
    p.normal = cross / p.jacobian;
    // parallelogram check: c2 must close the affine chart
    const Vec3 closure = c1 + (c3 - c0) - c2;
    if (closure.norm() > kGeomTol * p.diameter())
        throw std::invalid_argument("patch corners do not form a parallelogram");
    return p;
}

// Axis-aligned rectangle spanned by [a0,a1] x [b0,b1] in the plane {axis = level},
// corners ordered so that the outward normal is sign * unit(axis).
Patch make_axis_patch(int id, int axis, double level, double a0, double a1, double b0,
                      double b1, int sign) {
    const int u = (axis + 1) % 3;
    const int v = (axis + 2) % 3;
    auto pt = [&](double a, double b) {
        Vec3 x;
        x[axis] = level;
        x[u] = a;
        x[v] = b;
        return x;
    };
    // unit(u) x unit(v) = unit(axis); swap chart edges for the opposite orientation
    if (sign > 0)
        return make_patch(id, pt(a0, b0), pt(a1, b0), pt(a1, b1), pt(a0, b1));
    return make_patch(id, pt(a0, b0), pt(a0, b1), pt(a1, b1), pt(a1, b0));
}

struct Plane {
    Vec3 n;     // unit
    double d;   // n . x = d on the plane
};

Plane patch_plane(const Patch& p) { return {p.normal, p.normal.dot(p.corners[0])}; }

bool same_plane(const Patch& a, const Patch& b, double tol) {
    const Plane pa = patch_plane(a);
    for (const Vec3& c : b.corners)
        if (std::abs(pa.n.dot(c) - pa.d) > tol) return false;
    return true;
}

// Sutherland-Hodgman clip of a convex polygon against the half-plane
// {x : n.(x - a) <= 0} expressed in 2D chart coordinates of the reference patch.
using Poly2 = std::vector<Eigen::Vector2d>;

Poly2 clip_halfplane(const Poly2& poly, const Eigen::Vector2d& a, const Eigen::Vector2d& n,
                     double tol) {
    Poly2 out;
    const size_t m = poly.size();
    for (size_t i = 0; i < m; ++i) {
        const Eigen::Vector2d& p = poly[i];
        const Eigen::Vector2d& q = poly[(i + 1) % m];
        const double dp = n.dot(p - a);
        const double dq = n.dot(q - a);
        if (dp <= tol) out.push_back(p);
        if ((dp < -tol && dq > tol) || (dp > tol && dq < -tol)) {
            const double t = dp / (dp - dq);
            out.push_back(p + t * (q - p));
        }
    }
    return out;
}

PatchRelation classify_pair(const Patch& a, const Patch& b) {
    const double scale = std::max(a.diameter(), b.diameter());
    const double tol = 1e-9 * scale;

    PatchRelation rel;
    if (a.id == b.id) {
        rel.kind = RelationKind::Identical;
        rel.coplanar = true;
        return rel;
    }
    rel.coplanar = same_plane(a, b, tol);

    if (rel.coplanar) {
        // 2D polygon intersection in the chart frame of a
        const Vec3 u3 = a.edge_s().normalized();
        const Vec3 v3 = a.normal.cross(u3);
        auto to2d = [&](const Vec3& x) {
            const Vec3 r = x - a.corners[0];
            return Eigen::Vector2d(u3.dot(r), v3.dot(r));
        };
        Poly2 poly;
        for (const Vec3& c : b.corners) poly.push_back(to2d(c));
        for (int e = 0; e < 4 && !poly.empty(); ++e) {
            const Eigen::Vector2d p0 = to2d(a.corners[e]);
            const Eigen::Vector2d p1 = to2d(a.corners[(e + 1) % 4]);
            const Eigen::Vector2d edge = p1 - p0;
            const Eigen::Vector2d inward(-edge.y(), edge.x());  // CCW polygon
            poly = clip_halfplane(poly, p0, -inward.normalized(), tol);
        }
        if (poly.empty()) {
            rel.kind = RelationKind::Disjoint;
            return rel;
        }
        double diam = 0.0;
        for (size_t i = 0; i < poly.size(); ++i)
            for (size_t j = i + 1; j < poly.size(); ++j)
                diam = std::max(diam, (poly[i] - poly[j]).norm());
        rel.kind = diam > tol ? RelationKind::CommonEdge : RelationKind::CommonVertex;
        return rel;
    }

    // Distinct planes: the intersection lies on the planes' common line (if any).
    const Plane pa = patch_plane(a);
    const Plane pb = patch_plane(b);
    const Vec3 dir = pa.n.cross(pb.n);
    if (dir.norm() < 1e-12) {  // parallel distinct planes
        rel.kind = RelationKind::Disjoint;
        return rel;
    }
    const Vec3 d = dir.normalized();
    // point on both planes: solve [na; nb; d] x = [da; db; 0]
    Eigen::Matrix3d m;
    m.row(0) = pa.n;
    m.row(1) = pb.n;
    m.row(2) = d;
    const Vec3 origin = m.colPivHouseholderQr().solve(Vec3(pa.d, pb.d, 0.0));

    // clip the line against each quad -> parameter intervals
    auto interval = [&](const Patch& p, bool& empty) {
        double lo = -std::numeric_limits<double>::infinity();
        double hi = std::numeric_limits<double>::infinity();
        empty = false;
        for (int e = 0; e < 4; ++e) {
            const Vec3& c0 = p.corners[e];
            const Vec3& c1 = p.corners[(e + 1) % 4];
            const Vec3 edge = c1 - c0;
            const Vec3 inward = p.normal.cross(edge);  // points into the quad
            const double num = inward.dot(c0 - origin);
            const double den = inward.dot(d);
            if (std::abs(den) < 1e-14) {
                if (num > tol) {
                    empty = true;
                    return std::pair{0.0, 0.0};
                }
            } else if (den > 0.0) {
                lo = std::max(lo, num / den);
            } else {
                hi = std::min(hi, num / den);
            }
        }
        if (lo > hi + tol) empty = true;
        return std::pair{lo, hi};
    };
    bool ea = false, eb = false;
    const auto [alo, ahi] = interval(a, ea);
    const auto [blo, bhi] = interval(b, eb);
    if (ea || eb) {
        rel.kind = RelationKind::Disjoint;
        return rel;
    }
    const double lo = std::max(alo, blo);
    const double hi = std::min(ahi, bhi);
    if (lo > hi + tol)
        rel.kind = RelationKind::Disjoint;
    else if (hi - lo > tol)
        rel.kind = RelationKind::CommonEdge;
    else
        rel.kind = RelationKind::CommonVertex;
    return rel;
}

}  // namespace

double Patch::diameter() const {
    double d = 0.0;
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j) d = std::max(d, (corners[i] - corners[j]).norm());
    return d;
}

bool Patch::axis_aligned() const {
    auto aligned = [](const Vec3& e) {
        int nz = 0;
        for (int k = 0; k < 3; ++k)
            if (std::abs(e[k]) > kGeomTol) ++nz;
        return nz == 1;
    };
    return aligned(edge_s()) && aligned(edge_t());
}

Surface::Surface(std::string name, std::vector<Patch> patches, std::vector<Vec3> vertices)
    : name_(std::move(name)), patches_(std::move(patches)), vertices_(std::move(vertices)) {
    const int n = patch_count();
    relations_.resize(static_cast<size_t>(n) * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            relations_[static_cast<size_t>(i) * n + j] = classify_pair(patches_[i], patches_[j]);
}

const Patch& Surface::patch(int id) const {
    if (id < 0 || id >= patch_count()) throw std::out_of_range("invalid patch id");
    return patches_[static_cast<size_t>(id)];
}

Vec3 Surface::lift(const SurfacePoint& p) const {
    const Patch& pa = patch(p.patch);
    return pa.map(p.s, p.t);
}

const PatchRelation& Surface::relation(int i, int j) const {
    if (i < 0 || i >= patch_count() || j < 0 || j >= patch_count())
        throw std::out_of_range("invalid patch id");
    return relations_[static_cast<size_t>(i) * patch_count() + j];
}

double Surface::area() const {
    double a = 0.0;
    for (const Patch& p : patches_) a += p.jacobian;
    return a;
}

Surface make_cube() {
    std::vector<Patch> patches;
    int id = 0;
    for (int axis = 0; axis < 3; ++axis) {
        patches.push_back(make_axis_patch(id++, axis, 1.0, -1.0, 1.0, -1.0, 1.0, +1));
        patches.push_back(make_axis_patch(id++, axis, -1.0, -1.0, 1.0, -1.0, 1.0, -1));
    }
    std::vector<Vec3> vertices;
    for (double x : {-1.0, 1.0})
        for (double y : {-1.0, 1.0})
            for (double z : {-1.0, 1.0}) vertices.emplace_back(x, y, z);
    return Surface("cube", std::move(patches), std::move(vertices));
}

Surface make_fichera() {
    // Omega = (0,1)^3 \ (0,0.5]^3. Outward normals: the removed corner sits at the origin,
    // so the notch faces at coordinate 0.5 point toward the origin.
    std::vector<Patch> patches;
    int id = 0;
    // three full unit faces at x=1, y=1, z=1
    for (int axis = 0; axis < 3; ++axis)
        patches.push_back(make_axis_patch(id++, axis, 1.0, 0.0, 1.0, 0.0, 1.0, +1));
    // three L-shaped faces at x=0, y=0, z=0, each split into a 1x0.5 rectangle
    // (far half in the v-direction) plus a 0.5x0.5 square
    for (int axis = 0; axis < 3; ++axis) {
        patches.push_back(make_axis_patch(id++, axis, 0.0, 0.0, 1.0, 0.5, 1.0, -1));
        patches.push_back(make_axis_patch(id++, axis, 0.0, 0.5, 1.0, 0.0, 0.5, -1));
    }
    // three notch faces at coordinate 0.5 over (0,0.5)^2; normals point toward the origin.
    // Corners are arranged so that the reentrant corner (0.5,0.5,0.5) is corners[2],
    // i.e. chart point (1,1).
    for (int axis = 0; axis < 3; ++axis) {
        const int u = (axis + 1) % 3;
        const int v = (axis + 2) % 3;
        auto pt = [&](double a, double b) {
            Vec3 x;
            x[axis] = 0.5;
            x[u] = a;
            x[v] = b;
            return x;
        };
        // normal must be -unit(axis): unit(v) x unit(u) = -unit(axis)
        patches.push_back(make_patch(id++, pt(0.0, 0.0), pt(0.0, 0.5), pt(0.5, 0.5), pt(0.5, 0.0)));
    }
    std::vector<Vec3> vertices;
    // outer cube corners except the removed one, plus the notch corners
    for (double x : {0.0, 1.0})
        for (double y : {0.0, 1.0})
            for (double z : {0.0, 1.0}) vertices.emplace_back(x, y, z);
    vertices.emplace_back(0.5, 0.5, 0.5);
    for (int axis = 0; axis < 3; ++axis) {
        Vec3 a = Vec3::Zero(), b = Vec3::Zero(), c = Vec3::Zero();
        a[axis] = 0.5;
        b[axis] = 0.5;
        b[(axis + 1) % 3] = 0.5;
        c[axis] = 0.5;
        c[(axis + 2) % 3] = 0.5;
        vertices.push_back(a);
        vertices.push_back(b);
        vertices.push_back(c);
    }
    return Surface("fichera", std::move(patches), std::move(vertices));
}

Surface make_surface(const std::string& name) {
    if (name == "fichera") return make_fichera();
    if (name == "cube") return make_cube();
    throw std::invalid_argument("unknown surface: " + name);
}

namespace geom {

std::array<Vec3, 4> lift_rect(const Patch& patch, const LocalRect& r) {
    return {patch.map(r.s0, r.t0), patch.map(r.s1, r.t0), patch.map(r.s1, r.t1),
            patch.map(r.s0, r.t1)};
}

double point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
    const Vec3 ab = b - a;
    const double len2 = ab.squaredNorm();
    if (len2 <= 0.0) return (p - a).norm();
    const double t = std::clamp(ab.dot(p - a) / len2, 0.0, 1.0);
    return (p - (a + t * ab)).norm();
}

double segment_segment_distance(const Vec3& a0, const Vec3& a1, const Vec3& b0,
                                const Vec3& b1) {
    const Vec3 u = a1 - a0;
    const Vec3 v = b1 - b0;
    const Vec3 w = a0 - b0;
    const double a = u.squaredNorm();
    const double b = u.dot(v);
    const double c = v.squaredNorm();
    const double d = u.dot(w);
    const double e = v.dot(w);
    const double den = a * c - b * b;
    double s = 0.0, t = 0.0;
    if (den > 1e-30) s = std::clamp((b * e - c * d) / den, 0.0, 1.0);
    const double tn = b * s + e;
    if (c > 1e-30)
        t = std::clamp(tn / c, 0.0, 1.0);
    // re-clamp s against the chosen t
    if (a > 1e-30) s = std::clamp((b * t - d) / a, 0.0, 1.0);
    return ((a0 + s * u) - (b0 + t * v)).norm();
}

double point_quad_distance(const Vec3& p, const std::array<Vec3, 4>& q) {
    const Vec3 n = (q[1] - q[0]).cross(q[3] - q[0]).normalized();
    const double h = n.dot(p - q[0]);
    const Vec3 proj = p - h * n;
    bool inside = true;
    for (int e = 0; e < 4; ++e) {
        const Vec3 edge = q[(e + 1) % 4] - q[e];
        if (n.dot(edge.cross(proj - q[e])) < 0.0) {
            inside = false;
            break;
        }
    }
    if (inside) return std::abs(h);
    double best = std::numeric_limits<double>::infinity();
    for (int e = 0; e < 4; ++e)
        best = std::min(best, point_segment_distance(p, q[e], q[(e + 1) % 4]));
    return best;
}

double quad_quad_distance(const std::array<Vec3, 4>& qa, const std::array<Vec3, 4>& qb) {
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            best = std::min(best, segment_segment_distance(qa[i], qa[(i + 1) % 4], qb[j],
                                                           qb[(j + 1) % 4]));
    for (int i = 0; i < 4; ++i) {
        best = std::min(best, point_quad_distance(qa[i], qb));
        best = std::min(best, point_quad_distance(qb[i], qa));
    }
    return best;
}

}  // namespace geom

double support_distance(const Surface& surface, int patch_a, const LocalRect& ra,
                        int patch_b, const LocalRect& rb) {
    const Patch& pa = surface.patch(patch_a);
    const Patch& pb = surface.patch(patch_b);
    if (pa.axis_aligned() && pb.axis_aligned())
        return support_distance_lower(surface, patch_a, ra, patch_b, rb);
    return geom::quad_quad_distance(geom::lift_rect(pa, ra), geom::lift_rect(pb, rb));
}

double support_distance_lower(const Surface& surface, int patch_a, const LocalRect& ra,
                              int patch_b, const LocalRect& rb) {
    const auto qa = geom::lift_rect(surface.patch(patch_a), ra);
    const auto qb = geom::lift_rect(surface.patch(patch_b), rb);
    double d2 = 0.0;
    for (int k = 0; k < 3; ++k) {
        double alo = qa[0][k], ahi = qa[0][k], blo = qb[0][k], bhi = qb[0][k];
        for (int i = 1; i < 4; ++i) {
            alo = std::min(alo, qa[i][k]);
            ahi = std::max(ahi, qa[i][k]);
            blo = std::min(blo, qb[i][k]);
            bhi = std::max(bhi, qb[i][k]);
        }
        const double gap = std::max({0.0, blo - ahi, alo - bhi});
        d2 += gap * gap;
    }
    return std::sqrt(d2);
}

}  // namespace awbem
