#include "awbem/discretize.hpp"

#include "awbem/gauss.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace awbem {

namespace {

// Signed solid angle of triangle (a,b,c) seen from x; arctan formula.
double triangle_solid_angle(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& x) {
    const Vec3 r1 = a - x;
    const Vec3 r2 = b - x;
    const Vec3 r3 = c - x;
    const double n1 = r1.norm(), n2 = r2.norm(), n3 = r3.norm();
    const double num = r1.dot(r2.cross(r3));
    const double den = n1 * n2 * n3 + r1.dot(r2) * n3 + r1.dot(r3) * n2 + r2.dot(r3) * n1;
    return 2.0 * std::atan2(num, den);
}

bool point_in_quad_plane(const std::array<Vec3, 4>& quad, const Vec3& n, const Vec3& x,
                         double tol) {
    for (int e = 0; e < 4; ++e) {
        const Vec3 edge = quad[(e + 1) % 4] - quad[e];
        if (n.dot(edge.cross(x - quad[e])) < -tol) return false;
    }
    return true;
}

struct LiftedPiece {
    std::array<Vec3, 4> quad;
    double value = 0.0;
    double lifted_area = 0.0;
};

struct InnerField {
    std::vector<LiftedPiece> pieces;

    double eval(const Vec3& x) const {
        double sum = 0.0;
        for (const LiftedPiece& p : pieces) sum += p.value * solid_angle(p.quad, x);
        return -sum / (4.0 * M_PI);
    }
    // upper bound on |eval| at distance >= d from the support
    double magnitude_bound(double d) const {
        double sum = 0.0;
        const double d2 = d * d;
        for (const LiftedPiece& p : pieces) {
            const double sa = d2 > 0.0 ? std::min(2.0 * M_PI, p.lifted_area / d2) : 2.0 * M_PI;
            sum += std::abs(p.value) * sa;
        }
        return sum / (4.0 * M_PI);
    }
};

double rect_diameter(const Patch& patch, const LocalRect& r) {
    const Vec3 d1 = (r.s1 - r.s0) * patch.edge_s() + (r.t1 - r.t0) * patch.edge_t();
    const Vec3 d2 = (r.s1 - r.s0) * patch.edge_s() - (r.t1 - r.t0) * patch.edge_t();
    return std::sqrt(std::max(d1.squaredNorm(), d2.squaredNorm()));
}

struct OuterIntegrator {
    const Surface& surface;
    const Patch& patch;
    int inner_patch;
    LocalRect inner_support;
    const InnerField& field;
    const QuadConfig& cfg;
    double tol_per_area = 0.0;  // abs_tol / total outer support area (lifted)

    double integrate(const LocalRect& rect, int depth) const {
        const double lifted_area = rect.area() * patch.jacobian;
        const double dist = support_distance_lower(surface, patch.id, rect, inner_patch,
                                                   inner_support);
        if (tol_per_area > 0.0 && field.magnitude_bound(dist) <= tol_per_area) {
            // negligible cell: one midpoint sample keeps the value consistent
            const Vec3 x = patch.map(0.5 * (rect.s0 + rect.s1), 0.5 * (rect.t0 + rect.t1));
            return lifted_area * field.eval(x);
        }
        const double diam = rect_diameter(patch, rect);
        if (diam <= cfg.sep_ratio * dist || depth >= cfg.max_depth)
            return gauss_cell(rect, lifted_area);
        const double sm = 0.5 * (rect.s0 + rect.s1);
        const double tm = 0.5 * (rect.t0 + rect.t1);
        return integrate({rect.s0, rect.t0, sm, tm}, depth + 1) +
               integrate({sm, rect.t0, rect.s1, tm}, depth + 1) +
               integrate({rect.s0, tm, sm, rect.t1}, depth + 1) +
               integrate({sm, tm, rect.s1, rect.t1}, depth + 1);
    }

    double gauss_cell(const LocalRect& rect, double lifted_area) const {
        const GaussRule& rule = gauss_rule(cfg.outer_order);
        const double ds = rect.s1 - rect.s0;
        const double dt = rect.t1 - rect.t0;
        double sum = 0.0;
        for (std::size_t i = 0; i < rule.x.size(); ++i) {
            const double s = rect.s0 + ds * rule.x[i];
            double row = 0.0;
            for (std::size_t j = 0; j < rule.x.size(); ++j) {
                const double t = rect.t0 + dt * rule.x[j];
                row += rule.w[j] * field.eval(patch.map(s, t));
            }
            sum += rule.w[i] * row;
        }
        return sum * lifted_area;
    }
};

InnerField make_inner_field(const Surface& surface, const PieceSet& set) {
    InnerField field;
    const Patch& patch = surface.patch(set.patch);
    field.pieces.reserve(set.pieces.size());
    for (const ConstPiece& p : set.pieces) {
        LiftedPiece lp;
        lp.quad = geom::lift_rect(patch, p.rect);
        lp.value = p.value;
        lp.lifted_area = p.rect.area() * patch.jacobian;
        field.pieces.push_back(lp);
    }
    return field;
}

double entry_engine(const Surface& surface, const PieceSet& outer, const PieceSet& inner,
                    const QuadConfig& cfg, double abs_tol) {
    const InnerField field = make_inner_field(surface, inner);
    const Patch& patch = surface.patch(outer.patch);
    double total_area = 0.0;
    for (const ConstPiece& p : outer.pieces) total_area += p.rect.area() * patch.jacobian;

    double result = 0.0;
    for (const ConstPiece& p : outer.pieces) {
        OuterIntegrator integ{surface, patch,        inner.patch, inner.support,
                              field,   cfg,          0.0};
        if (abs_tol > 0.0)
            integ.tol_per_area = 0.9 * abs_tol / (std::abs(p.value) * total_area);
        result += p.value * integ.integrate(p.rect, 0);
    }
    return result;
}

}  // namespace

double solid_angle(const std::array<Vec3, 4>& quad, const Vec3& x) {
    const Vec3 n = (quad[1] - quad[0]).cross(quad[3] - quad[0]).normalized();
    double diam = 0.0;
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j) diam = std::max(diam, (quad[i] - quad[j]).norm());
    const double h = n.dot(x - quad[0]);
    if (std::abs(h) < 1e-13 * diam) {
        if (point_in_quad_plane(quad, n, x, 1e-13 * diam * diam))
            throw std::domain_error("solid_angle: evaluation point on the panel");
        return 0.0;  // coplanar exterior
    }
    return triangle_solid_angle(quad[0], quad[1], quad[2], x) +
           triangle_solid_angle(quad[0], quad[2], quad[3], x);
}

PieceSet make_pieces(const Surface& surface, const WaveletIndex& idx) {
    PieceSet set;
    set.patch = idx.patch;
    set.support = idx.support();
    const double inv_sqrt_j = 1.0 / std::sqrt(surface.patch(idx.patch).jacobian);
    if (idx.is_scaling()) {
        set.pieces.push_back({set.support, inv_sqrt_j});
        return set;
    }
    const LocalRect s = set.support;
    const double sm = 0.5 * (s.s0 + s.s1);
    const double tm = 0.5 * (s.t0 + s.t1);
    const double amp = std::ldexp(inv_sqrt_j, idx.level);
    switch (idx.kind) {
        case WaveletKind::Horiz:
            set.pieces.push_back({{s.s0, s.t0, sm, s.t1}, amp});
            set.pieces.push_back({{sm, s.t0, s.s1, s.t1}, -amp});
            break;
        case WaveletKind::Vert:
            set.pieces.push_back({{s.s0, s.t0, s.s1, tm}, amp});
            set.pieces.push_back({{s.s0, tm, s.s1, s.t1}, -amp});
            break;
        case WaveletKind::Diag:
            set.pieces.push_back({{s.s0, s.t0, sm, tm}, amp});
            set.pieces.push_back({{sm, s.t0, s.s1, tm}, -amp});
            set.pieces.push_back({{s.s0, tm, sm, s.t1}, -amp});
            set.pieces.push_back({{sm, tm, s.s1, s.t1}, amp});
            break;
        default:
            throw std::logic_error("make_pieces: bad kind");
    }
    return set;
}

double galerkin_entry_K(const Surface& surface, const WaveletIndex& row,
                        const WaveletIndex& col, const QuadConfig& cfg, double abs_tol) {
    if (surface.coplanar(row.patch, col.patch)) return 0.0;
    return entry_engine(surface, make_pieces(surface, row), make_pieces(surface, col), cfg,
                        abs_tol);
}

double galerkin_entry_K_box(const Surface& surface, const WaveletIndex& row, int col_patch,
                            const LocalRect& box, const QuadConfig& cfg, double abs_tol) {
    if (surface.coplanar(row.patch, col_patch)) return 0.0;
    PieceSet inner;
    inner.patch = col_patch;
    inner.support = box;
    inner.pieces.push_back({box, 1.0});
    return entry_engine(surface, make_pieces(surface, row), inner, cfg, abs_tol);
}

CoeffVector apply_dense(const Surface& surface, const Tree& tree, const CoeffVector& v,
                        const QuadConfig& cfg) {
    for (const auto& [idx, val] : v.entries())
        if (!tree.contains(idx))
            throw std::invalid_argument("apply_dense: support(v) not contained in tree");
    CoeffVector out;
    for (const WaveletIndex& row : tree.indices()) {
        double sum = 0.5 * v.get(row);
        for (const auto& [col, val] : v.entries())
            sum -= galerkin_entry_K(surface, row, col, cfg) * val;
        out.set(row, sum);
    }
    return out;
}

Eigen::MatrixXd assemble_dense(const Surface& surface, const std::vector<WaveletIndex>& indices,
                               const QuadConfig& cfg) {
    const Eigen::Index n = static_cast<Eigen::Index>(indices.size());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        a(i, i) = 0.5;
        for (Eigen::Index j = 0; j < n; ++j)
            a(i, j) -= galerkin_entry_K(surface, indices[static_cast<std::size_t>(i)],
                                        indices[static_cast<std::size_t>(j)], cfg);
    }
    return a;
}

RightHandSide RightHandSide::point_singularity(double alpha, const Vec3& vertex) {
    if (alpha < 0.5 || alpha >= 1.0)
        throw std::invalid_argument("point singularity exponent must lie in [1/2, 1)");
    RightHandSide g;
    g.kind_ = Kind::PointSingularity;
    g.alpha_ = alpha;
    g.vertex_ = vertex;
    return g;
}

RightHandSide RightHandSide::cartoon(const Vec3& center, double radius_sq, double value) {
    if (value != 0.0 && value != 1.0)
        throw std::invalid_argument("cartoon value must be 0 or 1");
    RightHandSide g;
    g.kind_ = Kind::Cartoon;
    g.center_ = center;
    g.radius_sq_ = radius_sq;
    g.value_ = value;
    return g;
}

double RightHandSide::eval(const Vec3& x) const {
    if (kind_ == Kind::PointSingularity) {
        const double r = (x - vertex_).norm();
        if (r == 0.0) throw std::domain_error("rhs_eval: singular vertex");
        return std::pow(r, -alpha_);
    }
    return (x - center_).squaredNorm() <= radius_sq_ ? value_ : 0.0;
}

namespace {

struct SingularIntegrator {
    const Surface& surface;
    const Patch& patch;
    const RightHandSide& g;
    const QuadConfig& cfg;

    double integrate(const LocalRect& rect, int depth) const {
        const double dist = distance_to_vertex(rect);
        const double diam = rect_diameter(patch, rect);
        if (diam <= cfg.sep_ratio * dist || depth >= cfg.grading_depth)
            return gauss_cell(rect);
        const double sm = 0.5 * (rect.s0 + rect.s1);
        const double tm = 0.5 * (rect.t0 + rect.t1);
        return integrate({rect.s0, rect.t0, sm, tm}, depth + 1) +
               integrate({sm, rect.t0, rect.s1, tm}, depth + 1) +
               integrate({rect.s0, tm, sm, rect.t1}, depth + 1) +
               integrate({sm, tm, rect.s1, rect.t1}, depth + 1);
    }

    double distance_to_vertex(const LocalRect& rect) const {
        const auto quad = geom::lift_rect(patch, rect);
        return geom::point_quad_distance(g.vertex(), quad);
    }

    double gauss_cell(const LocalRect& rect) const {
        const GaussRule& rule = gauss_rule(cfg.outer_order);
        const double ds = rect.s1 - rect.s0;
        const double dt = rect.t1 - rect.t0;
        double sum = 0.0;
        for (std::size_t i = 0; i < rule.x.size(); ++i) {
            const double s = rect.s0 + ds * rule.x[i];
            double row = 0.0;
            for (std::size_t j = 0; j < rule.x.size(); ++j) {
                const double t = rect.t0 + dt * rule.x[j];
                row += rule.w[j] * g.eval(patch.map(s, t));
            }
            sum += rule.w[i] * row;
        }
        return sum * rect.area() * patch.jacobian;
    }
};

// Chart-space circle for a square patch chart: |kappa(s,t)-c|^2 <= r^2 is
// (s-a)^2 + (t-b)^2 <= rho2 with the values computed here; empty if rho2 < 0.
struct LocalCircle {
    double a = 0.0, b = 0.0, rho2 = -1.0;
};

LocalCircle local_circle(const Patch& patch, const Vec3& center, double radius_sq) {
    const Vec3 e1 = patch.edge_s();
    const Vec3 e2 = patch.edge_t();
    const double l1 = e1.squaredNorm();
    const double l2 = e2.squaredNorm();
    if (std::abs(e1.dot(e2)) > 1e-12 * std::sqrt(l1 * l2) || std::abs(l1 - l2) > 1e-12 * l1)
        throw std::invalid_argument("cartoon rhs requires square patch charts");
    const Vec3 w = patch.corners[0] - center;
    LocalCircle c;
    c.a = -w.dot(e1) / l1;
    c.b = -w.dot(e2) / l1;
    const double h2 = w.squaredNorm() - (w.dot(e1) * w.dot(e1) + w.dot(e2) * w.dot(e2)) / l1;
    c.rho2 = (radius_sq - h2) / l1;
    return c;
}

double disc_cell_area(const LocalCircle& c, const LocalRect& rect, int depth, int max_depth) {
    const double ds = std::clamp(c.a, rect.s0, rect.s1) - c.a;
    const double dt = std::clamp(c.b, rect.t0, rect.t1) - c.b;
    if (ds * ds + dt * dt > c.rho2) return 0.0;  // nearest point outside the disc
    double far = 0.0;
    for (double s : {rect.s0, rect.s1})
        for (double t : {rect.t0, rect.t1})
            far = std::max(far, (s - c.a) * (s - c.a) + (t - c.b) * (t - c.b));
    if (far <= c.rho2) return rect.area();  // cell inside the disc
    if (depth >= max_depth) {
        const double ms = 0.5 * (rect.s0 + rect.s1) - c.a;
        const double mt = 0.5 * (rect.t0 + rect.t1) - c.b;
        return ms * ms + mt * mt <= c.rho2 ? rect.area() : 0.0;
    }
    const double sm = 0.5 * (rect.s0 + rect.s1);
    const double tm = 0.5 * (rect.t0 + rect.t1);
    return disc_cell_area(c, {rect.s0, rect.t0, sm, tm}, depth + 1, max_depth) +
           disc_cell_area(c, {sm, rect.t0, rect.s1, tm}, depth + 1, max_depth) +
           disc_cell_area(c, {rect.s0, tm, sm, rect.t1}, depth + 1, max_depth) +
           disc_cell_area(c, {sm, tm, rect.s1, rect.t1}, depth + 1, max_depth);
}

}  // namespace

DiscOverlap classify_disc_overlap(const Patch& patch, const RightHandSide& g,
                                  const LocalRect& rect) {
    if (g.kind() != RightHandSide::Kind::Cartoon)
        throw std::invalid_argument("classify_disc_overlap: cartoon rhs required");
    const LocalCircle c = local_circle(patch, g.center(), g.radius_sq());
    if (c.rho2 <= 0.0) return DiscOverlap::Outside;
    const double ds = std::clamp(c.a, rect.s0, rect.s1) - c.a;
    const double dt = std::clamp(c.b, rect.t0, rect.t1) - c.b;
    if (ds * ds + dt * dt > c.rho2) return DiscOverlap::Outside;
    double far = 0.0;
    for (double s : {rect.s0, rect.s1})
        for (double t : {rect.t0, rect.t1})
            far = std::max(far, (s - c.a) * (s - c.a) + (t - c.b) * (t - c.b));
    return far <= c.rho2 ? DiscOverlap::Inside : DiscOverlap::Crossing;
}

double rhs_coefficient(const Surface& surface, const RightHandSide& g, const WaveletIndex& idx,
                       const QuadConfig& cfg) {
    const Patch& patch = surface.patch(idx.patch);
    const PieceSet set = make_pieces(surface, idx);
    if (g.kind() == RightHandSide::Kind::PointSingularity) {
        SingularIntegrator integ{surface, patch, g, cfg};
        double sum = 0.0;
        for (const ConstPiece& p : set.pieces) sum += p.value * integ.integrate(p.rect, 0);
        return sum;
    }
    const LocalCircle circle = local_circle(patch, g.center(), g.radius_sq());
    if (circle.rho2 <= 0.0) return 0.0;
    double sum = 0.0;
    for (const ConstPiece& p : set.pieces)
        sum += p.value * disc_cell_area(circle, p.rect, 0, cfg.cartoon_depth);
    return sum * g.value() * patch.jacobian;
}

std::optional<EntryCache::Entry> EntryCache::find(const WaveletIndex& row,
                                                  const WaveletIndex& col) const {
    const Key key{row.key(), col.key()};
    auto it = std::lower_bound(data_.begin(), data_.end(), key,
                               [](const auto& a, const Key& k) { return a.first < k; });
    if (it != data_.end() && it->first == key) return it->second;
    return std::nullopt;
}

void EntryCache::insert(std::vector<std::pair<Key, Entry>>&& batch) {
    if (batch.empty()) return;
    const auto budgeted = [](const Entry& e) { return (e.order & 0x80) != 0; };
    std::sort(batch.begin(), batch.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<std::pair<Key, Entry>> merged;
    merged.reserve(data_.size() + batch.size());
    auto a = data_.begin();
    auto b = batch.begin();
    // first value wins within a quality class; a full-accuracy entry replaces a budgeted one
    auto drain_key = [&](const Key& k, std::pair<Key, Entry> best) {
        while (b != batch.end() && b->first == k) {
            if (budgeted(best.second) && !budgeted(b->second)) best = *b;
            ++b;
        }
        merged.push_back(best);
    };
    while (a != data_.end() || b != batch.end()) {
        if (b == batch.end() || (a != data_.end() && a->first < b->first)) {
            merged.push_back(*a++);
        } else if (a == data_.end() || b->first < a->first) {
            const Key k = b->first;
            auto best = *b++;
            drain_key(k, best);
        } else {
            const Key k = b->first;
            auto best = *a++;
            drain_key(k, best);
        }
    }
    data_ = std::move(merged);
}

namespace {
struct RawRecord {
    std::uint64_t k1, k2;
    double value;
    std::uint64_t order;
};
}  // namespace

bool EntryCache::dump(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) return false;
    const std::uint64_t count = data_.size();
    out.write(reinterpret_cast<const char*>(&count), sizeof(count));
    for (const auto& [key, entry] : data_) {
        RawRecord rec{key.first, key.second, entry.value, entry.order};
        out.write(reinterpret_cast<const char*>(&rec), sizeof(rec));
    }
    return static_cast<bool>(out);
}

bool EntryCache::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return false;
    std::uint64_t count = 0;
    in.read(reinterpret_cast<char*>(&count), sizeof(count));
    if (!in) return false;
    std::vector<std::pair<Key, Entry>> batch;
    batch.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        RawRecord rec;
        in.read(reinterpret_cast<char*>(&rec), sizeof(rec));
        if (!in) return false;
        batch.emplace_back(Key{rec.k1, rec.k2},
                           Entry{rec.value, static_cast<std::uint8_t>(rec.order)});
    }
    insert(std::move(batch));
    return true;
}

}  // namespace awbem
