#pragma once

#include <Eigen/Dense>

#include <array>
#include <string>
#include <vector>

namespace awbem {

using Vec3 = Eigen::Vector3d;

/// Point on the surface in chart coordinates of one patch.
struct SurfacePoint {
    int patch = 0;
    double s = 0.0;
    double t = 0.0;
};

enum class RelationKind { Identical, CommonEdge, CommonVertex, Disjoint };

struct PatchRelation {
    RelationKind kind = RelationKind::Disjoint;
    bool coplanar = false;
};

/// Axis-aligned rectangle in the chart coordinates of a patch.
struct LocalRect {
    double s0 = 0.0, t0 = 0.0, s1 = 1.0, t1 = 1.0;

    double area() const { return (s1 - s0) * (t1 - t0); }
};

/// Planar parallelogram patch with an affine chart kappa : [0,1]^2 -> R^3,
/// kappa(s,t) = corners[0] + s*(corners[1]-corners[0]) + t*(corners[3]-corners[0]).
/// Corners are counterclockwise as seen from outside, which fixes the outward normal.
struct Patch {
    int id = -1;
    std::array<Vec3, 4> corners;
    Vec3 normal = Vec3::Zero();
    double jacobian = 0.0;  // constant area scale; equals the patch area

    Vec3 map(double s, double t) const {
        return corners[0] + s * (corners[1] - corners[0]) + t * (corners[3] - corners[0]);
    }
    Vec3 edge_s() const { return corners[1] - corners[0]; }
    Vec3 edge_t() const { return corners[3] - corners[0]; }
    double diameter() const;
    /// True when both chart edges are parallel to coordinate axes.
    bool axis_aligned() const;
};

class Surface {
public:
    Surface(std::string name, std::vector<Patch> patches, std::vector<Vec3> vertices);

    const std::string& name() const { return name_; }
    const std::vector<Patch>& patches() const { return patches_; }
    const std::vector<Vec3>& vertices() const { return vertices_; }
    int patch_count() const { return static_cast<int>(patches_.size()); }

    /// Throws std::out_of_range for an invalid id.
    const Patch& patch(int id) const;

    Vec3 lift(const SurfacePoint& p) const;

    const PatchRelation& relation(int i, int j) const;
    bool coplanar(int i, int j) const { return relation(i, j).coplanar; }

    double area() const;

private:
    std::string name_;
    std::vector<Patch> patches_;
    std::vector<Vec3> vertices_;
    std::vector<PatchRelation> relations_;  // row-major patch_count x patch_count
};

/// Boundary of (0,1)^3 \ (0,0.5]^3 as 12 flat patches; reentrant corner (0.5,0.5,0.5).
Surface make_fichera();

/// Boundary of (-1,1)^3 as 6 patches of area 4 each.
Surface make_cube();

Surface make_surface(const std::string& name);  // "fichera" | "cube"

/// Euclidean distance in R^3 between the closed lifted rectangles; 0 iff they touch.
double support_distance(const Surface& surface, int patch_a, const LocalRect& ra,
                        int patch_b, const LocalRect& rb);

/// Cheap lower bound on support_distance via axis-aligned bounding boxes.
/// Exact whenever both patches are axis-aligned (true for the built-in surfaces).
double support_distance_lower(const Surface& surface, int patch_a, const LocalRect& ra,
                              int patch_b, const LocalRect& rb);

namespace geom {
double point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b);
double segment_segment_distance(const Vec3& a0, const Vec3& a1, const Vec3& b0, const Vec3& b1);
double point_quad_distance(const Vec3& p, const std::array<Vec3, 4>& quad);
double quad_quad_distance(const std::array<Vec3, 4>& qa, const std::array<Vec3, 4>& qb);
std::array<Vec3, 4> lift_rect(const Patch& patch, const LocalRect& rect);
}  // namespace geom

}  // namespace awbem
