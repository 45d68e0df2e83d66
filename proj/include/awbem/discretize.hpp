#pragma once

#include "awbem/geometry.hpp"
#include "awbem/wavelet.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace awbem {

/// Harmonic double layer kernel k(x,y) = <eta(y), x-y> / (4 pi |x-y|^3).
/// Sign fixed by the Gauss identity: integral over the closed surface equals
/// -1 for interior x, -1/2 at smooth boundary points, 0 outside, so S_DL 1 = 1.
struct Kernel {
    double operator()(const Vec3& x, const Vec3& y, const Vec3& normal_y) const {
        const Vec3 d = x - y;
        const double r2 = d.squaredNorm();
        const double r = std::sqrt(r2);
        return normal_y.dot(d) / (4.0 * M_PI * r2 * r);
    }
};

struct QuadConfig {
    int outer_order = 4;          // Gauss order per direction for outer integrals
    double sep_ratio = 1.0 / 3.0; // accept a cell once diam <= sep_ratio * distance
    int max_depth = 8;            // near-field refinement depth for entries
    int grading_depth = 20;       // dyadic grading toward the singular vertex (rhs)
    int cartoon_depth = 12;       // quadtree depth along the cartoon jump
    double entry_budget_tol = 1e-8;  // absolute budget for compressed-regime entries
};

/// Signed solid angle subtended by a planar quad, equal to the exact panel integral
/// of <eta(y), y-x>/|x-y|^3 (positive when x is on the anti-normal side).
/// Sum of two triangle terms via the arctan formula; |result| <= 2 pi.
/// x strictly inside the coplanar panel -> std::domain_error; coplanar outside -> 0.
double solid_angle(const std::array<Vec3, 4>& quad, const Vec3& x);

/// One constant piece of a piecewise-constant basis function.
struct ConstPiece {
    LocalRect rect;
    double value = 0.0;
};

/// Decomposition of a basis function into constant pieces on its patch.
struct PieceSet {
    int patch = 0;
    LocalRect support;
    std::vector<ConstPiece> pieces;  // 1 (scaling), 2 (horiz/vert) or 4 (diag)
};

PieceSet make_pieces(const Surface& surface, const WaveletIndex& idx);

/// Galerkin entry <K psi_mu, psi_lambda>: inner integral exact via solid angles of the
/// constant pieces of psi_mu, outer by Gauss with geometric near-field subdivision.
/// Exactly 0 when the two patches are coplanar. abs_tol > 0 allows the outer recursion
/// to skip cells whose total contribution is below the budget.
double galerkin_entry_K(const Surface& surface, const WaveletIndex& row,
                        const WaveletIndex& col, const QuadConfig& cfg, double abs_tol = 0.0);

/// <K chi_Q, psi_lambda> for the characteristic function of a chart rectangle Q.
double galerkin_entry_K_box(const Surface& surface, const WaveletIndex& row, int col_patch,
                            const LocalRect& box, const QuadConfig& cfg, double abs_tol = 0.0);

/// Dense application of (1/2 I - K) restricted to a tree (identity part exact).
CoeffVector apply_dense(const Surface& surface, const Tree& tree, const CoeffVector& v,
                        const QuadConfig& cfg);

/// Dense matrix of (1/2 I - K) over an index list (oracle / small-tree path).
Eigen::MatrixXd assemble_dense(const Surface& surface, const std::vector<WaveletIndex>& indices,
                               const QuadConfig& cfg);

/// Right-hand sides of the two experiment families.
class RightHandSide {
public:
    enum class Kind { PointSingularity, Cartoon };

    static RightHandSide point_singularity(double alpha, const Vec3& vertex);
    static RightHandSide cartoon(const Vec3& center, double radius_sq, double value);

    Kind kind() const { return kind_; }
    double alpha() const { return alpha_; }
    const Vec3& vertex() const { return vertex_; }
    const Vec3& center() const { return center_; }
    double radius_sq() const { return radius_sq_; }
    double value() const { return value_; }

    /// Pointwise value; throws std::domain_error at the singular vertex.
    double eval(const Vec3& x) const;

private:
    Kind kind_ = Kind::Cartoon;
    double alpha_ = 0.5;
    Vec3 vertex_ = Vec3::Zero();
    Vec3 center_ = Vec3::Zero();
    double radius_sq_ = 0.0;
    double value_ = 0.0;
};

/// <g, psi_lambda> by graded composite Gauss quadrature (point singularity) or
/// quadtree subdivision along the jump circle (cartoon).
double rhs_coefficient(const Surface& surface, const RightHandSide& g, const WaveletIndex& idx,
                       const QuadConfig& cfg);

enum class DiscOverlap { Inside, Outside, Crossing };

/// Position of a chart rectangle relative to a cartoon rhs disc.
DiscOverlap classify_disc_overlap(const Patch& patch, const RightHandSide& g,
                                  const LocalRect& rect);

/// Memoized Galerkin entries keyed by (row, col) with the quadrature order used.
/// Reads may run concurrently; insertion phases must be serialized by the caller.
class EntryCache {
public:
    struct Entry {
        double value = 0.0;
        std::uint8_t order = 0;
    };
    using Key = std::pair<std::uint64_t, std::uint64_t>;

    std::optional<Entry> find(const WaveletIndex& row, const WaveletIndex& col) const;
    /// Batch insertion; first value wins so re-queries stay bit-identical.
    void insert(std::vector<std::pair<Key, Entry>>&& batch);
    std::size_t size() const { return data_.size(); }
    void clear() { data_.clear(); }

    bool dump(const std::string& path) const;  // little-endian fixed-width records
    bool load(const std::string& path);

private:
    std::vector<std::pair<Key, Entry>> data_;  // sorted by key
};

}  // namespace awbem
