#pragma once

#include "awbem/geometry.hpp"

#include <cstdint>
#include <map>
#include <set>
#include <vector>

namespace awbem {

enum class WaveletKind : std::uint8_t { Scaling = 0, Horiz = 1, Vert = 2, Diag = 3 };

/// Index of one basis function: the per-patch scaling function lives on level -1,
/// Haar tensor wavelets of the three kinds on levels j >= 0 at dyadic positions
/// 0 <= k1,k2 < 2^j. Support side is 2^-max(level,0) in chart coordinates.
struct WaveletIndex {
    std::int32_t patch = 0;
    std::int32_t level = -1;
    std::int32_t k1 = 0;
    std::int32_t k2 = 0;
    WaveletKind kind = WaveletKind::Scaling;

    bool is_scaling() const { return kind == WaveletKind::Scaling; }
    LocalRect support() const;

    /// Packed key preserving the (patch, level, kind, k1, k2) order.
    std::uint64_t key() const;
    static WaveletIndex from_key(std::uint64_t key);

    friend bool operator==(const WaveletIndex& a, const WaveletIndex& b) {
        return a.key() == b.key();
    }
    friend bool operator<(const WaveletIndex& a, const WaveletIndex& b) {
        return a.key() < b.key();
    }
};

WaveletIndex scaling_index(int patch);

/// Scaling -> the three level-0 kinds; wavelet -> the four same-kind children.
std::vector<WaveletIndex> children(const WaveletIndex& idx);

/// Inverse of children(); scaling indices have no parent (returns false).
bool parent(const WaveletIndex& idx, WaveletIndex& out);

/// L2(surface)-normalized value at a point of the index's patch; 0 off the support.
double evaluate(const Surface& surface, const WaveletIndex& idx, const SurfacePoint& x);

/// Finitely supported coefficient vector over wavelet indices.
class CoeffVector {
public:
    using Map = std::map<WaveletIndex, double>;

    CoeffVector() = default;

    void set(const WaveletIndex& idx, double value);
    double get(const WaveletIndex& idx) const;  // 0 for absent indices
    void add(const WaveletIndex& idx, double value);

    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    const Map& entries() const { return entries_; }

    double norm() const;     // l2
    double norm_sq() const;
    std::vector<WaveletIndex> support() const;

    CoeffVector& operator+=(const CoeffVector& other);
    CoeffVector& operator-=(const CoeffVector& other);
    CoeffVector& operator*=(double factor);
    friend CoeffVector operator-(CoeffVector a, const CoeffVector& b) { return a -= b; }

private:
    Map entries_;  // no explicit zeros stored
};

/// Index set containing every patch root and closed under taking parents.
class Tree {
public:
    Tree() = default;
    explicit Tree(std::set<WaveletIndex> indices) : indices_(std::move(indices)) {}

    bool contains(const WaveletIndex& idx) const { return indices_.count(idx) > 0; }
    std::size_t size() const { return indices_.size(); }
    const std::set<WaveletIndex>& indices() const { return indices_; }

    bool is_valid(int patch_count) const;

    friend bool operator==(const Tree& a, const Tree& b) { return a.indices_ == b.indices_; }

private:
    std::set<WaveletIndex> indices_;
};

/// Smallest tree containing the given indices (ancestors and all patch roots added).
Tree tree_complete(const std::vector<WaveletIndex>& indices, int patch_count);
Tree uniform_tree(int patch_count, int max_level);

/// Analysis of patch-constant values on the full 2^J x 2^J chart grid (row-major in k1).
/// Produces scaling + wavelet coefficients up to level J-1; energy preserving.
CoeffVector haar_analysis(const Surface& surface, int patch, const std::vector<double>& values,
                          int grid_level);

/// Exact inverse of haar_analysis; requires all indices below grid_level.
std::vector<double> haar_synthesis(const Surface& surface, int patch, const CoeffVector& coeffs,
                                   int grid_level);

/// Sequence-space Sobolev norm for |s| < 1/2:
/// (||scaling part||^2 + sum_j sum_xi 2^{2sj} |v_{j,xi}|^2)^{1/2}.
double sobolev_seq_norm(const CoeffVector& v, double s);

struct BesovParams {
    double alpha = 0.0;  // smoothness >= 0
    double p = 2.0;      // integrability in (0, inf)
    double q = 2.0;      // fine index in (0, inf]; infinity() for the sup variant

    bool admissible() const;
};

/// Besov-type quasi-norm; the coarse-level term is the Lp norm of the patchwise-constant
/// projection, exact for constants: (sum_patches jacobian * |value|^p)^{1/p}.
double besov_norm(const Surface& surface, const CoeffVector& v, const BesovParams& params);

/// sigma_n = l2 norm of everything but the n largest-magnitude coefficients.
std::vector<std::pair<std::size_t, double>> best_n_term_curve(
    const CoeffVector& v, const std::vector<std::size_t>& n_list);

}  // namespace awbem
