#include "awbem/wavelet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace awbem {

namespace {

double sign_for(WaveletKind kind, double u, double v) {
    const double su = u < 0.5 ? 1.0 : -1.0;
    const double sv = v < 0.5 ? 1.0 : -1.0;
    switch (kind) {
        case WaveletKind::Horiz: return su;
        case WaveletKind::Vert: return sv;
        case WaveletKind::Diag: return su * sv;
        default: return 1.0;
    }
}

}  // namespace

LocalRect WaveletIndex::support() const {
    if (is_scaling()) return {0.0, 0.0, 1.0, 1.0};
    const double h = std::ldexp(1.0, -level);
    return {k1 * h, k2 * h, (k1 + 1) * h, (k2 + 1) * h};
}

std::uint64_t WaveletIndex::key() const {
    // patch(16) | level+1(6) | kind(2) | k1(20) | k2(20)
    return (static_cast<std::uint64_t>(patch) << 48) |
           (static_cast<std::uint64_t>(level + 1) << 42) |
           (static_cast<std::uint64_t>(kind) << 40) |
           (static_cast<std::uint64_t>(k1) << 20) | static_cast<std::uint64_t>(k2);
}

WaveletIndex WaveletIndex::from_key(std::uint64_t key) {
    WaveletIndex idx;
    idx.patch = static_cast<std::int32_t>(key >> 48);
    idx.level = static_cast<std::int32_t>((key >> 42) & 0x3f) - 1;
    idx.kind = static_cast<WaveletKind>((key >> 40) & 0x3);
    idx.k1 = static_cast<std::int32_t>((key >> 20) & 0xfffff);
    idx.k2 = static_cast<std::int32_t>(key & 0xfffff);
    return idx;
}

WaveletIndex scaling_index(int patch) {
    return WaveletIndex{patch, -1, 0, 0, WaveletKind::Scaling};
}

std::vector<WaveletIndex> children(const WaveletIndex& idx) {
    std::vector<WaveletIndex> out;
    if (idx.is_scaling()) {
        out.reserve(3);
        for (WaveletKind k : {WaveletKind::Horiz, WaveletKind::Vert, WaveletKind::Diag})
            out.push_back(WaveletIndex{idx.patch, 0, 0, 0, k});
        return out;
    }
    out.reserve(4);
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            out.push_back(
                WaveletIndex{idx.patch, idx.level + 1, 2 * idx.k1 + a, 2 * idx.k2 + b, idx.kind});
    return out;
}

bool parent(const WaveletIndex& idx, WaveletIndex& out) {
    if (idx.is_scaling()) return false;
    if (idx.level == 0) {
        out = scaling_index(idx.patch);
        return true;
    }
    out = WaveletIndex{idx.patch, idx.level - 1, idx.k1 / 2, idx.k2 / 2, idx.kind};
    return true;
}

double evaluate(const Surface& surface, const WaveletIndex& idx, const SurfacePoint& x) {
    if (x.patch != idx.patch) return 0.0;
    const double inv_sqrt_j = 1.0 / std::sqrt(surface.patch(idx.patch).jacobian);
    if (idx.is_scaling()) return inv_sqrt_j;
    const double scale = std::ldexp(1.0, idx.level);
    const double u = x.s * scale - idx.k1;
    const double v = x.t * scale - idx.k2;
    if (u < 0.0 || u > 1.0 || v < 0.0 || v > 1.0) return 0.0;
    return sign_for(idx.kind, u, v) * scale * inv_sqrt_j;
}

void CoeffVector::set(const WaveletIndex& idx, double value) {
    if (value == 0.0)
        entries_.erase(idx);
    else
        entries_[idx] = value;
}

double CoeffVector::get(const WaveletIndex& idx) const {
    auto it = entries_.find(idx);
    return it == entries_.end() ? 0.0 : it->second;
}

void CoeffVector::add(const WaveletIndex& idx, double value) {
    auto [it, inserted] = entries_.emplace(idx, value);
    if (!inserted) {
        it->second += value;
        if (it->second == 0.0) entries_.erase(it);
    }
}

double CoeffVector::norm_sq() const {
    double s = 0.0;
    for (const auto& [idx, v] : entries_) s += v * v;
    return s;
}

double CoeffVector::norm() const { return std::sqrt(norm_sq()); }

std::vector<WaveletIndex> CoeffVector::support() const {
    std::vector<WaveletIndex> out;
    out.reserve(entries_.size());
    for (const auto& [idx, v] : entries_) out.push_back(idx);
    return out;
}

CoeffVector& CoeffVector::operator+=(const CoeffVector& other) {
    for (const auto& [idx, v] : other.entries_) add(idx, v);
    return *this;
}

CoeffVector& CoeffVector::operator-=(const CoeffVector& other) {
    for (const auto& [idx, v] : other.entries_) add(idx, -v);
    return *this;
}

CoeffVector& CoeffVector::operator*=(double factor) {
    if (factor == 0.0) {
        entries_.clear();
        return *this;
    }
    for (auto& [idx, v] : entries_) v *= factor;
    return *this;
}

bool Tree::is_valid(int patch_count) const {
    for (int p = 0; p < patch_count; ++p)
        if (!contains(scaling_index(p))) return false;
    for (const WaveletIndex& idx : indices_) {
        WaveletIndex par;
        if (parent(idx, par) && !contains(par)) return false;
    }
    return true;
}

Tree tree_complete(const std::vector<WaveletIndex>& indices, int patch_count) {
    std::set<WaveletIndex> out;
    for (int p = 0; p < patch_count; ++p) out.insert(scaling_index(p));
    for (WaveletIndex idx : indices) {
        while (out.insert(idx).second) {
            WaveletIndex par;
            if (!parent(idx, par)) break;
            idx = par;
        }
    }
    return Tree(std::move(out));
}

Tree uniform_tree(int patch_count, int max_level) {
    std::set<WaveletIndex> out;
    for (int p = 0; p < patch_count; ++p) {
        out.insert(scaling_index(p));
        for (int j = 0; j <= max_level; ++j) {
            const int n = 1 << j;
            for (int k1 = 0; k1 < n; ++k1)
                for (int k2 = 0; k2 < n; ++k2)
                    for (WaveletKind k : {WaveletKind::Horiz, WaveletKind::Vert, WaveletKind::Diag})
                        out.insert(WaveletIndex{p, j, k1, k2, k});
        }
    }
    return Tree(std::move(out));
}

CoeffVector haar_analysis(const Surface& surface, int patch, const std::vector<double>& values,
                          int grid_level) {
    const std::size_t n = std::size_t{1} << grid_level;
    if (grid_level < 0 || values.size() != n * n)
        throw std::invalid_argument("haar_analysis: grid must be full 2^J x 2^J");
    const double jac = surface.patch(patch).jacobian;

    // a[k] = f[k] * 2^-J * sqrt(jacobian) makes the transform orthonormal in L2(patch)
    std::vector<double> a(values.size());
    const double cell_scale = std::ldexp(std::sqrt(jac), -grid_level);
    for (std::size_t i = 0; i < values.size(); ++i) a[i] = values[i] * cell_scale;

    CoeffVector out;
    std::vector<double> next;
    for (int j = grid_level - 1; j >= 0; --j) {
        const std::size_t m = std::size_t{1} << j;
        next.assign(m * m, 0.0);
        const std::size_t stride = m * 2;
        for (std::size_t k1 = 0; k1 < m; ++k1) {
            for (std::size_t k2 = 0; k2 < m; ++k2) {
                const double a00 = a[(2 * k1) * stride + 2 * k2];
                const double a01 = a[(2 * k1) * stride + 2 * k2 + 1];
                const double a10 = a[(2 * k1 + 1) * stride + 2 * k2];
                const double a11 = a[(2 * k1 + 1) * stride + 2 * k2 + 1];
                next[k1 * m + k2] = 0.5 * (a00 + a01 + a10 + a11);
                const double dh = 0.5 * (a00 + a01 - a10 - a11);
                const double dv = 0.5 * (a00 - a01 + a10 - a11);
                const double dd = 0.5 * (a00 - a01 - a10 + a11);
                const int ik1 = static_cast<int>(k1), ik2 = static_cast<int>(k2);
                if (dh != 0.0) out.set({patch, j, ik1, ik2, WaveletKind::Horiz}, dh);
                if (dv != 0.0) out.set({patch, j, ik1, ik2, WaveletKind::Vert}, dv);
                if (dd != 0.0) out.set({patch, j, ik1, ik2, WaveletKind::Diag}, dd);
            }
        }
        a.swap(next);
    }
    if (a[0] != 0.0) out.set(scaling_index(patch), a[0]);
    return out;
}

std::vector<double> haar_synthesis(const Surface& surface, int patch, const CoeffVector& coeffs,
                                   int grid_level) {
    if (grid_level < 0) throw std::invalid_argument("haar_synthesis: negative grid level");
    for (const auto& [idx, v] : coeffs.entries()) {
        if (idx.patch != patch) throw std::invalid_argument("haar_synthesis: foreign patch index");
        if (idx.level >= grid_level)
            throw std::invalid_argument("haar_synthesis: index at level >= grid level");
    }
    std::vector<double> a{coeffs.get(scaling_index(patch))};
    std::vector<double> next;
    for (int j = 0; j < grid_level; ++j) {
        const std::size_t m = std::size_t{1} << j;
        next.assign(4 * m * m, 0.0);
        const std::size_t stride = 2 * m;
        for (std::size_t k1 = 0; k1 < m; ++k1) {
            for (std::size_t k2 = 0; k2 < m; ++k2) {
                const int ik1 = static_cast<int>(k1), ik2 = static_cast<int>(k2);
                const double av = a[k1 * m + k2];
                const double dh = coeffs.get({patch, j, ik1, ik2, WaveletKind::Horiz});
                const double dv = coeffs.get({patch, j, ik1, ik2, WaveletKind::Vert});
                const double dd = coeffs.get({patch, j, ik1, ik2, WaveletKind::Diag});
                next[(2 * k1) * stride + 2 * k2] = 0.5 * (av + dh + dv + dd);
                next[(2 * k1) * stride + 2 * k2 + 1] = 0.5 * (av + dh - dv - dd);
                next[(2 * k1 + 1) * stride + 2 * k2] = 0.5 * (av - dh + dv - dd);
                next[(2 * k1 + 1) * stride + 2 * k2 + 1] = 0.5 * (av - dh - dv + dd);
            }
        }
        a.swap(next);
    }
    const double inv_cell_scale = std::ldexp(1.0, grid_level) / std::sqrt(surface.patch(patch).jacobian);
    for (double& v : a) v *= inv_cell_scale;
    return a;
}

double sobolev_seq_norm(const CoeffVector& v, double s) {
    if (!(std::abs(s) < 0.5))
        throw std::invalid_argument("sobolev_seq_norm: |s| must be < 1/2");
    double sum = 0.0;
    for (const auto& [idx, c] : v.entries()) {
        const double w = idx.is_scaling() ? 1.0 : std::pow(2.0, 2.0 * s * idx.level);
        sum += w * c * c;
    }
    return std::sqrt(sum);
}

bool BesovParams::admissible() const {
    if (alpha < 0.0 || p <= 0.0 || q <= 0.0) return false;
    const double inv_p = 1.0 / p;
    const double upper = alpha / 2.0 + 0.5;
    if (inv_p < 0.5 || inv_p > upper + 1e-15) return false;
    if (std::abs(inv_p - upper) <= 1e-15 && q > 2.0) return false;
    return true;
}

double besov_norm(const Surface& surface, const CoeffVector& v, const BesovParams& params) {
    if (!params.admissible()) throw std::invalid_argument("besov_norm: inadmissible parameters");
    const double alpha = params.alpha, p = params.p, q = params.q;
    const bool q_inf = std::isinf(q);

    // coarse-level term: Lp norm of the patchwise-constant projection
    double proj = 0.0;
    for (const auto& [idx, c] : v.entries()) {
        if (!idx.is_scaling()) continue;
        const double jac = surface.patch(idx.patch).jacobian;
        proj += jac * std::pow(std::abs(c) / std::sqrt(jac), p);
    }
    proj = std::pow(proj, 1.0 / p);

    // per-level lp sums
    std::map<int, double> level_p;
    for (const auto& [idx, c] : v.entries())
        if (!idx.is_scaling()) level_p[idx.level] += std::pow(std::abs(c), p);

    const double expo = alpha + 2.0 * (0.5 - 1.0 / p);
    double tail = 0.0;
    for (const auto& [j, sp] : level_p) {
        const double level_term = std::pow(2.0, j * expo) * std::pow(sp, 1.0 / p);
        if (q_inf)
            tail = std::max(tail, level_term);
        else
            tail += std::pow(level_term, q);
    }
    if (!q_inf) tail = std::pow(tail, 1.0 / q);
    return proj + tail;
}

std::vector<std::pair<std::size_t, double>> best_n_term_curve(
    const CoeffVector& v, const std::vector<std::size_t>& n_list) {
    std::vector<double> mags;
    mags.reserve(v.size());
    for (const auto& [idx, c] : v.entries()) mags.push_back(std::abs(c));
    std::sort(mags.begin(), mags.end(), std::greater<double>());

    // suffix sums of squares: tail[m] = sum of mags[m..]^2
    std::vector<double> tail(mags.size() + 1, 0.0);
    for (std::size_t m = mags.size(); m-- > 0;) tail[m] = tail[m + 1] + mags[m] * mags[m];

    std::vector<std::pair<std::size_t, double>> out;
    out.reserve(n_list.size());
    for (std::size_t n : n_list) {
        const double t = n >= mags.size() ? 0.0 : tail[n];
        out.emplace_back(n, std::sqrt(t));
    }
    return out;
}

}  // namespace awbem
