#include "awbem/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <thread>
#include <unordered_map>

namespace awbem {

namespace {

constexpr int kExactAssemblyLimit = 600;  // trees this small skip compression entirely
constexpr int kColumnBlock = 256;

void run_parallel(int threads, int n, const std::function<void(int)>& fn) {
    if (threads <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    const int chunk = (n + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
        const int b = t * chunk;
        const int e = std::min(n, b + chunk);
        if (b < e)
            pool.emplace_back([&fn, b, e] {
                for (int i = b; i < e; ++i) fn(i);
            });
    }
    for (auto& th : pool) th.join();
}

/// Contiguous numbering of the level-capped index universe (per-patch stride 4^{jmax+1}).
struct SlotMap {
    int jmax = 7;
    std::int64_t stride = 0;

    explicit SlotMap(int j) : jmax(j), stride(std::int64_t{1} << (2 * (j + 1))) {}

    std::int64_t slot(const WaveletIndex& idx) const {
        if (idx.is_scaling()) return idx.patch * stride;
        const std::int64_t within = 1 + ((std::int64_t{1} << (2 * idx.level)) - 1) +
                                    3 * (static_cast<std::int64_t>(idx.k1) << idx.level
                                         | idx.k2) +
                                    (static_cast<std::int64_t>(idx.kind) - 1);
        return idx.patch * stride + within;
    }

    WaveletIndex index(std::int64_t s) const {
        WaveletIndex idx;
        idx.patch = static_cast<std::int32_t>(s / stride);
        std::int64_t within = s % stride;
        if (within == 0) return scaling_index(idx.patch);
        --within;
        int j = 0;
        while (within >= 3 * (std::int64_t{1} << (2 * j))) {
            within -= 3 * (std::int64_t{1} << (2 * j));
            ++j;
        }
        idx.level = j;
        idx.kind = static_cast<WaveletKind>(1 + within % 3);
        const std::int64_t cell = within / 3;
        idx.k1 = static_cast<std::int32_t>(cell >> j);
        idx.k2 = static_cast<std::int32_t>(cell & ((std::int64_t{1} << j) - 1));
        return idx;
    }
};

LocalRect cell_rect(int level, int k1, int k2) {
    const double h = std::ldexp(1.0, -level);
    return {k1 * h, k2 * h, (k1 + 1) * h, (k2 + 1) * h};
}

double wall_seconds() {
    using clock = std::chrono::steady_clock;
    static const clock::time_point start = clock::now();
    return std::chrono::duration<double>(clock::now() - start).count();
}

}  // namespace

void SolverConfig::validate() const {
    if (!(omega > 0.0 && omega < 1.0)) throw std::invalid_argument("omega must be in (0,1)");
    if (!(theta > 0.0 && theta < 1.0)) throw std::invalid_argument("theta must be in (0,1)");
    if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
    if (!(delta_init > 0.0)) throw std::invalid_argument("delta_init must be positive");
    if (j_max < 0 || j_max > 12) throw std::invalid_argument("j_max out of range");
    if (max_uniform_level < 0) throw std::invalid_argument("max_uniform_level out of range");
    if (gmres_restart < 1 || gmres_max_iter < 1) throw std::invalid_argument("bad gmres limits");
    if (!(gmres_tol > 0.0)) throw std::invalid_argument("gmres_tol must be positive");
    if (threads < 1) throw std::invalid_argument("threads must be >= 1");
    if (quad.outer_order < 1 || quad.grading_depth < 1 || quad.cartoon_depth < 1 ||
        quad.max_depth < 0)
        throw std::invalid_argument("quadrature orders must be >= 1");
}

double CompressionModel::entry_bound(int row_level, int col_level, double dist,
                                     double diam_row, double diam_col) const {
    const double deff = std::max(dist, 0.5 * (diam_row + diam_col));
    const bool row_scaling = row_level < 0;
    const bool col_scaling = col_level < 0;
    if (row_scaling && col_scaling) return c_far_ss / (deff * deff);
    if (row_scaling || col_scaling) {
        const int j = row_scaling ? col_level : row_level;
        const double far = c_far_ws * std::ldexp(1.0, -2 * j) / (deff * deff * deff);
        const double near = c_tch_ws * (1.0 + j) * std::ldexp(1.0, -2 * j);
        return std::min(far, near);
    }
    const int jm = std::max(row_level, col_level);
    const int jn = std::min(row_level, col_level);
    const double far =
        c_far_ww * std::ldexp(1.0, -2 * (row_level + col_level)) / (deff * deff * deff * deff);
    const double near = c_tch_ww * (1.0 + jm) * std::ldexp(1.0, -(3 * jm + jn));
    return std::min(far, near);
}

CompressionModel fit_compression_model(const Surface& surface, const QuadConfig& quad) {
    CompressionModel model;
    const int np = surface.patch_count();

    // deterministic selection of geometrically diverse ordered patch pairs
    std::vector<std::pair<int, int>> pairs;
    int n_edge = 0, n_vertex = 0, n_far = 0;
    for (int i = 0; i < np; ++i) {
        for (int j = 0; j < np; ++j) {
            if (surface.coplanar(i, j)) continue;
            const RelationKind kind = surface.relation(i, j).kind;
            if (kind == RelationKind::CommonEdge && n_edge < 8) {
                pairs.emplace_back(i, j);
                ++n_edge;
            } else if (kind == RelationKind::CommonVertex && n_vertex < 6) {
                pairs.emplace_back(i, j);
                ++n_vertex;
            } else if (kind == RelationKind::Disjoint && n_far < 8) {
                pairs.emplace_back(i, j);
                ++n_far;
            }
        }
    }

    auto sample_indices = [](int patch) {
        std::vector<WaveletIndex> out;
        out.push_back(scaling_index(patch));
        for (int j = 0; j <= 2; ++j) {
            const int n = 1 << j;
            std::vector<std::pair<int, int>> pos{{0, 0}, {n - 1, n - 1}, {0, n - 1},
                                                 {n / 2, n / 2}};
            std::sort(pos.begin(), pos.end());
            pos.erase(std::unique(pos.begin(), pos.end()), pos.end());
            for (auto [k1, k2] : pos)
                for (WaveletKind k : {WaveletKind::Horiz, WaveletKind::Vert, WaveletKind::Diag})
                    out.push_back({patch, j, k1, k2, k});
        }
        return out;
    };

    for (auto [pi, pj] : pairs) {
        const auto rows = sample_indices(pi);
        const auto cols = sample_indices(pj);
        for (const WaveletIndex& row : rows) {
            for (const WaveletIndex& col : cols) {
                const double e = std::abs(galerkin_entry_K(surface, row, col, quad, 1e-12));
                if (e == 0.0) continue;
                const double dist = support_distance_lower(surface, row.patch, row.support(),
                                                           col.patch, col.support());
                const double dr =
                    surface.patch(row.patch).diameter() * std::ldexp(1.0, -std::max(row.level, 0));
                const double dc =
                    surface.patch(col.patch).diameter() * std::ldexp(1.0, -std::max(col.level, 0));
                const double deff = std::max(dist, 0.5 * (dr + dc));
                if (row.is_scaling() && col.is_scaling()) {
                    model.c_far_ss = std::max(model.c_far_ss, e * deff * deff);
                } else if (row.is_scaling() || col.is_scaling()) {
                    const int j = row.is_scaling() ? col.level : row.level;
                    model.c_far_ws =
                        std::max(model.c_far_ws, e * std::ldexp(1.0, 2 * j) * deff * deff * deff);
                    model.c_tch_ws =
                        std::max(model.c_tch_ws, e * std::ldexp(1.0, 2 * j) / (1.0 + j));
                } else {
                    const int jm = std::max(row.level, col.level);
                    const int jn = std::min(row.level, col.level);
                    model.c_far_ww =
                        std::max(model.c_far_ww, e * std::ldexp(1.0, 2 * (row.level + col.level)) *
                                                     deff * deff * deff * deff);
                    model.c_tch_ww = std::max(
                        model.c_tch_ww, e * std::ldexp(1.0, 3 * jm + jn) / (1.0 + jm));
                }
            }
        }
    }
    model.c_far_ss *= 2.0;
    model.c_far_ws *= 2.0;
    model.c_far_ww *= 2.0;
    model.c_tch_ws *= 2.0;
    model.c_tch_ww *= 2.0;

    // ||K|| estimate: power iteration on K^T K over the level-1 uniform tree
    QuadConfig cheap = quad;
    cheap.entry_budget_tol = 1e-6;
    const Tree t1 = uniform_tree(np, 1);
    std::vector<WaveletIndex> list(t1.indices().begin(), t1.indices().end());
    const Eigen::Index n = static_cast<Eigen::Index>(list.size());
    Eigen::MatrixXd kmat(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            kmat(i, j) = galerkin_entry_K(surface, list[static_cast<std::size_t>(i)],
                                          list[static_cast<std::size_t>(j)], cheap, 1e-6);
    Eigen::VectorXd x = Eigen::VectorXd::Ones(n).normalized();
    double norm_sq = 0.0;
    for (int it = 0; it < 30; ++it) {
        Eigen::VectorXd y = kmat.transpose() * (kmat * x);
        norm_sq = y.norm();
        if (norm_sq == 0.0) break;
        x = y / norm_sq;
    }
    model.k_norm = 1.5 * std::sqrt(norm_sq);
    return model;
}

Tree coarse(double theta, const CoeffVector& r, int patch_count) {
    if (!(theta > 0.0 && theta < 1.0)) throw std::invalid_argument("coarse: theta not in (0,1)");
    const double total_sq = r.norm_sq();
    if (r.empty() || total_sq == 0.0)
        throw std::invalid_argument("coarse: residual is zero");

    std::vector<std::pair<double, WaveletIndex>> order;
    order.reserve(r.size());
    for (const auto& [idx, v] : r.entries()) order.emplace_back(std::abs(v), idx);
    std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });

    const double budget_sq = theta * theta * total_sq;
    std::vector<WaveletIndex> kept;
    double kept_sq = 0.0;
    for (const auto& [mag, idx] : order) {
        if (total_sq - kept_sq <= budget_sq) break;
        kept.push_back(idx);
        kept_sq += mag * mag;
    }
    return tree_complete(kept, patch_count);
}

// ---------------------------------------------------------------------------

namespace {

/// Per-patch presence structure for traversals restricted to a tree.
struct TreeIndexer {
    std::vector<WaveletIndex> list;  // sorted
    std::unordered_map<std::uint64_t, std::int32_t> position;
    // per patch: cell key (level,k1,k2) -> bit 0..2 kinds present, bit 3 subtree non-empty
    std::vector<std::unordered_map<std::uint64_t, std::uint8_t>> cells;

    static std::uint64_t cell_key(int level, int k1, int k2) {
        return (static_cast<std::uint64_t>(level) << 48) |
               (static_cast<std::uint64_t>(k1) << 24) | static_cast<std::uint64_t>(k2);
    }

    explicit TreeIndexer(const Tree& tree, int patch_count) {
        list.assign(tree.indices().begin(), tree.indices().end());
        position.reserve(list.size() * 2);
        cells.resize(static_cast<std::size_t>(patch_count));
        for (std::size_t i = 0; i < list.size(); ++i) {
            const WaveletIndex& idx = list[i];
            position.emplace(idx.key(), static_cast<std::int32_t>(i));
            if (idx.is_scaling()) continue;
            auto& patch_cells = cells[static_cast<std::size_t>(idx.patch)];
            patch_cells[cell_key(idx.level, idx.k1, idx.k2)] |=
                static_cast<std::uint8_t>(1u << (static_cast<int>(idx.kind) - 1));
            // mark ancestors as having a non-empty subtree
            int j = idx.level, k1 = idx.k1, k2 = idx.k2;
            while (true) {
                std::uint8_t& mask = patch_cells[cell_key(j, k1, k2)];
                if (j != idx.level) {
                    if (mask & 8u) break;
                    mask |= 8u;
                }
                if (j == 0) break;
                --j;
                k1 /= 2;
                k2 /= 2;
            }
        }
    }
};

}  // namespace

struct Problem::Impl {
    Surface surface;
    RightHandSide rhs;
    SolverConfig cfg;
    EntryCache cache;
    SlotMap slots;
    std::optional<CompressionModel> model;

    // rhs coefficient machinery
    std::map<WaveletIndex, double> rhs_values;  // exact-quadrature coefficients, memoized
    struct RhsTable {
        bool built = false;
        double threshold = std::numeric_limits<double>::infinity();
        CoeffVector computed;
        double dropped_sq = 0.0;
        std::vector<double> level_computed_sq;
        std::vector<double> level_dropped_sq;
    } table;

    std::optional<double> delta_init_eff;
    double residual_scale = std::numeric_limits<double>::infinity();

    Impl(const Surface& s, const RightHandSide& g, const SolverConfig& c)
        : surface(s), rhs(g), cfg(c), slots(c.j_max) {
        cfg.validate();
    }

    const CompressionModel& ensure_model() {
        if (!model) model = fit_compression_model(surface, cfg.quad);
        return *model;
    }

    double patch_diam(int p) const { return surface.patch(p).diameter(); }

    // -------------------------------------------------- entry lookup/compute
    double entry_value(const WaveletIndex& row, const WaveletIndex& col, bool exact,
                       std::vector<std::pair<EntryCache::Key, EntryCache::Entry>>* fresh) {
        if (auto hit = cache.find(row, col)) {
            if (!exact || !(hit->order & 0x80)) return hit->value;
        }
        const double tol = exact ? 0.0 : cfg.quad.entry_budget_tol;
        const double value = galerkin_entry_K(surface, row, col, cfg.quad, tol);
        const std::uint8_t order =
            static_cast<std::uint8_t>(cfg.quad.outer_order) | (exact ? 0 : 0x80);
        if (fresh)
            fresh->push_back({{row.key(), col.key()}, {value, order}});
        else
            cache.insert({{{row.key(), col.key()}, {value, order}}});
        return value;
    }

    // -------------------------------------------------- compressed traversal
    struct ColumnTargets {
        std::vector<WaveletIndex> kept;
        double dropped_sq = 0.0;
    };

    /// Σ over the subtree at (level j0, distance >= d) of squared per-entry bounds.
    double subtree_bound_sq(const CompressionModel& m, int j0, int col_level, double d,
                            double diam_row0, double diam_col) const {
        double sum = 0.0;
        double count = 3.0;
        double diam = diam_row0;
        for (int j = j0; j <= cfg.j_max; ++j) {
            const double b = m.entry_bound(j, col_level, d, diam, diam_col);
            sum += count * b * b;
            count *= 4.0;
            diam *= 0.5;
        }
        return sum;
    }

    /// Enumerate targets for one source column over the full universe (apply)
    /// or restricted to a tree (assembly). Decisions depend only on fitted bounds.
    ColumnTargets column_targets(const CompressionModel& m, const WaveletIndex& col,
                                 double allowance_sq, const TreeIndexer* tree) {
        ColumnTargets out;
        const LocalRect col_support = col.support();
        const double diam_col = patch_diam(col.patch) * std::ldexp(1.0, -std::max(col.level, 0));

        double t = std::sqrt(allowance_sq / 16.0);
        for (int attempt = 0;; ++attempt) {
            out.kept.clear();
            out.dropped_sq = 0.0;
            for (int p = 0; p < surface.patch_count(); ++p) {
                if (surface.coplanar(p, col.patch)) continue;
                if (tree == nullptr || tree->position.count(scaling_index(p).key()))
                    out.kept.push_back(scaling_index(p));  // scaling rows always retained
                walk(m, col, col_support, diam_col, p, 0, 0, 0, t, tree, out);
            }
            if (out.dropped_sq <= allowance_sq || t <= 1e-300) break;
            t *= 0.25;
        }
        return out;
    }

    void walk(const CompressionModel& m, const WaveletIndex& col, const LocalRect& col_support,
              double diam_col, int p, int j, int k1, int k2, double t, const TreeIndexer* tree,
              ColumnTargets& out) {
        std::uint8_t mask = 7u | 8u;
        if (tree != nullptr) {
            const auto& cells = tree->cells[static_cast<std::size_t>(p)];
            auto it = cells.find(TreeIndexer::cell_key(j, k1, k2));
            if (it == cells.end()) return;
            mask = it->second;
        }
        const LocalRect rect = cell_rect(j, k1, k2);
        const double dist =
            support_distance_lower(surface, p, rect, col.patch, col_support);
        const double diam_row = patch_diam(p) * std::ldexp(1.0, -j);
        const double bound = m.entry_bound(j, col.level, dist, diam_row, diam_col);
        if (bound < t) {
            // drop the whole subtree; conservative since distances only grow below
            out.dropped_sq += subtree_bound_sq(m, j, col.level, dist, diam_row, diam_col);
            return;
        }
        for (int kind = 0; kind < 3; ++kind)
            if (mask & (1u << kind))
                out.kept.push_back(
                    {p, j, k1, k2, static_cast<WaveletKind>(kind + 1)});
        if (j >= cfg.j_max || !(mask & 8u)) return;
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b)
                walk(m, col, col_support, diam_col, p, j + 1, 2 * k1 + a, 2 * k2 + b, t, tree,
                     out);
    }

    // -------------------------------------------------------------- apply
    CoeffVector apply(double delta, const CoeffVector& v) {
        if (!(delta > 0.0)) throw std::invalid_argument("apply: delta must be positive");
        CoeffVector out;
        if (v.empty()) return out;
        const CompressionModel& m = ensure_model();
        const double vnorm = v.norm();
        if (m.k_norm * vnorm <= 0.5 * delta) {
            out = v;
            out *= 0.5;
            return out;
        }

        std::vector<std::pair<WaveletIndex, double>> cols(v.entries().begin(), v.entries().end());
        const int n_cols = static_cast<int>(cols.size());
        // 80% of the budget covers dropped entries, the rest absorbs quadrature slop
        const double drop_delta = 0.8 * delta;
        const double allowance_sq = (drop_delta * drop_delta) / (vnorm * vnorm * n_cols);

        std::vector<double> acc(static_cast<std::size_t>(surface.patch_count()) * slots.stride,
                                0.0);

        std::vector<ColumnTargets> targets(kColumnBlock);
        std::vector<std::vector<std::pair<std::int64_t, double>>> contrib(kColumnBlock);
        std::vector<std::vector<std::pair<EntryCache::Key, EntryCache::Entry>>> fresh(
            kColumnBlock);
        for (int begin = 0; begin < n_cols; begin += kColumnBlock) {
            const int bs = std::min(kColumnBlock, n_cols - begin);
            run_parallel(cfg.threads, bs, [&](int bi) {
                const WaveletIndex& col = cols[static_cast<std::size_t>(begin + bi)].first;
                targets[bi] = column_targets(m, col, allowance_sq, nullptr);
                contrib[bi].clear();
                fresh[bi].clear();
                contrib[bi].reserve(targets[bi].kept.size());
                for (const WaveletIndex& row : targets[bi].kept) {
                    const double e = entry_value(row, col, false, &fresh[bi]);
                    if (e != 0.0) contrib[bi].emplace_back(slots.slot(row), e);
                }
            });
            std::vector<std::pair<EntryCache::Key, EntryCache::Entry>> batch;
            for (int bi = 0; bi < bs; ++bi)
                batch.insert(batch.end(), fresh[bi].begin(), fresh[bi].end());
            cache.insert(std::move(batch));
            for (int bi = 0; bi < bs; ++bi) {
                const double vc = cols[static_cast<std::size_t>(begin + bi)].second;
                for (const auto& [slot, e] : contrib[bi])
                    acc[static_cast<std::size_t>(slot)] -= e * vc;
            }
        }

        for (std::size_t s = 0; s < acc.size(); ++s)
            if (acc[s] != 0.0) out.set(slots.index(static_cast<std::int64_t>(s)), acc[s]);
        for (const auto& [idx, val] : v.entries()) out.add(idx, 0.5 * val);
        return out;
    }

    // ------------------------------------------------------------ galerkin
    CsrMatrix assemble(const std::vector<WaveletIndex>& list, const TreeIndexer& indexer,
                       double assembly_tol) {
        const int n = static_cast<int>(list.size());
        const bool exact = n <= kExactAssemblyLimit;

        std::vector<std::vector<std::pair<std::int32_t, double>>> columns(
            static_cast<std::size_t>(n));
        if (exact) {
            std::vector<std::vector<std::pair<EntryCache::Key, EntryCache::Entry>>> fresh(
                static_cast<std::size_t>(n));
            run_parallel(cfg.threads, n, [&](int c) {
                const WaveletIndex& col = list[static_cast<std::size_t>(c)];
                auto& col_entries = columns[static_cast<std::size_t>(c)];
                for (int r = 0; r < n; ++r) {
                    const WaveletIndex& row = list[static_cast<std::size_t>(r)];
                    if (surface.coplanar(row.patch, col.patch)) continue;
                    const double e =
                        entry_value(row, col, true, &fresh[static_cast<std::size_t>(c)]);
                    if (e != 0.0) col_entries.emplace_back(r, -e);
                }
            });
            std::vector<std::pair<EntryCache::Key, EntryCache::Entry>> batch;
            for (auto& f : fresh) batch.insert(batch.end(), f.begin(), f.end());
            cache.insert(std::move(batch));
        } else {
            const CompressionModel& m = ensure_model();
            const double allowance_sq = assembly_tol * assembly_tol / n;
            std::vector<std::vector<std::pair<EntryCache::Key, EntryCache::Entry>>> fresh(
                kColumnBlock);
            for (int begin = 0; begin < n; begin += kColumnBlock) {
                const int bs = std::min(kColumnBlock, n - begin);
                run_parallel(cfg.threads, bs, [&](int bi) {
                    const int c = begin + bi;
                    const WaveletIndex& col = list[static_cast<std::size_t>(c)];
                    const ColumnTargets targets =
                        column_targets(m, col, allowance_sq, &indexer);
                    fresh[bi].clear();
                    auto& col_entries = columns[static_cast<std::size_t>(c)];
                    col_entries.reserve(targets.kept.size());
                    for (const WaveletIndex& row : targets.kept) {
                        const auto pos = indexer.position.find(row.key());
                        if (pos == indexer.position.end()) continue;
                        const double e = entry_value(row, col, false, &fresh[bi]);
                        if (e != 0.0) col_entries.emplace_back(pos->second, -e);
                    }
                });
                std::vector<std::pair<EntryCache::Key, EntryCache::Entry>> batch;
                for (int bi = 0; bi < bs; ++bi)
                    batch.insert(batch.end(), fresh[bi].begin(), fresh[bi].end());
                cache.insert(std::move(batch));
            }
        }

        // transpose the per-column lists into CSR, adding the exact identity part
        std::vector<std::int64_t> row_counts(static_cast<std::size_t>(n) + 1, 0);
        for (int c = 0; c < n; ++c) {
            for (const auto& [r, e] : columns[static_cast<std::size_t>(c)])
                ++row_counts[static_cast<std::size_t>(r) + 1];
        }
        for (int r = 0; r < n; ++r) ++row_counts[static_cast<std::size_t>(r) + 1];  // diagonal
        CsrMatrix csr;
        csr.n = n;
        csr.row_ptr.resize(static_cast<std::size_t>(n) + 1);
        csr.row_ptr[0] = 0;
        for (int r = 0; r < n; ++r)
            csr.row_ptr[static_cast<std::size_t>(r) + 1] =
                csr.row_ptr[static_cast<std::size_t>(r)] + row_counts[static_cast<std::size_t>(r) + 1];
        csr.col.resize(static_cast<std::size_t>(csr.row_ptr.back()));
        csr.val.resize(static_cast<std::size_t>(csr.row_ptr.back()));
        std::vector<std::int64_t> fill(csr.row_ptr.begin(), csr.row_ptr.end() - 1);
        auto push = [&](int r, int c, double val) {
            const std::int64_t k = fill[static_cast<std::size_t>(r)]++;
            csr.col[static_cast<std::size_t>(k)] = c;
            csr.val[static_cast<std::size_t>(k)] = val;
        };
        for (int r = 0; r < n; ++r) push(r, r, 0.5);
        for (int c = 0; c < n; ++c)
            for (const auto& [r, e] : columns[static_cast<std::size_t>(c)]) push(r, c, e);
        // sort each row by column for reproducible products
        run_parallel(cfg.threads, n, [&](int r) {
            const std::int64_t b = csr.row_ptr[static_cast<std::size_t>(r)];
            const std::int64_t e = csr.row_ptr[static_cast<std::size_t>(r) + 1];
            std::vector<std::pair<std::int32_t, double>> row;
            row.reserve(static_cast<std::size_t>(e - b));
            for (std::int64_t k = b; k < e; ++k)
                row.emplace_back(csr.col[static_cast<std::size_t>(k)],
                                 csr.val[static_cast<std::size_t>(k)]);
            std::sort(row.begin(), row.end());
            for (std::int64_t k = b; k < e; ++k) {
                csr.col[static_cast<std::size_t>(k)] = row[static_cast<std::size_t>(k - b)].first;
                csr.val[static_cast<std::size_t>(k)] = row[static_cast<std::size_t>(k - b)].second;
            }
        });
        return csr;
    }

    CoeffVector solve_galerkin(const Tree& tree, const CoeffVector& f, const CoeffVector* warm,
                               double assembly_override = 0.0) {
        for (const auto& [idx, val] : f.entries())
            if (!tree.contains(idx))
                throw std::invalid_argument("solve_galerkin: support(f) not contained in tree");

        TreeIndexer indexer(tree, surface.patch_count());
        const std::vector<WaveletIndex>& list = indexer.list;
        const int n = static_cast<int>(list.size());

        Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
        for (const auto& [idx, val] : f.entries()) b[indexer.position.at(idx.key())] = val;

        double assembly_tol = 0.0;
        if (n > kExactAssemblyLimit) {
            if (assembly_override > 0.0) {
                assembly_tol = assembly_override;
            } else {
                const double scale = std::isfinite(residual_scale) ? residual_scale : b.norm();
                assembly_tol = std::max(0.05 * scale, 1e-6 * b.norm());
            }
        }
        const CsrMatrix csr = assemble(list, indexer, assembly_tol);

        Eigen::VectorXd x0 = Eigen::VectorXd::Zero(n);
        if (warm != nullptr)
            for (const auto& [idx, val] : warm->entries()) {
                auto it = indexer.position.find(idx.key());
                if (it != indexer.position.end()) x0[it->second] = val;
            }

        const GmresResult res =
            gmres([&](const Eigen::VectorXd& x) { return csr.multiply(x, cfg.threads); }, b, x0,
                  cfg.gmres_restart, cfg.gmres_tol, cfg.gmres_max_iter);
        if (!res.converged && b.norm() > 0.0) {
            std::ostringstream msg;
            msg << "solve_galerkin: GMRES stopped at relative residual " << res.relative_residual
                << " after " << res.iterations << " iterations";
            throw KrylovError(msg.str(), res.relative_residual);
        }

        CoeffVector u;
        for (int i = 0; i < n; ++i)
            if (res.x[i] != 0.0) u.set(list[static_cast<std::size_t>(i)], res.x[i]);
        return u;
    }

    // ------------------------------------------------------------ rhs side
    double rhs_value(const WaveletIndex& idx) {
        auto it = rhs_values.find(idx);
        if (it != rhs_values.end()) return it->second;
        const double v = rhs_coefficient(surface, rhs, idx, cfg.quad);
        rhs_values.emplace(idx, v);
        return v;
    }

    double singular_coef_bound(int patch, int level, double dist, double lifted_diam) const {
        const double l1 = std::sqrt(surface.patch(patch).jacobian) * std::ldexp(1.0, -level);
        if (dist > 0.0) {
            const double grad = rhs.alpha() * std::pow(dist, -rhs.alpha() - 1.0);
            return grad * lifted_diam * l1;
        }
        // supports touching the vertex: |<g,psi>| <= ||g||_{L2(supp)}
        const double expo = 2.0 - 2.0 * rhs.alpha();
        return std::sqrt(2.0 * M_PI * std::pow(lifted_diam, expo) / expo);
    }

    void rhs_walk(int p, int j, int k1, int k2, double t) {
        const LocalRect rect = cell_rect(j, k1, k2);
        const Patch& patch = surface.patch(p);
        const double lifted_diam = patch_diam(p) * std::ldexp(1.0, -j);

        if (rhs.kind() == RightHandSide::Kind::Cartoon) {
            const DiscOverlap overlap = classify_disc_overlap(patch, rhs, rect);
            if (overlap != DiscOverlap::Crossing) return;  // wavelet coefficients exactly zero
            for (int kind = 0; kind < 3; ++kind) {
                const WaveletIndex idx{p, j, k1, k2, static_cast<WaveletKind>(kind + 1)};
                const double v = rhs_value(idx);
                table.computed.set(idx, v);
                table.level_computed_sq[static_cast<std::size_t>(j)] += v * v;
            }
            if (j < cfg.j_max)
                for (int a = 0; a < 2; ++a)
                    for (int b = 0; b < 2; ++b) rhs_walk(p, j + 1, 2 * k1 + a, 2 * k2 + b, t);
            return;
        }

        const double dist =
            geom::point_quad_distance(rhs.vertex(), geom::lift_rect(patch, rect));
        const double bound = singular_coef_bound(p, j, dist, lifted_diam);
        if (bound < t) {
            double count = 3.0, diam = lifted_diam;
            for (int l = j; l <= cfg.j_max; ++l) {
                const double b = singular_coef_bound(p, l, dist, diam);
                const double add = count * b * b;
                table.dropped_sq += add;
                table.level_dropped_sq[static_cast<std::size_t>(l)] += add;
                count *= 4.0;
                diam *= 0.5;
            }
            return;
        }
        for (int kind = 0; kind < 3; ++kind) {
            const WaveletIndex idx{p, j, k1, k2, static_cast<WaveletKind>(kind + 1)};
            const double v = rhs_value(idx);
            table.computed.set(idx, v);
            table.level_computed_sq[static_cast<std::size_t>(j)] += v * v;
        }
        if (j < cfg.j_max)
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b) rhs_walk(p, j + 1, 2 * k1 + a, 2 * k2 + b, t);
    }

    void build_rhs_table(double threshold) {
        table.built = true;
        table.threshold = threshold;
        table.computed = CoeffVector();
        table.dropped_sq = 0.0;
        table.level_computed_sq.assign(static_cast<std::size_t>(cfg.j_max) + 1, 0.0);
        table.level_dropped_sq.assign(static_cast<std::size_t>(cfg.j_max) + 1, 0.0);
        for (int p = 0; p < surface.patch_count(); ++p) {
            const WaveletIndex root = scaling_index(p);
            const double v = rhs_value(root);
            if (v != 0.0) table.computed.set(root, v);
            rhs_walk(p, 0, 0, 0, threshold);
        }
    }

    /// Geometric tail of the level norms beyond j_max per the extrapolation contract.
    double tail_bound() const {
        const std::size_t jm = static_cast<std::size_t>(cfg.j_max);
        auto level_norm = [&](std::size_t l) {
            return std::sqrt(table.level_computed_sq[l] + table.level_dropped_sq[l]);
        };
        const double nj = level_norm(jm);
        if (nj <= 1e-14 * (1.0 + table.computed.norm())) return 0.0;
        if (jm < 2) return nj;  // degenerate cap: no fit window, charge the last level
        const double n1 = level_norm(jm - 1);
        const double n2 = level_norm(jm - 2);
        if (n1 <= 0.0 || n2 <= 0.0)
            throw CertificationError("rhs tail extrapolation: empty level below a full one");
        const double ratio_fit = std::sqrt((nj / n1) * (n1 / n2));
        if (!(ratio_fit < 1.0)) {
            std::ostringstream msg;
            msg << "rhs tail extrapolation: no decay, level norms";
            for (std::size_t l = 0; l <= jm; ++l) msg << ' ' << level_norm(l);
            throw CertificationError(msg.str());
        }
        const double ratio = std::min(ratio_fit, 0.9);
        return nj * ratio / std::sqrt(1.0 - ratio * ratio);
    }

    CoeffVector rhs_approx(double delta) {
        if (!(delta > 0.0)) throw std::invalid_argument("rhs_approx: delta must be positive");
        double t = std::min(table.built ? table.threshold : delta / 8.0, delta / 8.0);
        if (!table.built || table.threshold > t) build_rhs_table(t);
        double certified_sq = table.dropped_sq + tail_bound() * tail_bound();
        while (certified_sq > 0.25 * delta * delta) {
            if (table.dropped_sq <= 0.01 * certified_sq) {
                // the level-cap tail dominates: no threshold can certify this accuracy
                std::ostringstream msg;
                msg << "rhs_approx: extrapolated tail beyond level " << cfg.j_max << " ("
                    << std::sqrt(certified_sq) << ") exceeds the budget for delta=" << delta;
                throw CertificationError(msg.str());
            }
            t *= 0.25;
            build_rhs_table(t);
            certified_sq = table.dropped_sq + tail_bound() * tail_bound();
        }

        // greedy selection by magnitude within the remaining budget
        std::vector<std::pair<double, WaveletIndex>> order;
        order.reserve(table.computed.size());
        for (const auto& [idx, v] : table.computed.entries())
            if (!idx.is_scaling()) order.emplace_back(std::abs(v), idx);
        std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first < b.first;
            return b.second < a.second;
        });
        const double budget_sq = delta * delta - certified_sq;
        double dropped = 0.0;
        std::size_t cut = 0;
        while (cut < order.size()) {
            const double add = order[cut].first * order[cut].first;
            if (dropped + add > budget_sq) break;
            dropped += add;
            ++cut;
        }
        CoeffVector out;
        for (int p = 0; p < surface.patch_count(); ++p) {
            const double v = table.computed.get(scaling_index(p));
            if (v != 0.0) out.set(scaling_index(p), v);
        }
        for (std::size_t i = cut; i < order.size(); ++i)
            out.set(order[i].second, table.computed.get(order[i].second));
        // tree-complete the support; ancestors carry their computed values
        const Tree completed = tree_complete(out.support(), surface.patch_count());
        for (const WaveletIndex& idx : completed.indices()) {
            if (out.get(idx) != 0.0 || idx.is_scaling()) continue;
            const double v = table.computed.get(idx);
            if (v != 0.0) out.set(idx, v);
        }
        return out;
    }

    CoeffVector rhs_on_tree(const Tree& tree) {
        CoeffVector out;
        for (const WaveletIndex& idx : tree.indices()) {
            const double v = rhs_value(idx);
            if (v != 0.0) out.set(idx, v);
        }
        return out;
    }

    // ------------------------------------------------------------ residual
    double delta_init_effective() {
        if (!delta_init_eff)
            delta_init_eff = std::max(cfg.delta_init, rhs_approx(0.5).norm());
        return *delta_init_eff;
    }

    std::pair<CoeffVector, double> estimate_residual(const SolverState& state) {
        double delta = delta_init_effective();
        while (true) {
            delta *= 0.5;
            CoeffVector r = rhs_approx(0.5 * delta);
            if (!state.solution.empty()) r -= apply(0.5 * delta, state.solution);
            const double rn = r.norm();
            if (rn + delta <= cfg.eps) return {std::move(r), delta};  // converged guard
            if (delta <= cfg.omega * rn) return {std::move(r), delta};
            if (delta < 1e-12) {
                std::ostringstream msg;
                msg << "estimate_residual: delta underflow (delta=" << delta
                    << ", ||r||=" << rn << ", eps=" << cfg.eps << ")";
                throw StagnationError(msg.str());
            }
        }
    }

    // ------------------------------------------------------------- drivers
    SolverState solve() {
        return cfg.mode == SolveMode::Adaptive ? solve_adaptive() : solve_uniform();
    }

    void run_iteration(SolverState& state, const Tree& tree, double& out_rn, double& out_delta) {
        const double t0 = wall_seconds();
        state.tree = tree;
        const CoeffVector f = rhs_on_tree(tree);
        state.solution = solve_galerkin(tree, f, &state.solution);
        auto [r, delta] = estimate_residual(state);
        out_rn = r.norm();
        out_delta = delta;
        residual_scale = out_rn;
        last_residual = std::move(r);
        ConvergenceRecord rec;
        rec.dofs = tree.size();
        rec.residual_norm = out_rn;
        rec.delta = delta;
        rec.wall_time_s = cfg.record_timing ? wall_seconds() - t0 : 0.0;
        state.history.push_back(rec);
    }

    CoeffVector last_residual;

    SolverState solve_adaptive() {
        SolverState state;
        Tree tree = tree_complete({}, surface.patch_count());
        while (true) {
            double rn = 0.0, delta = 0.0;
            try {
                run_iteration(state, tree, rn, delta);
            } catch (const CertificationError&) {
                return state;  // accuracy blocked by the level cap: partial result
            }
            if ((1.0 + cfg.omega) * rn <= cfg.eps) {
                state.converged = true;
                return state;
            }
            Tree grown = tree;
            if (last_residual.norm() > 0.0) {
                const Tree marked = coarse(cfg.theta, last_residual, surface.patch_count());
                std::set<WaveletIndex> merged = tree.indices();
                for (const WaveletIndex& idx : marked.indices()) merged.insert(idx);
                grown = Tree(std::move(merged));
            }
            if (grown.size() == tree.size()) return state;  // level cap: partial result
            tree = std::move(grown);
        }
    }

    SolverState solve_uniform() {
        SolverState state;
        const int last = std::min(cfg.max_uniform_level, cfg.j_max);
        for (int level = 0; level <= last; ++level) {
            double rn = 0.0, delta = 0.0;
            try {
                run_iteration(state, uniform_tree(surface.patch_count(), level), rn, delta);
            } catch (const CertificationError&) {
                return state;  // partial result
            }
            if ((1.0 + cfg.omega) * rn <= cfg.eps) {
                state.converged = true;
                return state;
            }
        }
        return state;  // ladder exhausted: partial result
    }

    CoeffVector galerkin_solution(const Tree& tree, double assembly_tol) {
        const CoeffVector f = rhs_on_tree(tree);
        return solve_galerkin(tree, f, nullptr, assembly_tol);
    }
};

Problem::Problem(const Surface& surface, const RightHandSide& rhs, const SolverConfig& cfg)
    : impl_(std::make_unique<Impl>(surface, rhs, cfg)) {}

Problem::~Problem() = default;

const Surface& Problem::surface() const { return impl_->surface; }
const SolverConfig& Problem::config() const { return impl_->cfg; }
const CompressionModel& Problem::model() { return impl_->ensure_model(); }
EntryCache& Problem::cache() { return impl_->cache; }

CoeffVector Problem::solve_galerkin(const Tree& tree, const CoeffVector& f_tree,
                                    const CoeffVector* warm_start) {
    return impl_->solve_galerkin(tree, f_tree, warm_start);
}

CoeffVector Problem::apply(double delta, const CoeffVector& v) { return impl_->apply(delta, v); }

CoeffVector Problem::rhs_approx(double delta) { return impl_->rhs_approx(delta); }

CoeffVector Problem::rhs_on_tree(const Tree& tree) { return impl_->rhs_on_tree(tree); }

std::pair<CoeffVector, double> Problem::estimate_residual(const SolverState& state) {
    return impl_->estimate_residual(state);
}

SolverState Problem::solve() { return impl_->solve(); }

CoeffVector Problem::galerkin_solution(const Tree& tree, double assembly_tol) {
    return impl_->galerkin_solution(tree, assembly_tol);
}

SolverState solve_adaptive(const Surface& surface, const RightHandSide& g, SolverConfig cfg) {
    cfg.mode = SolveMode::Adaptive;
    Problem problem(surface, g, cfg);
    return problem.solve();
}

SolverState solve_uniform(const Surface& surface, const RightHandSide& g, SolverConfig cfg) {
    cfg.mode = SolveMode::Uniform;
    Problem problem(surface, g, cfg);
    return problem.solve();
}

}  // namespace awbem
