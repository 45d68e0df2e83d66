#pragma once

#include "awbem/discretize.hpp"
#include "awbem/gmres.hpp"

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace awbem {

enum class SolveMode { Adaptive, Uniform };

struct SolverConfig {
    double omega = 0.4;       // residual-equivalence factor in (0,1)
    double theta = 0.3;       // coarsening factor in (0,1)
    double eps = 1e-2;        // target residual norm
    double delta_init = 1.0;  // floor for the initial estimation accuracy
    int j_max = 7;            // level cap of the index universe
    SolveMode mode = SolveMode::Adaptive;
    int max_uniform_level = 7;  // last level of the uniform ladder
    int gmres_restart = 50;
    double gmres_tol = 1e-8;  // relative
    int gmres_max_iter = 500;
    int threads = 1;
    bool record_timing = true;
    QuadConfig quad;

    void validate() const;  // throws std::invalid_argument on out-of-range values
};

struct ConvergenceRecord {
    std::size_t dofs = 0;
    double residual_norm = 0.0;
    double delta = 0.0;
    double wall_time_s = 0.0;
};

struct SolverState {
    Tree tree;
    CoeffVector solution;
    std::vector<ConvergenceRecord> history;
    bool converged = false;  // false once the level cap stalls progress (partial result)
};

class SolverError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

class KrylovError : public SolverError {
public:
    KrylovError(const std::string& what, double achieved)
        : SolverError(what), achieved_residual(achieved) {}
    double achieved_residual;
};

class StagnationError : public SolverError {
    using SolverError::SolverError;
};

class CertificationError : public SolverError {
    using SolverError::SolverError;
};

/// Fitted entry-decay model backing the compression budgets. Far-field constants
/// follow |entry| <= C * 4^{-(j+j')} * d_eff^{-4} (fewer vanishing moments for
/// scaling functions lower the distance power); touching pairs get their own
/// fitted scale. Fit at levels <= 2, verified at levels 3-4 by the test suite.
struct CompressionModel {
    double c_far_ww = 0.0;   // wavelet-wavelet, d_eff^-4
    double c_far_ws = 0.0;   // wavelet-scaling (either side), d_eff^-3
    double c_far_ss = 0.0;   // scaling-scaling, d_eff^-2
    double c_tch_ww = 0.0;   // touching wavelet-wavelet: C (1+max) 2^{-(3max+min)}
    double c_tch_ws = 0.0;   // touching wavelet-scaling: C (1+j) 2^{-2j}
    double k_norm = 0.0;     // estimate of ||K|| on L2

    /// Upper bound for |<K psi_col, psi_row>| given levels (-1 = scaling),
    /// the support-distance lower bound and the two lifted support diameters.
    double entry_bound(int row_level, int col_level, double dist, double diam_row,
                       double diam_col) const;
};

CompressionModel fit_compression_model(const Surface& surface, const QuadConfig& quad);

/// Greedy-by-magnitude tree coarsening: smallest-found tree T'' with
/// ||r - r|_{T''}|| <= theta ||r||, completed with ancestors. Throws on r = 0.
Tree coarse(double theta, const CoeffVector& r, int patch_count);

/// One boundary-integral problem: surface + right-hand side + configuration.
/// Owns the entry cache, the fitted compression model and the rhs coefficient
/// table, so repeated calls share work. Methods are the building blocks of the
/// adaptive scheme and are exposed for testing and the CLI.
class Problem {
public:
    Problem(const Surface& surface, const RightHandSide& rhs, const SolverConfig& cfg);
    ~Problem();

    const Surface& surface() const;
    const SolverConfig& config() const;
    const CompressionModel& model();
    EntryCache& cache();

    /// Galerkin solve on a tree; warm start with the previous solution if given.
    CoeffVector solve_galerkin(const Tree& tree, const CoeffVector& f_tree,
                               const CoeffVector* warm_start = nullptr);

    /// Compressed application of (1/2 I - K) with certified accuracy delta.
    CoeffVector apply(double delta, const CoeffVector& v);

    /// Finite approximation of the rhs coefficient vector with ||f - f_delta|| <= delta.
    CoeffVector rhs_approx(double delta);

    /// Exact-quadrature rhs coefficients restricted to a tree.
    CoeffVector rhs_on_tree(const Tree& tree);

    /// The delta-halving loop; returns the approximate residual and the final delta.
    std::pair<CoeffVector, double> estimate_residual(const SolverState& state);

    /// Full outer iteration in the configured mode.
    SolverState solve();

    /// Plain Galerkin solution on a given tree (used for reference solutions).
    /// assembly_tol > 0 overrides the compression accuracy of the system matrix.
    CoeffVector galerkin_solution(const Tree& tree, double assembly_tol = 0.0);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

SolverState solve_adaptive(const Surface& surface, const RightHandSide& g, SolverConfig cfg);
SolverState solve_uniform(const Surface& surface, const RightHandSide& g, SolverConfig cfg);

}  // namespace awbem
