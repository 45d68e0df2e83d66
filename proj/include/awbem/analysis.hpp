#pragma once

#include "awbem/solver.hpp"

#include <vector>

namespace awbem {

struct RateFit {
    double slope = 0.0;      // decay exponent rho in value ~ C n^{-rho}
    double intercept = 0.0;  // log C
    double r_squared = 0.0;
    std::size_t window_begin = 0;
    std::size_t window_end = 0;
};

/// Least-squares slope of -log(value) against log(n) over [window_begin, window_end).
/// Pass window_end = 0 to use the whole series. Values must be positive.
RateFit fit_rate(const std::vector<std::pair<double, double>>& series,
                 std::size_t window_begin = 0, std::size_t window_end = 0);

/// Window covering the last two thirds of a history (default fit window).
std::pair<std::size_t, std::size_t> tail_window(std::size_t n);

struct RegularityParams {
    double s = 0.0;       // Sobolev smoothness of the data/solution
    double s_prime = 0.0; // measurement smoothness
    double p = 2.0;       // integrability
    double k = 1.0;       // weighted-space order
    double rho = 0.0;     // weight strength
};

struct GammaPrediction {
    double alpha_star = 0.0;
    double theta = 0.0;
    double gamma_star = 0.0;
    double rate = 0.0;            // gamma_star / 2
    double double_layer_bound = 0.0;  // 2 (1 - s'/s) min{rho, k - rho, s}
};

/// alpha* = min{rho, k-rho, s-(1/p-1/2)}, Theta = 1 - s'/(s-2(1/p-1/2)),
/// gamma* = s-s' + Theta (2 alpha* - s). Throws naming the violated inequality.
GammaPrediction predicted_gamma(const RegularityParams& params);

/// | |x|^-a - |x+h|^-a | >= (M^a - 2^a) |h|^-a for componentwise-nonnegative x,h
/// with 0 < |x| <= |h|/M; preconditions checked, result is the truth value.
bool lemma_a1_check(const std::vector<double>& x, const std::vector<double>& h, double alpha,
                    double m_factor);

struct FinitenessReport {
    bool predicate = false;   // rho < 1 - alpha
    bool divergent = false;   // numeric flag; must equal !predicate
    std::vector<double> truncated_integrals;  // m = 10, 10^2, 10^3, 10^4
};

/// Radial-integral finiteness test for the weighted-Sobolev membership of the
/// point singularity: integrand (1+r)^{2 rho} r^{1-2 alpha-2 rho} on (1/m, R0).
FinitenessReport weighted_sobolev_finiteness(double alpha, double rho);

struct CeilingSample {
    double t = 0.0;
    double diff_norm = 0.0;  // ||Delta_h g||_{L2(Gamma_h)}
    double ratio = 0.0;      // diff_norm / t^{1-alpha}
};

/// Finite-difference modulus ||g(.+h)-g|| over the corner sector of a face
/// containing the singular vertex, for |h| = t; ratios to t^{1-alpha} stay
/// bounded below, which is the numeric face of the Sobolev ceiling s < 1-alpha.
std::vector<CeilingSample> sobolev_ceiling_check(const Surface& surface, double alpha,
                                                 const std::vector<double>& t_list);

/// Uniform reference solution at level j_ref, then the best n-term curve of its
/// coefficient vector.
std::vector<std::pair<std::size_t, double>> best_nterm_reference(
    Problem& problem, int j_ref, const std::vector<std::size_t>& n_list,
    double assembly_tol = 2e-3);

/// Log-spaced n values in [lo, hi].
std::vector<std::size_t> log_spaced(std::size_t lo, std::size_t hi, int count);

}  // namespace awbem
