#include "awbem/analysis.hpp"

#include "awbem/gauss.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace awbem {

RateFit fit_rate(const std::vector<std::pair<double, double>>& series, std::size_t window_begin,
                 std::size_t window_end) {
    if (window_end == 0) window_end = series.size();
    if (window_end > series.size() || window_begin >= window_end)
        throw std::invalid_argument("fit_rate: bad window");
    const std::size_t n = window_end - window_begin;
    if (n < 2) throw std::invalid_argument("fit_rate: need at least 2 points");

    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = window_begin; i < window_end; ++i) {
        const auto& [nv, value] = series[i];
        if (!(nv > 0.0) || !(value > 0.0))
            throw std::invalid_argument("fit_rate: nonpositive data");
        const double x = std::log(nv);
        const double y = std::log(value);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        syy += y * y;
    }
    const double den = n * sxx - sx * sx;
    if (den <= 0.0) throw std::invalid_argument("fit_rate: degenerate abscissae");
    const double slope_xy = (n * sxy - sx * sy) / den;

    RateFit fit;
    fit.slope = -slope_xy;
    fit.intercept = (sy - slope_xy * sx) / n;
    const double sst = syy - sy * sy / n;
    if (sst <= 0.0) {
        fit.r_squared = 1.0;  // constant series fits exactly (slope 0)
    } else {
        double ssr = 0.0;
        for (std::size_t i = window_begin; i < window_end; ++i) {
            const double x = std::log(series[i].first);
            const double y = std::log(series[i].second);
            const double e = y - (fit.intercept + slope_xy * x);
            ssr += e * e;
        }
        fit.r_squared = 1.0 - ssr / sst;
    }
    fit.window_begin = window_begin;
    fit.window_end = window_end;
    return fit;
}

std::pair<std::size_t, std::size_t> tail_window(std::size_t n) {
    std::size_t span = std::max<std::size_t>(2, (2 * n + 2) / 3);
    if (span > n) span = n;
    return {n - span, n};
}

GammaPrediction predicted_gamma(const RegularityParams& params) {
    const double s = params.s, sp = params.s_prime, p = params.p, k = params.k,
                 rho = params.rho;
    auto fail = [](const std::string& ineq) {
        throw std::invalid_argument("predicted_gamma: violated " + ineq);
    };
    if (!(s > 0.0)) fail("s > 0");
    if (!(sp >= 0.0)) fail("s' >= 0");
    if (!(k >= 1.0)) fail("k >= 1");
    if (!(rho > 0.0 && rho < k)) fail("0 < rho < k");
    const double inv_p = 1.0 / p;
    if (!(inv_p >= 0.5 && inv_p <= s / 2.0 + 0.5)) fail("1/2 <= 1/p <= s/2 + 1/2");
    const double excess = 2.0 * (inv_p - 0.5);
    if (!(s - sp >= excess)) fail("s - s' >= 2(1/p - 1/2)");

    GammaPrediction out;
    out.alpha_star = std::min({rho, k - rho, s - (inv_p - 0.5)});
    out.theta = 1.0 - sp / (s - excess);
    out.gamma_star = s - sp + out.theta * (2.0 * out.alpha_star - s);
    out.rate = 0.5 * out.gamma_star;
    out.double_layer_bound = 2.0 * (1.0 - sp / s) * std::min({rho, k - rho, s});
    return out;
}

bool lemma_a1_check(const std::vector<double>& x, const std::vector<double>& h, double alpha,
                    double m_factor) {
    if (x.size() != h.size() || x.empty())
        throw std::invalid_argument("lemma_a1_check: dimension mismatch");
    if (!(alpha > 0.0)) throw std::invalid_argument("lemma_a1_check: alpha must be positive");
    if (!(m_factor > 2.0)) throw std::invalid_argument("lemma_a1_check: M must exceed 2");
    double xn2 = 0.0, hn2 = 0.0, xh2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] < 0.0 || h[i] < 0.0)
            throw std::invalid_argument("lemma_a1_check: components must be nonnegative");
        xn2 += x[i] * x[i];
        hn2 += h[i] * h[i];
        const double s = x[i] + h[i];
        xh2 += s * s;
    }
    const double xn = std::sqrt(xn2), hn = std::sqrt(hn2);
    if (!(xn > 0.0 && xn <= hn / m_factor + 1e-15 * hn))
        throw std::invalid_argument("lemma_a1_check: need 0 < |x| <= |h|/M");
    const double lhs = std::abs(std::pow(xn, -alpha) - std::pow(std::sqrt(xh2), -alpha));
    const double rhs =
        (std::pow(m_factor, alpha) - std::pow(2.0, alpha)) * std::pow(hn, -alpha);
    return lhs >= rhs * (1.0 - 1e-12);
}

FinitenessReport weighted_sobolev_finiteness(double alpha, double rho) {
    if (!(alpha >= 0.5 && alpha < 1.0))
        throw std::invalid_argument("weighted_sobolev_finiteness: alpha must lie in [1/2, 1)");
    if (!(rho >= 0.0 && rho <= 1.0))
        throw std::invalid_argument("weighted_sobolev_finiteness: rho must lie in [0, 1]");
    FinitenessReport report;
    report.predicate = rho < 1.0 - alpha;

    const double r0 = 0.5;
    const double expo = 1.0 - 2.0 * alpha - 2.0 * rho;
    const GaussRule& rule = gauss_rule(16);
    auto integrate = [&](double lo, double hi) {
        // log-spaced composite panels resolve the power behaviour near zero
        double sum = 0.0;
        const int panels = 64;
        const double ratio = std::pow(hi / lo, 1.0 / panels);
        double a = lo;
        for (int k = 0; k < panels; ++k) {
            const double b = a * ratio;
            for (std::size_t i = 0; i < rule.x.size(); ++i) {
                const double r = a + (b - a) * rule.x[i];
                sum += rule.w[i] * (b - a) * std::pow(1.0 + r, 2.0 * rho) * std::pow(r, expo);
            }
            a = b;
        }
        return sum;
    };
    for (double m : {10.0, 100.0, 1000.0, 10000.0})
        report.truncated_integrals.push_back(integrate(1.0 / m, r0));

    const auto& v = report.truncated_integrals;
    const double inc1 = v[2] - v[1];
    const double inc2 = v[3] - v[2];
    report.divergent = inc1 > 0.0 && inc2 >= 0.9 * inc1;
    return report;
}

std::vector<CeilingSample> sobolev_ceiling_check(const Surface& surface, double alpha,
                                                 const std::vector<double>& t_list) {
    if (!(alpha >= 0.5 && alpha < 1.0))
        throw std::invalid_argument("sobolev_ceiling_check: alpha must lie in [1/2, 1)");

    // locate a patch having a surface vertex at a chart corner; the Fichera notch
    // faces carry the reentrant corner at chart point (1,1)
    const Vec3 nu(0.5, 0.5, 0.5);
    const Patch* face = nullptr;
    for (const Patch& p : surface.patches())
        if ((p.corners[2] - nu).norm() < 1e-12) {
            face = &p;
            break;
        }
    if (face == nullptr)
        throw std::invalid_argument("sobolev_ceiling_check: surface has no reentrant corner");

    const double m_factor = 3.0;
    const double side = face->edge_s().norm();
    const double opening = 0.5 * M_PI;  // flat quadrilateral corner

    // g restricted to the face is radial around the corner: g = r^-alpha.
    // Delta_h g over the sector {|y| <= t/M, angles in (0, pi/2)} with |h| = t
    // along the diagonal direction; everything in 2D face coordinates.
    const GaussRule& rule = gauss_rule(12);
    std::vector<CeilingSample> out;
    for (double t : t_list) {
        if (!(t > 0.0 && t * (1.0 + 1.0 / m_factor) < side))
            throw std::invalid_argument("sobolev_ceiling_check: t outside the admissible range");
        const double hx = t / std::sqrt(2.0), hy = t / std::sqrt(2.0);
        const double rmax = t / m_factor;
        double sum = 0.0;
        // dyadic grading in r toward the corner; the integrand is r^{-2alpha} * r
        const int layers = 40;
        double rhi = rmax;
        for (int layer = 0; layer < layers; ++layer) {
            const double rlo = layer + 1 == layers ? 0.0 : 0.5 * rhi;
            for (std::size_t i = 0; i < rule.x.size(); ++i) {
                const double r = rlo + (rhi - rlo) * rule.x[i];
                if (r <= 0.0) continue;
                double ang = 0.0;
                for (std::size_t jq = 0; jq < rule.x.size(); ++jq) {
                    const double phi = opening * rule.x[jq];
                    const double yx = r * std::cos(phi), yy = r * std::sin(phi);
                    const double d = std::pow(r, -alpha) -
                                     std::pow(std::hypot(yx + hx, yy + hy), -alpha);
                    ang += rule.w[jq] * d * d;
                }
                sum += rule.w[i] * (rhi - rlo) * opening * ang * r;
            }
            rhi = rlo > 0.0 ? rhi * 0.5 : rhi;
        }
        CeilingSample sample;
        sample.t = t;
        sample.diff_norm = std::sqrt(sum);
        sample.ratio = sample.diff_norm / std::pow(t, 1.0 - alpha);
        out.push_back(sample);
    }
    return out;
}

std::vector<std::pair<std::size_t, double>> best_nterm_reference(
    Problem& problem, int j_ref, const std::vector<std::size_t>& n_list, double assembly_tol) {
    if (j_ref > problem.config().j_max)
        throw std::invalid_argument("best_nterm_reference: j_ref exceeds the level cap");
    const Tree tree = uniform_tree(problem.surface().patch_count(), j_ref);
    const CoeffVector u = problem.galerkin_solution(tree, assembly_tol);
    return best_n_term_curve(u, n_list);
}

std::vector<std::size_t> log_spaced(std::size_t lo, std::size_t hi, int count) {
    std::vector<std::size_t> out;
    if (lo == 0) lo = 1;
    for (int i = 0; i < count; ++i) {
        const double f = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
        const double v = std::exp(std::log(static_cast<double>(lo)) +
                                  f * (std::log(static_cast<double>(hi)) -
                                       std::log(static_cast<double>(lo))));
        const std::size_t n = static_cast<std::size_t>(std::llround(v));
        if (out.empty() || n > out.back()) out.push_back(n);
    }
    return out;
}

}  // namespace awbem
