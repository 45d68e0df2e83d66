#include "awbem/checks.hpp"

#include "awbem/analysis.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>

namespace awbem::checks {

namespace {

CheckResult make_result(const std::string& name, bool passed, const std::string& detail) {
    return {name, passed, detail};
}

std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(3) << std::scientific << v;
    return os.str();
}

}  // namespace

std::vector<CheckResult> quadrature_suite() {
    std::vector<CheckResult> out;
    const Surface cube = make_cube();
    const Surface fichera = make_fichera();

    {
        std::mt19937_64 rng(20240517);
        double worst_in = 0.0, worst_out = 0.0;
        for (int it = 0; it < 200; ++it) {
            Vec3 x;
            for (int k = 0; k < 3; ++k) x[k] = -0.95 + 1.9 * rand_u01(rng);
            double sum = 0.0;
            for (const Patch& p : cube.patches()) sum += solid_angle(p.corners, x);
            worst_in = std::max(worst_in, std::abs(sum - 4.0 * M_PI));

            Vec3 y;
            do {
                for (int k = 0; k < 3; ++k) y[k] = -3.0 + 6.0 * rand_u01(rng);
            } while (std::abs(y[0]) < 1.05 && std::abs(y[1]) < 1.05 && std::abs(y[2]) < 1.05);
            double sum_out = 0.0;
            for (const Patch& p : cube.patches()) sum_out += solid_angle(p.corners, y);
            worst_out = std::max(worst_out, std::abs(sum_out));
        }
        const bool ok = worst_in <= 1e-10 && worst_out <= 1e-10;
        out.push_back(make_result("gauss closure (200 interior / 200 exterior points)", ok,
                                  "max deviation " + fmt(std::max(worst_in, worst_out))));
    }

    {
        QuadConfig quad;
        bool all_zero = true;
        int tested = 0;
        for (const Surface* s : {&cube, &fichera}) {
            for (int i = 0; i < s->patch_count(); ++i) {
                for (int j = 0; j < s->patch_count(); ++j) {
                    if (!s->coplanar(i, j)) continue;
                    const WaveletIndex row{i, 1, 1, 0, WaveletKind::Horiz};
                    const WaveletIndex col{j, 2, 1, 2, WaveletKind::Diag};
                    if (galerkin_entry_K(*s, row, col, quad) != 0.0) all_zero = false;
                    if (galerkin_entry_K(*s, scaling_index(i), col, quad) != 0.0)
                        all_zero = false;
                    tested += 2;
                }
            }
        }
        out.push_back(make_result("coplanar annihilation", all_zero,
                                  std::to_string(tested) + " pairs, all exactly zero"));
    }

    {
        std::mt19937_64 rng(911);
        const Patch& panel = fichera.patch(0);  // lies in the plane x = 1
        double worst = 0.0;
        for (int it = 0; it < 100; ++it) {
            Vec3 x;
            x[0] = 1.05 + 3.0 * rand_u01(rng);  // strictly off the panel plane
            x[1] = -2.0 + 6.0 * rand_u01(rng);
            x[2] = -2.0 + 6.0 * rand_u01(rng);
            const double parent = solid_angle(panel.corners, x);
            double child_sum = 0.0;
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b) {
                    const LocalRect r{0.5 * a, 0.5 * b, 0.5 * (a + 1), 0.5 * (b + 1)};
                    child_sum += solid_angle(geom::lift_rect(panel, r), x);
                }
            worst = std::max(worst, std::abs(parent - child_sum));
        }
        out.push_back(make_result("solid-angle additivity (4 children, 100 viewpoints)",
                                  worst <= 1e-12, "max deviation " + fmt(worst)));
    }
    return out;
}

std::vector<CheckResult> basis_suite() {
    std::vector<CheckResult> out;
    const Surface cube = make_cube();
    const Surface fichera = make_fichera();

    {
        // discrete orthonormality on the level-7 grid
        std::mt19937_64 rng(7777);
        auto random_index = [&](int patch, int max_level) {
            const int level = static_cast<int>(rand_u01(rng) * (max_level + 1));
            const int n = 1 << level;
            const int k1 = static_cast<int>(rand_u01(rng) * n);
            const int k2 = static_cast<int>(rand_u01(rng) * n);
            const WaveletKind kind =
                static_cast<WaveletKind>(1 + static_cast<int>(rand_u01(rng) * 3));
            return WaveletIndex{patch, level, std::min(k1, n - 1), std::min(k2, n - 1), kind};
        };
        const int grid_level = 7;
        const int n = 1 << grid_level;
        const Surface& s = fichera;
        const int patch = 8;  // a 0.25-area patch, jacobian != 1
        const double cell_area = s.patch(patch).jacobian / (n * n);
        double worst = 0.0;
        for (int it = 0; it < 60; ++it) {
            WaveletIndex a = random_index(patch, 6);
            WaveletIndex b = it % 3 == 0 ? a : random_index(patch, 6);
            double dot = 0.0;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    const SurfacePoint x{patch, (i + 0.5) / n, (j + 0.5) / n};
                    dot += evaluate(s, a, x) * evaluate(s, b, x) * cell_area;
                }
            const double expect = a == b ? 1.0 : 0.0;
            worst = std::max(worst, std::abs(dot - expect));
        }
        out.push_back(make_result("orthonormality (level-7 grid quadrature)", worst <= 1e-12,
                                  "max deviation " + fmt(worst)));
    }

    {
        std::mt19937_64 rng(31337);
        const int grid_level = 5;
        const std::size_t n = std::size_t{1} << grid_level;
        double worst = 0.0;
        for (int patch : {0, 3}) {
            std::vector<double> values(n * n);
            for (double& v : values) v = -1.0 + 2.0 * rand_u01(rng);
            const CoeffVector coeffs = haar_analysis(cube, patch, values, grid_level);
            double input_sq = 0.0;
            const double cell_area = cube.patch(patch).jacobian / (n * n);
            for (double v : values) input_sq += v * v * cell_area;
            worst = std::max(worst, std::abs(input_sq - coeffs.norm_sq()) / input_sq);
            const std::vector<double> back = haar_synthesis(cube, patch, coeffs, grid_level);
            for (std::size_t i = 0; i < values.size(); ++i)
                worst = std::max(worst, std::abs(back[i] - values[i]));
        }
        out.push_back(make_result("Parseval + transform round trip", worst <= 1e-12,
                                  "max deviation " + fmt(worst)));
    }

    {
        // vanishing moments: analysis of a constant leaves only the scaling coefficient
        std::vector<double> ones(std::size_t{1} << (2 * 5), 3.25);
        const CoeffVector coeffs = haar_analysis(fichera, 4, ones, 5);
        bool ok = true;
        for (const auto& [idx, v] : coeffs.entries())
            if (!idx.is_scaling() && v != 0.0) ok = false;
        const double expect = 3.25 * std::sqrt(fichera.patch(4).jacobian);
        ok = ok && std::abs(coeffs.get(scaling_index(4)) - expect) <= 1e-14 * expect;
        out.push_back(make_result("vanishing moments (constant input)", ok,
                                  "wavelet coefficients exactly zero"));
    }
    return out;
}

std::vector<CheckResult> appendix_suite() {
    std::vector<CheckResult> out;

    {
        std::mt19937_64 rng(424242);
        int failures = 0;
        for (int it = 0; it < 10000; ++it) {
            const int d = 1 + static_cast<int>(rand_u01(rng) * 3);
            const double alpha = 0.05 + 2.0 * rand_u01(rng);
            const double m_factor = 2.0 + 1e-6 + 8.0 * rand_u01(rng);
            std::vector<double> h(static_cast<std::size_t>(d));
            double hn = 0.0;
            for (double& v : h) {
                v = rand_u01(rng);
                hn += v * v;
            }
            hn = std::sqrt(hn);
            if (hn == 0.0) {
                h[0] = 0.5;
                hn = 0.5;
            }
            const double scale = (0.1 + 9.9 * rand_u01(rng)) / hn;
            for (double& v : h) v *= scale;
            hn *= scale;
            std::vector<double> x(static_cast<std::size_t>(d));
            double xn = 0.0;
            for (double& v : x) {
                v = rand_u01(rng);
                xn += v * v;
            }
            xn = std::sqrt(xn);
            if (xn == 0.0) {
                x[0] = 1.0;
                xn = 1.0;
            }
            const double target = (hn / m_factor) * (1e-6 + (1.0 - 1e-6) * rand_u01(rng));
            for (double& v : x) v *= target / xn;
            if (!lemma_a1_check(x, h, alpha, m_factor)) ++failures;
        }
        out.push_back(make_result("lower-bound lemma, 10^4 randomized samples", failures == 0,
                                  std::to_string(failures) + " violations"));
    }

    {
        bool ok = true;
        int tested = 0;
        std::ostringstream detail;
        for (double alpha : {0.5, 0.6, 0.75, 0.9}) {
            for (double rho : {0.0, 0.2, 0.4, 0.5, 0.8}) {
                const FinitenessReport rep = weighted_sobolev_finiteness(alpha, rho);
                ++tested;
                if (rep.divergent == rep.predicate) {
                    ok = false;
                    detail << " mismatch at (" << alpha << ',' << rho << ')';
                }
            }
        }
        out.push_back(make_result("weighted-Sobolev finiteness flag on 20-point grid", ok,
                                  ok ? "flag matches rho < 1 - alpha" : detail.str()));
    }

    {
        const Surface fichera = make_fichera();
        const std::vector<double> ts{1e-1, 1e-2, 1e-3};
        bool ok = true;
        double lo = 1e300, hi = 0.0;
        for (double alpha : {0.5, 0.75}) {
            const auto samples = sobolev_ceiling_check(fichera, alpha, ts);
            for (const CeilingSample& s : samples) {
                lo = std::min(lo, s.ratio);
                hi = std::max(hi, s.ratio);
            }
            for (std::size_t i = 1; i < samples.size(); ++i)
                if (samples[i].ratio > 3.0 * samples[i - 1].ratio ||
                    samples[i - 1].ratio > 3.0 * samples[i].ratio)
                    ok = false;
        }
        ok = ok && lo > 0.0;
        out.push_back(make_result("modulus-of-smoothness ratios over three decades", ok,
                                  "ratio range [" + fmt(lo) + ", " + fmt(hi) + "]"));
    }
    return out;
}

std::vector<CheckResult> oracle_suite(int threads) {
    std::vector<CheckResult> out;
    const Surface cube = make_cube();

    SolverConfig cfg;
    cfg.threads = threads;
    const RightHandSide one = RightHandSide::cartoon(Vec3(0, 0, 0), 1e6, 1.0);

    {
        Problem problem(cube, one, cfg);
        const Tree tree = uniform_tree(cube.patch_count(), 1);
        std::vector<WaveletIndex> list(tree.indices().begin(), tree.indices().end());
        const Eigen::MatrixXd a = assemble_dense(cube, list, cfg.quad);
        const CoeffVector f = problem.rhs_on_tree(tree);
        Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(list.size()));
        for (std::size_t i = 0; i < list.size(); ++i)
            b[static_cast<Eigen::Index>(i)] = f.get(list[i]);
        const Eigen::VectorXd x = a.partialPivLu().solve(b);
        const CoeffVector u = problem.solve_galerkin(tree, f, nullptr);
        double err = 0.0;
        for (std::size_t i = 0; i < list.size(); ++i)
            err += std::pow(u.get(list[i]) - x[static_cast<Eigen::Index>(i)], 2);
        err = std::sqrt(err);
        out.push_back(make_result("solve_galerkin vs dense LU (level-1 cube)", err <= 1e-8,
                                  "l2 difference " + fmt(err)));
    }

    {
        Problem problem(cube, one, cfg);
        const Tree tree = uniform_tree(cube.patch_count(), 1);
        CoeffVector v;
        std::mt19937_64 rng(5150);
        for (const WaveletIndex& idx : tree.indices()) v.set(idx, -1.0 + 2.0 * rand_u01(rng));
        const double delta = 1e-4;
        const CoeffVector w = problem.apply(delta, v);
        const CoeffVector dense = apply_dense(cube, tree, v, cfg.quad);
        double err_sq = 0.0;  // compare on the tree; apply carries certified extra entries
        for (const WaveletIndex& idx : tree.indices())
            err_sq += std::pow(w.get(idx) - dense.get(idx), 2);
        const double err = std::sqrt(err_sq);
        out.push_back(make_result("apply vs dense matrix-vector (within delta)", err <= delta,
                                  "difference " + fmt(err) + " at delta " + fmt(delta)));
    }

    {
        Problem problem(cube, one, cfg);
        const Tree tree = uniform_tree(cube.patch_count(), 1);
        const CoeffVector f = problem.rhs_on_tree(tree);
        const CoeffVector u = problem.solve_galerkin(tree, f, nullptr);
        // ||u - 1||_{L2}^2 via coefficients of the constant 1
        double err_sq = 0.0;
        for (const WaveletIndex& idx : tree.indices()) {
            const double target =
                idx.is_scaling() ? std::sqrt(cube.patch(idx.patch).jacobian) : 0.0;
            err_sq += std::pow(u.get(idx) - target, 2);
        }
        const double err = std::sqrt(err_sq);
        out.push_back(make_result("constant-density identity (level-1 cube)", err <= 1e-2,
                                  "||u - 1|| = " + fmt(err)));
    }
    return out;
}

bool all_passed(const std::vector<CheckResult>& results) {
    for (const CheckResult& r : results)
        if (!r.passed) return false;
    return true;
}

void print_table(std::ostream& out, const std::vector<CheckResult>& results) {
    for (const CheckResult& r : results)
        out << (r.passed ? "PASS" : "FAIL") << "  " << r.name << "  (" << r.detail << ")\n";
}

}  // namespace awbem::checks
