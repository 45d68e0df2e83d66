#include "awbem/gauss.hpp"

#include <cmath>
#include <stdexcept>

namespace awbem {

namespace {

// Newton iteration on P_n; nodes symmetric, converges in a handful of steps.
GaussRule compute_rule(int n) {
    GaussRule rule;
    rule.x.resize(n);
    rule.w.resize(n);
    const double pi = 3.14159265358979323846;
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.x[i] = 0.5 * (1.0 - x);  // descending x -> ascending node on [0,1]
        rule.w[i] = 0.5 * w;
        rule.x[n - 1 - i] = 0.5 * (1.0 + x);
        rule.w[n - 1 - i] = 0.5 * w;
    }
    if (n == 1) {
        rule.x[0] = 0.5;
        rule.w[0] = 1.0;
    }
    return rule;
}

}  // namespace

const GaussRule& gauss_rule(int order) {
    constexpr int kMaxOrder = 48;
    if (order < 1 || order > kMaxOrder) throw std::invalid_argument("gauss_rule: bad order");
    static const std::vector<GaussRule> table = [] {
        std::vector<GaussRule> t;
        t.reserve(kMaxOrder);
        for (int n = 1; n <= kMaxOrder; ++n) t.push_back(compute_rule(n));
        return t;
    }();
    return table[static_cast<std::size_t>(order - 1)];
}

}  // namespace awbem
