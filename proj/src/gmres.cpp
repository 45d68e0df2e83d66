#include "awbem/gmres.hpp"

#include <cmath>
#include <thread>

namespace awbem {

Eigen::VectorXd CsrMatrix::multiply(const Eigen::VectorXd& x, int threads) const {
    Eigen::VectorXd y(n);
    auto worker = [&](std::int32_t begin, std::int32_t end) {
        for (std::int32_t i = begin; i < end; ++i) {
            double sum = 0.0;
            for (std::int64_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k)
                sum += val[static_cast<std::size_t>(k)] * x[col[static_cast<std::size_t>(k)]];
            y[i] = sum;
        }
    };
    if (threads <= 1 || n < 256) {
        worker(0, n);
        return y;
    }
    std::vector<std::thread> pool;
    const std::int32_t chunk = (n + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
        const std::int32_t b = t * chunk;
        const std::int32_t e = std::min(n, b + chunk);
        if (b < e) pool.emplace_back(worker, b, e);
    }
    for (auto& th : pool) th.join();
    return y;
}

GmresResult gmres(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& matvec,
                  const Eigen::VectorXd& b, const Eigen::VectorXd& x0, int restart,
                  double rel_tol, int max_iter) {
    GmresResult result;
    const double bnorm = b.norm();
    if (bnorm == 0.0) {
        result.x = Eigen::VectorXd::Zero(b.size());
        result.converged = true;
        return result;
    }
    const int m = std::max(1, restart);
    Eigen::VectorXd x = x0.size() == b.size() ? x0 : Eigen::VectorXd::Zero(b.size());

    std::vector<Eigen::VectorXd> v(static_cast<std::size_t>(m) + 1);
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(m + 1, m);
    Eigen::VectorXd cs(m), sn(m), g(m + 1);

    int total = 0;
    double res = 0.0;
    while (true) {
        Eigen::VectorXd r = b - matvec(x);
        const double beta = r.norm();
        res = beta;
        if (beta <= rel_tol * bnorm || total >= max_iter) break;

        v[0] = r / beta;
        g.setZero();
        g[0] = beta;
        int j = 0;
        for (; j < m && total < max_iter; ++j, ++total) {
            Eigen::VectorXd w = matvec(v[static_cast<std::size_t>(j)]);
            for (int i = 0; i <= j; ++i) {
                h(i, j) = v[static_cast<std::size_t>(i)].dot(w);
                w -= h(i, j) * v[static_cast<std::size_t>(i)];
            }
            h(j + 1, j) = w.norm();
            const bool breakdown = h(j + 1, j) < 1e-300;
            if (!breakdown) v[static_cast<std::size_t>(j) + 1] = w / h(j + 1, j);

            for (int i = 0; i < j; ++i) {
                const double t = cs[i] * h(i, j) + sn[i] * h(i + 1, j);
                h(i + 1, j) = -sn[i] * h(i, j) + cs[i] * h(i + 1, j);
                h(i, j) = t;
            }
            const double denom = std::hypot(h(j, j), h(j + 1, j));
            cs[j] = h(j, j) / denom;
            sn[j] = h(j + 1, j) / denom;
            h(j, j) = denom;
            h(j + 1, j) = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] = cs[j] * g[j];
            res = std::abs(g[j + 1]);
            if (res <= rel_tol * bnorm || breakdown) {
                ++j;
                ++total;
                break;
            }
        }
        // solve the j x j upper-triangular system and update x
        Eigen::VectorXd y = h.topLeftCorner(j, j)
                                .triangularView<Eigen::Upper>()
                                .solve(g.head(j));
        for (int i = 0; i < j; ++i) x += y[i] * v[static_cast<std::size_t>(i)];
    }
    result.x = std::move(x);
    result.relative_residual = res / bnorm;
    result.iterations = total;
    result.converged = res <= rel_tol * bnorm;
    return result;
}

}  // namespace awbem
