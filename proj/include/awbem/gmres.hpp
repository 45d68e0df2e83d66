#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <vector>

namespace awbem {

/// Compressed sparse row matrix; rows are summed left to right so products are
/// reproducible for any thread count.
struct CsrMatrix {
    std::int32_t n = 0;
    std::vector<std::int64_t> row_ptr;
    std::vector<std::int32_t> col;
    std::vector<double> val;

    Eigen::VectorXd multiply(const Eigen::VectorXd& x, int threads = 1) const;
};

struct GmresResult {
    Eigen::VectorXd x;
    double relative_residual = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Restarted GMRES with modified Gram-Schmidt and Givens rotations.
GmresResult gmres(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& matvec,
                  const Eigen::VectorXd& b, const Eigen::VectorXd& x0, int restart,
                  double rel_tol, int max_iter);

}  // namespace awbem
