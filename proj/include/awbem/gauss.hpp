#pragma once

#include <vector>

namespace awbem {

/// Gauss-Legendre rule on [0,1]; weights sum to 1.
struct GaussRule {
    std::vector<double> x;
    std::vector<double> w;
};

/// Cached rule of the given order (nodes per direction), 1 <= order <= 48.
const GaussRule& gauss_rule(int order);

}  // namespace awbem
