#pragma once

#include "awbem/solver.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace awbem::checks {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

/// Gauss closure, coplanar annihilation, solid-angle additivity.
std::vector<CheckResult> quadrature_suite();

/// Orthonormality, Parseval, vanishing moments, transform round trip.
std::vector<CheckResult> basis_suite();

/// Lemma-type lower bound (randomized), weighted-Sobolev finiteness grid,
/// modulus-of-smoothness ratios.
std::vector<CheckResult> appendix_suite();

/// Dense-solver and dense-apply equivalence on small trees, constant-density sanity.
std::vector<CheckResult> oracle_suite(int threads = 1);

bool all_passed(const std::vector<CheckResult>& results);
void print_table(std::ostream& out, const std::vector<CheckResult>& results);

/// Deterministic uniform double in [0,1) from a raw 64-bit generator.
template <typename Rng>
double rand_u01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace awbem::checks
