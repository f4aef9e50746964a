#ifndef MVIVM_LP_HPP
#define MVIVM_LP_HPP

#include <optional>
#include <vector>

#include "mvivm/rational.hpp"

namespace mvivm {

struct LpSolution {
    Rational objective;
    std::vector<Rational> x;
};

// Minimize c^T x subject to A x >= b, x >= 0, in exact rational arithmetic.
// Two-phase simplex with Bland's rule, so it terminates on degenerate
// instances. Returns nullopt if infeasible.
std::optional<LpSolution> solve_min_lp(const std::vector<std::vector<Rational>>& A,
                                       const std::vector<Rational>& b,
                                       const std::vector<Rational>& c);

}  // namespace mvivm

#endif
