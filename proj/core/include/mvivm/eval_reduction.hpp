#ifndef MVIVM_EVAL_REDUCTION_HPP
#define MVIVM_EVAL_REDUCTION_HPP

#include "mvivm/query.hpp"
#include "mvivm/segtree.hpp"
#include "mvivm/width.hpp"

namespace mvivm {

// Static evaluation of one multivariate-extension component by a direct
// worst-case-optimal join. Oracle for the reduction below.
Relation eval_component_direct(const MultivariateComponent& comp, const Database& dhat);

// Static evaluation of the component through a dynamic engine: build the
// interval version, sweep its endpoints as inserts/deletes through an
// insert-delete engine in delta mode, pair each reported +t with its later
// -t into an output interval, and recover the bitstring splits.
Relation eval_component_via_ivm(const MultivariateComponent& comp, const Database& dhat);

}  // namespace mvivm

#endif
