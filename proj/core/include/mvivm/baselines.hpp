#ifndef MVIVM_BASELINES_HPP
#define MVIVM_BASELINES_HPP

#include <vector>

#include "mvivm/query.hpp"
#include "mvivm/storage.hpp"
#include "mvivm/wcoj.hpp"

namespace mvivm {

using SignedTuple = std::pair<Op, Tuple>;

// Per-timestamp full results and changes, each sorted for comparison.
struct Transcript {
    std::vector<std::vector<Tuple>> full;
    std::vector<std::vector<SignedTuple>> delta;
};

// Recomputes the query result from scratch after each update.
class NaiveEngine {
public:
    explicit NaiveEngine(const Query& q);
    void apply(const Update& u, bool lenient = false);
    const Relation& result() const { return result_; }

private:
    Query q_;
    IndexedDatabase db_;
    JoinPlan plan_;
    Relation result_;
};

// First-order IVM: materializes the result and applies per-update delta
// queries. Deleted candidates are re-checked against the post-update database
// before removal.
class DeltaEngine {
public:
    explicit DeltaEngine(const Query& q);
    std::vector<SignedTuple> apply(const Update& u, bool lenient = false);
    std::vector<Tuple> result() const;
    std::size_t result_size() const { return result_.size(); }

private:
    Query q_;
    IndexedDatabase db_;
    JoinPlan plan_;
    IndexedRelation result_;
    std::vector<std::size_t> victim_orders_;  // per atom
};

Transcript naive_maintain(const Query& q, const UpdateStream& s, bool lenient = false);
Transcript delta_maintain(const Query& q, const UpdateStream& s, bool lenient = false);

std::vector<Tuple> sorted_tuples(const Relation& r);

}  // namespace mvivm

#endif
