#ifndef MVIVM_VIEW_FOREST_HPP
#define MVIVM_VIEW_FOREST_HPP

#include <deque>
#include <memory>
#include <span>
#include <unordered_map>
#include <vector>

#include "mvivm/query.hpp"
#include "mvivm/storage.hpp"
#include "mvivm/stream.hpp"
#include "mvivm/wcoj.hpp"
#include "mvivm/width.hpp"

namespace mvivm::detail {

// Iterates the completions of a trie prefix in insertion order.
class TrieCursor {
public:
    TrieCursor() = default;
    void init(const IndexedRelation* rel, std::size_t order, std::span<const Value> prefix);
    bool next();
    Value value(std::size_t level_below_prefix) const {
        return rel_->node_value(order_, path_[level_below_prefix]);
    }
    std::size_t suffix_levels() const { return total_ - bound_; }

private:
    const IndexedRelation* rel_ = nullptr;
    std::size_t order_ = 0;
    int base_ = IndexedRelation::npos;
    std::size_t bound_ = 0;
    std::size_t total_ = 0;
    std::vector<int> path_;
    bool fresh_ = true;
};

// Materialized bag views over a rooted tree decomposition, maintained by
// per-insert delta joins. Bottom-up calibration keeps the root view equal to
// the projection of the query result; the optional top-down layer calibrates
// every bag so enumeration can start anywhere.
class ViewForest {
public:
    ViewForest(const Query& q, const TreeDecomposition& td, bool topdown, bool deletes);

    bool insert_base(const std::string& rel, const Tuple& t);
    bool erase_base(const std::string& rel, const Tuple& t);

    // Constant-time liveness probe for the leading values of the root bag.
    bool root_prefix_nonempty(std::span<const Value> prefix) const {
        return nodes_[td_.root].view.descend(0, prefix) != IndexedRelation::npos;
    }

    const Query& query() const { return q_; }
    const TreeDecomposition& decomposition() const { return td_; }
    const IndexedRelation& base(const std::string& rel) const { return base_.at(rel); }
    const IndexedRelation& view(int node) const { return nodes_[node].view; }

    // Full enumeration from the root, optionally with the leading
    // `prefix.size()` values of the root bag fixed. Emits slots in
    // `emit_slots` (positions into the query head).
    std::unique_ptr<StreamImpl> walk_full(std::vector<Value> root_prefix,
                                          std::vector<std::size_t> emit_slots,
                                          const std::uint64_t* live_version,
                                          std::uint64_t expect) const;
    // Enumeration of output tuples matching `t` on atom `atom_index`,
    // starting at the atom's home bag (requires the top-down layer).
    std::unique_ptr<StreamImpl> walk_delta(std::size_t atom_index, const Tuple& t,
                                           std::vector<std::size_t> emit_slots,
                                           const std::uint64_t* live_version,
                                           std::uint64_t expect) const;

private:
    friend class WalkStream;

    struct CtxRef {
        std::size_t order_id = 0;
        std::vector<std::size_t> levels;  // level -> bag-local slot (first `depth` levels)
    };

    struct PlannedAtom {
        bool is_child_view = false;
        std::string rel;          // base relation (when !is_child_view)
        int child = -1;           // node id (when is_child_view)
        std::vector<std::size_t> covered;        // bag-local slots, ascending
        std::vector<std::size_t> schema_of_covered;  // source schema position per covered slot
        std::vector<CtxRef> ctx;  // per bag-atom context (self entry = detection order)
    };

    // Per-context delta join, fully precompiled: the other atoms' refs, the
    // iteration slots, the slot participation table, and the bound pattern.
    struct CtxJoin {
        std::vector<AtomRef> refs;
        std::vector<std::size_t> iter_slots;
        std::vector<std::vector<std::size_t>> at_slot;
        std::vector<std::uint8_t> bound;
    };

    struct NodePlan {
        std::vector<std::size_t> bagslots;  // global slot per bag position
        std::vector<Variable> bagvars;
        int parent = -1;
        std::vector<int> children;
        std::vector<std::size_t> shared;    // bag-local slots of bag ∩ parent-bag, parent-bag order
        IndexedRelation view;
        IndexedRelation qpp;
        std::size_t view_parent_order = 0;  // [shared][rest]
        std::size_t qpp_parent_order = 0;
        std::vector<std::size_t> qpp_child_orders;    // per child index
        std::vector<std::vector<std::size_t>> child_covered;  // per child: bag-local shared slots
        std::vector<std::size_t> view_victim_orders;  // per bag atom (deletes only)
        std::vector<std::size_t> qpp_atom_orders;     // per home atom (delta walks)
        std::vector<PlannedAtom> atoms;
        std::vector<std::vector<std::size_t>> iter_slots;  // per context: unbound bag slots
        std::vector<CtxJoin> ctx_join;                     // per context
    };

    struct Event {
        int node;
        std::size_t atom;
        bool insert;
        Tuple key;  // values of the atom's covered slots
    };

    struct WalkStep {
        int node = -1;
        bool qpp = false;
        std::size_t order_id = 0;
        std::size_t bound = 0;
        std::vector<std::size_t> level_slots;  // level -> global slot
    };
    struct WalkPlan {
        std::vector<WalkStep> steps;
    };

    void compile();
    WalkPlan make_walk(int root, bool qpp, std::size_t root_order,
                       std::size_t root_bound) const;
    std::unique_ptr<StreamImpl> make_stream(const WalkPlan& plan, std::vector<Value> prefix,
                                            std::vector<std::size_t> emit_slots,
                                            const std::uint64_t* live_version,
                                            std::uint64_t expect) const;

    void enqueue_base_events(const std::string& rel, const Tuple& t, bool insert);
    void drain();
    void handle_insert(const Event& ev);
    void handle_erase(const Event& ev);
    void view_inserted(int node, const Tuple& x);
    void view_erase(int node, const Tuple& x);
    void qpp_insert(int node, const Tuple& x);
    void qpp_erase(int node, const Tuple& x);
    Tuple project(const Tuple& x, const std::vector<std::size_t>& positions) const;

    Query q_;
    TreeDecomposition td_;
    bool topdown_;
    bool deletes_;
    std::size_t nvars_ = 0;
    std::unordered_map<Variable, std::size_t> slot_;
    IndexedDatabase base_;
    std::vector<NodePlan> nodes_;
    std::vector<int> home_bag_;  // per query atom
    // per base relation: (node, atom index) pairs it projects into
    std::unordered_map<std::string, std::vector<std::pair<int, std::size_t>>> occurrences_;
    std::unordered_map<std::string, std::size_t> atom_of_rel_;
    std::deque<Event> queue_;
    WalkPlan full_walk_;
    std::vector<WalkPlan> delta_walks_;  // per query atom (topdown only)
    // Schema positions rearranging an inserted tuple into its home bag's
    // bound-prefix order.
    std::vector<std::vector<std::size_t>> delta_key_;
    // Event-handler scratch (engines are single-threaded).
    std::vector<Value> scratch_assign_;
    std::vector<Tuple> scratch_results_;
};

}  // namespace mvivm::detail

#endif
