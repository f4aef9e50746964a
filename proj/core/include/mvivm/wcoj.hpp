#ifndef MVIVM_WCOJ_HPP
#define MVIVM_WCOJ_HPP

#include <array>
#include <cassert>
#include <span>
#include <vector>

#include "mvivm/query.hpp"
#include "mvivm/storage.hpp"

namespace mvivm {

// One participant of a join: the first `depth` levels of one index order of a
// relation. depth < schema size turns the trie prefix into a projection with
// support counts, which is how bag plans consume partially-covered atoms.
struct AtomRef {
    const IndexedRelation* rel = nullptr;
    std::size_t order_id = 0;
    std::size_t depth = 0;
    // slots[level] = variable slot the level binds. Bound slots must form a
    // prefix of the levels; the unbound suffix must follow iter_slots order.
    std::vector<std::size_t> slots;
};

// Which refs consume each iteration slot, given that each ref's bound slots
// form a prefix of its levels. Precomputable when the binding pattern is
// fixed.
std::vector<std::vector<std::size_t>> refs_at_slots(std::span<const AtomRef> refs,
                                                    std::span<const std::size_t> iter_slots,
                                                    const std::vector<std::uint8_t>& bound);

// Recursive intersect-and-extend join over trie prefixes, picking the
// smallest child set at each variable. `assign` holds values for every slot;
// `bound[s]` marks slots fixed by the caller. Visits every extension of the
// binding once.
template <typename Visit>
void join_refs_prepared(std::span<const AtomRef> refs,
                        std::span<const std::size_t> iter_slots,
                        const std::vector<std::vector<std::size_t>>& at_slot,
                        std::vector<Value>& assign, const std::vector<std::uint8_t>& bound,
                        Visit&& visit) {
    constexpr std::size_t kMaxRefs = 16;
    assert(refs.size() <= kMaxRefs);

    std::array<int, kMaxRefs> node{};
    for (std::size_t r = 0; r < refs.size(); ++r) {
        const AtomRef& ref = refs[r];
        int nd = ref.rel->root(ref.order_id);
        std::size_t lv = 0;
        while (lv < ref.depth && bound[ref.slots[lv]]) {
            nd = ref.rel->child(ref.order_id, nd, assign[ref.slots[lv]]);
            if (nd == IndexedRelation::npos) return;
            ++lv;
        }
        node[r] = nd;
    }

    struct Rec {
        std::span<const AtomRef> refs;
        std::span<const std::size_t> iter_slots;
        std::vector<Value>& assign;
        std::array<int, kMaxRefs>& node;
        const std::vector<std::vector<std::size_t>>& at_slot;
        Visit& visit;

        void run(std::size_t d) {
            if (d == iter_slots.size()) {
                visit(std::span<const Value>(assign.data(), assign.size()));
                return;
            }
            const auto& parts = at_slot[d];
            if (parts.empty()) {  // slot untouched by any ref: nothing to bind
                run(d + 1);
                return;
            }
            std::size_t lead = parts[0];
            for (std::size_t r : parts) {
                if (refs[r].rel->child_fanout(refs[r].order_id, node[r]) <
                    refs[lead].rel->child_fanout(refs[lead].order_id, node[lead]))
                    lead = r;
            }
            std::array<int, kMaxRefs> saved{};
            for (std::size_t r : parts) saved[r] = node[r];
            const AtomRef& lref = refs[lead];
            for (int c = lref.rel->first_child(lref.order_id, saved[lead]);
                 c != IndexedRelation::npos; c = lref.rel->next_sibling(lref.order_id, c)) {
                Value v = lref.rel->node_value(lref.order_id, c);
                bool ok = true;
                for (std::size_t r : parts) {
                    if (r == lead) {
                        node[r] = c;
                        continue;
                    }
                    int cr = refs[r].rel->child(refs[r].order_id, saved[r], v);
                    if (cr == IndexedRelation::npos) { ok = false; break; }
                    node[r] = cr;
                }
                if (ok) {
                    assign[iter_slots[d]] = v;
                    run(d + 1);
                }
            }
            for (std::size_t r : parts) node[r] = saved[r];
        }
    };
    Rec{refs, iter_slots, assign, node, at_slot, visit}.run(0);
}

template <typename Visit>
void join_refs(std::span<const AtomRef> refs, std::span<const std::size_t> iter_slots,
               std::vector<Value>& assign, const std::vector<std::uint8_t>& bound,
               Visit&& visit) {
    auto at_slot = refs_at_slots(refs, iter_slots, bound);
    join_refs_prepared(refs, iter_slots, at_slot, assign, bound,
                       std::forward<Visit>(visit));
}

// A compiled join for one query over an IndexedDatabase: a global variable
// order plus, per atom, the index orders generic_join and delta_join need.
struct JoinPlan {
    Query query;
    std::vector<Variable> var_order;                 // all vars, iteration order
    std::vector<std::size_t> head_slot;              // head position -> slot
    std::vector<std::vector<std::size_t>> join_order;   // per atom: order id used by generic_join
    std::vector<std::vector<std::size_t>> atom_slots;   // per atom: slot per schema position
};

// Creates every index order the plan needs (including the per-inserted-atom
// orders used by delta_join).
JoinPlan compile_plan(const Query& q, IndexedDatabase& db,
                      std::vector<Variable> var_order = {});

// Exact natural join output under the plan's global variable order.
Relation generic_join(const JoinPlan& plan, const IndexedDatabase& db);

// New output tuples caused by inserting `inserted` into `atom_rel`, assuming
// the database already contains the insert.
Relation delta_join(const JoinPlan& plan, const IndexedDatabase& db,
                    const std::string& atom_rel, const Tuple& inserted);

// Convenience: index a plain database and join.
Relation join_database(const Query& q, const Database& db);

}  // namespace mvivm

#endif
