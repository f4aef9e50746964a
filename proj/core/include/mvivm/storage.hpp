#ifndef MVIVM_STORAGE_HPP
#define MVIVM_STORAGE_HPP

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "mvivm/query.hpp"

namespace mvivm {

// Open-addressing map from (parent node, value) edges to child nodes.
// Linear probing with backward-shift deletion; keys never use the top bit,
// so ~0 marks empty slots.
class EdgeMap {
public:
    static constexpr std::uint64_t kEmpty = ~std::uint64_t(0);

    EdgeMap() { slots_.assign(8, Slot{kEmpty, 0}); }

    int find(std::uint64_t key) const {
        std::size_t i = bucket(key);
        for (;;) {
            const Slot& s = slots_[i];
            if (s.key == key) return s.val;
            if (s.key == kEmpty) return -1;
            i = (i + 1) & mask();
        }
    }

    void insert(std::uint64_t key, int val) {
        if ((count_ + 1) * 10 >= slots_.size() * 7) grow();
        std::size_t i = bucket(key);
        while (slots_[i].key != kEmpty) i = (i + 1) & mask();
        slots_[i] = Slot{key, val};
        ++count_;
    }

    void erase(std::uint64_t key) {
        std::size_t i = bucket(key);
        while (slots_[i].key != key) {
            if (slots_[i].key == kEmpty) return;
            i = (i + 1) & mask();
        }
        --count_;
        // Backward-shift deletion keeps probe chains intact.
        std::size_t j = i;
        for (;;) {
            slots_[i].key = kEmpty;
            for (;;) {
                j = (j + 1) & mask();
                if (slots_[j].key == kEmpty) return;
                std::size_t h = bucket(slots_[j].key);
                bool between = i <= j ? (h <= i || h > j) : (h <= i && h > j);
                if (between) {
                    slots_[i] = slots_[j];
                    i = j;
                    break;
                }
            }
        }
    }

private:
    struct Slot {
        std::uint64_t key;
        int val;
    };

    std::size_t mask() const { return slots_.size() - 1; }
    std::size_t bucket(std::uint64_t k) const {
        k ^= k >> 33;
        k *= 0xff51afd7ed558ccdull;
        k ^= k >> 33;
        k *= 0xc4ceb9fe1a85ec53ull;
        k ^= k >> 33;
        return static_cast<std::size_t>(k) & mask();
    }
    void grow() {
        std::vector<Slot> old = std::move(slots_);
        slots_.assign(old.size() * 2, Slot{kEmpty, 0});
        count_ = 0;
        for (const Slot& s : old)
            if (s.key != kEmpty) insert(s.key, s.val);
    }

    std::vector<Slot> slots_;
    std::size_t count_ = 0;
};

// A relation materialized under one or more attribute orders. Each order is a
// hash trie with per-node cardinality counters, giving constant-time point
// lookups, counts for any prefix, and constant-delay iteration over the child
// values of a prefix. Children are linked in insertion order so enumeration
// transcripts are deterministic.
class IndexedRelation {
public:
    static constexpr int npos = -1;

    IndexedRelation() = default;
    IndexedRelation(std::vector<Variable> schema,
                    std::vector<std::vector<std::size_t>> orders);

    // Adds another order (a permutation of schema positions); existing tuples
    // are reindexed. Returns the order id.
    std::size_t add_order(const std::vector<std::size_t>& order);
    // Finds an existing order equal to `order`, or npos.
    int find_order(const std::vector<std::size_t>& order) const;

    bool insert(const Tuple& t);
    bool erase(const Tuple& t);
    bool contains(const Tuple& t) const;
    std::size_t size() const { return size_; }
    const std::vector<Variable>& schema() const { return schema_; }
    const std::vector<std::size_t>& order(std::size_t id) const { return tries_[id].attr; }
    std::size_t order_count() const { return tries_.size(); }

    // Prefix values are given in the order's attribute sequence.
    std::size_t select_count(std::size_t order_id, std::span<const Value> prefix) const;

    // Node-level interface used by the join and enumeration machinery.
    int root(std::size_t) const { return 0; }
    int child(std::size_t order_id, int node, Value v) const;
    std::size_t node_count(std::size_t order_id, int node) const {
        return tries_[order_id].nodes[node].count;
    }
    std::size_t child_fanout(std::size_t order_id, int node) const {
        return tries_[order_id].nodes[node].fanout;
    }
    int first_child(std::size_t order_id, int node) const {
        return tries_[order_id].nodes[node].first_child;
    }
    int next_sibling(std::size_t order_id, int node) const {
        return tries_[order_id].nodes[node].next_sib;
    }
    Value node_value(std::size_t order_id, int node) const {
        return tries_[order_id].nodes[node].value;
    }
    // Walks a prefix; npos if absent.
    int descend(std::size_t order_id, std::span<const Value> prefix) const;

    // Collects all tuples (in schema order) extending `prefix` under an order.
    void scan(std::size_t order_id, std::span<const Value> prefix,
              std::vector<Tuple>& out) const;
    std::vector<Tuple> all_tuples() const;

private:
    struct Node {
        Value value = 0;
        int parent = npos;
        int first_child = npos;
        int last_child = npos;
        int prev_sib = npos;
        int next_sib = npos;
        std::uint32_t count = 0;
        std::uint32_t fanout = 0;
    };

    struct Trie {
        std::vector<std::size_t> attr;  // level -> schema position
        std::vector<Node> nodes;        // nodes[0] is the root
        std::vector<int> free_list;
        EdgeMap edges;  // (parent, value) -> node

        static std::uint64_t key(int parent, Value v) {
            return (static_cast<std::uint64_t>(parent) << 32) | v;
        }
        int find(int parent, Value v) const { return edges.find(key(parent, v)); }
        void insert_path(const Tuple& t);
        void erase_path(const Tuple& t);
    };

    std::vector<Variable> schema_;
    std::vector<Trie> tries_;
    std::size_t size_ = 0;
};

// Per-query collection of indexed relations, keyed by relation symbol.
struct IndexedDatabase {
    std::unordered_map<std::string, IndexedRelation> relations;

    static IndexedDatabase for_query(const Query& q);
    IndexedRelation& at(const std::string& rel);
    const IndexedRelation& at(const std::string& rel) const;
    bool apply(const Update& u);
    std::size_t size() const;
};

std::vector<std::size_t> identity_order(std::size_t n);

}  // namespace mvivm

#endif
