#ifndef MVIVM_SEGTREE_HPP
#define MVIVM_SEGTREE_HPP

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mvivm/query.hpp"
#include "mvivm/width.hpp"

namespace mvivm {

// A node of the segment tree over [1, N]: the empty string is the root, b0/b1
// are the children of b. Stored as (length, bits) so "" differs from "0".
struct Bitstring {
    std::uint32_t len = 0;
    std::uint64_t bits = 0;  // the string read as a binary number

    bool operator==(const Bitstring&) const = default;
    bool prefix_of(const Bitstring& o) const {
        return len <= o.len && (o.bits >> (o.len - len)) == bits;
    }
    Bitstring concat(const Bitstring& o) const {
        return {len + o.len, (bits << o.len) | o.bits};
    }
    std::string str() const;
    static Bitstring parse(const std::string& s);

    Value intern() const { return mvivm::intern(str()); }
    static Bitstring of_value(Value v) { return parse(value_str(v)); }
};

// Closed interval [lo, hi] over timestamps, or [lo, inf) when open.
struct Lifespan {
    std::uint64_t lo = 0;
    std::uint64_t hi = 0;
    bool open = false;

    bool operator==(const Lifespan&) const = default;
    bool contains(std::uint64_t t) const { return t >= lo && (open || t <= hi); }
    bool intersects(const Lifespan& o) const {
        std::uint64_t lo2 = std::max(lo, o.lo);
        bool hi_unbounded = open && o.open;
        std::uint64_t hi2 = open ? o.hi : (o.open ? hi : std::min(hi, o.hi));
        return hi_unbounded || lo2 <= hi2;
    }
    std::string str() const;
};

struct TimedTuple {
    Lifespan span;
    Tuple data;
    bool operator==(const TimedTuple&) const = default;
};

struct TimedRelation {
    std::string name;
    std::vector<Variable> schema;  // point variables only
    std::vector<TimedTuple> tuples;
};

struct TimedDatabase {
    std::unordered_map<std::string, TimedRelation> relations;
    static TimedDatabase for_query(const Query& q);
    TimedRelation& at(const std::string& rel);
    const TimedRelation& at(const std::string& rel) const;
    std::size_t size() const;
};

std::uint32_t log2_exact(std::uint64_t n);

// The dyadic interval of node b in the segment tree over [1, N].
Lifespan seg(std::uint64_t N, const Bitstring& b);

// Canonical partition: the maximal nodes of the segment tree lying inside
// [iv.lo, iv.hi], left to right. O(log N) nodes.
std::vector<Bitstring> cp(std::uint64_t N, const Lifespan& iv);

// Root-to-leaf path of the leaf [t, t].
std::vector<Bitstring> stab(std::uint64_t N, std::uint64_t t);
Bitstring leaf_of(std::uint64_t N, std::uint64_t t);

// All ordered ways to write b as a concatenation of `parts` bitstrings,
// empty parts allowed: C(len + parts - 1, parts - 1) splits. The callback
// form visits each split through one reused buffer.
template <typename Fn>
void for_each_split(const Bitstring& b, std::size_t parts, Fn&& fn) {
    if (parts == 0) return;
    // Cut positions 0 <= c1 <= ... <= c_{parts-1} <= len, advanced like an
    // odometer.
    std::vector<std::uint32_t> cuts(parts - 1, 0);
    std::vector<Bitstring> cur(parts);
    auto piece = [&](std::uint32_t from, std::uint32_t to) {
        std::uint32_t l = to - from;
        std::uint64_t bits =
            l == 0 ? 0 : (b.bits >> (b.len - to)) & ((std::uint64_t(1) << l) - 1);
        return Bitstring{l, bits};
    };
    for (;;) {
        std::uint32_t prev = 0;
        for (std::size_t i = 0; i + 1 < parts; ++i) {
            cur[i] = piece(prev, cuts[i]);
            prev = cuts[i];
        }
        cur[parts - 1] = piece(prev, b.len);
        fn(std::span<const Bitstring>(cur.data(), cur.size()));
        // Advance: increment the last cut that can still move right.
        std::size_t i = parts - 1;
        while (i > 0 && cuts[i - 1] == b.len) --i;
        if (i == 0) return;
        std::uint32_t v = ++cuts[i - 1];
        for (std::size_t j = i; j + 1 < parts; ++j) cuts[j] = v;
    }
}

std::vector<std::vector<Bitstring>> all_splits(const Bitstring& b, std::size_t parts);

// Canonical partition of one timed tuple into i leading bitstring columns.
// The callback form reuses one tuple buffer across splits.
template <typename Fn>
void for_each_cp_tuple(std::uint64_t N, std::size_t parts, const TimedTuple& t, Fn&& fn) {
    Tuple buf(parts + t.data.size());
    std::copy(t.data.begin(), t.data.end(), buf.begin() + static_cast<std::ptrdiff_t>(parts));
    for (const auto& node : cp(N, t.span)) {
        for_each_split(node, parts, [&](std::span<const Bitstring> split) {
            for (std::size_t i = 0; i < parts; ++i) buf[i] = split[i].intern();
            fn(static_cast<const Tuple&>(buf));
        });
    }
}

std::vector<Tuple> cp_tuple(std::uint64_t N, std::size_t parts, const TimedTuple& t);

struct TimedUpdate {
    Op op;
    std::string rel;
    TimedTuple tuple;
};

// Canonical partition of a timed database (with closed spans) into one
// component instance: atom sigma_i receives the i-way splits.
Database cp_database(std::uint64_t N, const MultivariateComponent& comp,
                     const TimedDatabase& dbar);
std::vector<Update> cp_delta(std::uint64_t N, const MultivariateComponent& comp,
                             const TimedUpdate& du);

// G_k concatenates the k leading bitstring columns.
Tuple g_map(std::size_t k, const Tuple& t);
Relation g_map(std::size_t k, const Relation& r);

// H_k splits the span into all equal-length k-way node splits.
std::vector<Tuple> h_map(std::size_t k, std::uint64_t N, const TimedTuple& t);

// Interval version of a component instance whose bitstring values all have
// one common length l; uses the segment tree over 2^(k*l).
TimedDatabase interval_version(const MultivariateComponent& comp, const Database& dhat);

// Reference evaluator for intersection joins: nested loops, exact.
// Output tuples carry the intersection interval.
std::vector<TimedTuple> timed_join(const Query& base, const TimedDatabase& dbar);

// CP^(1) of a set of timed output tuples, as (node, data) pairs.
std::vector<Tuple> cp1_of_output(std::uint64_t N, const std::vector<TimedTuple>& out);

}  // namespace mvivm

#endif
