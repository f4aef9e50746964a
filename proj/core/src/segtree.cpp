#include "mvivm/segtree.hpp"

#include <algorithm>
#include <cassert>
#include <stdexcept>

namespace mvivm {

std::string Bitstring::str() const {
    std::string s(len, '0');
    for (std::uint32_t i = 0; i < len; ++i)
        if (bits & (std::uint64_t(1) << (len - 1 - i))) s[i] = '1';
    return s;
}

Bitstring Bitstring::parse(const std::string& s) {
    Bitstring b;
    b.len = static_cast<std::uint32_t>(s.size());
    if (b.len > 63) throw QueryError("bitstring too long: " + s);
    for (char c : s) {
        if (c != '0' && c != '1') throw QueryError("not a bitstring: " + s);
        b.bits = (b.bits << 1) | static_cast<std::uint64_t>(c == '1');
    }
    return b;
}

std::string Lifespan::str() const {
    return "[" + std::to_string(lo) + "," + (open ? "inf" : std::to_string(hi)) + "]";
}

TimedDatabase TimedDatabase::for_query(const Query& q) {
    TimedDatabase db;
    for (const auto& a : q.atoms)
        db.relations.emplace(a.relation, TimedRelation{a.relation, a.schema, {}});
    return db;
}

TimedRelation& TimedDatabase::at(const std::string& rel) {
    auto it = relations.find(rel);
    if (it == relations.end()) throw QueryError("unknown relation symbol: " + rel);
    return it->second;
}

const TimedRelation& TimedDatabase::at(const std::string& rel) const {
    auto it = relations.find(rel);
    if (it == relations.end()) throw QueryError("unknown relation symbol: " + rel);
    return it->second;
}

std::size_t TimedDatabase::size() const {
    std::size_t n = 0;
    for (const auto& [_, r] : relations) n += r.tuples.size();
    return n;
}

std::uint32_t log2_exact(std::uint64_t n) {
    if (n == 0 || (n & (n - 1)) != 0)
        throw QueryError("segment tree size must be a power of two");
    std::uint32_t l = 0;
    while ((std::uint64_t(1) << l) < n) ++l;
    return l;
}

Lifespan seg(std::uint64_t N, const Bitstring& b) {
    std::uint32_t height = log2_exact(N);
    if (b.len > height) throw QueryError("bitstring longer than tree height");
    std::uint64_t width = N >> b.len;
    std::uint64_t lo = b.bits * width + 1;
    return Lifespan{lo, lo + width - 1, false};
}

std::vector<Bitstring> cp(std::uint64_t N, const Lifespan& iv) {
    std::uint32_t height = log2_exact(N);
    if (iv.open || iv.lo < 1 || iv.hi > N || iv.lo > iv.hi)
        throw QueryError("canonical partition needs a closed interval within [1,N]");
    std::vector<Bitstring> out;
    // Descend from the root, keeping maximal fully-contained nodes.
    struct Item { Bitstring b; std::uint64_t lo, hi; };
    std::vector<Item> stack{{Bitstring{}, 1, N}};
    while (!stack.empty()) {
        Item it = stack.back();
        stack.pop_back();
        if (iv.lo <= it.lo && it.hi <= iv.hi) {
            out.push_back(it.b);
            continue;
        }
        if (it.hi < iv.lo || it.lo > iv.hi) continue;
        std::uint64_t mid = it.lo + (it.hi - it.lo) / 2;
        // Right first: the stack pops left before right.
        stack.push_back({{it.b.len + 1, (it.b.bits << 1) | 1}, mid + 1, it.hi});
        stack.push_back({{it.b.len + 1, it.b.bits << 1}, it.lo, mid});
    }
    (void)height;
    return out;
}

Bitstring leaf_of(std::uint64_t N, std::uint64_t t) {
    std::uint32_t height = log2_exact(N);
    if (t < 1 || t > N) throw QueryError("timestamp outside [1,N]");
    return Bitstring{height, t - 1};
}

std::vector<Bitstring> stab(std::uint64_t N, std::uint64_t t) {
    Bitstring leaf = leaf_of(N, t);
    std::vector<Bitstring> path;
    for (std::uint32_t l = 0; l <= leaf.len; ++l)
        path.push_back(Bitstring{l, leaf.bits >> (leaf.len - l)});
    return path;
}

std::vector<std::vector<Bitstring>> all_splits(const Bitstring& b, std::size_t parts) {
    std::vector<std::vector<Bitstring>> out;
    for_each_split(b, parts, [&](std::span<const Bitstring> split) {
        out.emplace_back(split.begin(), split.end());
    });
    return out;
}

std::vector<Tuple> cp_tuple(std::uint64_t N, std::size_t parts, const TimedTuple& t) {
    std::vector<Tuple> out;
    for_each_cp_tuple(N, parts, t, [&](const Tuple& tup) { out.push_back(tup); });
    return out;
}

Database cp_database(std::uint64_t N, const MultivariateComponent& comp,
                     const TimedDatabase& dbar) {
    Database out = Database::for_query(comp.query);
    for (std::size_t i = 0; i < comp.perm.size(); ++i) {
        const Atom& atom = comp.query.atoms[i];
        const TimedRelation& src = dbar.at(atom.relation);
        Relation& dst = out.at(atom.relation);
        for (const auto& tt : src.tuples)
            for (auto& tup : cp_tuple(N, i + 1, tt)) dst.tuples.insert(std::move(tup));
    }
    return out;
}

std::vector<Update> cp_delta(std::uint64_t N, const MultivariateComponent& comp,
                             const TimedUpdate& du) {
    std::vector<Update> out;
    for (std::size_t i = 0; i < comp.perm.size(); ++i) {
        const Atom& atom = comp.query.atoms[i];
        if (atom.relation != du.rel) continue;
        for (auto& tup : cp_tuple(N, i + 1, du.tuple))
            out.push_back(Update{du.op, atom.relation, std::move(tup)});
    }
    return out;
}

Tuple g_map(std::size_t k, const Tuple& t) {
    if (t.size() < k) throw QueryError("tuple shorter than k in g_map");
    Bitstring cat;
    for (std::size_t i = 0; i < k; ++i) cat = cat.concat(Bitstring::of_value(t[i]));
    Tuple out;
    out.reserve(t.size() - k + 1);
    out.push_back(cat.intern());
    out.insert(out.end(), t.begin() + static_cast<std::ptrdiff_t>(k), t.end());
    return out;
}

Relation g_map(std::size_t k, const Relation& r) {
    Relation out;
    out.name = r.name;
    if (r.schema.size() >= k) {
        out.schema.assign(r.schema.begin() + static_cast<std::ptrdiff_t>(k) - 1, r.schema.end());
    }
    for (const auto& t : r.tuples) out.tuples.insert(g_map(k, t));
    return out;
}

std::vector<Tuple> h_map(std::size_t k, std::uint64_t N, const TimedTuple& t) {
    std::vector<Tuple> out;
    for (const auto& node : cp(N, t.span)) {
        if (node.len % k != 0) continue;
        std::uint32_t part = node.len / static_cast<std::uint32_t>(k);
        Tuple tup;
        tup.reserve(k + t.data.size());
        for (std::size_t i = 0; i < k; ++i) {
            std::uint32_t from = static_cast<std::uint32_t>(i) * part;
            std::uint64_t bits =
                part == 0 ? 0
                          : (node.bits >> (node.len - from - part)) & ((std::uint64_t(1) << part) - 1);
            tup.push_back(Bitstring{part, bits}.intern());
        }
        tup.insert(tup.end(), t.data.begin(), t.data.end());
        out.push_back(std::move(tup));
    }
    return out;
}

TimedDatabase interval_version(const MultivariateComponent& comp, const Database& dhat) {
    const std::size_t k = comp.perm.size();
    // All bitstring values must share one length.
    std::uint32_t ell = 0;
    bool seen = false;
    for (std::size_t i = 0; i < k; ++i) {
        const Relation& rel = dhat.at(comp.query.atoms[i].relation);
        for (const auto& t : rel.tuples) {
            for (std::size_t z = 0; z <= i; ++z) {
                Bitstring b = Bitstring::of_value(t[z]);
                if (!seen) { ell = b.len; seen = true; }
                else if (b.len != ell)
                    throw QueryError("interval version needs equal-length bitstring values");
            }
        }
    }
    std::uint64_t N = std::uint64_t(1) << (k * ell);

    TimedDatabase out;
    for (std::size_t i = 0; i < k; ++i) {
        const Atom& atom = comp.query.atoms[i];
        std::vector<Variable> points(atom.schema.begin() + static_cast<std::ptrdiff_t>(i) + 1,
                                     atom.schema.end());
        out.relations.emplace(atom.relation, TimedRelation{atom.relation, points, {}});
    }
    std::size_t total = 0;
    for (std::size_t i = 0; i < k; ++i) {
        const Relation& rel = dhat.at(comp.query.atoms[i].relation);
        TimedRelation& dst = out.at(comp.query.atoms[i].relation);
        for (const auto& t : rel.tuples) {
            Bitstring cat;
            for (std::size_t z = 0; z <= i; ++z) cat = cat.concat(Bitstring::of_value(t[z]));
            TimedTuple tt;
            tt.span = seg(N, cat);
            tt.data.assign(t.begin() + static_cast<std::ptrdiff_t>(i) + 1, t.end());
            dst.tuples.push_back(std::move(tt));
            ++total;
        }
    }
    assert(total == out.size());
    return out;
}

std::vector<TimedTuple> timed_join(const Query& base, const TimedDatabase& dbar) {
    std::vector<TimedTuple> out;
    std::unordered_map<Variable, std::size_t> slot;
    for (std::size_t i = 0; i < base.head.size(); ++i) slot.emplace(base.head[i], i);

    std::vector<const TimedRelation*> rels;
    for (const auto& a : base.atoms) rels.push_back(&dbar.at(a.relation));

    Tuple assign(base.head.size(), 0);
    struct Rec {
        const Query& base;
        const std::vector<const TimedRelation*>& rels;
        std::vector<TimedTuple>& out;
        Tuple& assign;
        std::vector<std::uint8_t> set;

        void run(std::size_t ai, const Lifespan& cur,
                 std::unordered_map<Variable, std::size_t>& slot) {
            if (ai == base.atoms.size()) {
                out.push_back(TimedTuple{cur, assign});
                return;
            }
            for (const auto& tt : rels[ai]->tuples) {
                if (!cur.intersects(tt.span) && ai > 0) continue;
                Lifespan next = ai == 0 ? tt.span : intersect(cur, tt.span);
                bool ok = true;
                std::vector<std::size_t> newly;
                for (std::size_t i = 0; i < base.atoms[ai].schema.size(); ++i) {
                    std::size_t s = slot.at(base.atoms[ai].schema[i]);
                    if (set[s]) {
                        if (assign[s] != tt.data[i]) { ok = false; break; }
                    } else {
                        set[s] = 1;
                        assign[s] = tt.data[i];
                        newly.push_back(s);
                    }
                }
                if (ok) run(ai + 1, next, slot);
                for (std::size_t s : newly) set[s] = 0;
            }
        }

        static Lifespan intersect(const Lifespan& a, const Lifespan& b) {
            Lifespan r;
            r.lo = std::max(a.lo, b.lo);
            r.open = a.open && b.open;
            r.hi = a.open ? b.hi : (b.open ? a.hi : std::min(a.hi, b.hi));
            return r;
        }
    };
    Rec rec{base, rels, out, assign, std::vector<std::uint8_t>(base.head.size(), 0)};
    rec.run(0, Lifespan{}, slot);
    // Dedup identical outputs arising from identical data rows.
    std::sort(out.begin(), out.end(), [](const TimedTuple& a, const TimedTuple& b) {
        if (a.data != b.data) return a.data < b.data;
        if (a.span.lo != b.span.lo) return a.span.lo < b.span.lo;
        if (a.span.open != b.span.open) return a.span.open < b.span.open;
        return a.span.hi < b.span.hi;
    });
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<Tuple> cp1_of_output(std::uint64_t N, const std::vector<TimedTuple>& out) {
    std::vector<Tuple> res;
    for (const auto& tt : out)
        for (auto& t : cp_tuple(N, 1, tt)) res.push_back(std::move(t));
    std::sort(res.begin(), res.end());
    res.erase(std::unique(res.begin(), res.end()), res.end());
    return res;
}

}  // namespace mvivm
