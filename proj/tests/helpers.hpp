#ifndef MVIVM_TEST_HELPERS_HPP
#define MVIVM_TEST_HELPERS_HPP

#include <algorithm>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "mvivm/query.hpp"
#include "mvivm/segtree.hpp"

namespace testq {

using namespace mvivm;

inline Query parse(const std::string& s) { return parse_query(s); }

inline Query triangle() { return parse("Q(A,B,C) :- R(A,B), S(B,C), T(A,C)."); }
inline Query path3() { return parse("Q(A,B,C,D) :- R(A,B), S(B,C), T(C,D)."); }
inline Query two_triangles() {
    return parse("Q(A,B,C,D) :- R(A,B), S(B,C), T(A,C), U(B,D), V(C,D).");
}
inline Query hierarchical2() { return parse("Q(A,B,C) :- R(A,B), S(A,C)."); }
inline Query nonhier() { return parse("Q(A,B) :- R(A), S(A,B), T(B)."); }
inline Query lw4() { return parse("Q(A,B,C,D) :- R(A,B,C), S(B,C,D), T(C,D,A), U(D,A,B)."); }
// The nine comparison queries.
inline Query q2p_prime() { return parse("Q(A,B,C) :- R(A,B,C), S(A,B), T(B,C)."); }
inline Query q_triangle_prime() { return parse("Q(A,B,C) :- R(A,B), S(B,C), T(A,C), U(C)."); }
inline Query q_star() { return parse("Q(A,B,C,D) :- R(A,B,C,D), S(A,B), T(B,C), U(B,D)."); }
inline Query q3u() { return parse("Q(A,B,C) :- R(A,B,C), S(A), T(B), U(C)."); }
inline Query q4u() { return parse("Q(A,B,C,D) :- R(A,B,C,D), S(A), T(B), U(C), V(D)."); }
inline Query q2p_dprime() { return parse("Q(A,B,C) :- R(A), S(A,B), T(B,C), U(C)."); }
inline Query q_square() { return parse("Q(A,B,C,D) :- R(A,B), S(B,C), T(C,D), U(A,D)."); }

inline Tuple tup(const std::vector<std::string>& vs) { return make_tuple(vs); }

// Nested-loop join; the bottom of the oracle chain.
inline std::vector<Tuple> brute_join(const Query& q, const Database& db) {
    std::vector<Tuple> out;
    std::unordered_map<Variable, std::size_t> slot;
    for (std::size_t i = 0; i < q.head.size(); ++i) slot.emplace(q.head[i], i);
    Tuple assign(q.head.size(), 0);
    std::vector<std::uint8_t> bound(q.head.size(), 0);

    struct Rec {
        const Query& q;
        const Database& db;
        std::vector<Tuple>& out;
        Tuple& assign;
        std::vector<std::uint8_t>& bound;
        std::unordered_map<Variable, std::size_t>& slot;

        void run(std::size_t ai) {
            if (ai == q.atoms.size()) {
                out.push_back(assign);
                return;
            }
            const Atom& a = q.atoms[ai];
            for (const auto& t : db.at(a.relation).tuples) {
                bool ok = true;
                std::vector<std::size_t> newly;
                for (std::size_t i = 0; i < a.schema.size() && ok; ++i) {
                    std::size_t s = slot.at(a.schema[i]);
                    if (bound[s]) {
                        if (assign[s] != t[i]) ok = false;
                    } else {
                        bound[s] = 1;
                        assign[s] = t[i];
                        newly.push_back(s);
                    }
                }
                if (ok) run(ai + 1);
                for (std::size_t s : newly) bound[s] = 0;
            }
        }
    };
    Rec{q, db, out, assign, bound, slot}.run(0);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

inline std::vector<Tuple> sorted(std::vector<Tuple> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

inline std::vector<Tuple> rel_sorted(const Relation& r) {
    std::vector<Tuple> v(r.tuples.begin(), r.tuples.end());
    std::sort(v.begin(), v.end());
    return v;
}

// Random database with values per variable drawn from a small pool.
inline Database random_db(const Query& q, std::size_t max_per_rel, std::mt19937_64& rng,
                          std::size_t domain = 0) {
    Database db = Database::for_query(q);
    for (auto& [name, rel] : db.relations) {
        std::size_t rows = rng() % (max_per_rel + 1);
        std::size_t d = domain ? domain : std::max<std::size_t>(2, max_per_rel / 2);
        for (std::size_t i = 0; i < rows; ++i) {
            Tuple t;
            for (const auto& v : rel.schema) t.push_back(intern(v + std::to_string(rng() % d)));
            rel.tuples.insert(std::move(t));
        }
    }
    return db;
}

// The triangle lifespan database of the worked example (over the 8-leaf tree).
inline TimedDatabase example_timed_db() {
    TimedDatabase db = TimedDatabase::for_query(triangle());
    db.at("R").tuples.push_back({Lifespan{1, 8, false}, tup({"a1", "b1"})});
    db.at("S").tuples.push_back({Lifespan{2, 5, false}, tup({"b1", "c1"})});
    db.at("S").tuples.push_back({Lifespan{4, 6, false}, tup({"b2", "c1"})});
    db.at("T").tuples.push_back({Lifespan{3, 7, false}, tup({"a1", "c1"})});
    return db;
}

// The 8-step triangle update stream of the worked example.
inline UpdateStream table1_stream() {
    UpdateStream s;
    auto add = [&](Op op, const char* rel, std::vector<std::string> vs) {
        s.updates.push_back(Update{op, rel, tup(vs)});
    };
    add(Op::Insert, "R", {"a1", "b1"});
    add(Op::Insert, "S", {"b1", "c1"});
    add(Op::Insert, "T", {"a1", "c1"});
    add(Op::Insert, "S", {"b2", "c1"});
    add(Op::Delete, "S", {"b1", "c1"});
    add(Op::Delete, "S", {"b2", "c1"});
    add(Op::Delete, "T", {"a1", "c1"});
    add(Op::Delete, "R", {"a1", "b1"});
    return s;
}

}  // namespace testq

#endif
