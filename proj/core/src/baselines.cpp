#include "mvivm/baselines.hpp"

#include <algorithm>

namespace mvivm {

std::vector<Tuple> sorted_tuples(const Relation& r) {
    std::vector<Tuple> out(r.tuples.begin(), r.tuples.end());
    std::sort(out.begin(), out.end());
    return out;
}

NaiveEngine::NaiveEngine(const Query& q)
    : q_(q), db_(IndexedDatabase::for_query(q)), plan_(compile_plan(q_, db_)) {
    result_.name = q.name;
    result_.schema = q.head;
}

void NaiveEngine::apply(const Update& u, bool lenient) {
    IndexedRelation& r = db_.at(u.relation);
    if (u.op == Op::Insert) {
        r.insert(u.tuple);
    } else if (!r.erase(u.tuple) && !lenient) {
        throw QueryError("delete of absent tuple from " + u.relation);
    }
    result_ = generic_join(plan_, db_);
}

DeltaEngine::DeltaEngine(const Query& q)
    : q_(q),
      db_(IndexedDatabase::for_query(q)),
      plan_(compile_plan(q_, db_)),
      result_(q.head, {}) {
    // One order per atom with the atom's variables leading, to collect the
    // result tuples matching a deleted input tuple.
    std::unordered_map<Variable, std::size_t> slot;
    for (std::size_t i = 0; i < q_.head.size(); ++i) slot.emplace(q_.head[i], i);
    for (const auto& a : q_.atoms) {
        std::vector<std::size_t> order;
        for (const auto& v : a.schema) order.push_back(slot.at(v));
        for (std::size_t i = 0; i < q_.head.size(); ++i)
            if (std::find(order.begin(), order.end(), i) == order.end()) order.push_back(i);
        victim_orders_.push_back(result_.add_order(order));
    }
}

std::vector<SignedTuple> DeltaEngine::apply(const Update& u, bool lenient) {
    std::vector<SignedTuple> delta;
    std::size_t ai = q_.atom_index(u.relation).value();
    IndexedRelation& r = db_.at(u.relation);
    if (u.op == Op::Insert) {
        if (!r.insert(u.tuple)) return delta;  // set semantics: no change
        Relation d = delta_join(plan_, db_, u.relation, u.tuple);
        for (const auto& t : d.tuples) {
            if (result_.insert(t)) delta.push_back({Op::Insert, t});
        }
        std::sort(delta.begin(), delta.end());
        return delta;
    }
    if (!r.erase(u.tuple)) {
        if (lenient) return delta;
        throw QueryError("delete of absent tuple from " + u.relation);
    }
    std::vector<Tuple> victims;
    result_.scan(victim_orders_[ai], std::span<const Value>(u.tuple.data(), u.tuple.size()),
                 victims);
    for (const auto& t : victims) {
        // Support re-check against the post-update database.
        bool supported = true;
        std::unordered_map<Variable, Value> bind;
        for (std::size_t i = 0; i < q_.head.size(); ++i) bind.emplace(q_.head[i], t[i]);
        for (const auto& a : q_.atoms) {
            Tuple proj;
            for (const auto& v : a.schema) proj.push_back(bind.at(v));
            if (!db_.at(a.relation).contains(proj)) {
                supported = false;
                break;
            }
        }
        if (!supported) {
            result_.erase(t);
            delta.push_back({Op::Delete, t});
        }
    }
    std::sort(delta.begin(), delta.end());
    return delta;
}

std::vector<Tuple> DeltaEngine::result() const {
    auto out = result_.all_tuples();
    std::sort(out.begin(), out.end());
    return out;
}

Transcript naive_maintain(const Query& q, const UpdateStream& s, bool lenient) {
    Transcript tr;
    NaiveEngine eng(q);
    std::vector<Tuple> prev;
    for (const auto& u : s.updates) {
        eng.apply(u, lenient);
        std::vector<Tuple> cur = sorted_tuples(eng.result());
        std::vector<SignedTuple> d;
        std::size_t i = 0, j = 0;
        while (i < prev.size() || j < cur.size()) {
            if (j == cur.size() || (i < prev.size() && prev[i] < cur[j]))
                d.push_back({Op::Delete, prev[i++]});
            else if (i == prev.size() || cur[j] < prev[i])
                d.push_back({Op::Insert, cur[j++]});
            else {
                ++i;
                ++j;
            }
        }
        std::sort(d.begin(), d.end());
        tr.delta.push_back(std::move(d));
        tr.full.push_back(cur);
        prev = std::move(cur);
    }
    return tr;
}

Transcript delta_maintain(const Query& q, const UpdateStream& s, bool lenient) {
    Transcript tr;
    DeltaEngine eng(q);
    for (const auto& u : s.updates) {
        tr.delta.push_back(eng.apply(u, lenient));
        tr.full.push_back(eng.result());
    }
    return tr;
}

}  // namespace mvivm
