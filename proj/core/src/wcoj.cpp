#include "mvivm/wcoj.hpp"

#include <algorithm>
#include <unordered_map>

namespace mvivm {

namespace {

std::unordered_map<Variable, std::size_t> slot_map(const std::vector<Variable>& order) {
    std::unordered_map<Variable, std::size_t> m;
    for (std::size_t i = 0; i < order.size(); ++i) m.emplace(order[i], i);
    return m;
}

// Schema positions sorted by: bound-for-this-context first, then global slot.
std::vector<std::size_t> context_order(const Atom& a,
                                       const std::unordered_map<Variable, std::size_t>& slot,
                                       const std::vector<std::uint8_t>& lead) {
    std::vector<std::size_t> pos(a.schema.size());
    for (std::size_t i = 0; i < pos.size(); ++i) pos[i] = i;
    std::sort(pos.begin(), pos.end(), [&](std::size_t x, std::size_t y) {
        std::size_t sx = slot.at(a.schema[x]);
        std::size_t sy = slot.at(a.schema[y]);
        bool lx = lead[sx], ly = lead[sy];
        if (lx != ly) return lx;
        return sx < sy;
    });
    return pos;
}

}  // namespace

std::vector<std::vector<std::size_t>> refs_at_slots(std::span<const AtomRef> refs,
                                                    std::span<const std::size_t> iter_slots,
                                                    const std::vector<std::uint8_t>& bound) {
    std::vector<std::vector<std::size_t>> at_slot(iter_slots.size());
    for (std::size_t r = 0; r < refs.size(); ++r) {
        std::size_t lv = 0;
        while (lv < refs[r].depth && bound[refs[r].slots[lv]]) ++lv;
        std::size_t d = 0;
        for (; lv < refs[r].depth; ++lv) {
            while (d < iter_slots.size() && iter_slots[d] != refs[r].slots[lv]) ++d;
            assert(d < iter_slots.size());
            at_slot[d].push_back(r);
        }
    }
    return at_slot;
}

JoinPlan compile_plan(const Query& q, IndexedDatabase& db, std::vector<Variable> var_order) {
    JoinPlan plan;
    plan.query = q;
    plan.var_order = var_order.empty() ? q.head : std::move(var_order);
    auto slot = slot_map(plan.var_order);
    if (plan.var_order.size() != q.head.size())
        throw QueryError("variable order must cover the query head");

    plan.head_slot.resize(q.head.size());
    for (std::size_t i = 0; i < q.head.size(); ++i) plan.head_slot[i] = slot.at(q.head[i]);

    std::vector<std::uint8_t> none(plan.var_order.size(), 0);
    for (const auto& a : q.atoms) {
        IndexedRelation& rel = db.at(a.relation);
        auto order = context_order(a, slot, none);
        rel.add_order(order);
        plan.join_order.push_back(order);
        std::vector<std::size_t> slots(a.schema.size());
        for (std::size_t i = 0; i < a.schema.size(); ++i) slots[i] = slot.at(a.schema[i]);
        plan.atom_slots.push_back(std::move(slots));
    }
    // Orders needed by delta_join: for each possible inserted atom, every
    // other atom indexed with the shared variables first.
    for (const auto& ins : q.atoms) {
        std::vector<std::uint8_t> lead(plan.var_order.size(), 0);
        for (const auto& v : ins.schema) lead[slot.at(v)] = 1;
        for (const auto& a : q.atoms) {
            if (a.relation == ins.relation || a.schema.empty()) continue;
            db.at(a.relation).add_order(context_order(a, slot, lead));
        }
    }
    return plan;
}

namespace {

struct PreparedRefs {
    std::vector<AtomRef> refs;
    std::vector<std::size_t> iter_slots;
    bool guard_failed = false;  // a nullary atom with an empty relation
};

PreparedRefs prepare(const JoinPlan& plan, const IndexedDatabase& db,
                     const std::vector<std::uint8_t>& bound, int skip_atom) {
    PreparedRefs out;
    auto slot = slot_map(plan.var_order);
    for (std::size_t ai = 0; ai < plan.query.atoms.size(); ++ai) {
        if (static_cast<int>(ai) == skip_atom) continue;
        const Atom& a = plan.query.atoms[ai];
        const IndexedRelation& rel = db.at(a.relation);
        if (a.schema.empty()) {
            if (rel.size() == 0) out.guard_failed = true;
            continue;
        }
        auto order = context_order(a, slot, bound);
        int oid = rel.find_order(order);
        if (oid == IndexedRelation::npos)
            throw QueryError("missing index order on " + a.relation);
        AtomRef ref;
        ref.rel = &rel;
        ref.order_id = static_cast<std::size_t>(oid);
        ref.depth = order.size();
        for (std::size_t lv = 0; lv < order.size(); ++lv)
            ref.slots.push_back(slot.at(a.schema[order[lv]]));
        out.refs.push_back(std::move(ref));
    }
    for (std::size_t s = 0; s < plan.var_order.size(); ++s)
        if (!bound[s]) out.iter_slots.push_back(s);
    return out;
}

Relation collect(const JoinPlan& plan, const IndexedDatabase& db,
                 const std::vector<std::uint8_t>& bound, std::vector<Value>& assign,
                 int skip_atom) {
    Relation out;
    out.name = plan.query.name;
    out.schema = plan.query.head;
    auto prep = prepare(plan, db, bound, skip_atom);
    if (prep.guard_failed) return out;
    join_refs(std::span<const AtomRef>(prep.refs),
              std::span<const std::size_t>(prep.iter_slots), assign, bound,
              [&](std::span<const Value> vals) {
                  Tuple t(plan.head_slot.size());
                  for (std::size_t i = 0; i < plan.head_slot.size(); ++i)
                      t[i] = vals[plan.head_slot[i]];
                  out.tuples.insert(std::move(t));
              });
    return out;
}

}  // namespace

Relation generic_join(const JoinPlan& plan, const IndexedDatabase& db) {
    std::vector<std::uint8_t> bound(plan.var_order.size(), 0);
    std::vector<Value> assign(plan.var_order.size(), 0);
    return collect(plan, db, bound, assign, -1);
}

Relation delta_join(const JoinPlan& plan, const IndexedDatabase& db,
                    const std::string& atom_rel, const Tuple& inserted) {
    auto idx = plan.query.atom_index(atom_rel);
    if (!idx) throw QueryError("unknown relation symbol: " + atom_rel);
    const Atom& a = plan.query.atoms[*idx];
    if (inserted.size() != a.schema.size())
        throw QueryError("arity mismatch for relation " + atom_rel);

    std::vector<std::uint8_t> bound(plan.var_order.size(), 0);
    std::vector<Value> assign(plan.var_order.size(), 0);
    for (std::size_t i = 0; i < a.schema.size(); ++i) {
        std::size_t s = plan.atom_slots[*idx][i];
        bound[s] = 1;
        assign[s] = inserted[i];
    }
    return collect(plan, db, bound, assign, static_cast<int>(*idx));
}

Relation join_database(const Query& q, const Database& db) {
    IndexedDatabase idb = IndexedDatabase::for_query(q);
    for (const auto& [name, rel] : db.relations) {
        auto it = idb.relations.find(name);
        if (it == idb.relations.end()) continue;
        for (const auto& t : rel.tuples) it->second.insert(t);
    }
    JoinPlan plan = compile_plan(q, idb);
    return generic_join(plan, idb);
}

}  // namespace mvivm
