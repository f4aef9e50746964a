#include "mvivm/eval_reduction.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <unordered_set>

#include "mvivm/engine_insert_delete.hpp"
#include "mvivm/wcoj.hpp"

namespace mvivm {

namespace {

Query base_of(const MultivariateComponent& comp) {
    const std::size_t k = comp.perm.size();
    std::vector<Atom> atoms;
    for (std::size_t i = 0; i < k; ++i) {
        const Atom& a = comp.query.atoms[i];
        Atom b;
        b.relation = a.relation;
        b.schema.assign(a.schema.begin() + static_cast<std::ptrdiff_t>(i) + 1, a.schema.end());
        atoms.push_back(std::move(b));
    }
    std::vector<Variable> head(comp.query.head.begin() + static_cast<std::ptrdiff_t>(k),
                               comp.query.head.end());
    return make_query(comp.query.name, std::move(atoms), std::move(head));
}

}  // namespace

Relation eval_component_direct(const MultivariateComponent& comp, const Database& dhat) {
    return join_database(comp.query, dhat);
}

Relation eval_component_via_ivm(const MultivariateComponent& comp, const Database& dhat) {
    const std::size_t k = comp.perm.size();
    Query base = base_of(comp);

    // Interval version, tolerating mixed bitstring lengths: each tuple's
    // z-prefix concatenation names a segment-tree node directly.
    std::uint32_t max_len = 0;
    for (std::size_t i = 0; i < k; ++i) {
        for (const auto& t : dhat.at(comp.query.atoms[i].relation).tuples)
            for (std::size_t z = 0; z <= i; ++z)
                max_len = std::max(max_len, Bitstring::of_value(t[z]).len);
    }
    if (k * max_len > 40) throw BudgetError("interval version would exceed 2^40 timestamps");
    std::uint64_t N = std::uint64_t(1) << (k * max_len);

    struct Ev {
        std::uint64_t raw;
        int kind;  // 0 = start, 1 = end
        std::size_t atom;
        Tuple data;
    };
    std::vector<Ev> events;
    for (std::size_t i = 0; i < k; ++i) {
        const Relation& rel = dhat.at(comp.query.atoms[i].relation);
        // Dedup (span, data): different splits can share a concatenation.
        std::unordered_set<Tuple, TupleHash> seen;
        std::unordered_map<Tuple, std::vector<Lifespan>, TupleHash> by_data;
        for (const auto& t : rel.tuples) {
            Bitstring cat;
            for (std::size_t z = 0; z <= i; ++z) cat = cat.concat(Bitstring::of_value(t[z]));
            Lifespan span = seg(N, cat);
            Tuple key;
            key.push_back(intern(cat.str()));
            key.insert(key.end(), t.begin() + static_cast<std::ptrdiff_t>(i) + 1, t.end());
            if (!seen.insert(key).second) continue;
            Tuple data(t.begin() + static_cast<std::ptrdiff_t>(i) + 1, t.end());
            by_data[data].push_back(span);
            events.push_back(Ev{span.lo, 0, i, data});
            events.push_back(Ev{span.hi, 1, i, data});
        }
        // The sweep drives set-semantics relations: overlapping lifespans of
        // one data tuple would make an insert collide with a live tuple.
        for (auto& [data, spans] : by_data) {
            std::sort(spans.begin(), spans.end(),
                      [](const Lifespan& a, const Lifespan& b) { return a.lo < b.lo; });
            for (std::size_t s = 1; s < spans.size(); ++s)
                if (spans[s].lo <= spans[s - 1].hi)
                    throw QueryError(
                        "interval version has overlapping lifespans; pad the instance to "
                        "equal bitstring lengths");
        }
    }
    std::stable_sort(events.begin(), events.end(), [](const Ev& a, const Ev& b) {
        if (a.raw != b.raw) return a.raw < b.raw;
        return a.kind < b.kind;  // starts before ends at equal endpoints
    });

    InsertDeleteEngine engine(base, EnumMode::Delta);
    std::unordered_map<Tuple, std::deque<std::uint64_t>, TupleHash> open;
    std::vector<TimedTuple> outputs;
    for (const auto& ev : events) {
        const std::string& rel = comp.query.atoms[ev.atom].relation;
        DeltaHandle h =
            ev.kind == 0 ? engine.insert(rel, ev.data) : engine.remove(rel, ev.data);
        auto d = engine.enumerate_delta(h);
        while (auto t = d.tuples.next()) {
            if (d.sign == Op::Insert) {
                open[*t].push_back(ev.raw);
            } else {
                auto it = open.find(*t);
                if (it == open.end() || it->second.empty())
                    throw EngineError("unpaired delete during the sweep");
                std::uint64_t a = it->second.front();
                it->second.pop_front();
                outputs.push_back(TimedTuple{Lifespan{a, ev.raw, false}, *t});
            }
        }
    }
    for (const auto& [t, q] : open)
        if (!q.empty()) throw EngineError("unpaired insert at the end of the sweep");

    // Recover the component output: each output interval is a segment-tree
    // node; keep the splits whose prefixes exist in the instance.
    std::vector<std::unordered_set<Tuple, TupleHash>> members(k);
    for (std::size_t i = 0; i < k; ++i)
        for (const auto& t : dhat.at(comp.query.atoms[i].relation).tuples)
            members[i].insert(t);
    // Base-head position of each variable of each atom.
    std::unordered_map<Variable, std::size_t> base_slot;
    for (std::size_t i = 0; i < base.head.size(); ++i) base_slot.emplace(base.head[i], i);

    Relation out;
    out.name = comp.query.name;
    out.schema = comp.query.head;
    std::uint32_t height = log2_exact(N);
    for (const auto& tt : outputs) {
        std::uint64_t width = tt.span.hi - tt.span.lo + 1;
        std::uint32_t wlog = log2_exact(width);
        Bitstring node{height - wlog, (tt.span.lo - 1) / width};
        for (const auto& split : all_splits(node, k)) {
            bool ok = true;
            Bitstring prefix;
            for (std::size_t i = 0; i < k && ok; ++i) {
                prefix = prefix.concat(split[i]);
                Tuple probe;
                for (std::size_t z = 0; z <= i; ++z) probe.push_back(split[z].intern());
                for (const auto& v : base.atoms[i].schema)
                    probe.push_back(tt.data[base_slot.at(v)]);
                if (!members[i].count(probe)) ok = false;
            }
            if (!ok) continue;
            Tuple result;
            for (std::size_t i = 0; i < k; ++i) result.push_back(split[i].intern());
            result.insert(result.end(), tt.data.begin(), tt.data.end());
            out.tuples.insert(std::move(result));
        }
    }
    return out;
}

}  // namespace mvivm
