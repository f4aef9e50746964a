#include "mvivm/engine_insert_delete.hpp"

#include <algorithm>
#include <unordered_set>

#include "view_forest.hpp"

namespace mvivm {

namespace {

struct ComponentState {
    std::unique_ptr<detail::ViewForest> forest;
    // Distinct lifespans of one data tuple can share encoded tuples, so the
    // component instance is reference-counted behind set semantics.
    std::unordered_map<std::string, std::unordered_map<Tuple, std::uint32_t, TupleHash>> counts;
};

}  // namespace

struct InsertDeleteEngine::Impl {
    Query q;
    EnumMode mode;
    bool auto_reset;
    std::shared_ptr<const MultivariateExtension> mv;
    std::size_t k;
    std::vector<ComponentState> comps;

    struct RelState {
        std::unordered_map<Tuple, std::uint64_t, TupleHash> open;  // data -> start
        std::vector<TimedTuple> archive;                           // closed spans
    };
    std::unordered_map<std::string, RelState> dbar;

    std::uint64_t N = 1;
    std::uint64_t tau = 0;
    std::uint64_t updates_since_reset = 0;
    std::uint64_t size_at_reset = 0;
    std::uint64_t version = 0;
    mutable std::uint64_t collisions = 0;
    std::vector<std::size_t> emit_slots;

    Impl(const Query& query, EnumMode m, bool reset)
        : q(query), mode(m), auto_reset(reset), mv(multivariate_extension_cached(query)) {
        k = q.atoms.size();
        for (const auto& a : q.atoms) dbar.emplace(a.relation, RelState{});
        for (std::size_t i = 0; i < q.head.size(); ++i) emit_slots.push_back(k + i);
        fresh_forests();
    }

    void fresh_forests() {
        comps.clear();
        for (const auto& comp : mv->components) {
            ComponentState cs;
            cs.forest = std::make_unique<detail::ViewForest>(comp.query, comp.td,
                                                             /*topdown=*/false,
                                                             /*deletes=*/true);
            comps.push_back(std::move(cs));
        }
    }

    using Counts = std::unordered_map<Tuple, std::uint32_t, TupleHash>;

    void encode_one(ComponentState& cs, Counts& cnt, Op op, const std::string& rel,
                    const Tuple& t) {
        if (op == Op::Insert) {
            auto it = cnt.find(t);
            if (it != cnt.end()) {
                ++it->second;
                return;
            }
            cnt.emplace(t, 1);
            cs.forest->insert_base(rel, t);
        } else {
            auto it = cnt.find(t);
            if (it == cnt.end()) throw EngineError("internal: erasing unseen encoded tuple");
            if (--it->second == 0) {
                cnt.erase(it);
                cs.forest->erase_base(rel, t);
            }
        }
    }

    // Position of `rel` in component ci (every relation appears exactly once).
    std::size_t atom_pos(std::size_t ci, const std::string& rel) const {
        const auto& atoms = mv->components[ci].query.atoms;
        for (std::size_t i = 0; i < k; ++i)
            if (atoms[i].relation == rel) return i;
        throw QueryError("unknown relation symbol: " + rel);
    }

    void encode_span(Op op, const std::string& rel, const TimedTuple& tt) {
        for (std::size_t ci = 0; ci < mv->components.size(); ++ci) {
            ComponentState& cs = comps[ci];
            Counts& cnt = cs.counts[rel];
            std::size_t i = atom_pos(ci, rel);
            for_each_cp_tuple(N, i + 1, tt,
                              [&](const Tuple& tup) { encode_one(cs, cnt, op, rel, tup); });
        }
    }

    // Truncation: replace the [from] encoding with the [to] encoding,
    // touching only the symmetric difference of the two split sets.
    void reencode_span(const std::string& rel, const Tuple& data, const Lifespan& from,
                       const Lifespan& to) {
        std::vector<Tuple> old_t, new_t, only_old, only_new;
        for (std::size_t ci = 0; ci < mv->components.size(); ++ci) {
            ComponentState& cs = comps[ci];
            Counts& cnt = cs.counts[rel];
            std::size_t i = atom_pos(ci, rel);
            old_t.clear();
            new_t.clear();
            for_each_cp_tuple(N, i + 1, TimedTuple{from, data},
                              [&](const Tuple& t) { old_t.push_back(t); });
            for_each_cp_tuple(N, i + 1, TimedTuple{to, data},
                              [&](const Tuple& t) { new_t.push_back(t); });
            std::sort(old_t.begin(), old_t.end());
            std::sort(new_t.begin(), new_t.end());
            only_old.clear();
            only_new.clear();
            std::set_difference(old_t.begin(), old_t.end(), new_t.begin(), new_t.end(),
                                std::back_inserter(only_old));
            std::set_difference(new_t.begin(), new_t.end(), old_t.begin(), old_t.end(),
                                std::back_inserter(only_new));
            for (const auto& t : only_old) encode_one(cs, cnt, Op::Delete, rel, t);
            for (const auto& t : only_new) encode_one(cs, cnt, Op::Insert, rel, t);
        }
    }

    Lifespan open_encoding(std::uint64_t since) const { return Lifespan{since, N, false}; }

    void ensure_capacity(std::uint64_t need) {
        if (need <= N) return;
        std::uint64_t old_n = N;
        while (N < need) N *= 2;
        if (N != old_n) rebuild();
    }

    void rebuild() {
        fresh_forests();
        for (auto& [rel, st] : dbar) {
            for (const auto& tt : st.archive) encode_span(Op::Insert, rel, tt);
            for (const auto& [data, since] : st.open)
                encode_span(Op::Insert, rel, TimedTuple{open_encoding(since), data});
        }
    }

    std::size_t live_size() const {
        std::size_t n = 0;
        for (const auto& [_, st] : dbar) n += st.open.size();
        return n;
    }

    void do_insert(const std::string& rel, const Tuple& t) {
        RelState& st = rel_state(rel);
        if (st.open.count(t))
            throw EngineError("duplicate insert into " + rel + ": " + tuple_str(t));
        ++tau;
        ensure_capacity(tau + 1);
        st.open.emplace(t, tau);
        encode_span(Op::Insert, rel, TimedTuple{open_encoding(tau), t});
        if (mode == EnumMode::Delta) {
            TimedTuple single{Lifespan{tau, tau, false}, t};
            st.archive.push_back(single);
            encode_span(Op::Insert, rel, single);
        }
    }

    void do_remove(const std::string& rel, const Tuple& t) {
        RelState& st = rel_state(rel);
        auto it = st.open.find(t);
        if (it == st.open.end())
            throw EngineError("delete of absent tuple from " + rel + ": " + tuple_str(t));
        ++tau;
        ensure_capacity(tau + 1);
        std::uint64_t since = it->second;
        st.open.erase(it);
        Lifespan closed{since, tau, false};
        reencode_span(rel, t, open_encoding(since), closed);
        st.archive.push_back(TimedTuple{closed, t});
        if (mode == EnumMode::Delta) {
            TimedTuple single{Lifespan{tau, tau, false}, t};
            st.archive.push_back(single);
            encode_span(Op::Insert, rel, single);
        }
    }

    RelState& rel_state(const std::string& rel) {
        auto it = dbar.find(rel);
        if (it == dbar.end()) throw QueryError("unknown relation symbol: " + rel);
        return it->second;
    }

    void maybe_reset() {
        if (!auto_reset) return;
        std::uint64_t threshold = std::max<std::uint64_t>(1, size_at_reset / 2);
        if (updates_since_reset < threshold) return;
        // Restart from the live database: fresh clock, fresh segment tree.
        std::vector<std::pair<std::string, std::vector<Tuple>>> live;
        for (auto& [rel, st] : dbar) {
            std::vector<Tuple> ts;
            ts.reserve(st.open.size());
            for (const auto& [data, _] : st.open) ts.push_back(data);
            std::sort(ts.begin(), ts.end());
            live.push_back({rel, std::move(ts)});
            st.open.clear();
            st.archive.clear();
        }
        std::sort(live.begin(), live.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        tau = 0;
        N = 1;
        fresh_forests();
        updates_since_reset = 0;
        size_at_reset = 0;
        for (const auto& [rel, ts] : live) size_at_reset += ts.size();
        for (const auto& [rel, ts] : live)
            for (const auto& t : ts) do_insert(rel, t);
    }
};

namespace {

// Union over components of Z-selection probes, duplicates suppressed.
class ProbeUnionStream final : public detail::StreamImpl {
public:
    ProbeUnionStream(const InsertDeleteEngine::Impl* e, std::vector<Tuple> prefixes,
                     std::uint64_t expect)
        : e_(e), prefixes_(std::move(prefixes)), expect_(expect) {}

    std::optional<Tuple> next() override {
        if (prefixes_.empty()) return std::nullopt;
        for (;;) {
            if (cur_) {
                auto t = cur_->next();
                if (t) {
                    if (seen_.insert(*t).second) return t;
                    ++e_->collisions;
                    continue;
                }
                cur_.reset();
                ++probe_;
            }
            for (;;) {
                if (comp_ >= e_->comps.size()) return std::nullopt;
                if (probe_ >= prefixes_.size()) {
                    probe_ = 0;
                    ++comp_;
                    if (comp_ >= e_->comps.size()) return std::nullopt;
                }
                // Cheap liveness probe before building a walk.
                const auto& p = prefixes_[probe_];
                if (e_->comps[comp_].forest->root_prefix_nonempty(
                        std::span<const Value>(p.data(), p.size())))
                    break;
                ++probe_;
            }
            cur_ = e_->comps[comp_].forest->walk_full(prefixes_[probe_], e_->emit_slots,
                                                      &e_->version, expect_);
        }
    }

private:
    const InsertDeleteEngine::Impl* e_;
    std::vector<Tuple> prefixes_;
    std::uint64_t expect_;
    std::size_t comp_ = 0;
    std::size_t probe_ = 0;
    std::unique_ptr<detail::StreamImpl> cur_;
    std::unordered_set<Tuple, TupleHash> seen_;
};

class EmptyStream final : public detail::StreamImpl {
public:
    std::optional<Tuple> next() override { return std::nullopt; }
};

std::vector<Tuple> split_prefixes(std::uint64_t N, std::uint64_t t, std::size_t k,
                                  bool include_proper_prefixes) {
    std::vector<Tuple> out;
    if (t < 1 || t > N) return out;
    std::vector<Bitstring> nodes =
        include_proper_prefixes ? stab(N, t) : std::vector<Bitstring>{leaf_of(N, t)};
    for (const auto& b : nodes) {
        for (const auto& split : all_splits(b, k)) {
            Tuple prefix;
            prefix.reserve(k);
            for (const auto& z : split) prefix.push_back(z.intern());
            out.push_back(std::move(prefix));
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

}  // namespace

InsertDeleteEngine::InsertDeleteEngine(const Query& q, EnumMode mode, bool auto_reset)
    : impl_(std::make_unique<Impl>(q, mode, auto_reset)) {}
InsertDeleteEngine::~InsertDeleteEngine() = default;
InsertDeleteEngine::InsertDeleteEngine(InsertDeleteEngine&&) noexcept = default;
InsertDeleteEngine& InsertDeleteEngine::operator=(InsertDeleteEngine&&) noexcept = default;

DeltaHandle InsertDeleteEngine::insert(const std::string& rel, const Tuple& t) {
    auto idx = impl_->q.atom_index(rel);
    if (!idx) throw QueryError("unknown relation symbol: " + rel);
    if (t.size() != impl_->q.atoms[*idx].schema.size())
        throw QueryError("arity mismatch for relation " + rel);
    impl_->maybe_reset();
    ++impl_->version;
    impl_->do_insert(rel, t);
    ++impl_->updates_since_reset;
    return DeltaHandle{impl_->version, Op::Insert, rel, t, false};
}

DeltaHandle InsertDeleteEngine::remove(const std::string& rel, const Tuple& t) {
    auto idx = impl_->q.atom_index(rel);
    if (!idx) throw QueryError("unknown relation symbol: " + rel);
    if (t.size() != impl_->q.atoms[*idx].schema.size())
        throw QueryError("arity mismatch for relation " + rel);
    impl_->maybe_reset();
    ++impl_->version;
    impl_->do_remove(rel, t);
    ++impl_->updates_since_reset;
    return DeltaHandle{impl_->version, Op::Delete, rel, t, false};
}

DeltaHandle InsertDeleteEngine::apply(const Update& u) {
    return u.op == Op::Insert ? insert(u.relation, u.tuple) : remove(u.relation, u.tuple);
}

TupleStream InsertDeleteEngine::enumerate_full() const {
    if (impl_->tau == 0) return TupleStream(std::make_unique<EmptyStream>());
    // A tuple is alive at time tau iff its lifespan still covers tau + 1:
    // closed spans end at their deletion timestamp.
    auto prefixes = split_prefixes(impl_->N, impl_->tau + 1, impl_->k, true);
    return TupleStream(
        std::make_unique<ProbeUnionStream>(impl_.get(), std::move(prefixes), impl_->version));
}

InsertDeleteEngine::SignedDelta InsertDeleteEngine::enumerate_delta(const DeltaHandle& h) const {
    if (impl_->mode != EnumMode::Delta)
        throw EngineError("delta enumeration requires a delta-mode engine");
    if (h.version != impl_->version)
        throw EngineError("stale delta handle: the engine has been updated");
    auto prefixes = split_prefixes(impl_->N, impl_->tau, impl_->k, false);
    return SignedDelta{h.sign, TupleStream(std::make_unique<ProbeUnionStream>(
                                   impl_.get(), std::move(prefixes), impl_->version))};
}

bool InsertDeleteEngine::contains(const std::string& rel, const Tuple& t) const {
    auto it = impl_->dbar.find(rel);
    return it != impl_->dbar.end() && it->second.open.count(t) > 0;
}

std::size_t InsertDeleteEngine::live_size() const { return impl_->live_size(); }
std::uint64_t InsertDeleteEngine::capacity() const { return impl_->N; }
std::uint64_t InsertDeleteEngine::timestamp() const { return impl_->tau; }
std::uint64_t InsertDeleteEngine::version() const { return impl_->version; }
std::uint64_t InsertDeleteEngine::enum_collisions() const { return impl_->collisions; }
const MultivariateExtension& InsertDeleteEngine::extension() const { return *impl_->mv; }

TimedDatabase InsertDeleteEngine::lifespans() const {
    TimedDatabase out = TimedDatabase::for_query(impl_->q);
    for (const auto& [rel, st] : impl_->dbar) {
        TimedRelation& dst = out.at(rel);
        dst.tuples = st.archive;
        for (const auto& [data, since] : st.open)
            dst.tuples.push_back(TimedTuple{Lifespan{since, 0, true}, data});
    }
    return out;
}

}  // namespace mvivm
