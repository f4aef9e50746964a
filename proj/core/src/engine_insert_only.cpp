#include "mvivm/engine_insert_only.hpp"

#include "view_forest.hpp"

namespace mvivm {

namespace {

class EmptyStream final : public detail::StreamImpl {
public:
    std::optional<Tuple> next() override { return std::nullopt; }
};

}  // namespace

struct InsertOnlyEngine::Impl {
    Query q;
    EnumMode mode;
    TreeDecomposition td;
    std::unique_ptr<detail::ViewForest> forest;
    std::uint64_t version = 0;
    std::vector<std::size_t> emit_slots;

    Impl(const Query& query, EnumMode m) : q(query), mode(m) {
        auto [w, decomposition] = fhtw(q);
        (void)w;
        td = std::move(decomposition);
        forest = std::make_unique<detail::ViewForest>(q, td, mode == EnumMode::Delta,
                                                      /*deletes=*/false);
        for (std::size_t i = 0; i < q.head.size(); ++i) emit_slots.push_back(i);
    }
};

InsertOnlyEngine::InsertOnlyEngine(const Query& q, EnumMode mode)
    : impl_(std::make_unique<Impl>(q, mode)) {}
InsertOnlyEngine::~InsertOnlyEngine() = default;
InsertOnlyEngine::InsertOnlyEngine(InsertOnlyEngine&&) noexcept = default;
InsertOnlyEngine& InsertOnlyEngine::operator=(InsertOnlyEngine&&) noexcept = default;

DeltaHandle InsertOnlyEngine::insert(const std::string& rel, const Tuple& t) {
    auto idx = impl_->q.atom_index(rel);
    if (!idx) throw QueryError("unknown relation symbol: " + rel);
    if (t.size() != impl_->q.atoms[*idx].schema.size())
        throw QueryError("arity mismatch for relation " + rel);
    ++impl_->version;
    bool fresh = impl_->forest->insert_base(rel, t);
    DeltaHandle h;
    h.version = impl_->version;
    h.sign = Op::Insert;
    h.relation = rel;
    h.tuple = t;
    h.noop = !fresh;
    return h;
}

TupleStream InsertOnlyEngine::enumerate_full() const {
    return TupleStream(impl_->forest->walk_full({}, impl_->emit_slots, &impl_->version,
                                                impl_->version));
}

TupleStream InsertOnlyEngine::enumerate_delta(const DeltaHandle& h) const {
    if (impl_->mode != EnumMode::Delta)
        throw EngineError("delta enumeration requires a delta-mode engine");
    if (h.version != impl_->version)
        throw EngineError("stale delta handle: the engine has been updated");
    if (h.noop) return TupleStream(std::make_unique<EmptyStream>());
    std::size_t ai = *impl_->q.atom_index(h.relation);
    return TupleStream(impl_->forest->walk_delta(ai, h.tuple, impl_->emit_slots,
                                                 &impl_->version, impl_->version));
}

const Query& InsertOnlyEngine::query() const { return impl_->q; }
const TreeDecomposition& InsertOnlyEngine::decomposition() const { return impl_->td; }
EnumMode InsertOnlyEngine::mode() const { return impl_->mode; }
std::uint64_t InsertOnlyEngine::version() const { return impl_->version; }

}  // namespace mvivm
