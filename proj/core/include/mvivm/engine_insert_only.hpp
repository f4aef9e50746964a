#ifndef MVIVM_ENGINE_INSERT_ONLY_HPP
#define MVIVM_ENGINE_INSERT_ONLY_HPP

#include <memory>
#include <string>

#include "mvivm/query.hpp"
#include "mvivm/stream.hpp"
#include "mvivm/width.hpp"

namespace mvivm {

enum class EnumMode { Full, Delta };

struct DeltaHandle {
    std::uint64_t version = 0;
    Op sign = Op::Insert;
    std::string relation;
    Tuple tuple;
    bool noop = false;  // duplicate insert: the delta is empty
};

// Maintains per-bag views of an optimal tree decomposition under single-tuple
// inserts. Full mode calibrates bottom-up and enumerates from the root; delta
// mode additionally calibrates top-down so the change set of each insert can
// be enumerated from the inserted atom's bag.
class InsertOnlyEngine {
public:
    InsertOnlyEngine(const Query& q, EnumMode mode);
    ~InsertOnlyEngine();
    InsertOnlyEngine(InsertOnlyEngine&&) noexcept;
    InsertOnlyEngine& operator=(InsertOnlyEngine&&) noexcept;

    DeltaHandle insert(const std::string& rel, const Tuple& t);

    TupleStream enumerate_full() const;
    TupleStream enumerate_delta(const DeltaHandle& h) const;

    const Query& query() const;
    const TreeDecomposition& decomposition() const;
    EnumMode mode() const;
    std::uint64_t version() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace mvivm

#endif
