#ifndef MVIVM_ENGINE_INSERT_DELETE_HPP
#define MVIVM_ENGINE_INSERT_DELETE_HPP

#include <memory>
#include <string>

#include "mvivm/engine_insert_only.hpp"
#include "mvivm/query.hpp"
#include "mvivm/segtree.hpp"
#include "mvivm/stream.hpp"
#include "mvivm/width.hpp"

namespace mvivm {

// Maintains a query under single-tuple inserts and deletes by tracking tuple
// lifespans, encoding them as canonical segment-tree partitions, and running
// one calibrated bag forest per component of the multivariate extension.
// Deletes truncate the open lifespan; the segment tree doubles as the clock
// outgrows it; an optional reset wrapper rebuilds from the live database so
// costs track the current database size rather than the stream length.
class InsertDeleteEngine {
public:
    InsertDeleteEngine(const Query& q, EnumMode mode, bool auto_reset = true);
    ~InsertDeleteEngine();
    InsertDeleteEngine(InsertDeleteEngine&&) noexcept;
    InsertDeleteEngine& operator=(InsertDeleteEngine&&) noexcept;

    DeltaHandle insert(const std::string& rel, const Tuple& t);
    DeltaHandle remove(const std::string& rel, const Tuple& t);
    DeltaHandle apply(const Update& u);

    TupleStream enumerate_full() const;
    struct SignedDelta {
        Op sign;
        TupleStream tuples;
    };
    SignedDelta enumerate_delta(const DeltaHandle& h) const;

    bool contains(const std::string& rel, const Tuple& t) const;
    std::size_t live_size() const;
    std::uint64_t capacity() const;   // current segment-tree size N
    std::uint64_t timestamp() const;  // internal clock
    std::uint64_t version() const;
    std::uint64_t enum_collisions() const;  // duplicate suppressions so far
    const MultivariateExtension& extension() const;
    // Lifespan database: open spans plus the archive of closed ones.
    TimedDatabase lifespans() const;

    struct Impl;

private:
    std::unique_ptr<Impl> impl_;
};

}  // namespace mvivm

#endif
