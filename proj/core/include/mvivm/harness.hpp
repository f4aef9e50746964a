#ifndef MVIVM_HARNESS_HPP
#define MVIVM_HARNESS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "mvivm/baselines.hpp"
#include "mvivm/engine_insert_only.hpp"
#include "mvivm/query.hpp"

namespace mvivm {

enum class StreamKind { InsertOnlyRandom, InsertDeleteRandom, Fifo, OuMv };

StreamKind stream_kind_of(const std::string& name);  // accepts oumv(n) spellings
std::string stream_kind_name(StreamKind k);

// Deterministic stream generators. All streams are legal: inserts target
// absent tuples, deletes target present ones. For OuMv, `length` is the
// round count n: the stream encodes a random boolean matrix followed by n
// rounds of vector re-encodings (at most 4n updates per round).
UpdateStream gen_stream(StreamKind kind, const Query& q, std::size_t length,
                        std::uint64_t seed);

enum class EngineKind { Mvivm, InsertOnly, Naive, DeltaBase };

EngineKind engine_kind_of(const std::string& name);
std::string engine_kind_name(EngineKind k);

struct BenchRow {
    std::string query;
    std::string engine;
    std::string kind;
    std::size_t n = 0;
    std::uint64_t seed = 0;
    double total_ms = 0;
    std::size_t final_db = 0;      // |D| after the stream
    std::size_t final_result = 0;  // |Q(D)| after the stream
};

struct BenchReport {
    std::vector<BenchRow> rows;
    double slope = 0;  // log-log fit of total time vs N, first size dropped
    double r2 = 0;
};

BenchReport measure(EngineKind engine, StreamKind kind, const Query& q,
                    const std::vector<std::size_t>& sizes, std::size_t repeats,
                    std::uint64_t seed);

std::string bench_csv(const BenchReport& report);

struct VerifyReport {
    bool ok = true;
    std::size_t timestamps = 0;
    std::uint64_t collisions = 0;
    std::string detail;  // first divergence, when !ok
};

// Replays the stream through the maintenance engines and both baselines and
// compares full and delta transcripts at every timestamp.
VerifyReport verify(const Query& q, const UpdateStream& s);

// Transcript extraction used by verify and the differential tests.
Transcript run_insert_delete(const Query& q, const UpdateStream& s, EnumMode mode,
                             bool auto_reset = true, std::uint64_t* collisions = nullptr);
Transcript run_insert_only(const Query& q, const UpdateStream& s, EnumMode mode);

}  // namespace mvivm

#endif
