#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "mvivm/engine_insert_only.hpp"
#include "mvivm/harness.hpp"

using namespace mvivm;
using namespace testq;

TEST_CASE("single-bag engine replays the insert prefix of the trace") {
    InsertOnlyEngine eng(triangle(), EnumMode::Full);
    eng.insert("R", tup({"a1", "b1"}));
    CHECK(eng.enumerate_full().collect().empty());
    eng.insert("S", tup({"b1", "c1"}));
    CHECK(eng.enumerate_full().collect().empty());
    eng.insert("T", tup({"a1", "c1"}));
    CHECK(sorted(eng.enumerate_full().collect()) ==
          std::vector<Tuple>{tup({"a1", "b1", "c1"})});
    eng.insert("S", tup({"b2", "c1"}));
    CHECK(sorted(eng.enumerate_full().collect()) ==
          std::vector<Tuple>{tup({"a1", "b1", "c1"})});
}

TEST_CASE("two-triangles plan shape") {
    InsertOnlyEngine eng(two_triangles(), EnumMode::Full);
    const auto& td = eng.decomposition();
    REQUIRE(td.nodes.size() == 2);
    // Insert a full left triangle; with empty U and V the output is empty.
    eng.insert("R", tup({"a", "b"}));
    eng.insert("S", tup({"b", "c"}));
    eng.insert("T", tup({"a", "c"}));
    CHECK(eng.enumerate_full().collect().empty());
    eng.insert("U", tup({"b", "d"}));
    CHECK(eng.enumerate_full().collect().empty());
    eng.insert("V", tup({"c", "d"}));
    CHECK(sorted(eng.enumerate_full().collect()) ==
          std::vector<Tuple>{tup({"a", "b", "c", "d"})});
}

TEST_CASE("delta enumeration on the trace prefix") {
    InsertOnlyEngine eng(triangle(), EnumMode::Delta);
    auto h1 = eng.insert("R", tup({"a1", "b1"}));
    CHECK(eng.enumerate_delta(h1).collect().empty());
    auto h2 = eng.insert("S", tup({"b1", "c1"}));
    CHECK(eng.enumerate_delta(h2).collect().empty());
    auto h3 = eng.insert("T", tup({"a1", "c1"}));
    CHECK(sorted(eng.enumerate_delta(h3).collect()) ==
          std::vector<Tuple>{tup({"a1", "b1", "c1"})});
    auto h4 = eng.insert("S", tup({"b2", "c1"}));
    CHECK(eng.enumerate_delta(h4).collect().empty());
    // Duplicate insert: empty delta, state unchanged.
    auto h5 = eng.insert("S", tup({"b1", "c1"}));
    CHECK(h5.noop);
    CHECK(eng.enumerate_delta(h5).collect().empty());
    CHECK(sorted(eng.enumerate_full().collect()) ==
          std::vector<Tuple>{tup({"a1", "b1", "c1"})});
    // A stale handle throws once another update lands.
    eng.insert("R", tup({"a9", "b9"}));
    CHECK_THROWS_AS(eng.enumerate_delta(h5), EngineError);
}

TEST_CASE("full mode rejects delta enumeration and deletes") {
    InsertOnlyEngine eng(triangle(), EnumMode::Full);
    auto h = eng.insert("R", tup({"a1", "b1"}));
    CHECK_THROWS_AS(eng.enumerate_delta(h), EngineError);
    CHECK_THROWS_AS(eng.insert("Nope", tup({"a"})), QueryError);
    CHECK_THROWS_AS(eng.insert("R", tup({"a"})), QueryError);
}

TEST_CASE("enumeration has no duplicates and matches recomputation") {
    std::mt19937_64 rng(41);
    for (const Query& q : {triangle(), path3(), two_triangles(), lw4()}) {
        for (int trial = 0; trial < 12; ++trial) {
            UpdateStream s =
                gen_stream(StreamKind::InsertOnlyRandom, q, 60 + rng() % 200, rng());
            InsertOnlyEngine full_eng(q, EnumMode::Full);
            InsertOnlyEngine delta_eng(q, EnumMode::Delta);
            Database ref = Database::for_query(q);
            std::vector<Tuple> prev;
            for (const auto& u : s.updates) {
                full_eng.insert(u.relation, u.tuple);
                auto h = delta_eng.insert(u.relation, u.tuple);
                apply_update(ref, u);
                auto expect = brute_join(q, ref);
                auto got = full_eng.enumerate_full().collect();
                CHECK(got.size() == expect.size());  // no duplicates
                CHECK(sorted(got) == expect);
                CHECK(sorted(delta_eng.enumerate_full().collect()) == expect);
                std::vector<Tuple> want_delta;
                std::set_difference(expect.begin(), expect.end(), prev.begin(), prev.end(),
                                    std::back_inserter(want_delta));
                auto got_delta = delta_eng.enumerate_delta(h).collect();
                CHECK(got_delta.size() == want_delta.size());
                CHECK(sorted(got_delta) == want_delta);
                prev = std::move(expect);
            }
        }
    }
}

TEST_CASE("delta enumeration binds atoms whose schema order differs from the head") {
    // U(D,A,B) and T(C,D,A) list their variables in a different order than
    // the query head; the bound prefix of a delta walk must follow the bag's
    // arrangement, not the atom's.
    Query q = lw4();
    InsertOnlyEngine eng(q, EnumMode::Delta);
    eng.insert("R", tup({"a", "b", "c"}));
    eng.insert("S", tup({"b", "c", "d"}));
    eng.insert("T", tup({"c", "d", "a"}));
    auto h = eng.insert("U", tup({"d", "a", "b"}));
    CHECK(sorted(eng.enumerate_delta(h).collect()) ==
          std::vector<Tuple>{tup({"a", "b", "c", "d"})});
    auto h2 = eng.insert("T", tup({"c2", "d", "a"}));
    CHECK(eng.enumerate_delta(h2).collect().empty());
}

TEST_CASE("bottom-up calibration invariant on small instances") {
    // The root view always equals the projection of the full result.
    std::mt19937_64 rng(43);
    Query q = two_triangles();
    InsertOnlyEngine eng(q, EnumMode::Full);
    UpdateStream s = gen_stream(StreamKind::InsertOnlyRandom, q, 120, 77);
    Database ref = Database::for_query(q);
    for (const auto& u : s.updates) {
        eng.insert(u.relation, u.tuple);
        apply_update(ref, u);
    }
    auto result = brute_join(q, ref);
    auto full = sorted(eng.enumerate_full().collect());
    CHECK(full == result);
}
