#ifndef MVIVM_QUERY_HPP
#define MVIVM_QUERY_HPP

#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "mvivm/values.hpp"

namespace mvivm {

using Variable = std::string;

struct ParseError : std::runtime_error {
    ParseError(const std::string& msg, int line, int col)
        : std::runtime_error("parse error at " + std::to_string(line) + ":" +
                             std::to_string(col) + ": " + msg),
          line(line), col(col) {}
    int line;
    int col;
};

struct QueryError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Atom {
    std::string relation;
    std::vector<Variable> schema;

    bool contains(const Variable& v) const {
        for (const auto& x : schema) if (x == v) return true;
        return false;
    }
};

// A full conjunctive query: the head is exactly the union of the atom schemas,
// in declaration order. Relation symbols are distinct (no self-joins).
struct Query {
    std::string name;
    std::vector<Atom> atoms;
    std::vector<Variable> head;

    const Atom& atom(const std::string& rel) const;
    const std::vector<Variable>& vars() const { return head; }
    std::optional<std::size_t> atom_index(const std::string& rel) const;
};

struct UnionQuery {
    std::vector<Query> components;
};

// Validates the invariants and fills in the head when empty.
Query make_query(std::string name, std::vector<Atom> atoms,
                 std::vector<Variable> declared_head = {});

// Grammar: Head(V1,...,Vn) :- Rel1(V,...), Rel2(V,...), ... .
// Identifiers [A-Za-z][A-Za-z0-9_]*, whitespace-insensitive, '%' line comments.
Query parse_query(const std::string& text);

std::vector<Atom> atoms_of_variable(const Query& q, const Variable& x);

// Restriction of q to the variable set y: every atom schema is intersected
// with y; atoms left with an empty schema are retained as nullary atoms.
Query restrict(const Query& q, const std::vector<Variable>& y);

std::string query_str(const Query& q);

struct Relation {
    std::string name;
    std::vector<Variable> schema;
    std::unordered_set<Tuple, TupleHash> tuples;

    bool contains(const Tuple& t) const { return tuples.count(t) > 0; }
    std::size_t size() const { return tuples.size(); }
};

struct Database {
    std::unordered_map<std::string, Relation> relations;

    static Database for_query(const Query& q);
    Relation& at(const std::string& rel);
    const Relation& at(const std::string& rel) const;
    std::size_t size() const;
};

enum class Op : std::uint8_t { Insert, Delete };

struct Update {
    Op op;
    std::string relation;
    Tuple tuple;
};

// Timestamps are implicit: updates[i] happens at tau = i + 1.
struct UpdateStream {
    std::vector<Update> updates;
    std::size_t size() const { return updates.size(); }
};

// Inserting a present tuple is a no-op (set semantics). Deleting an absent
// tuple throws unless lenient, in which case it is a no-op and the function
// returns false.
bool apply_update(Database& db, const Update& u, bool lenient = false);

UpdateStream parse_stream(const std::string& jsonl_text);
std::string stream_to_jsonl(const UpdateStream& s);

}  // namespace mvivm

#endif
