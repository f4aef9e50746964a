#include "mvivm/query.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "json.hpp"

namespace mvivm {

const Atom& Query::atom(const std::string& rel) const {
    for (const auto& a : atoms)
        if (a.relation == rel) return a;
    throw QueryError("unknown relation symbol: " + rel);
}

std::optional<std::size_t> Query::atom_index(const std::string& rel) const {
    for (std::size_t i = 0; i < atoms.size(); ++i)
        if (atoms[i].relation == rel) return i;
    return std::nullopt;
}

Query make_query(std::string name, std::vector<Atom> atoms,
                 std::vector<Variable> declared_head) {
    if (atoms.empty()) throw QueryError("a query needs at least one atom");
    std::unordered_set<std::string> rels;
    for (const auto& a : atoms) {
        if (!rels.insert(a.relation).second)
            throw QueryError("repeated relation symbol: " + a.relation);
        std::unordered_set<Variable> seen;
        for (const auto& v : a.schema)
            if (!seen.insert(v).second)
                throw QueryError("repeated variable " + v + " in atom " + a.relation);
    }
    std::vector<Variable> body_union;
    std::unordered_set<Variable> in_union;
    for (const auto& a : atoms)
        for (const auto& v : a.schema)
            if (in_union.insert(v).second) body_union.push_back(v);

    Query q;
    q.name = std::move(name);
    q.atoms = std::move(atoms);
    if (declared_head.empty()) {
        q.head = std::move(body_union);
    } else {
        std::unordered_set<Variable> head_set(declared_head.begin(), declared_head.end());
        if (head_set.size() != declared_head.size())
            throw QueryError("repeated variable in head");
        if (head_set != in_union)
            throw QueryError("head must equal the union of atom schemas (full conjunctive query)");
        q.head = std::move(declared_head);
    }
    return q;
}

namespace {

struct Cursor {
    const std::string& text;
    std::size_t pos = 0;
    int line = 1;
    int col = 1;

    void advance() {
        if (pos < text.size()) {
            if (text[pos] == '\n') { ++line; col = 1; }
            else ++col;
            ++pos;
        }
    }
    char peek() const { return pos < text.size() ? text[pos] : '\0'; }
    bool done() const { return pos >= text.size(); }

    void skip_ws() {
        while (!done()) {
            char c = peek();
            if (c == '%') {
                while (!done() && peek() != '\n') advance();
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                advance();
            } else {
                break;
            }
        }
    }

    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, line, col); }

    void expect(char c) {
        skip_ws();
        if (peek() != c) fail(std::string("expected '") + c + "'");
        advance();
    }

    bool accept(char c) {
        skip_ws();
        if (peek() == c) { advance(); return true; }
        return false;
    }

    std::string identifier() {
        skip_ws();
        char c = peek();
        if (!std::isalpha(static_cast<unsigned char>(c))) fail("expected identifier");
        std::string out;
        while (!done()) {
            c = peek();
            if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') {
                out += c;
                advance();
            } else break;
        }
        return out;
    }
};

std::vector<Variable> parse_var_list(Cursor& cur) {
    std::vector<Variable> vars;
    cur.expect('(');
    if (!cur.accept(')')) {
        for (;;) {
            vars.push_back(cur.identifier());
            if (cur.accept(')')) break;
            cur.expect(',');
        }
    }
    return vars;
}

}  // namespace

Query parse_query(const std::string& text) {
    Cursor cur{text};
    std::string head_name = cur.identifier();
    std::vector<Variable> head = parse_var_list(cur);
    cur.expect(':');
    cur.expect('-');
    std::vector<Atom> atoms;
    for (;;) {
        Atom a;
        a.relation = cur.identifier();
        a.schema = parse_var_list(cur);
        atoms.push_back(std::move(a));
        if (cur.accept('.')) break;
        cur.expect(',');
    }
    cur.skip_ws();
    if (!cur.done()) cur.fail("trailing input after '.'");
    try {
        return make_query(head_name, std::move(atoms), std::move(head));
    } catch (const QueryError& e) {
        throw ParseError(e.what(), cur.line, cur.col);
    }
}

std::vector<Atom> atoms_of_variable(const Query& q, const Variable& x) {
    bool known = false;
    for (const auto& v : q.head)
        if (v == x) { known = true; break; }
    if (!known) throw QueryError("unknown variable: " + x);
    std::vector<Atom> out;
    for (const auto& a : q.atoms)
        if (a.contains(x)) out.push_back(a);
    return out;
}

Query restrict(const Query& q, const std::vector<Variable>& y) {
    std::unordered_set<Variable> yset(y.begin(), y.end());
    for (const auto& v : y) {
        bool known = false;
        for (const auto& h : q.head)
            if (h == v) { known = true; break; }
        if (!known) throw QueryError("restriction variable not in query: " + v);
    }
    Query out;
    out.name = q.name;
    for (const auto& a : q.atoms) {
        Atom r;
        r.relation = a.relation;
        for (const auto& v : a.schema)
            if (yset.count(v)) r.schema.push_back(v);
        out.atoms.push_back(std::move(r));
    }
    // Head follows the original head order restricted to y.
    for (const auto& h : q.head)
        if (yset.count(h)) out.head.push_back(h);
    return out;
}

std::string query_str(const Query& q) {
    std::ostringstream os;
    os << (q.name.empty() ? "Q" : q.name) << "(";
    for (std::size_t i = 0; i < q.head.size(); ++i) {
        if (i) os << ",";
        os << q.head[i];
    }
    os << ") :- ";
    for (std::size_t i = 0; i < q.atoms.size(); ++i) {
        if (i) os << ", ";
        os << q.atoms[i].relation << "(";
        for (std::size_t j = 0; j < q.atoms[i].schema.size(); ++j) {
            if (j) os << ",";
            os << q.atoms[i].schema[j];
        }
        os << ")";
    }
    os << ".";
    return os.str();
}

Database Database::for_query(const Query& q) {
    Database db;
    for (const auto& a : q.atoms) {
        Relation r;
        r.name = a.relation;
        r.schema = a.schema;
        db.relations.emplace(a.relation, std::move(r));
    }
    return db;
}

Relation& Database::at(const std::string& rel) {
    auto it = relations.find(rel);
    if (it == relations.end()) throw QueryError("unknown relation symbol: " + rel);
    return it->second;
}

const Relation& Database::at(const std::string& rel) const {
    auto it = relations.find(rel);
    if (it == relations.end()) throw QueryError("unknown relation symbol: " + rel);
    return it->second;
}

std::size_t Database::size() const {
    std::size_t n = 0;
    for (const auto& [_, r] : relations) n += r.size();
    return n;
}

bool apply_update(Database& db, const Update& u, bool lenient) {
    Relation& r = db.at(u.relation);
    if (u.tuple.size() != r.schema.size())
        throw QueryError("arity mismatch for relation " + u.relation);
    if (u.op == Op::Insert) {
        return r.tuples.insert(u.tuple).second;
    }
    if (r.tuples.erase(u.tuple) > 0) return true;
    if (!lenient)
        throw QueryError("delete of absent tuple from " + u.relation + ": " + tuple_str(u.tuple));
    return false;
}

UpdateStream parse_stream(const std::string& jsonl_text) {
    UpdateStream s;
    std::istringstream in(jsonl_text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("bad stream line: ") + e.what(), lineno, 1);
        }
        Update u;
        std::string op = j.at("op").get<std::string>();
        if (op == "+") u.op = Op::Insert;
        else if (op == "-") u.op = Op::Delete;
        else throw ParseError("op must be \"+\" or \"-\"", lineno, 1);
        u.relation = j.at("rel").get<std::string>();
        for (const auto& v : j.at("tuple"))
            u.tuple.push_back(intern(v.get<std::string>()));
        s.updates.push_back(std::move(u));
    }
    return s;
}

std::string stream_to_jsonl(const UpdateStream& s) {
    std::ostringstream os;
    for (const auto& u : s.updates) {
        nlohmann::json j;
        j["op"] = u.op == Op::Insert ? "+" : "-";
        j["rel"] = u.relation;
        auto arr = nlohmann::json::array();
        for (Value v : u.tuple) arr.push_back(value_str(v));
        j["tuple"] = std::move(arr);
        os << j.dump() << "\n";
    }
    return os.str();
}

}  // namespace mvivm
