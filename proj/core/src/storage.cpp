#include "mvivm/storage.hpp"

#include <algorithm>
#include <cassert>

namespace mvivm {

std::vector<std::size_t> identity_order(std::size_t n) {
    std::vector<std::size_t> o(n);
    for (std::size_t i = 0; i < n; ++i) o[i] = i;
    return o;
}

IndexedRelation::IndexedRelation(std::vector<Variable> schema,
                                 std::vector<std::vector<std::size_t>> orders)
    : schema_(std::move(schema)) {
    if (orders.empty()) orders.push_back(identity_order(schema_.size()));
    for (auto& o : orders) add_order(o);
}

int IndexedRelation::find_order(const std::vector<std::size_t>& order) const {
    for (std::size_t i = 0; i < tries_.size(); ++i)
        if (tries_[i].attr == order) return static_cast<int>(i);
    return npos;
}

std::size_t IndexedRelation::add_order(const std::vector<std::size_t>& order) {
    if (order.size() != schema_.size())
        throw QueryError("index order is not a permutation of the schema");
    std::vector<bool> seen(schema_.size(), false);
    for (auto p : order) {
        if (p >= schema_.size() || seen[p])
            throw QueryError("index order is not a permutation of the schema");
        seen[p] = true;
    }
    int existing = find_order(order);
    if (existing != npos) return static_cast<std::size_t>(existing);

    Trie t;
    t.attr = order;
    t.nodes.push_back(Node{});
    std::size_t id = tries_.size();
    if (size_ > 0) {
        // Reindex from an existing trie.
        std::vector<Tuple> tuples = all_tuples();
        tries_.push_back(std::move(t));
        for (const auto& tup : tuples) tries_[id].insert_path(tup);
    } else {
        tries_.push_back(std::move(t));
    }
    return id;
}

void IndexedRelation::Trie::insert_path(const Tuple& t) {
    int node = 0;
    nodes[0].count++;
    for (std::size_t level = 0; level < attr.size(); ++level) {
        Value v = t[attr[level]];
        int c = find(node, v);
        if (c == npos) {
            if (!free_list.empty()) {
                c = free_list.back();
                free_list.pop_back();
                nodes[c] = Node{};
            } else {
                c = static_cast<int>(nodes.size());
                nodes.push_back(Node{});
            }
            Node& cn = nodes[c];
            cn.value = v;
            cn.parent = node;
            Node& pn = nodes[node];
            cn.prev_sib = pn.last_child;
            if (pn.last_child != npos) nodes[pn.last_child].next_sib = c;
            pn.last_child = c;
            if (pn.first_child == npos) pn.first_child = c;
            pn.fanout++;
            edges.insert(key(node, v), c);
        }
        nodes[c].count++;
        node = c;
    }
}

void IndexedRelation::Trie::erase_path(const Tuple& t) {
    int node = 0;
    nodes[0].count--;
    for (std::size_t level = 0; level < attr.size(); ++level) {
        Value v = t[attr[level]];
        int c = find(node, v);
        assert(c != npos);
        if (--nodes[c].count == 0) {
            Node& cn = nodes[c];
            Node& pn = nodes[node];
            if (cn.prev_sib != npos) nodes[cn.prev_sib].next_sib = cn.next_sib;
            if (cn.next_sib != npos) nodes[cn.next_sib].prev_sib = cn.prev_sib;
            if (pn.first_child == c) pn.first_child = cn.next_sib;
            if (pn.last_child == c) pn.last_child = cn.prev_sib;
            pn.fanout--;
            edges.erase(key(node, v));
            // Descendants of a zero-count node are all zero-count; free them.
            int d = c;
            std::vector<int> stack{d};
            while (!stack.empty()) {
                int u = stack.back();
                stack.pop_back();
                for (int w = nodes[u].first_child; w != npos; w = nodes[w].next_sib) {
                    edges.erase(key(u, nodes[w].value));
                    stack.push_back(w);
                }
                nodes[u].first_child = nodes[u].last_child = npos;
                free_list.push_back(u);
            }
            return;
        }
        node = c;
    }
}

bool IndexedRelation::insert(const Tuple& t) {
    if (t.size() != schema_.size()) throw QueryError("arity mismatch on insert");
    if (contains(t)) return false;
    for (auto& trie : tries_) trie.insert_path(t);
    ++size_;
    return true;
}

bool IndexedRelation::erase(const Tuple& t) {
    if (t.size() != schema_.size()) throw QueryError("arity mismatch on delete");
    if (!contains(t)) return false;
    for (auto& trie : tries_) trie.erase_path(t);
    --size_;
    return true;
}

bool IndexedRelation::contains(const Tuple& t) const {
    const Trie& trie = tries_[0];
    int node = 0;
    for (std::size_t level = 0; level < trie.attr.size(); ++level) {
        node = trie.find(node, t[trie.attr[level]]);
        if (node == npos) return false;
    }
    return true;
}

int IndexedRelation::child(std::size_t order_id, int node, Value v) const {
    return tries_[order_id].find(node, v);
}

int IndexedRelation::descend(std::size_t order_id, std::span<const Value> prefix) const {
    const Trie& trie = tries_[order_id];
    int node = 0;
    for (Value v : prefix) {
        node = trie.find(node, v);
        if (node == npos) return npos;
    }
    return node;
}

std::size_t IndexedRelation::select_count(std::size_t order_id,
                                          std::span<const Value> prefix) const {
    int node = descend(order_id, prefix);
    return node == npos ? 0 : tries_[order_id].nodes[node].count;
}

void IndexedRelation::scan(std::size_t order_id, std::span<const Value> prefix,
                           std::vector<Tuple>& out) const {
    const Trie& trie = tries_[order_id];
    int start = descend(order_id, prefix);
    if (start == npos) return;
    Tuple cur(schema_.size());
    for (std::size_t i = 0; i < prefix.size(); ++i) cur[trie.attr[i]] = prefix[i];
    if (prefix.size() == trie.attr.size()) {
        out.push_back(cur);
        return;
    }
    // Iterative DFS emitting leaves left-to-right.
    std::vector<int> stack;
    stack.push_back(trie.nodes[start].first_child);
    while (!stack.empty()) {
        int node = stack.back();
        if (node == npos) {
            stack.pop_back();
            continue;
        }
        stack.back() = trie.nodes[node].next_sib;
        std::size_t level = prefix.size() + stack.size() - 1;
        cur[trie.attr[level]] = trie.nodes[node].value;
        if (level + 1 == trie.attr.size()) {
            out.push_back(cur);
        } else {
            stack.push_back(trie.nodes[node].first_child);
        }
    }
}

std::vector<Tuple> IndexedRelation::all_tuples() const {
    std::vector<Tuple> out;
    scan(0, {}, out);
    return out;
}

IndexedDatabase IndexedDatabase::for_query(const Query& q) {
    IndexedDatabase db;
    for (const auto& a : q.atoms)
        db.relations.emplace(a.relation, IndexedRelation(a.schema, {}));
    return db;
}

IndexedRelation& IndexedDatabase::at(const std::string& rel) {
    auto it = relations.find(rel);
    if (it == relations.end()) throw QueryError("unknown relation symbol: " + rel);
    return it->second;
}

const IndexedRelation& IndexedDatabase::at(const std::string& rel) const {
    auto it = relations.find(rel);
    if (it == relations.end()) throw QueryError("unknown relation symbol: " + rel);
    return it->second;
}

bool IndexedDatabase::apply(const Update& u) {
    IndexedRelation& r = at(u.relation);
    return u.op == Op::Insert ? r.insert(u.tuple) : r.erase(u.tuple);
}

std::size_t IndexedDatabase::size() const {
    std::size_t n = 0;
    for (const auto& [_, r] : relations) n += r.size();
    return n;
}

}  // namespace mvivm
