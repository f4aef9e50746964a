#include "mvivm/width.hpp"

#include <algorithm>
#include <cassert>
#include <numeric>
#include <unordered_map>

#include "mvivm/lp.hpp"

namespace mvivm {

std::pair<Rational, FractionalEdgeCover> rho_star(const Query& q) {
    if (q.head.size() > 16) throw BudgetError("rho_star: more than 16 variables");
    if (q.atoms.size() > 12) throw BudgetError("rho_star: more than 12 atoms");

    // One covering constraint per variable; nullary atoms cover nothing and
    // take weight zero at any optimum, so they are left out of the LP.
    std::vector<std::size_t> cols;  // LP column -> atom index
    for (std::size_t i = 0; i < q.atoms.size(); ++i)
        if (!q.atoms[i].schema.empty()) cols.push_back(i);

    FractionalEdgeCover cover;
    cover.weights.assign(q.atoms.size(), Rational(0));
    cover.objective = Rational(0);
    if (q.head.empty()) return {Rational(0), cover};

    std::vector<std::vector<Rational>> A(q.head.size(),
                                         std::vector<Rational>(cols.size(), Rational(0)));
    for (std::size_t v = 0; v < q.head.size(); ++v)
        for (std::size_t j = 0; j < cols.size(); ++j)
            if (q.atoms[cols[j]].contains(q.head[v])) A[v][j] = Rational(1);
    std::vector<Rational> b(q.head.size(), Rational(1));
    std::vector<Rational> c(cols.size(), Rational(1));

    auto sol = solve_min_lp(A, b, c);
    if (!sol) throw QueryError("uncoverable query (variable in no atom)");
    for (std::size_t j = 0; j < cols.size(); ++j) cover.weights[cols[j]] = sol->x[j];
    cover.objective = sol->objective;
    return {sol->objective, cover};
}

GyoResult gyo_reduce(const Query& q) {
    GyoResult res;
    std::vector<Atom> atoms = q.atoms;
    bool changed = true;
    while (changed) {
        changed = false;
        // Leaf variables: occur in exactly one atom.
        std::unordered_map<Variable, int> occ;
        for (const auto& a : atoms)
            for (const auto& v : a.schema) occ[v]++;
        for (auto& a : atoms) {
            auto it = std::remove_if(a.schema.begin(), a.schema.end(),
                                     [&](const Variable& v) { return occ[v] == 1; });
            for (auto p = it; p != a.schema.end(); ++p) {
                res.trace.push_back({GyoStep::EliminateVariable, *p + " from " + a.relation});
                changed = true;
            }
            a.schema.erase(it, a.schema.end());
        }
        // Subsumed atoms (schema contained in another atom's schema).
        for (std::size_t i = 0; i < atoms.size(); ++i) {
            bool subsumed = false;
            for (std::size_t j = 0; j < atoms.size() && !subsumed; ++j) {
                if (i == j) continue;
                bool contained = true;
                for (const auto& v : atoms[i].schema)
                    if (!atoms[j].contains(v)) { contained = false; break; }
                // Break schema ties by index so exactly one of two equal
                // atoms is removed.
                if (contained &&
                    (atoms[i].schema.size() < atoms[j].schema.size() || i > j))
                    subsumed = true;
            }
            if (subsumed) {
                res.trace.push_back({GyoStep::RemoveAtom, atoms[i].relation});
                atoms.erase(atoms.begin() + i);
                changed = true;
                break;
            }
        }
    }
    res.acyclic = atoms.size() <= 1 && (atoms.empty() || atoms[0].schema.empty());
    return res;
}

bool is_acyclic(const Query& q) { return gyo_reduce(q).acyclic; }

bool is_hierarchical(const Query& q) {
    std::unordered_map<Variable, std::vector<bool>> at;
    for (const auto& v : q.head) {
        std::vector<bool> mask(q.atoms.size());
        for (std::size_t i = 0; i < q.atoms.size(); ++i) mask[i] = q.atoms[i].contains(v);
        at.emplace(v, std::move(mask));
    }
    for (std::size_t x = 0; x < q.head.size(); ++x) {
        for (std::size_t y = x + 1; y < q.head.size(); ++y) {
            const auto& ax = at[q.head[x]];
            const auto& ay = at[q.head[y]];
            bool x_in_y = true, y_in_x = true, disjoint = true;
            for (std::size_t i = 0; i < q.atoms.size(); ++i) {
                if (ax[i] && !ay[i]) x_in_y = false;
                if (ay[i] && !ax[i]) y_in_x = false;
                if (ax[i] && ay[i]) disjoint = false;
            }
            if (!x_in_y && !y_in_x && !disjoint) return false;
        }
    }
    return true;
}

namespace {

using Mask = std::uint32_t;

struct FhtwSearch {
    const Query& q;
    std::size_t n;
    std::vector<Mask> adj;       // primal graph over variable positions
    std::vector<int> zindex;     // position -> z-rank (-1 for non-Z variables)
    Mask zmask = 0;
    std::unordered_map<Mask, std::pair<Rational, FractionalEdgeCover>> rho_cache;
    std::unordered_map<Mask, Rational> memo;
    Rational infinity{1000000, 1};

    FhtwSearch(const Query& query, const std::vector<Variable>& zvars) : q(query) {
        n = q.head.size();
        adj.assign(n, 0);
        std::unordered_map<Variable, std::size_t> pos;
        for (std::size_t i = 0; i < n; ++i) pos[q.head[i]] = i;
        for (const auto& a : q.atoms) {
            for (const auto& u : a.schema)
                for (const auto& v : a.schema)
                    if (u != v) adj[pos[u]] |= Mask(1) << pos[v];
        }
        zindex.assign(n, -1);
        for (std::size_t i = 0; i < zvars.size(); ++i) {
            auto it = pos.find(zvars[i]);
            if (it != pos.end()) {
                zindex[it->second] = static_cast<int>(i);
                zmask |= Mask(1) << it->second;
            }
        }
    }

    // Bag induced by eliminating variable x after the set `gone`: x plus all
    // variables reachable from x through eliminated vertices, projected onto
    // their surviving neighbours.
    Mask bag_of(std::size_t x, Mask gone) const {
        Mask comp = Mask(1) << x;
        Mask frontier = comp;
        Mask nbrs = 0;
        while (frontier) {
            Mask next = 0;
            Mask f = frontier;
            while (f) {
                std::size_t v = static_cast<std::size_t>(__builtin_ctz(f));
                f &= f - 1;
                nbrs |= adj[v];
                next |= adj[v] & gone & ~comp;
            }
            comp |= next;
            frontier = next;
        }
        return ((nbrs | (Mask(1) << x)) & ~gone) | (Mask(1) << x);
    }

    bool prefix_closed(Mask bag) const {
        if (!(bag & zmask)) return true;
        int max_rank = -1;
        int present = 0;
        Mask zb = bag & zmask;
        while (zb) {
            std::size_t v = static_cast<std::size_t>(__builtin_ctz(zb));
            zb &= zb - 1;
            max_rank = std::max(max_rank, zindex[v]);
            ++present;
        }
        return present == max_rank + 1;
    }

    Rational rho_of_bag(Mask bag) {
        auto it = rho_cache.find(bag);
        if (it != rho_cache.end()) return it->second.first;
        std::vector<Variable> vars;
        for (std::size_t i = 0; i < n; ++i)
            if (bag & (Mask(1) << i)) vars.push_back(q.head[i]);
        auto r = rho_star(restrict(q, vars));
        rho_cache.emplace(bag, r);
        return r.first;
    }

    Rational solve(Mask gone) {
        Mask full = n == 32 ? ~Mask(0) : (Mask(1) << n) - 1;
        if (gone == full) return Rational(0);
        auto it = memo.find(gone);
        if (it != memo.end()) return it->second;
        Rational best = infinity;
        for (std::size_t x = 0; x < n; ++x) {
            if (gone & (Mask(1) << x)) continue;
            Mask bag = bag_of(x, gone);
            if (!prefix_closed(bag)) continue;
            Rational r = rho_of_bag(bag);
            if (r >= best) continue;
            Rational rest = solve(gone | (Mask(1) << x));
            Rational width = std::max(r, rest);
            if (width < best) best = width;
        }
        memo.emplace(gone, best);
        return best;
    }

    // Lexicographically smallest optimal elimination order.
    std::vector<std::size_t> reconstruct() {
        std::vector<std::size_t> order;
        Mask gone = 0;
        Mask full = n == 32 ? ~Mask(0) : (Mask(1) << n) - 1;
        while (gone != full) {
            Rational target = solve(gone);
            bool found = false;
            for (std::size_t x = 0; x < n && !found; ++x) {
                if (gone & (Mask(1) << x)) continue;
                Mask bag = bag_of(x, gone);
                if (!prefix_closed(bag)) continue;
                Rational w = std::max(rho_of_bag(bag), solve(gone | (Mask(1) << x)));
                if (w == target) {
                    order.push_back(x);
                    gone |= Mask(1) << x;
                    found = true;
                }
            }
            assert(found);
        }
        return order;
    }
};

}  // namespace

void TreeDecomposition::reroot(int new_root) {
    std::vector<std::vector<int>> adjn(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (nodes[i].parent >= 0) {
            adjn[i].push_back(nodes[i].parent);
            adjn[nodes[i].parent].push_back(static_cast<int>(i));
        }
    }
    for (auto& nd : nodes) {
        nd.parent = -1;
        nd.children.clear();
    }
    root = new_root;
    std::vector<int> stack{new_root};
    std::vector<bool> seen(nodes.size(), false);
    seen[new_root] = true;
    while (!stack.empty()) {
        int u = stack.back();
        stack.pop_back();
        for (int v : adjn[u]) {
            if (seen[v]) continue;
            seen[v] = true;
            nodes[v].parent = u;
            nodes[u].children.push_back(v);
            stack.push_back(v);
        }
    }
}

int TreeDecomposition::find_bag_containing(const std::vector<Variable>& vars) const {
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        bool all = true;
        for (const auto& v : vars) {
            if (std::find(nodes[i].bag.begin(), nodes[i].bag.end(), v) == nodes[i].bag.end()) {
                all = false;
                break;
            }
        }
        if (all) return static_cast<int>(i);
    }
    return -1;
}

namespace {

// Orders a bag deterministically: Z-variables by rank first, the rest in
// query-head order. Engines rely on the root bag leading with Z1..Zk.
std::vector<Variable> order_bag(const Query& q, const std::vector<Variable>& zvars, Mask bag) {
    std::vector<Variable> out;
    std::unordered_map<Variable, std::size_t> pos;
    for (std::size_t i = 0; i < q.head.size(); ++i) pos[q.head[i]] = i;
    for (const auto& z : zvars) {
        auto it = pos.find(z);
        if (it != pos.end() && (bag & (Mask(1) << it->second))) out.push_back(z);
    }
    for (std::size_t i = 0; i < q.head.size(); ++i) {
        if (!(bag & (Mask(1) << i))) continue;
        if (std::find(zvars.begin(), zvars.end(), q.head[i]) != zvars.end()) continue;
        out.push_back(q.head[i]);
    }
    return out;
}

std::pair<Rational, TreeDecomposition> fhtw_impl(const Query& q,
                                                 const std::vector<Variable>& zvars) {
    if (q.head.size() > 16) throw BudgetError("fhtw: more than 16 variables");
    if (q.atoms.size() > 12) throw BudgetError("fhtw: more than 12 atoms");

    FhtwSearch search(q, zvars);
    Rational width = search.solve(0);
    if (width == search.infinity) throw QueryError("no admissible elimination order");
    auto order = search.reconstruct();

    const std::size_t n = q.head.size();
    std::vector<Mask> bags;
    Mask gone = 0;
    for (std::size_t step = 0; step < n; ++step) {
        bags.push_back(search.bag_of(order[step], gone));
        gone |= Mask(1) << order[step];
    }

    // Attach each step's node to the node of the earliest-eliminated other
    // variable in its bag; chain any remaining roots (disconnected queries).
    std::vector<int> parent(n, -1);
    std::vector<std::size_t> step_of(n, 0);
    for (std::size_t step = 0; step < n; ++step) step_of[order[step]] = step;
    for (std::size_t step = 0; step < n; ++step) {
        std::size_t best = n;
        Mask rest = bags[step] & ~(Mask(1) << order[step]);
        while (rest) {
            std::size_t v = static_cast<std::size_t>(__builtin_ctz(rest));
            rest &= rest - 1;
            best = std::min(best, step_of[v]);
        }
        if (best < n) parent[step] = static_cast<int>(best);
    }
    int main_root = -1;
    for (std::size_t step = 0; step < n; ++step)
        if (parent[step] < 0) {
            if (main_root >= 0) parent[main_root] = static_cast<int>(step);
            main_root = static_cast<int>(step);
        }

    // Merge bags subsumed by a neighbour.
    std::vector<bool> dead(n, false);
    std::vector<Mask> node_bag = bags;
    bool merged = true;
    auto find_live_parent = [&](std::size_t u) {
        int p = parent[u];
        while (p >= 0 && dead[p]) p = parent[p];
        return p;
    };
    while (merged) {
        merged = false;
        for (std::size_t u = 0; u < n && !merged; ++u) {
            if (dead[u]) continue;
            int p = find_live_parent(u);
            if (p < 0) continue;
            if ((node_bag[u] | node_bag[p]) == node_bag[p]) {
                dead[u] = true;  // child inside parent
                merged = true;
            } else if ((node_bag[u] | node_bag[p]) == node_bag[u]) {
                // parent inside child: child's bag moves up, child goes away
                std::swap(node_bag[u], node_bag[p]);
                dead[u] = true;
                merged = true;
            }
        }
    }

    TreeDecomposition td;
    std::vector<int> new_id(n, -1);
    for (std::size_t u = 0; u < n; ++u) {
        if (dead[u]) continue;
        new_id[u] = static_cast<int>(td.nodes.size());
        TreeDecomposition::Node node;
        node.bag = order_bag(q, zvars, node_bag[u]);
        auto r = rho_star(restrict(q, node.bag));
        node.rho = r.first;
        node.cover = r.second;
        td.nodes.push_back(std::move(node));
    }
    for (std::size_t u = 0; u < n; ++u) {
        if (dead[u]) continue;
        int p = find_live_parent(u);
        int me = new_id[u];
        if (p >= 0 && new_id[p] >= 0 && new_id[p] != me) {
            td.nodes[me].parent = new_id[p];
            td.nodes[new_id[p]].children.push_back(me);
        }
    }
    for (std::size_t i = 0; i < td.nodes.size(); ++i)
        if (td.nodes[i].parent < 0) td.root = static_cast<int>(i);
    td.width = width;
    for (std::size_t step = 0; step < n; ++step) {
        td.elim.order.push_back(q.head[order[step]]);
        td.elim.bags.push_back(order_bag(q, zvars, bags[step]));
    }
    return {width, td};
}

std::string fresh_prefix(const Query& q, const std::string& base) {
    std::string prefix = base;
    auto taken = [&](const std::string& p) {
        for (const auto& v : q.head)
            if (v.rfind(p, 0) == 0) return true;
        return false;
    };
    while (taken(prefix)) prefix = "_" + prefix;
    return prefix;
}

}  // namespace

std::pair<Rational, TreeDecomposition> fhtw(const Query& q) { return fhtw_impl(q, {}); }

TimeExtension time_extension(const Query& q) {
    TimeExtension ext;
    ext.base = q;
    ext.interval_var = fresh_prefix(q, "Z");
    std::vector<Atom> atoms;
    for (const auto& a : q.atoms) {
        Atom e;
        e.relation = a.relation;
        e.schema.push_back(ext.interval_var);
        e.schema.insert(e.schema.end(), a.schema.begin(), a.schema.end());
        atoms.push_back(std::move(e));
    }
    std::vector<Variable> head{ext.interval_var};
    head.insert(head.end(), q.head.begin(), q.head.end());
    ext.extended = make_query(q.name, std::move(atoms), std::move(head));
    return ext;
}

std::string MultivariateComponent::perm_name() const {
    std::string s;
    for (auto i : perm) s += std::to_string(i + 1);
    return s;
}

Rational MultivariateExtension::width() const {
    Rational w(0);
    for (const auto& c : components) w = std::max(w, c.td.width);
    return w;
}

MultivariateExtension multivariate_extension(const Query& q) {
    const std::size_t k = q.atoms.size();
    if (k > 5) throw BudgetError("multivariate extension: more than 5 atoms");
    if (q.head.size() + k > 16)
        throw BudgetError("multivariate extension: more than 16 variables");

    MultivariateExtension ext;
    ext.base = q;
    std::string zp = fresh_prefix(q, "Z");
    for (std::size_t i = 1; i <= k; ++i) ext.zvars.push_back(zp + std::to_string(i));

    std::vector<std::size_t> perm(k);
    std::iota(perm.begin(), perm.end(), 0);
    do {
        MultivariateComponent comp;
        comp.perm = perm;
        std::vector<Atom> atoms;
        for (std::size_t i = 0; i < k; ++i) {
            Atom a;
            a.relation = q.atoms[perm[i]].relation;
            for (std::size_t j = 0; j <= i; ++j) a.schema.push_back(ext.zvars[j]);
            a.schema.insert(a.schema.end(), q.atoms[perm[i]].schema.begin(),
                            q.atoms[perm[i]].schema.end());
            atoms.push_back(std::move(a));
        }
        std::vector<Variable> head = ext.zvars;
        head.insert(head.end(), q.head.begin(), q.head.end());
        comp.query = make_query(q.name, std::move(atoms), std::move(head));
        auto [w, td] = fhtw_impl(comp.query, ext.zvars);
        comp.td = std::move(td);
        comp.enum_root = comp.td.find_bag_containing(ext.zvars);
        assert(comp.enum_root >= 0);
        comp.td.reroot(comp.enum_root);
        ext.components.push_back(std::move(comp));
    } while (std::next_permutation(perm.begin(), perm.end()));
    return ext;
}

std::shared_ptr<const MultivariateExtension> multivariate_extension_cached(const Query& q) {
    static std::unordered_map<std::string, std::shared_ptr<const MultivariateExtension>> cache;
    std::string key = query_str(q);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    auto mv = std::make_shared<const MultivariateExtension>(multivariate_extension(q));
    cache.emplace(std::move(key), mv);
    return mv;
}

Rational w_hat(const Query& q) { return multivariate_extension(q).width(); }

}  // namespace mvivm
