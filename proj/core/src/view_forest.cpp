#include "view_forest.hpp"

#include <algorithm>
#include <cassert>

#include "mvivm/wcoj.hpp"

namespace mvivm::detail {

void TrieCursor::init(const IndexedRelation* rel, std::size_t order,
                      std::span<const Value> prefix) {
    rel_ = rel;
    order_ = order;
    bound_ = prefix.size();
    total_ = rel->order(order).size();
    base_ = rel->descend(order, prefix);
    path_.clear();
    fresh_ = true;
}

bool TrieCursor::next() {
    if (base_ == IndexedRelation::npos) return false;
    if (fresh_) {
        fresh_ = false;
        int node = base_;
        for (std::size_t lv = bound_; lv < total_; ++lv) {
            node = rel_->first_child(order_, node);
            if (node == IndexedRelation::npos) return false;  // empty subtree
            path_.push_back(node);
        }
        return true;  // also covers total_ == bound_: one empty completion
    }
    if (path_.empty()) return false;  // the single bound-only row was emitted
    // Advance like an odometer over sibling links.
    std::size_t lv = path_.size();
    while (lv > 0) {
        int sib = rel_->next_sibling(order_, path_[lv - 1]);
        if (sib != IndexedRelation::npos) {
            path_[lv - 1] = sib;
            for (std::size_t l = lv; l < path_.size(); ++l) {
                path_[l] = rel_->first_child(order_, path_[l - 1]);
                assert(path_[l] != IndexedRelation::npos);
            }
            return true;
        }
        --lv;
    }
    return false;
}

ViewForest::ViewForest(const Query& q, const TreeDecomposition& td, bool topdown,
                       bool deletes)
    : q_(q), td_(td), topdown_(topdown), deletes_(deletes) {
    compile();
}

Tuple ViewForest::project(const Tuple& x, const std::vector<std::size_t>& positions) const {
    Tuple out(positions.size());
    for (std::size_t i = 0; i < positions.size(); ++i) out[i] = x[positions[i]];
    return out;
}

void ViewForest::compile() {
    nvars_ = q_.head.size();
    for (std::size_t i = 0; i < nvars_; ++i) slot_.emplace(q_.head[i], i);
    base_ = IndexedDatabase::for_query(q_);
    for (std::size_t ai = 0; ai < q_.atoms.size(); ++ai)
        atom_of_rel_.emplace(q_.atoms[ai].relation, ai);

    nodes_.resize(td_.nodes.size());
    home_bag_.assign(q_.atoms.size(), -1);
    for (std::size_t ai = 0; ai < q_.atoms.size(); ++ai) {
        home_bag_[ai] = td_.find_bag_containing(q_.atoms[ai].schema);
        assert(home_bag_[ai] >= 0);
    }

    // Bags, views, parent-shared variable arrangements.
    for (std::size_t n = 0; n < td_.nodes.size(); ++n) {
        NodePlan& np = nodes_[n];
        np.parent = td_.nodes[n].parent;
        np.children = td_.nodes[n].children;
        np.bagvars = td_.nodes[n].bag;
        for (const auto& v : np.bagvars) np.bagslots.push_back(slot_.at(v));
        np.view = IndexedRelation(np.bagvars, {});
        if (topdown_) np.qpp = IndexedRelation(np.bagvars, {});
    }
    for (std::size_t n = 0; n < td_.nodes.size(); ++n) {
        NodePlan& np = nodes_[n];
        if (np.parent < 0) continue;
        const NodePlan& pp = nodes_[np.parent];
        // Shared variables, in the parent's bag order.
        for (std::size_t pi = 0; pi < pp.bagvars.size(); ++pi) {
            auto it = std::find(np.bagvars.begin(), np.bagvars.end(), pp.bagvars[pi]);
            if (it != np.bagvars.end())
                np.shared.push_back(static_cast<std::size_t>(it - np.bagvars.begin()));
        }
    }

    // Bag atoms: projections of base atoms plus child views.
    for (std::size_t n = 0; n < td_.nodes.size(); ++n) {
        NodePlan& np = nodes_[n];
        for (std::size_t ai = 0; ai < q_.atoms.size(); ++ai) {
            const Atom& a = q_.atoms[ai];
            PlannedAtom pa;
            pa.is_child_view = false;
            pa.rel = a.relation;
            for (std::size_t bs = 0; bs < np.bagvars.size(); ++bs) {
                auto it = std::find(a.schema.begin(), a.schema.end(), np.bagvars[bs]);
                if (it != a.schema.end()) {
                    pa.covered.push_back(bs);
                    pa.schema_of_covered.push_back(
                        static_cast<std::size_t>(it - a.schema.begin()));
                }
            }
            if (pa.covered.empty()) continue;  // nullary guard: dropped from plans
            occurrences_[a.relation].push_back({static_cast<int>(n), np.atoms.size()});
            np.atoms.push_back(std::move(pa));
        }
        for (int c : np.children) {
            PlannedAtom pa;
            pa.is_child_view = true;
            pa.child = c;
            const NodePlan& cp = nodes_[c];
            for (std::size_t bs = 0; bs < np.bagvars.size(); ++bs) {
                auto it = std::find(cp.bagvars.begin(), cp.bagvars.end(), np.bagvars[bs]);
                if (it != cp.bagvars.end()) {
                    pa.covered.push_back(bs);
                    pa.schema_of_covered.push_back(
                        static_cast<std::size_t>(it - cp.bagvars.begin()));
                }
            }
            assert(!pa.covered.empty());
            np.atoms.push_back(std::move(pa));
        }
    }

    // Index orders. Context j means "bag atom j was just updated": every other
    // atom leads with its variables shared with atom j, then the rest of its
    // bag variables, then (for base atoms) its non-bag attributes.
    for (std::size_t n = 0; n < td_.nodes.size(); ++n) {
        NodePlan& np = nodes_[n];
        auto source_of = [&](const PlannedAtom& pa) -> IndexedRelation& {
            return pa.is_child_view ? nodes_[pa.child].view : base_.at(pa.rel);
        };
        for (std::size_t a = 0; a < np.atoms.size(); ++a) {
            PlannedAtom& pa = np.atoms[a];
            pa.ctx.resize(np.atoms.size());
            for (std::size_t j = 0; j < np.atoms.size(); ++j) {
                std::vector<std::uint8_t> in_j(np.bagvars.size(), 0);
                if (j != a)
                    for (std::size_t s : np.atoms[j].covered) in_j[s] = 1;
                // Leading: covered slots, bound-for-context first.
                std::vector<std::size_t> lead_idx(pa.covered.size());
                for (std::size_t i = 0; i < lead_idx.size(); ++i) lead_idx[i] = i;
                std::stable_sort(lead_idx.begin(), lead_idx.end(),
                                 [&](std::size_t x, std::size_t y) {
                                     return in_j[pa.covered[x]] > in_j[pa.covered[y]];
                                 });
                std::vector<std::size_t> order;
                CtxRef cr;
                for (std::size_t i : lead_idx) {
                    order.push_back(pa.schema_of_covered[i]);
                    cr.levels.push_back(pa.covered[i]);
                }
                const IndexedRelation& src = source_of(pa);
                for (std::size_t p = 0; p < src.schema().size(); ++p)
                    if (std::find(order.begin(), order.end(), p) == order.end())
                        order.push_back(p);
                cr.order_id = source_of(pa).add_order(order);
                pa.ctx[j] = std::move(cr);
            }
        }
        // Per-context iteration slots (unbound bag slots, ascending).
        np.iter_slots.resize(np.atoms.size());
        for (std::size_t j = 0; j < np.atoms.size(); ++j) {
            std::vector<std::uint8_t> in_j(np.bagvars.size(), 0);
            for (std::size_t s : np.atoms[j].covered) in_j[s] = 1;
            for (std::size_t s = 0; s < np.bagvars.size(); ++s)
                if (!in_j[s]) np.iter_slots[j].push_back(s);
        }
    }

    // Precompile the per-context delta joins. Relation addresses are stable
    // from here on: nodes_ is fully sized and base_ is node-based.
    for (std::size_t n = 0; n < td_.nodes.size(); ++n) {
        NodePlan& np = nodes_[n];
        np.ctx_join.resize(np.atoms.size());
        for (std::size_t j = 0; j < np.atoms.size(); ++j) {
            CtxJoin& cj = np.ctx_join[j];
            for (std::size_t a = 0; a < np.atoms.size(); ++a) {
                if (a == j) continue;
                const PlannedAtom& pa = np.atoms[a];
                AtomRef ref;
                ref.rel = pa.is_child_view ? &nodes_[pa.child].view : &base_.at(pa.rel);
                ref.order_id = pa.ctx[j].order_id;
                ref.depth = pa.covered.size();
                ref.slots = pa.ctx[j].levels;
                cj.refs.push_back(std::move(ref));
            }
            cj.iter_slots = np.iter_slots[j];
            cj.bound.assign(np.bagvars.size(), 0);
            for (std::size_t s : np.atoms[j].covered) cj.bound[s] = 1;
            cj.at_slot = refs_at_slots(std::span<const AtomRef>(cj.refs),
                                       std::span<const std::size_t>(cj.iter_slots), cj.bound);
        }
    }
    scratch_assign_.resize(nvars_);

    // View orders: parent-facing first, then per-atom victim orders.
    for (std::size_t n = 0; n < td_.nodes.size(); ++n) {
        NodePlan& np = nodes_[n];
        auto with_rest = [&](std::vector<std::size_t> lead) {
            for (std::size_t p = 0; p < np.bagvars.size(); ++p)
                if (std::find(lead.begin(), lead.end(), p) == lead.end()) lead.push_back(p);
            return lead;
        };
        np.view_parent_order = np.view.add_order(with_rest(np.shared));
        np.child_covered.resize(np.children.size());
        for (std::size_t ci = 0; ci < np.children.size(); ++ci)
            for (const auto& pa : np.atoms)
                if (pa.is_child_view && pa.child == np.children[ci])
                    np.child_covered[ci] = pa.covered;
        if (deletes_) {
            for (const auto& pa : np.atoms)
                np.view_victim_orders.push_back(np.view.add_order(with_rest(pa.covered)));
        }
        if (topdown_) {
            np.qpp_parent_order = np.qpp.add_order(with_rest(np.shared));
            for (std::size_t ci = 0; ci < np.children.size(); ++ci)
                np.qpp_child_orders.push_back(np.qpp.add_order(with_rest(np.child_covered[ci])));
            np.qpp_atom_orders.assign(np.atoms.size(), 0);
            for (std::size_t a = 0; a < np.atoms.size(); ++a)
                np.qpp_atom_orders[a] = np.qpp.add_order(with_rest(np.atoms[a].covered));
        }
    }

    full_walk_ = make_walk(td_.root, false, 0, 0);
    if (topdown_) {
        delta_walks_.resize(q_.atoms.size());
        delta_key_.resize(q_.atoms.size());
        for (std::size_t ai = 0; ai < q_.atoms.size(); ++ai) {
            int home = home_bag_[ai];
            const NodePlan& np = nodes_[home];
            std::size_t bag_atom = np.atoms.size();
            for (std::size_t a = 0; a < np.atoms.size(); ++a)
                if (!np.atoms[a].is_child_view && np.atoms[a].rel == q_.atoms[ai].relation)
                    bag_atom = a;
            assert(bag_atom < np.atoms.size());
            delta_walks_[ai] = make_walk(home, true, np.qpp_atom_orders[bag_atom],
                                         np.atoms[bag_atom].covered.size());
            delta_key_[ai] = np.atoms[bag_atom].schema_of_covered;
        }
    }
}

ViewForest::WalkPlan ViewForest::make_walk(int root, bool qpp, std::size_t root_order,
                                           std::size_t root_bound) const {
    WalkPlan plan;
    auto level_slots_of = [&](int node, const IndexedRelation& rel, std::size_t order_id) {
        std::vector<std::size_t> ls;
        for (std::size_t p : rel.order(order_id)) ls.push_back(nodes_[node].bagslots[p]);
        return ls;
    };

    const NodePlan& rp = nodes_[root];
    WalkStep rs;
    rs.node = root;
    rs.qpp = qpp;
    rs.order_id = root_order;
    rs.bound = root_bound;
    rs.level_slots = level_slots_of(root, qpp ? rp.qpp : rp.view, root_order);
    plan.steps.push_back(std::move(rs));

    // DFS so each step's walk-parent precedes it.
    std::vector<std::pair<int, int>> stack;  // (node, came_from)
    stack.push_back({root, -1});
    while (!stack.empty()) {
        auto [u, from] = stack.back();
        stack.pop_back();
        const NodePlan& up = nodes_[u];
        std::vector<int> nbrs = up.children;
        if (up.parent >= 0) nbrs.push_back(up.parent);
        for (int v : nbrs) {
            if (v == from) continue;
            const NodePlan& vp = nodes_[v];
            WalkStep st;
            st.node = v;
            st.qpp = qpp;
            if (vp.parent == u) {
                // Walking down an original edge: bind the shared prefix.
                st.order_id = qpp ? vp.qpp_parent_order : vp.view_parent_order;
                st.bound = vp.shared.size();
                st.level_slots = level_slots_of(v, qpp ? vp.qpp : vp.view, st.order_id);
            } else {
                // Walking up: v is u's original parent.
                assert(up.parent == v);
                assert(qpp);  // only the top-down layer supports re-rooted walks
                std::size_t ci = 0;
                for (std::size_t i = 0; i < vp.children.size(); ++i)
                    if (vp.children[i] == u) ci = i;
                st.order_id = vp.qpp_child_orders[ci];
                st.bound = up.shared.size();
                st.level_slots = level_slots_of(v, vp.qpp, st.order_id);
            }
            plan.steps.push_back(std::move(st));
            stack.push_back({v, u});
        }
    }
    return plan;
}

bool ViewForest::insert_base(const std::string& rel, const Tuple& t) {
    if (!base_.at(rel).insert(t)) return false;
    enqueue_base_events(rel, t, true);
    drain();
    return true;
}

bool ViewForest::erase_base(const std::string& rel, const Tuple& t) {
    if (!deletes_) throw EngineError("deletes are not supported by this engine");
    if (!base_.at(rel).erase(t)) return false;
    enqueue_base_events(rel, t, false);
    drain();
    return true;
}

void ViewForest::enqueue_base_events(const std::string& rel, const Tuple& t, bool insert) {
    auto it = occurrences_.find(rel);
    if (it == occurrences_.end()) return;
    const IndexedRelation& r = base_.at(rel);
    for (auto [node, atom] : it->second) {
        const PlannedAtom& pa = nodes_[node].atoms[atom];
        Tuple key = project(t, pa.schema_of_covered);
        std::size_t cnt = r.select_count(pa.ctx[atom].order_id,
                                         std::span<const Value>(key.data(), key.size()));
        if (insert ? cnt == 1 : cnt == 0)
            queue_.push_back(Event{node, atom, insert, std::move(key)});
    }
}

void ViewForest::drain() {
    while (!queue_.empty()) {
        Event ev = std::move(queue_.front());
        queue_.pop_front();
        if (ev.insert)
            handle_insert(ev);
        else
            handle_erase(ev);
    }
}

void ViewForest::handle_insert(const Event& ev) {
    NodePlan& np = nodes_[ev.node];
    const PlannedAtom& ins = np.atoms[ev.atom];
    const CtxJoin& cj = np.ctx_join[ev.atom];

    std::vector<Value>& assign = scratch_assign_;
    assign.resize(np.bagvars.size());
    for (std::size_t i = 0; i < ins.covered.size(); ++i) assign[ins.covered[i]] = ev.key[i];

    std::vector<Tuple>& results = scratch_results_;
    results.clear();
    join_refs_prepared(std::span<const AtomRef>(cj.refs),
                       std::span<const std::size_t>(cj.iter_slots), cj.at_slot, assign,
                       cj.bound, [&](std::span<const Value> vals) {
                           results.emplace_back(vals.begin(), vals.end());
                       });
    for (auto& x : results) {
        if (np.view.insert(x)) view_inserted(ev.node, x);
    }
}

void ViewForest::view_inserted(int node, const Tuple& x) {
    NodePlan& np = nodes_[node];
    if (np.parent >= 0) {
        Tuple y = project(x, np.shared);
        if (np.view.select_count(np.view_parent_order,
                                 std::span<const Value>(y.data(), y.size())) == 1) {
            // Fresh projection: tell the parent's child-view atom.
            NodePlan& pp = nodes_[np.parent];
            for (std::size_t a = 0; a < pp.atoms.size(); ++a) {
                if (pp.atoms[a].is_child_view && pp.atoms[a].child == node) {
                    queue_.push_back(Event{np.parent, a, true, std::move(y)});
                    break;
                }
            }
        }
    }
    if (!topdown_) return;
    if (np.parent < 0) {
        qpp_insert(node, x);
        return;
    }
    // x joins the top-down view only if its shared part is already present in
    // the parent's top-down view.
    Tuple y = project(x, np.shared);
    const NodePlan& pp = nodes_[np.parent];
    std::size_t ci = 0;
    for (std::size_t i = 0; i < pp.children.size(); ++i)
        if (pp.children[i] == node) ci = i;
    if (pp.qpp.select_count(pp.qpp_child_orders[ci],
                            std::span<const Value>(y.data(), y.size())) > 0)
        qpp_insert(node, x);
}

void ViewForest::qpp_insert(int node, const Tuple& x) {
    NodePlan& np = nodes_[node];
    if (!np.qpp.insert(x)) return;
    for (std::size_t ci = 0; ci < np.children.size(); ++ci) {
        int c = np.children[ci];
        const NodePlan& cp = nodes_[c];
        Tuple y = project(x, np.child_covered[ci]);
        if (np.qpp.select_count(np.qpp_child_orders[ci],
                                std::span<const Value>(y.data(), y.size())) == 1) {
            // New shared tuple toward child c: pull matching child view rows.
            std::vector<Tuple> pulled;
            cp.view.scan(cp.view_parent_order, std::span<const Value>(y.data(), y.size()),
                         pulled);
            for (const auto& xc : pulled) qpp_insert(c, xc);
        }
    }
}

void ViewForest::handle_erase(const Event& ev) {
    NodePlan& np = nodes_[ev.node];
    std::vector<Tuple> victims;
    np.view.scan(np.view_victim_orders[ev.atom],
                 std::span<const Value>(ev.key.data(), ev.key.size()), victims);
    for (const auto& x : victims) view_erase(ev.node, x);
}

void ViewForest::view_erase(int node, const Tuple& x) {
    NodePlan& np = nodes_[node];
    if (!np.view.erase(x)) return;
    if (np.parent >= 0) {
        Tuple y = project(x, np.shared);
        if (np.view.select_count(np.view_parent_order,
                                 std::span<const Value>(y.data(), y.size())) == 0) {
            NodePlan& pp = nodes_[np.parent];
            for (std::size_t a = 0; a < pp.atoms.size(); ++a) {
                if (pp.atoms[a].is_child_view && pp.atoms[a].child == node) {
                    queue_.push_back(Event{np.parent, a, false, std::move(y)});
                    break;
                }
            }
        }
    }
    if (topdown_) qpp_erase(node, x);
}

void ViewForest::qpp_erase(int node, const Tuple& x) {
    NodePlan& np = nodes_[node];
    if (!np.qpp.erase(x)) return;
    for (std::size_t ci = 0; ci < np.children.size(); ++ci) {
        int c = np.children[ci];
        NodePlan& cp = nodes_[c];
        Tuple y = project(x, np.child_covered[ci]);
        if (np.qpp.select_count(np.qpp_child_orders[ci],
                                std::span<const Value>(y.data(), y.size())) == 0) {
            std::vector<Tuple> victims;
            cp.qpp.scan(cp.qpp_parent_order, std::span<const Value>(y.data(), y.size()),
                        victims);
            for (const auto& xc : victims) qpp_erase(c, xc);
        }
    }
}

class WalkStream final : public StreamImpl {
public:
    WalkStream(const ViewForest* f, const ViewForest::WalkPlan* plan,
               std::vector<Value> prefix, std::vector<std::size_t> emit,
               const std::uint64_t* live, std::uint64_t expect)
        : forest_(f),
          plan_(plan),
          prefix_(std::move(prefix)),
          emit_(std::move(emit)),
          live_(live),
          expect_(expect),
          assign_(f->q_.head.size(), 0),
          cursors_(plan->steps.size()) {}

    std::optional<Tuple> next() override {
        if (live_ && *live_ != expect_)
            throw EngineError("stale enumeration: the engine has been updated");
        if (done_) return std::nullopt;
        if (!started_) {
            started_ = true;
            const auto& rs = plan_->steps[0];
            if (prefix_.size() > rs.level_slots.size())
                throw EngineError("enumeration prefix longer than the root bag");
            for (std::size_t i = 0; i < prefix_.size(); ++i)
                assign_[rs.level_slots[i]] = prefix_[i];
            pos_ = 0;
            open_cursor(0, prefix_.size());
        }
        for (;;) {
            auto& st = plan_->steps[pos_];
            if (cursors_[pos_].next()) {
                std::size_t bound = pos_ == 0 ? prefix_.size() : st.bound;
                for (std::size_t i = 0; i < cursors_[pos_].suffix_levels(); ++i)
                    assign_[st.level_slots[bound + i]] = cursors_[pos_].value(i);
                if (pos_ + 1 == plan_->steps.size()) {
                    Tuple out(emit_.size());
                    for (std::size_t i = 0; i < emit_.size(); ++i) out[i] = assign_[emit_[i]];
                    return out;
                }
                ++pos_;
                open_cursor(pos_, plan_->steps[pos_].bound);
            } else {
                if (pos_ == 0) {
                    done_ = true;
                    return std::nullopt;
                }
                --pos_;
            }
        }
    }

private:
    void open_cursor(std::size_t idx, std::size_t bound) {
        const auto& st = plan_->steps[idx];
        const auto& np = forest_->nodes_[st.node];
        const IndexedRelation& rel = st.qpp ? np.qpp : np.view;
        scratch_.clear();
        for (std::size_t i = 0; i < bound; ++i) scratch_.push_back(assign_[st.level_slots[i]]);
        cursors_[idx].init(&rel, st.order_id, std::span<const Value>(scratch_));
    }

    const ViewForest* forest_;
    const ViewForest::WalkPlan* plan_;
    std::vector<Value> prefix_;
    std::vector<std::size_t> emit_;
    const std::uint64_t* live_;
    std::uint64_t expect_;
    std::vector<Value> assign_;
    std::vector<TrieCursor> cursors_;
    std::vector<Value> scratch_;
    std::size_t pos_ = 0;
    bool started_ = false;
    bool done_ = false;
};

std::unique_ptr<StreamImpl> ViewForest::make_stream(const WalkPlan& plan,
                                                    std::vector<Value> prefix,
                                                    std::vector<std::size_t> emit_slots,
                                                    const std::uint64_t* live_version,
                                                    std::uint64_t expect) const {
    return std::make_unique<WalkStream>(this, &plan, std::move(prefix),
                                        std::move(emit_slots), live_version, expect);
}

std::unique_ptr<StreamImpl> ViewForest::walk_full(std::vector<Value> root_prefix,
                                                  std::vector<std::size_t> emit_slots,
                                                  const std::uint64_t* live_version,
                                                  std::uint64_t expect) const {
    return make_stream(full_walk_, std::move(root_prefix), std::move(emit_slots),
                       live_version, expect);
}

std::unique_ptr<StreamImpl> ViewForest::walk_delta(std::size_t atom_index, const Tuple& t,
                                                   std::vector<std::size_t> emit_slots,
                                                   const std::uint64_t* live_version,
                                                   std::uint64_t expect) const {
    if (!topdown_) throw EngineError("delta enumeration needs the top-down layer");
    // The bound prefix follows the home bag's attribute arrangement, which
    // can permute the atom's schema order.
    return make_stream(delta_walks_[atom_index], project(t, delta_key_[atom_index]),
                       std::move(emit_slots), live_version, expect);
}

}  // namespace mvivm::detail
