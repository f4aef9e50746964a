#include "mvivm/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <random>
#include <sstream>

#include "mvivm/engine_insert_delete.hpp"
#include "mvivm/width.hpp"

namespace mvivm {

StreamKind stream_kind_of(const std::string& name) {
    if (name == "insert_only_random" || name == "insert-only") return StreamKind::InsertOnlyRandom;
    if (name == "insert_delete_random" || name == "mixed") return StreamKind::InsertDeleteRandom;
    if (name == "fifo") return StreamKind::Fifo;
    if (name.rfind("oumv", 0) == 0) return StreamKind::OuMv;
    throw QueryError("unknown stream kind: " + name);
}

std::string stream_kind_name(StreamKind k) {
    switch (k) {
        case StreamKind::InsertOnlyRandom: return "insert_only_random";
        case StreamKind::InsertDeleteRandom: return "insert_delete_random";
        case StreamKind::Fifo: return "fifo";
        case StreamKind::OuMv: return "oumv";
    }
    return "?";
}

EngineKind engine_kind_of(const std::string& name) {
    if (name == "mvivm") return EngineKind::Mvivm;
    if (name == "insert-only" || name == "insert_only") return EngineKind::InsertOnly;
    if (name == "naive") return EngineKind::Naive;
    if (name == "delta-base" || name == "delta_base") return EngineKind::DeltaBase;
    throw QueryError("unknown engine: " + name);
}

std::string engine_kind_name(EngineKind k) {
    switch (k) {
        case EngineKind::Mvivm: return "mvivm";
        case EngineKind::InsertOnly: return "insert-only";
        case EngineKind::Naive: return "naive";
        case EngineKind::DeltaBase: return "delta-base";
    }
    return "?";
}

namespace {

struct DomainGen {
    const Query& q;
    std::mt19937_64 rng;
    std::size_t domain;

    // Insert-only streams use grid-saturating density (domain scaled so each
    // relation approaches its full cross product), which is where the
    // per-insert join work shows; mixed streams stay sparser so result sizes
    // remain moderate under churn.
    DomainGen(const Query& query, std::size_t length, std::uint64_t seed, bool dense)
        : q(query), rng(seed) {
        if (dense) {
            // Domain sized so each relation fills roughly 2/3 of its value
            // grid: degrees then grow with the stream instead of flatlining.
            std::size_t amax = 1;
            for (const auto& a : q.atoms) amax = std::max(amax, a.schema.size());
            double per_rel = double(length) / double(q.atoms.size());
            domain = std::max<std::size_t>(
                2, static_cast<std::size_t>(
                       std::ceil(1.5 * std::pow(per_rel, 1.0 / double(amax)))));
        } else {
            domain =
                std::max<std::size_t>(2, static_cast<std::size_t>(std::sqrt(double(length))));
        }
    }

    Tuple draw(const Atom& a) {
        Tuple t;
        t.reserve(a.schema.size());
        for (const auto& v : a.schema) {
            std::size_t x = rng() % domain;
            t.push_back(intern(v + std::to_string(x)));
        }
        return t;
    }
};

struct LiveSet {
    // Per-relation live tuples with O(1) uniform removal.
    struct Rel {
        std::vector<Tuple> list;
        std::unordered_map<Tuple, std::size_t, TupleHash> pos;
    };
    std::unordered_map<std::string, Rel> rels;
    std::size_t total = 0;

    bool contains(const std::string& r, const Tuple& t) const {
        auto it = rels.find(r);
        return it != rels.end() && it->second.pos.count(t) > 0;
    }
    void insert(const std::string& r, const Tuple& t) {
        Rel& rel = rels[r];
        rel.pos.emplace(t, rel.list.size());
        rel.list.push_back(t);
        ++total;
    }
    void erase(const std::string& r, const Tuple& t) {
        Rel& rel = rels[r];
        std::size_t i = rel.pos.at(t);
        rel.pos.erase(t);
        if (i + 1 != rel.list.size()) {
            rel.list[i] = rel.list.back();
            rel.pos[rel.list[i]] = i;
        }
        rel.list.pop_back();
        --total;
    }
};

UpdateStream gen_insert_only(const Query& q, std::size_t length, std::uint64_t seed) {
    UpdateStream s;
    DomainGen gen(q, length, seed, /*dense=*/true);
    LiveSet live;
    while (s.updates.size() < length) {
        const Atom& a = q.atoms[gen.rng() % q.atoms.size()];
        Tuple t = gen.draw(a);
        int attempts = 0;
        while (live.contains(a.relation, t) && attempts++ < 64) t = gen.draw(a);
        if (live.contains(a.relation, t)) {
            gen.domain += 1 + gen.domain / 16;  // widen only on saturation
            continue;
        }
        live.insert(a.relation, t);
        s.updates.push_back(Update{Op::Insert, a.relation, std::move(t)});
    }
    return s;
}

UpdateStream gen_insert_delete(const Query& q, std::size_t length, std::uint64_t seed) {
    UpdateStream s;
    DomainGen gen(q, length, seed, /*dense=*/false);
    LiveSet live;
    while (s.updates.size() < length) {
        // Insert-biased so the database grows while deletes stay frequent.
        bool do_insert = live.total == 0 || (gen.rng() % 5 < 3);
        if (do_insert) {
            const Atom& a = q.atoms[gen.rng() % q.atoms.size()];
            Tuple t = gen.draw(a);
            int attempts = 0;
            while (live.contains(a.relation, t) && attempts++ < 64) t = gen.draw(a);
            if (live.contains(a.relation, t)) {
                gen.domain += 1 + gen.domain / 16;
                continue;
            }
            live.insert(a.relation, t);
            s.updates.push_back(Update{Op::Insert, a.relation, std::move(t)});
        } else {
            // Uniform over all live tuples.
            std::size_t pick = gen.rng() % live.total;
            for (auto& [rel, st] : live.rels) {
                if (pick >= st.list.size()) {
                    pick -= st.list.size();
                    continue;
                }
                Tuple t = st.list[pick];
                live.erase(rel, t);
                s.updates.push_back(Update{Op::Delete, rel, std::move(t)});
                break;
            }
        }
    }
    return s;
}

UpdateStream gen_fifo(const Query& q, std::size_t length, std::uint64_t seed) {
    UpdateStream s;
    DomainGen gen(q, length, seed, /*dense=*/false);
    LiveSet live;
    std::deque<std::pair<std::string, Tuple>> fifo;
    std::size_t window = std::max<std::size_t>(4, length / 4);
    while (s.updates.size() < length) {
        if (fifo.size() >= window && s.updates.size() + 1 < length) {
            auto [rel, t] = fifo.front();
            fifo.pop_front();
            live.erase(rel, t);
            s.updates.push_back(Update{Op::Delete, rel, std::move(t)});
            continue;
        }
        const Atom& a = q.atoms[gen.rng() % q.atoms.size()];
        Tuple t = gen.draw(a);
        int attempts = 0;
        while (live.contains(a.relation, t) && attempts++ < 64) t = gen.draw(a);
        if (live.contains(a.relation, t)) {
            gen.domain += 1 + gen.domain / 16;
            continue;
        }
        live.insert(a.relation, t);
        fifo.push_back({a.relation, t});
        s.updates.push_back(Update{Op::Insert, a.relation, t});
    }
    return s;
}

// Adversarial encoding of online vector-matrix-vector multiplication: one
// atom pair carries the vectors, one atom the matrix, everything else is
// frozen to dummy rows.
UpdateStream gen_oumv(const Query& q, std::size_t n, std::uint64_t seed) {
    if (n == 0) return {};
    // Find a non-hierarchical witness: variables X, Y and atoms with
    // X-not-Y, Y-not-X, and X-and-Y.
    int rx = -1, tx = -1, sx = -1;
    Variable X, Y;
    for (const auto& x : q.head) {
        for (const auto& y : q.head) {
            if (x == y) continue;
            int r = -1, t = -1, m = -1;
            for (std::size_t i = 0; i < q.atoms.size(); ++i) {
                bool hx = q.atoms[i].contains(x), hy = q.atoms[i].contains(y);
                if (hx && hy) m = static_cast<int>(i);
                else if (hx) r = static_cast<int>(i);
                else if (hy) t = static_cast<int>(i);
            }
            if (r >= 0 && t >= 0 && m >= 0) {
                X = x;
                Y = y;
                rx = r;
                tx = t;
                sx = m;
                break;
            }
        }
        if (rx >= 0) break;
    }
    if (rx < 0) throw QueryError("oumv streams need a non-hierarchical query");

    std::mt19937_64 rng(seed);
    auto row = [&](std::size_t i) { return intern("r" + std::to_string(i)); };
    auto col = [&](std::size_t j) { return intern("c" + std::to_string(j)); };
    Value dummy = intern("d0");
    auto fill = [&](const Atom& a, Value xv, bool use_x, Value yv, bool use_y) {
        Tuple t;
        for (const auto& v : a.schema) {
            if (use_x && v == X) t.push_back(xv);
            else if (use_y && v == Y) t.push_back(yv);
            else t.push_back(dummy);
        }
        return t;
    };

    UpdateStream s;
    // Matrix phase: every atom containing both X and Y carries M.
    std::vector<std::pair<std::size_t, std::size_t>> mcells;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (rng() % 2) mcells.push_back({i, j});
    for (std::size_t ai = 0; ai < q.atoms.size(); ++ai) {
        const Atom& a = q.atoms[ai];
        bool hx = a.contains(X), hy = a.contains(Y);
        if (static_cast<int>(ai) == rx || static_cast<int>(ai) == tx) continue;
        if (hx && hy) {
            for (auto [i, j] : mcells)
                s.updates.push_back(Update{Op::Insert, a.relation, fill(a, row(i), true, col(j), true)});
        } else if (hx) {
            for (std::size_t i = 0; i < n; ++i)
                s.updates.push_back(Update{Op::Insert, a.relation, fill(a, row(i), true, 0, false)});
        } else if (hy) {
            for (std::size_t j = 0; j < n; ++j)
                s.updates.push_back(Update{Op::Insert, a.relation, fill(a, 0, false, col(j), true)});
        } else {
            s.updates.push_back(Update{Op::Insert, a.relation, fill(a, 0, false, 0, false)});
        }
    }
    (void)sx;
    // Rounds: re-encode u_r in the X-only atom and v_r in the Y-only atom.
    std::vector<std::size_t> prev_u, prev_v;
    const Atom& ra = q.atoms[rx];
    const Atom& ta = q.atoms[tx];
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t i : prev_u)
            s.updates.push_back(Update{Op::Delete, ra.relation, fill(ra, row(i), true, 0, false)});
        for (std::size_t j : prev_v)
            s.updates.push_back(Update{Op::Delete, ta.relation, fill(ta, 0, false, col(j), true)});
        prev_u.clear();
        prev_v.clear();
        for (std::size_t i = 0; i < n; ++i)
            if (rng() % 2) prev_u.push_back(i);
        for (std::size_t j = 0; j < n; ++j)
            if (rng() % 2) prev_v.push_back(j);
        for (std::size_t i : prev_u)
            s.updates.push_back(Update{Op::Insert, ra.relation, fill(ra, row(i), true, 0, false)});
        for (std::size_t j : prev_v)
            s.updates.push_back(Update{Op::Insert, ta.relation, fill(ta, 0, false, col(j), true)});
    }
    return s;
}

}  // namespace

UpdateStream gen_stream(StreamKind kind, const Query& q, std::size_t length,
                        std::uint64_t seed) {
    switch (kind) {
        case StreamKind::InsertOnlyRandom: return gen_insert_only(q, length, seed);
        case StreamKind::InsertDeleteRandom: return gen_insert_delete(q, length, seed);
        case StreamKind::Fifo: return gen_fifo(q, length, seed);
        case StreamKind::OuMv: return gen_oumv(q, length, seed);
    }
    throw QueryError("unknown stream kind");
}

Transcript run_insert_delete(const Query& q, const UpdateStream& s, EnumMode mode,
                             bool auto_reset, std::uint64_t* collisions) {
    Transcript tr;
    InsertDeleteEngine eng(q, mode, auto_reset);
    for (const auto& u : s.updates) {
        DeltaHandle h = eng.apply(u);
        auto full = eng.enumerate_full().collect();
        std::sort(full.begin(), full.end());
        tr.full.push_back(std::move(full));
        if (mode == EnumMode::Delta) {
            auto d = eng.enumerate_delta(h);
            std::vector<SignedTuple> ds;
            while (auto t = d.tuples.next()) ds.push_back({d.sign, std::move(*t)});
            std::sort(ds.begin(), ds.end());
            tr.delta.push_back(std::move(ds));
        }
    }
    if (collisions) *collisions = eng.enum_collisions();
    return tr;
}

Transcript run_insert_only(const Query& q, const UpdateStream& s, EnumMode mode) {
    Transcript tr;
    InsertOnlyEngine eng(q, mode);
    for (const auto& u : s.updates) {
        if (u.op != Op::Insert)
            throw EngineError("insert-only engine fed a delete");
        DeltaHandle h = eng.insert(u.relation, u.tuple);
        auto full = eng.enumerate_full().collect();
        std::sort(full.begin(), full.end());
        tr.full.push_back(std::move(full));
        if (mode == EnumMode::Delta) {
            auto ds = eng.enumerate_delta(h).collect();
            std::vector<SignedTuple> d;
            for (auto& t : ds) d.push_back({Op::Insert, std::move(t)});
            std::sort(d.begin(), d.end());
            tr.delta.push_back(std::move(d));
        }
    }
    return tr;
}

namespace {

double now_ms() {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

struct TimedRun {
    double ms = 0;
    std::size_t final_db = 0;
    std::size_t final_result = 0;
};

TimedRun time_engine(EngineKind ek, const Query& q, const UpdateStream& s) {
    TimedRun out;
    switch (ek) {
        case EngineKind::Mvivm: {
            InsertDeleteEngine eng(q, EnumMode::Full);
            double t0 = now_ms();
            for (const auto& u : s.updates) eng.apply(u);
            out.ms = now_ms() - t0;
            out.final_db = eng.live_size();
            break;
        }
        case EngineKind::InsertOnly: {
            InsertOnlyEngine eng(q, EnumMode::Full);
            double t0 = now_ms();
            for (const auto& u : s.updates) {
                if (u.op != Op::Insert) throw EngineError("insert-only engine fed a delete");
                eng.insert(u.relation, u.tuple);
            }
            out.ms = now_ms() - t0;
            out.final_db = s.updates.size();
            break;
        }
        case EngineKind::Naive: {
            NaiveEngine eng(q);
            double t0 = now_ms();
            for (const auto& u : s.updates) eng.apply(u);
            out.ms = now_ms() - t0;
            out.final_result = eng.result().size();
            break;
        }
        case EngineKind::DeltaBase: {
            DeltaEngine eng(q);
            double t0 = now_ms();
            for (const auto& u : s.updates) eng.apply(u);
            out.ms = now_ms() - t0;
            out.final_result = eng.result_size();
            break;
        }
    }
    return out;
}

}  // namespace

BenchReport measure(EngineKind engine, StreamKind kind, const Query& q,
                    const std::vector<std::size_t>& sizes, std::size_t repeats,
                    std::uint64_t seed) {
    BenchReport report;
    for (std::size_t n : sizes) {
        UpdateStream s = gen_stream(kind, q, n, seed);
        TimedRun best;
        for (std::size_t r = 0; r < std::max<std::size_t>(1, repeats); ++r) {
            TimedRun run = time_engine(engine, q, s);
            if (r == 0 || run.ms < best.ms) best = run;
        }
        BenchRow row;
        row.query = q.name;
        row.engine = engine_kind_name(engine);
        row.kind = stream_kind_name(kind);
        row.n = s.updates.size();
        row.seed = seed;
        row.total_ms = best.ms;
        row.final_db = best.final_db;
        row.final_result = best.final_result;
        report.rows.push_back(std::move(row));
    }
    // Least-squares slope on log-log, first size discarded as warm-up.
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 1; i < report.rows.size(); ++i) {
        double ms = std::max(report.rows[i].total_ms, 1e-3);
        pts.push_back({std::log(double(report.rows[i].n)), std::log(ms)});
    }
    if (pts.size() >= 2) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
        for (auto [x, y] : pts) {
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
            syy += y * y;
        }
        double m = double(pts.size());
        double denom = m * sxx - sx * sx;
        report.slope = denom == 0 ? 0 : (m * sxy - sx * sy) / denom;
        double ybar = sy / m;
        double ss_tot = 0, ss_res = 0;
        double intercept = (sy - report.slope * sx) / m;
        for (auto [x, y] : pts) {
            double f = report.slope * x + intercept;
            ss_tot += (y - ybar) * (y - ybar);
            ss_res += (y - f) * (y - f);
        }
        report.r2 = ss_tot == 0 ? 1.0 : 1.0 - ss_res / ss_tot;
    }
    return report;
}

std::string bench_csv(const BenchReport& report) {
    std::ostringstream os;
    os << "query,engine,kind,N,seed,total_ms,slope,r2\n";
    for (const auto& r : report.rows) {
        os << r.query << "," << r.engine << "," << r.kind << "," << r.n << "," << r.seed
           << "," << r.total_ms << "," << report.slope << "," << report.r2 << "\n";
    }
    return os.str();
}

VerifyReport verify(const Query& q, const UpdateStream& s) {
    VerifyReport rep;
    rep.timestamps = s.updates.size();
    Transcript truth = naive_maintain(q, s);

    bool insert_only = true;
    for (const auto& u : s.updates)
        if (u.op == Op::Delete) insert_only = false;

    auto diff = [&](const std::string& name, const Transcript& got, bool check_delta) {
        for (std::size_t t = 0; t < s.updates.size(); ++t) {
            if (got.full[t] != truth.full[t]) {
                rep.ok = false;
                rep.detail = name + ": full result diverges at tau=" + std::to_string(t + 1);
                return false;
            }
            if (check_delta && got.delta[t] != truth.delta[t]) {
                rep.ok = false;
                rep.detail = name + ": delta diverges at tau=" + std::to_string(t + 1);
                return false;
            }
        }
        return true;
    };

    if (!diff("delta-base", delta_maintain(q, s), true)) return rep;
    std::uint64_t coll = 0;
    if (!diff("mvivm(full)", run_insert_delete(q, s, EnumMode::Full, true, &coll), false))
        return rep;
    rep.collisions += coll;
    if (!diff("mvivm(delta)", run_insert_delete(q, s, EnumMode::Delta, true, &coll), true))
        return rep;
    rep.collisions += coll;
    if (insert_only) {
        if (!diff("insert-only(full)", run_insert_only(q, s, EnumMode::Full), false)) return rep;
        if (!diff("insert-only(delta)", run_insert_only(q, s, EnumMode::Delta), true)) return rep;
    }
    return rep;
}

}  // namespace mvivm
