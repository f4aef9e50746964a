#include <fstream>
#include <iostream>
#include <sstream>
#include <unordered_set>

#include "CLI11.hpp"
#include "json.hpp"
#include "mvivm/engine_insert_delete.hpp"
#include "mvivm/engine_insert_only.hpp"
#include "mvivm/harness.hpp"
#include "mvivm/width.hpp"

namespace {

using namespace mvivm;

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

nlohmann::json rational_json(const Rational& r) {
    nlohmann::json j;
    j["str"] = r.str();
    j["value"] = r.to_double();
    return j;
}

nlohmann::json tuple_json(const Tuple& t) {
    auto arr = nlohmann::json::array();
    for (Value v : t) arr.push_back(value_str(v));
    return arr;
}

int cmd_analyze(const std::string& query_path) {
    Query q = parse_query(slurp(query_path));
    nlohmann::json out;
    out["query"] = query_str(q);
    out["rho_star"] = rational_json(rho_star(q).first);
    auto [w, td] = fhtw(q);
    out["fhtw"] = rational_json(w);
    out["acyclic"] = is_acyclic(q);
    out["hierarchical"] = is_hierarchical(q);
    auto mv = multivariate_extension(q);
    out["w_hat"] = rational_json(mv.width());
    auto comps = nlohmann::json::array();
    for (const auto& c : mv.components) {
        nlohmann::json cj;
        cj["perm"] = c.perm_name();
        auto schemas = nlohmann::json::array();
        for (const auto& a : c.query.atoms) {
            nlohmann::json aj;
            aj["relation"] = a.relation;
            aj["schema"] = a.schema;
            schemas.push_back(std::move(aj));
        }
        cj["schemas"] = std::move(schemas);
        cj["fhtw"] = rational_json(c.td.width);
        auto bags = nlohmann::json::array();
        for (const auto& n : c.td.nodes) bags.push_back(n.bag);
        cj["bags"] = std::move(bags);
        comps.push_back(std::move(cj));
    }
    out["components"] = std::move(comps);
    std::cout << out.dump(2) << "\n";
    return 0;
}

struct LiveCheck {
    std::unordered_map<std::string, std::unordered_set<Tuple, TupleHash>> live;
    bool admissible(const Update& u) const {
        auto it = live.find(u.relation);
        bool present = it != live.end() && it->second.count(u.tuple) > 0;
        return u.op == Op::Insert ? !present : present;
    }
    void apply(const Update& u) {
        if (u.op == Op::Insert) live[u.relation].insert(u.tuple);
        else live[u.relation].erase(u.tuple);
    }
};

int cmd_run(const std::string& query_path, const std::string& stream_path,
            const std::string& mode_s, const std::string& engine_s, std::size_t every,
            bool lenient) {
    Query q = parse_query(slurp(query_path));
    UpdateStream s = parse_stream(slurp(stream_path));
    EnumMode mode = mode_s == "delta" ? EnumMode::Delta : EnumMode::Full;
    EngineKind ek = engine_kind_of(engine_s);

    auto emit = [&](std::size_t tau, const char* key, nlohmann::json payload) {
        nlohmann::json line;
        line["tau"] = tau;
        line[key] = std::move(payload);
        std::cout << line.dump() << "\n";
    };
    auto full_json = [&](std::vector<Tuple> ts) {
        std::sort(ts.begin(), ts.end());
        auto arr = nlohmann::json::array();
        for (const auto& t : ts) arr.push_back(tuple_json(t));
        return arr;
    };
    auto want = [&](std::size_t tau) {
        return (every > 0 && tau % every == 0) || tau == s.updates.size();
    };
    auto filtered = [&](const UpdateStream& in) {
        // Lenient replay: skip updates the strict engines would reject.
        UpdateStream out;
        LiveCheck live;
        for (const auto& u : in.updates) {
            if (!live.admissible(u)) {
                std::cerr << "warning: skipping " << (u.op == Op::Insert ? "+" : "-")
                          << u.relation << tuple_str(u.tuple) << "\n";
                continue;
            }
            live.apply(u);
            out.updates.push_back(u);
        }
        return out;
    };

    UpdateStream replay = lenient ? filtered(s) : s;
    std::size_t tau = 0;
    switch (ek) {
        case EngineKind::Mvivm: {
            InsertDeleteEngine eng(q, mode);
            for (const auto& u : replay.updates) {
                DeltaHandle h = eng.apply(u);
                ++tau;
                if (mode == EnumMode::Delta) {
                    auto d = eng.enumerate_delta(h);
                    auto arr = nlohmann::json::array();
                    while (auto t = d.tuples.next()) {
                        nlohmann::json e;
                        e["op"] = d.sign == Op::Insert ? "+" : "-";
                        e["tuple"] = tuple_json(*t);
                        arr.push_back(std::move(e));
                    }
                    emit(tau, "delta", std::move(arr));
                } else if (want(tau)) {
                    emit(tau, "full", full_json(eng.enumerate_full().collect()));
                }
            }
            break;
        }
        case EngineKind::InsertOnly: {
            InsertOnlyEngine eng(q, mode);
            for (const auto& u : replay.updates) {
                if (u.op != Op::Insert) {
                    std::cerr << "error: insert-only engine cannot replay deletes\n";
                    return 2;
                }
                DeltaHandle h = eng.insert(u.relation, u.tuple);
                ++tau;
                if (mode == EnumMode::Delta) {
                    emit(tau, "delta", full_json(eng.enumerate_delta(h).collect()));
                } else if (want(tau)) {
                    emit(tau, "full", full_json(eng.enumerate_full().collect()));
                }
            }
            break;
        }
        case EngineKind::Naive: {
            NaiveEngine eng(q);
            for (const auto& u : replay.updates) {
                eng.apply(u, lenient);
                ++tau;
                if (want(tau)) emit(tau, "full", full_json(sorted_tuples(eng.result())));
            }
            break;
        }
        case EngineKind::DeltaBase: {
            DeltaEngine eng(q);
            for (const auto& u : replay.updates) {
                auto d = eng.apply(u, lenient);
                ++tau;
                if (mode == EnumMode::Delta) {
                    auto arr = nlohmann::json::array();
                    for (const auto& [op, t] : d) {
                        nlohmann::json e;
                        e["op"] = op == Op::Insert ? "+" : "-";
                        e["tuple"] = tuple_json(t);
                        arr.push_back(std::move(e));
                    }
                    emit(tau, "delta", std::move(arr));
                } else if (want(tau)) {
                    emit(tau, "full", full_json(eng.result()));
                }
            }
            break;
        }
    }
    return 0;
}

std::vector<std::size_t> parse_sizes(const std::string& text) {
    std::vector<std::size_t> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t mult = 1;
        if (!item.empty() && (item.back() == 'k' || item.back() == 'K')) {
            mult = 1000;
            item.pop_back();
        } else if (!item.empty() && (item.back() == 'm' || item.back() == 'M')) {
            mult = 1000000;
            item.pop_back();
        }
        out.push_back(static_cast<std::size_t>(std::stoull(item)) * mult);
    }
    return out;
}

int cmd_bench(const std::string& query_path, const std::string& gen, const std::string& sizes_s,
              std::uint64_t seed, const std::string& csv_path, const std::string& engine_s,
              std::size_t repeats) {
    Query q = parse_query(slurp(query_path));
    auto sizes = parse_sizes(sizes_s);
    BenchReport rep = measure(engine_kind_of(engine_s), stream_kind_of(gen), q, sizes,
                              repeats, seed);
    std::string csv = bench_csv(rep);
    if (!csv_path.empty()) {
        std::ofstream out(csv_path);
        out << csv;
    }
    std::cout << csv;
    std::cerr << "slope=" << rep.slope << " r2=" << rep.r2 << "\n";
    return 0;
}

int cmd_verify(const std::string& query_path, const std::string& stream_path) {
    Query q = parse_query(slurp(query_path));
    UpdateStream s = parse_stream(slurp(stream_path));
    VerifyReport rep = verify(q, s);
    nlohmann::json out;
    out["ok"] = rep.ok;
    out["timestamps"] = rep.timestamps;
    out["enumeration_collisions"] = rep.collisions;
    if (!rep.ok) out["detail"] = rep.detail;
    std::cout << out.dump(2) << "\n";
    return rep.ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dynamic conjunctive-query maintenance engine"};
    app.require_subcommand(1);

    std::string query_path, stream_path, mode = "full", engine = "mvivm";
    std::string gen = "insert_only_random", sizes = "1k,2k,4k,8k", csv;
    std::size_t every = 0, repeats = 1;
    std::uint64_t seed = 1;
    bool lenient = false;

    auto* analyze = app.add_subcommand("analyze", "Width and extension report for a query");
    analyze->add_option("query", query_path, "query file")->required();

    auto* run = app.add_subcommand("run", "Replay an update stream");
    run->add_option("query", query_path)->required();
    run->add_option("stream", stream_path)->required();
    run->add_option("--mode", mode, "full|delta");
    run->add_option("--engine", engine, "mvivm|insert-only|naive|delta-base");
    run->add_option("--enumerate-every", every, "emit the full result every K updates");
    run->add_flag("--lenient", lenient, "skip inadmissible updates with a warning");

    auto* bench = app.add_subcommand("bench", "Measure total update time across sizes");
    bench->add_option("query", query_path)->required();
    bench->add_option("--gen", gen, "insert_only_random|insert_delete_random|fifo|oumv");
    bench->add_option("--sizes", sizes, "comma list, k/m suffixes allowed");
    bench->add_option("--seed", seed);
    bench->add_option("--csv", csv, "also write the report here");
    bench->add_option("--engine", engine);
    bench->add_option("--repeats", repeats);

    auto* verify_cmd = app.add_subcommand("verify", "Differential check of all engines");
    verify_cmd->add_option("query", query_path)->required();
    verify_cmd->add_option("stream", stream_path)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(analyze)) return cmd_analyze(query_path);
        if (app.got_subcommand(run))
            return cmd_run(query_path, stream_path, mode, engine, every, lenient);
        if (app.got_subcommand(bench))
            return cmd_bench(query_path, gen, sizes, seed, csv, engine, repeats);
        if (app.got_subcommand(verify_cmd)) return cmd_verify(query_path, stream_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
