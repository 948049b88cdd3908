// SPDX-License-Identifier: Apache-2.0
//
// Experiment driver: spacesize, search, remap, pipeline, evaluate,
// bruteforce and report subcommands over the tier-mapping library.
// Exit codes: 0 success, 2 config error, 3 accuracy constraint unmet,
// 4 internal contract violation.

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tiermap/baselines.hpp"
#include "tiermap/errors.hpp"
#include "tiermap/metrics.hpp"
#include "tiermap/noise.hpp"
#include "tiermap/pareto.hpp"
#include "tiermap/remap.hpp"
#include "tiermap/surrogate.hpp"
#include "tiermap/tier_model.hpp"
#include "tiermap/workload.hpp"

using nlohmann::ordered_json;
using namespace tiermap;

namespace {

// ---------------------------------------------------------------------------
// Shared options and context
// ---------------------------------------------------------------------------

struct Options {
    std::string workload_path;
    std::string tiers_path;
    std::string support_path;
    std::string data_dir = "data";
    std::string out_dir = "out";
    std::string checkpoint;
    std::string checkpoint_shapes;
    std::string train_csv;
    std::string test_csv;
    std::uint64_t seed = 42;
    int threads = 1;

    // noise overrides
    double temperature_k = 300.0;
    double read_voltage_v = 0.2;
    double freq_hz = 1e8;
    double g_max_s = 1e-6;
    double photonic_sigma = 0.0031;

    // stage 1
    SearchConfig search;
    bool tri_objective = false;
    int probes = 256;
    double perturb_std = 0.0; // 0 = derive from the noisiest tier's quant step

    // stage 2
    double tau = -1.0; // <0 = metric default (0.02 accuracy, 1.0 perplexity)
    std::int64_t delta = 4;
    int max_iters = 10000;
    std::string metric = "accuracy";

    std::string alloc_digest;
    std::string report_input;
    std::int64_t max_combos = 2000000;
    std::int64_t synth_layers = 0;
    std::int64_t synth_rows = 0;
    int num_tiers = 3;

    std::string resolve(const std::string& explicit_path, const char* fallback) const {
        return explicit_path.empty() ? data_dir + "/" + fallback : explicit_path;
    }
};

NoiseConfig noise_from(const Options& o) {
    NoiseConfig n;
    n.temperature_k = o.temperature_k;
    n.read_voltage_v = o.read_voltage_v;
    n.freq_hz = o.freq_hz;
    n.g_max_s = o.g_max_s;
    n.photonic_sigma = o.photonic_sigma;
    n.seed = o.seed;
    n.validate();
    return n;
}

QualityMetric metric_from(const Options& o) {
    if (o.metric == "accuracy") return QualityMetric::Accuracy;
    if (o.metric == "perplexity") return QualityMetric::Perplexity;
    throw ConfigError("--metric must be accuracy or perplexity");
}

double resolved_tau(const Options& o) {
    if (o.tau >= 0) return o.tau;
    return metric_from(o) == QualityMetric::Accuracy ? 0.02 : 1.0;
}

std::vector<TierSpec> tiers_from(const Options& o) {
    return o.tiers_path.empty() ? default_tiers() : load_tiers(o.tiers_path);
}

TierSupportMatrix support_from(const Options& o) {
    return o.support_path.empty() ? default_support_matrix()
                                  : load_support_matrix(o.support_path);
}

/// User-supplied allocations that violate invariants are configuration
/// errors, not internal ones.
void validate_user_allocation(const Allocation& a, const Workload& w,
                              const TierSupportMatrix& support) {
    try {
        validate_allocation(a, w, support);
    } catch (const ContractError& e) {
        throw ConfigError(e.what());
    }
}

template <typename Fn>
void parallel_for(int n, int threads, Fn fn) {
    threads = std::min(threads, n);
    if (threads <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
        });
    for (auto& th : pool) th.join();
}

// ---------------------------------------------------------------------------
// Artifact writers (all output is byte-stable for a fixed config and seed)
// ---------------------------------------------------------------------------

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::string report_header(const Options& o, const NoiseConfig& n) {
    return msg_cat("# seed=", o.seed, " temperature_k=", fmt(n.temperature_k),
                   " read_voltage_v=", fmt(n.read_voltage_v), " freq_hz=", fmt(n.freq_hz),
                   " g_max_s=", fmt(n.g_max_s), " photonic_sigma=", fmt(n.photonic_sigma));
}

std::ofstream open_out(const std::string& dir, const std::string& name) {
    std::filesystem::create_directories(dir);
    std::ofstream out(dir + "/" + name);
    if (!out) throw ConfigError("cannot write " + dir + "/" + name);
    return out;
}

void write_front_csv(const Options& o, const NoiseConfig& n,
                     const std::vector<FrontMember>& members,
                     const std::vector<std::optional<double>>& accuracy) {
    auto out = open_out(o.out_dir, "front.csv");
    out << report_header(o, n) << "\n";
    out << "allocation,latency_s,energy_j,accuracy\n";
    for (std::size_t i = 0; i < members.size(); ++i) {
        out << members[i].alloc.digest() << ',' << fmt(members[i].objectives.latency_s) << ','
            << fmt(members[i].objectives.energy_j) << ',';
        if (i < accuracy.size() && accuracy[i]) out << fmt(*accuracy[i]);
        out << "\n";
    }
}

void write_trace_csv(const Options& o, const NoiseConfig& n, const std::vector<GenStats>& log) {
    auto out = open_out(o.out_dir, "trace.csv");
    out << report_header(o, n) << "\n";
    out << "generation,best_latency_s,best_energy_j,hypervolume\n";
    for (const auto& g : log)
        out << g.generation << ',' << fmt(g.best_latency_s) << ',' << fmt(g.best_energy_j)
            << ',' << fmt(g.hypervolume) << "\n";
}

void write_remap_trace_csv(const Options& o, const NoiseConfig& n,
                           const std::vector<RemapTraceRow>& trace) {
    auto out = open_out(o.out_dir, "remap_trace.csv");
    out << report_header(o, n) << "\n";
    out << "iteration,layer,from_tier,to_tier,delta_rows,quality,gap\n";
    for (const auto& r : trace)
        out << r.iteration << ',' << r.layer << ',' << to_string(r.from) << ','
            << to_string(r.to) << ',' << r.delta_rows << ',' << fmt(r.quality) << ','
            << fmt(r.gap) << "\n";
}

void write_lep_csv(const Options& o, const NoiseConfig& n,
                   const std::vector<StrategyResult>& strategies,
                   const std::vector<double>& scores) {
    auto out = open_out(o.out_dir, "lep.csv");
    out << report_header(o, n) << "\n";
    out << "strategy,latency_s,energy_j,quality,lep_score\n";
    for (std::size_t i = 0; i < strategies.size(); ++i)
        out << strategies[i].name << ',' << fmt(strategies[i].latency_s) << ','
            << fmt(strategies[i].energy_j) << ',' << fmt(strategies[i].quality) << ','
            << fmt(scores[i]) << "\n";
}

ordered_json config_echo(const Options& o, const NoiseConfig& n) {
    ordered_json j;
    j["workload"] = o.workload_path;
    j["tiers"] = o.tiers_path.empty() ? "<built-in defaults>" : o.tiers_path;
    j["support"] = o.support_path.empty() ? "<built-in defaults>" : o.support_path;
    j["seed"] = o.seed;
    j["threads"] = o.threads;
    j["out_dir"] = o.out_dir;
    j["search"] = {{"population", o.search.population},
                   {"generations", o.search.generations},
                   {"crossover_rate", o.search.crossover_rate},
                   {"mutation_rate", o.search.mutation_rate},
                   {"mutation_step", o.search.mutation_step}};
    j["remap"] = {{"tau", resolved_tau(o)},
                  {"delta", o.delta},
                  {"max_iters", o.max_iters},
                  {"metric", o.metric}};
    j["sensitivity"] = {{"probes", o.probes}, {"perturb_std", o.perturb_std}};
    j["noise"] = {{"temperature_k", n.temperature_k},
                  {"read_voltage_v", n.read_voltage_v},
                  {"freq_hz", n.freq_hz},
                  {"g_max_s", n.g_max_s},
                  {"photonic_sigma", n.photonic_sigma},
                  {"boltzmann_k", n.boltzmann_k},
                  {"electron_q", n.electron_q}};
    j["checkpoint"] = o.resolve(o.checkpoint, "toy_checkpoint.bin");
    j["tri_objective"] = o.tri_objective;
    return j;
}

void write_summary(const Options& o, ordered_json body) {
    auto out = open_out(o.out_dir, "summary.json");
    out << body.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// Surrogate context (pipeline / remap / evaluate / tri-objective search)
// ---------------------------------------------------------------------------

struct SurrogateContext {
    SurrogateModel model;
    Batch train;
    Batch test;
    std::vector<TierSpec> tiers;
    NoiseConfig noise;
    std::unique_ptr<SurrogateEvaluator> evaluator;
    SensitivityProfile profile;
    std::vector<TierId> fidelity;
    double perturb_std = 0.0;
};

bool surrogate_compatible(const Workload& w, const SurrogateModel& m) {
    if (w.layers.size() != m.layers.size()) return false;
    for (std::size_t l = 0; l < w.layers.size(); ++l)
        if (w.layers[l].rows != m.layers[l].rows || w.layers[l].cols != m.layers[l].cols)
            return false;
    return true;
}

SurrogateContext load_surrogate_context(const Options& o, const Workload& workload) {
    SurrogateContext ctx;
    ctx.model = load_checkpoint(o.resolve(o.checkpoint, "toy_checkpoint.bin"),
                                o.resolve(o.checkpoint_shapes, "toy_checkpoint.json"));
    if (!surrogate_compatible(workload, ctx.model))
        throw ConfigError("workload \"" + workload.name +
                          "\" does not match the surrogate checkpoint shapes; accuracy "
                          "evaluation needs the toy_mlp descriptor");
    ctx.train = load_dataset_csv(o.resolve(o.train_csv, "blobs_train.csv"), ctx.model.in_dim(),
                                 ctx.model.out_dim());
    ctx.test = load_dataset_csv(o.resolve(o.test_csv, "blobs_test.csv"), ctx.model.in_dim(),
                                ctx.model.out_dim());
    ctx.tiers = tiers_from(o);
    ctx.noise = noise_from(o);
    ctx.evaluator = std::make_unique<SurrogateEvaluator>(ctx.model, ctx.test, ctx.tiers, ctx.noise);

    ctx.perturb_std = o.perturb_std;
    if (ctx.perturb_std <= 0.0) {
        // default: quantization step of the lowest-precision tier
        int worst_bits = 8;
        for (const auto& t : ctx.tiers) worst_bits = std::min(worst_bits, t.weight_bits);
        double mean_scale = 0.0;
        for (double s : ctx.model.weight_scale) mean_scale += s;
        mean_scale /= static_cast<double>(ctx.model.weight_scale.size());
        ctx.perturb_std = mean_scale / static_cast<double>((1 << (worst_bits - 1)) - 1);
    }
    ctx.profile = row_sensitivity(ctx.model, ctx.train.head(256), o.probes, ctx.perturb_std,
                                  derive_seed(o.seed, 0x534556u));
    ctx.fidelity = tier_fidelity_order(*ctx.evaluator, derive_seed(o.seed, 0x464944u));
    return ctx;
}

double quality_of(const EvalResult& r, QualityMetric m) {
    return m == QualityMetric::Accuracy ? 1.0 - r.accuracy : r.perplexity;
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

int run_spacesize(const Options& o) {
    Workload w;
    if (!o.workload_path.empty()) {
        w = load_workload(o.workload_path);
    } else if (o.synth_layers > 0 && o.synth_rows > 0) {
        w.name = msg_cat("synthetic_L", o.synth_layers, "_R", o.synth_rows);
        for (std::int64_t l = 0; l < o.synth_layers; ++l)
            w.layers.push_back({"layer" + std::to_string(l), OpKind::Linear, o.synth_rows,
                                o.synth_rows, 1, false});
    } else {
        throw ConfigError("spacesize needs --workload or both --layers and --rows");
    }
    const double per_row = search_space_size_log10(w, o.num_tiers, SpaceMode::PerRow);
    const double per_count = search_space_size_log10(w, o.num_tiers, SpaceMode::PerCount);
    std::printf("workload=%s layers=%zu tiers=%d\n", w.name.c_str(), w.layers.size(),
                o.num_tiers);
    std::printf("per_row_log10=%.4f\n", per_row);
    std::printf("per_count_log10=%.4f\n", per_count);
    return 0;
}

int run_search(const Options& o) {
    const Workload w = load_workload(o.workload_path);
    const auto tiers = tiers_from(o);
    const TierSupportMatrix support = support_from(o);
    const NoiseConfig noise = noise_from(o);
    SearchConfig cfg = o.search;
    cfg.seed = derive_seed(o.seed, 0x504fu);

    ordered_json summary;
    summary["command"] = "search";
    summary["config"] = config_echo(o, noise);

    if (o.tri_objective) {
        SurrogateContext ctx = load_surrogate_context(o, w);
        const QualityMetric metric = metric_from(o);
        const std::uint64_t eval_seed = derive_seed(o.seed, 0x545249u);
        const auto fn = [&](const Allocation& a) {
            auto v = objectives(a, w, tiers, support).as_vector();
            const RowAssignment asg = sensitivity_sorted_assignment(a, ctx.profile, ctx.fidelity);
            v.push_back(quality_of(ctx.evaluator->evaluate(asg, eval_seed), metric));
            return v;
        };
        const GenericFront front = evolve_generic(w, support, cfg, fn);
        std::vector<FrontMember> members;
        std::vector<std::optional<double>> accuracy;
        for (const auto& [alloc, objs] : front.members) {
            members.push_back({alloc, {objs[0], objs[1]}});
            accuracy.push_back(metric == QualityMetric::Accuracy
                                   ? std::optional<double>(1.0 - objs[2])
                                   : std::nullopt);
        }
        write_front_csv(o, noise, members, accuracy);
        write_trace_csv(o, noise, front.generation_log);
        summary["front_size"] = members.size();
        summary["objectives"] = "latency+energy+quality";
    } else {
        const FrontArchive front = evolve(w, tiers, support, cfg);
        write_front_csv(o, noise, front.members,
                        std::vector<std::optional<double>>(front.members.size()));
        write_trace_csv(o, noise, front.generation_log);
        summary["front_size"] = front.members.size();
        summary["objectives"] = "latency+energy";
        summary["hv_reference"] = {{"latency_s", front.hv_reference.latency_s},
                                   {"energy_j", front.hv_reference.energy_j}};
    }
    write_summary(o, std::move(summary));
    std::printf("search done; artifacts in %s/\n", o.out_dir.c_str());
    return 0;
}

int run_bruteforce(const Options& o) {
    const Workload w = load_workload(o.workload_path);
    const auto tiers = tiers_from(o);
    const TierSupportMatrix support = support_from(o);
    const NoiseConfig noise = noise_from(o);

    const double log10_combos = search_space_size_log10(w, static_cast<int>(kTierCount),
                                                        SpaceMode::PerCount);
    if (log10_combos > std::log10(static_cast<double>(o.max_combos)))
        throw ConfigError(msg_cat("bruteforce: search space 10^", fmt(log10_combos),
                                  " exceeds --max-combos ", o.max_combos));

    // per-layer feasible count vectors
    std::vector<std::vector<std::array<std::int64_t, kTierCount>>> layer_choices;
    for (const auto& layer : w.layers) {
        const auto supported = supported_tiers(layer, support);
        std::vector<std::array<std::int64_t, kTierCount>> choices;
        std::array<std::int64_t, kTierCount> cur{};
        const std::function<void(std::size_t, std::int64_t)> rec = [&](std::size_t k,
                                                                       std::int64_t left) {
            if (k + 1 == supported.size()) {
                cur[static_cast<std::size_t>(supported[k])] = left;
                choices.push_back(cur);
                cur[static_cast<std::size_t>(supported[k])] = 0;
                return;
            }
            for (std::int64_t take = 0; take <= left; ++take) {
                cur[static_cast<std::size_t>(supported[k])] = take;
                rec(k + 1, left - take);
            }
            cur[static_cast<std::size_t>(supported[k])] = 0;
        };
        rec(0, layer.rows);
        layer_choices.push_back(std::move(choices));
    }

    // odometer over layers with an incremental non-dominated archive
    std::vector<std::size_t> idx(w.layers.size(), 0);
    std::vector<FrontMember> archive;
    std::uint64_t visited = 0;
    Allocation a;
    a.counts.resize(w.layers.size());
    for (;;) {
        for (std::size_t l = 0; l < w.layers.size(); ++l) a.counts[l] = layer_choices[l][idx[l]];
        const ObjectiveVector obj = objectives(a, w, tiers, support);
        ++visited;
        bool dominated = false;
        for (const auto& m : archive) {
            if (dominates(m.objectives, obj) || m.objectives == obj) {
                dominated = true;
                break;
            }
        }
        if (!dominated) {
            std::erase_if(archive,
                          [&](const FrontMember& m) { return dominates(obj, m.objectives); });
            archive.push_back({a, obj});
        }
        std::size_t l = 0;
        for (; l < idx.size(); ++l) {
            if (++idx[l] < layer_choices[l].size()) break;
            idx[l] = 0;
        }
        if (l == idx.size()) break;
    }

    std::sort(archive.begin(), archive.end(), [](const FrontMember& x, const FrontMember& y) {
        if (x.objectives.latency_s != y.objectives.latency_s)
            return x.objectives.latency_s < y.objectives.latency_s;
        return x.objectives.energy_j < y.objectives.energy_j;
    });
    write_front_csv(o, noise, archive, std::vector<std::optional<double>>(archive.size()));

    ordered_json summary;
    summary["command"] = "bruteforce";
    summary["config"] = config_echo(o, noise);
    summary["visited"] = visited;
    summary["front_size"] = archive.size();
    write_summary(o, std::move(summary));
    std::printf("bruteforce visited %llu allocations; exact front size %zu\n",
                static_cast<unsigned long long>(visited), archive.size());
    return 0;
}

struct StrategyRow {
    std::string name;
    bool valid = false;
    ObjectiveVector objectives;
    std::optional<EvalResult> eval;
};

int run_evaluate(const Options& o) {
    const Workload w = load_workload(o.workload_path);
    const auto tiers = tiers_from(o);
    const TierSupportMatrix support = support_from(o);
    const NoiseConfig noise = noise_from(o);
    const QualityMetric metric = metric_from(o);

    std::optional<SurrogateContext> ctx;
    try {
        ctx.emplace(load_surrogate_context(o, w));
    } catch (const ConfigError&) {
        ctx.reset(); // cost-only workload
    }
    const std::uint64_t eval_seed = derive_seed(o.seed, 0x455641u);

    std::vector<StrategyRow> rows;
    for (const BaselineResult& b : run_homogeneous_baselines(w, tiers, support)) {
        StrategyRow r{b.name, b.valid, b.objectives, std::nullopt};
        if (b.valid && ctx) {
            const TierId t = tier_from_string(b.name.substr(5));
            r.eval = ctx->evaluator->evaluate(homogeneous_assignment(w, t), eval_seed);
        }
        rows.push_back(std::move(r));
    }
    {
        const BaselineResult eq = run_equal_distribution(w, tiers, support);
        StrategyRow r{eq.name, true, eq.objectives, std::nullopt};
        if (ctx)
            r.eval = ctx->evaluator->evaluate(
                sensitivity_sorted_assignment(*eq.alloc, ctx->profile, ctx->fidelity), eval_seed);
        rows.push_back(std::move(r));
    }
    if (!o.alloc_digest.empty()) {
        const Allocation a = Allocation::from_digest(o.alloc_digest, w);
        validate_user_allocation(a, w, support);
        StrategyRow r{"custom", true, objectives(a, w, tiers, support), std::nullopt};
        if (ctx)
            r.eval = ctx->evaluator->evaluate(
                sensitivity_sorted_assignment(a, ctx->profile, ctx->fidelity), eval_seed);
        rows.push_back(std::move(r));
    }

    std::printf("%-20s %8s %12s %12s %10s %10s\n", "strategy", "valid", "latency_s", "energy_j",
                "accuracy", "gap");
    for (const auto& r : rows) {
        std::printf("%-20s %8s %12s %12s %10s %10s\n", r.name.c_str(), r.valid ? "yes" : "NO",
                    r.valid ? fmt(r.objectives.latency_s).c_str() : "-",
                    r.valid ? fmt(r.objectives.energy_j).c_str() : "-",
                    r.eval ? fmt(r.eval->accuracy).c_str() : "-",
                    r.eval ? fmt(quality_gap(*r.eval, metric)).c_str() : "-");
    }

    ordered_json summary;
    summary["command"] = "evaluate";
    summary["config"] = config_echo(o, noise);
    summary["strategies"] = ordered_json::array();
    std::vector<StrategyResult> lep_in;
    for (const auto& r : rows) {
        ordered_json e;
        e["name"] = r.name;
        e["valid"] = r.valid;
        if (r.valid) {
            e["latency_s"] = r.objectives.latency_s;
            e["energy_j"] = r.objectives.energy_j;
        }
        if (r.eval) {
            e["accuracy"] = r.eval->accuracy;
            e["perplexity"] = r.eval->perplexity;
            e["gap"] = quality_gap(*r.eval, metric);
            lep_in.push_back({r.name, r.objectives.latency_s, r.objectives.energy_j,
                              quality_of(*r.eval, metric)});
        }
        summary["strategies"].push_back(std::move(e));
    }
    if (lep_in.size() >= 2) {
        const auto scores = lep_score(lep_in);
        write_lep_csv(o, noise, lep_in, scores);
        summary["lep"] = ordered_json::array();
        for (std::size_t i = 0; i < lep_in.size(); ++i)
            summary["lep"].push_back({{"name", lep_in[i].name}, {"score", scores[i]}});
    }
    write_summary(o, std::move(summary));
    return 0;
}

int run_report(const Options& o) {
    if (o.report_input.empty()) throw ConfigError("report needs --input CSV");
    std::ifstream in(o.report_input);
    if (!in) throw ConfigError("cannot open " + o.report_input);
    std::vector<StrategyResult> strategies;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        if (line_no == 1 && line.find("latency") != std::string::npos) continue; // header
        std::istringstream fields(line);
        std::string name, lat, en, q;
        if (!std::getline(fields, name, ',') || !std::getline(fields, lat, ',') ||
            !std::getline(fields, en, ',') || !std::getline(fields, q, ','))
            throw ConfigError(msg_cat(o.report_input, ":", line_no,
                                      ": expected name,latency_s,energy_j,quality"));
        try {
            strategies.push_back({name, std::stod(lat), std::stod(en), std::stod(q)});
        } catch (const std::exception&) {
            throw ConfigError(msg_cat(o.report_input, ":", line_no, ": bad number"));
        }
    }
    const auto scores = lep_score(strategies);
    const NoiseConfig noise = noise_from(o);
    write_lep_csv(o, noise, strategies, scores);
    std::printf("%-24s %12s %12s %12s %10s\n", "strategy", "latency_s", "energy_j", "quality",
                "lep");
    for (std::size_t i = 0; i < strategies.size(); ++i)
        std::printf("%-24s %12s %12s %12s %10.3f\n", strategies[i].name.c_str(),
                    fmt(strategies[i].latency_s).c_str(), fmt(strategies[i].energy_j).c_str(),
                    fmt(strategies[i].quality).c_str(), scores[i]);
    return 0;
}

int run_remap_cmd(const Options& o) {
    const Workload w = load_workload(o.workload_path);
    const TierSupportMatrix support = support_from(o);
    if (o.alloc_digest.empty()) throw ConfigError("remap needs --alloc");
    const Allocation start = Allocation::from_digest(o.alloc_digest, w);
    validate_user_allocation(start, w, support);

    SurrogateContext ctx = load_surrogate_context(o, w);
    const QualityMetric metric = metric_from(o);
    RemapConfig cfg{resolved_tau(o), o.delta, o.max_iters, metric};
    const std::uint64_t eval_seed = derive_seed(o.seed, 0x525245u);
    const RemapEvalFn eval_fn = [&](const RowAssignment& a) {
        return ctx.evaluator->evaluate(a, eval_seed);
    };
    const RemapResult res = remap(start, w, eval_fn, ctx.profile, ctx.fidelity, support, cfg);
    write_remap_trace_csv(o, ctx.noise, res.trace);

    ordered_json summary;
    summary["command"] = "remap";
    summary["config"] = config_echo(o, ctx.noise);
    summary["start"] = o.alloc_digest;
    summary["final"] = res.final.digest();
    summary["met"] = res.met;
    summary["iterations"] = res.iterations;
    summary["accuracy"] = res.last_eval.accuracy;
    summary["gap"] = quality_gap(res.last_eval, metric);
    write_summary(o, std::move(summary));
    std::printf("remap %s after %d iterations (gap %s, tau %s)\n",
                res.met ? "met" : "NOT met", res.iterations,
                fmt(quality_gap(res.last_eval, metric)).c_str(), fmt(cfg.tau).c_str());
    return res.met ? 0 : 3;
}

int run_pipeline(const Options& o) {
    const Workload w = load_workload(o.workload_path);
    const TierSupportMatrix support = support_from(o);
    SurrogateContext ctx = load_surrogate_context(o, w);
    const QualityMetric metric = metric_from(o);
    const double tau = resolved_tau(o);

    // Stage 1: latency-energy Pareto search
    SearchConfig cfg = o.search;
    cfg.seed = derive_seed(o.seed, 0x504fu);
    const FrontArchive front = evolve(w, ctx.tiers, support, cfg);
    write_trace_csv(o, ctx.noise, front.generation_log);

    // Accuracy screen over the front (one shared evaluation seed)
    const std::uint64_t screen_seed = derive_seed(o.seed, 0x534352u);
    const RemapEvalFn screen_fn = [&](const RowAssignment& a) {
        return ctx.evaluator->evaluate(a, screen_seed);
    };
    std::vector<EvalResult> member_evals;
    auto [selected, met_after_screen] =
        select_best_accuracy(front, screen_fn, ctx.profile, ctx.fidelity, tau, metric,
                             &member_evals);

    // front.csv rows in the screening order with their measured accuracy
    std::vector<const FrontMember*> ordered;
    for (const auto& m : front.members) ordered.push_back(&m);
    std::sort(ordered.begin(), ordered.end(), [](const FrontMember* a, const FrontMember* b) {
        if (a->objectives.latency_s != b->objectives.latency_s)
            return a->objectives.latency_s < b->objectives.latency_s;
        if (a->objectives.energy_j != b->objectives.energy_j)
            return a->objectives.energy_j < b->objectives.energy_j;
        return allocation_less(a->alloc, b->alloc);
    });
    std::vector<FrontMember> ordered_members;
    std::vector<std::optional<double>> member_acc;
    for (std::size_t i = 0; i < ordered.size(); ++i) {
        ordered_members.push_back(*ordered[i]);
        member_acc.emplace_back(member_evals[i].accuracy);
    }
    write_front_csv(o, ctx.noise, ordered_members, member_acc);

    // Stage 2 if the screen failed
    RemapResult rr;
    if (met_after_screen) {
        rr.final = selected.alloc;
        rr.assignment = selected.assignment;
        rr.last_eval = selected.eval;
        rr.met = true;
        rr.iterations = 0;
    } else {
        RemapConfig rcfg{tau, o.delta, o.max_iters, metric};
        const std::uint64_t remap_seed = derive_seed(o.seed, 0x525245u);
        const RemapEvalFn remap_fn = [&](const RowAssignment& a) {
            return ctx.evaluator->evaluate(a, remap_seed);
        };
        rr = remap(selected.alloc, w, remap_fn, ctx.profile, ctx.fidelity, support, rcfg);
    }
    write_remap_trace_csv(o, ctx.noise, rr.trace);
    const ObjectiveVector final_obj = objectives(rr.final, w, ctx.tiers, support);

    // Final-config validation across fresh seeds, majority verdict
    const int kValidationSeeds = 5;
    std::vector<double> validation_gaps(kValidationSeeds, 0.0);
    parallel_for(kValidationSeeds, o.threads, [&](int k) {
        const auto r = ctx.evaluator->evaluate(
            rr.assignment, derive_seed(o.seed, 0x56414cu, static_cast<std::uint64_t>(k)));
        validation_gaps[static_cast<std::size_t>(k)] = quality_gap(r, metric);
    });
    int validation_ok = 0;
    for (double g : validation_gaps)
        if (g <= tau) ++validation_ok;

    // Comparison strategies and LEP
    const std::uint64_t base_seed = screen_seed;
    std::vector<StrategyRow> rows;
    for (const BaselineResult& b : run_homogeneous_baselines(w, ctx.tiers, support)) {
        StrategyRow r{b.name, b.valid, b.objectives, std::nullopt};
        if (b.valid) {
            const TierId t = tier_from_string(b.name.substr(5));
            r.eval = ctx.evaluator->evaluate(homogeneous_assignment(w, t), base_seed);
        }
        rows.push_back(std::move(r));
    }
    {
        const BaselineResult eq = run_equal_distribution(w, ctx.tiers, support);
        StrategyRow r{eq.name, true, eq.objectives, std::nullopt};
        r.eval = ctx.evaluator->evaluate(
            sensitivity_sorted_assignment(*eq.alloc, ctx.profile, ctx.fidelity), base_seed);
        rows.push_back(std::move(r));
    }
    rows.push_back({"PO", true, selected.objectives, selected.eval});
    rows.push_back({"PO+RR", true, final_obj, rr.last_eval});

    std::vector<StrategyResult> lep_in;
    for (const auto& r : rows)
        if (r.valid && r.eval)
            lep_in.push_back({r.name, r.objectives.latency_s, r.objectives.energy_j,
                              quality_of(*r.eval, metric)});
    std::vector<double> scores;
    if (lep_in.size() >= 2) {
        scores = lep_score(lep_in);
        write_lep_csv(o, ctx.noise, lep_in, scores);
    }

    // Best constraint-satisfying homogeneous baseline (the dominance target)
    std::optional<double> best_valid_homog_latency;
    for (const auto& r : rows) {
        if (r.name.rfind("100%", 0) != 0 || !r.valid || !r.eval) continue;
        if (quality_gap(*r.eval, metric) <= tau)
            best_valid_homog_latency = best_valid_homog_latency
                                           ? std::min(*best_valid_homog_latency,
                                                      r.objectives.latency_s)
                                           : r.objectives.latency_s;
    }

    ordered_json summary;
    summary["command"] = "pipeline";
    summary["config"] = config_echo(o, ctx.noise);
    summary["fidelity_order"] = ordered_json::array();
    for (TierId t : ctx.fidelity) summary["fidelity_order"].push_back(to_string(t));
    summary["acc0"] = ctx.evaluator->acc0();
    summary["ppl0"] = ctx.evaluator->ppl0();
    summary["front_size"] = front.members.size();
    summary["selected"] = {{"allocation", selected.alloc.digest()},
                           {"latency_s", selected.objectives.latency_s},
                           {"energy_j", selected.objectives.energy_j},
                           {"accuracy", selected.eval.accuracy},
                           {"gap", quality_gap(selected.eval, metric)}};
    summary["met_after_screen"] = met_after_screen;
    summary["remap_iterations"] = rr.iterations;
    summary["final"] = {{"allocation", rr.final.digest()},
                        {"latency_s", final_obj.latency_s},
                        {"energy_j", final_obj.energy_j},
                        {"accuracy", rr.last_eval.accuracy},
                        {"gap", quality_gap(rr.last_eval, metric)},
                        {"met", rr.met}};
    summary["validation"] = {{"seeds", kValidationSeeds},
                             {"gaps", validation_gaps},
                             {"within_tau", validation_ok},
                             {"majority_ok", validation_ok * 2 > kValidationSeeds}};
    if (best_valid_homog_latency) {
        summary["best_valid_homogeneous_latency_s"] = *best_valid_homog_latency;
        summary["latency_within_best_homogeneous"] =
            final_obj.latency_s <= *best_valid_homog_latency;
    }
    summary["strategies"] = ordered_json::array();
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        ordered_json e;
        e["name"] = r.name;
        e["valid"] = r.valid;
        if (r.valid) {
            e["latency_s"] = r.objectives.latency_s;
            e["energy_j"] = r.objectives.energy_j;
        }
        if (r.eval) {
            e["accuracy"] = r.eval->accuracy;
            e["gap"] = quality_gap(*r.eval, metric);
        }
        summary["strategies"].push_back(std::move(e));
    }
    if (!scores.empty()) {
        summary["lep"] = ordered_json::array();
        for (std::size_t i = 0; i < lep_in.size(); ++i)
            summary["lep"].push_back({{"name", lep_in[i].name}, {"score", scores[i]}});
    }
    write_summary(o, std::move(summary));

    std::printf("pipeline: gap %s (tau %s) -> %s; final latency %s energy %s\n",
                fmt(quality_gap(rr.last_eval, metric)).c_str(), fmt(tau).c_str(),
                rr.met ? "met" : "NOT met", fmt(final_obj.latency_s).c_str(),
                fmt(final_obj.energy_j).c_str());
    return rr.met ? 0 : 3;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"tiermap - heterogeneous-tier row-mapping explorer"};
    app.require_subcommand(1);
    Options o;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--workload", o.workload_path, "workload descriptor JSON");
        cmd->add_option("--tiers", o.tiers_path, "tier config JSON (default: built-ins)");
        cmd->add_option("--support", o.support_path,
                        "op-kind/tier support overrides JSON (default: ReRAM excluded "
                        "from dynamic ops)");
        cmd->add_option("--seed", o.seed, "root seed");
        cmd->add_option("--out", o.out_dir, "output directory");
        cmd->add_option("--threads", o.threads, "max evaluator threads")->check(CLI::Range(1, 256));
        cmd->add_option("--data-dir", o.data_dir, "bundled asset directory");
        cmd->add_option("--checkpoint", o.checkpoint, "surrogate checkpoint .bin");
        cmd->add_option("--checkpoint-shapes", o.checkpoint_shapes, "checkpoint shape sidecar");
        cmd->add_option("--train-csv", o.train_csv, "training dataset CSV");
        cmd->add_option("--test-csv", o.test_csv, "test dataset CSV");
        cmd->add_option("--temperature", o.temperature_k, "ReRAM temperature [K]");
        cmd->add_option("--read-voltage", o.read_voltage_v, "ReRAM read voltage [V]");
        cmd->add_option("--freq", o.freq_hz, "ReRAM noise frequency [Hz]");
        cmd->add_option("--g-max", o.g_max_s, "max cell conductance [S]");
        cmd->add_option("--sigma", o.photonic_sigma, "photonic relative noise sigma");
        cmd->add_option("--metric", o.metric, "quality metric: accuracy|perplexity");
    };
    auto add_search = [&](CLI::App* cmd) {
        cmd->add_option("--population", o.search.population, "population size");
        cmd->add_option("--generations", o.search.generations, "max generations");
        cmd->add_option("--crossover-rate", o.search.crossover_rate, "crossover rate");
        cmd->add_option("--mutation-rate", o.search.mutation_rate, "mutation rate");
        cmd->add_option("--mutation-step", o.search.mutation_step, "max rows per mutation");
    };
    auto add_remap = [&](CLI::App* cmd) {
        cmd->add_option("--tau", o.tau, "quality-gap bound (default per metric)");
        cmd->add_option("--delta", o.delta, "rows shifted per remap iteration");
        cmd->add_option("--max-iters", o.max_iters, "remap iteration cap");
    };
    auto add_sensitivity = [&](CLI::App* cmd) {
        cmd->add_option("--probes", o.probes, "sensitivity probes");
        cmd->add_option("--perturb-std", o.perturb_std,
                        "sensitivity perturbation std (0 = worst-tier quant step)");
    };

    CLI::App* spacesize = app.add_subcommand("spacesize", "mapping-space size arithmetic");
    spacesize->add_option("--workload", o.workload_path, "workload descriptor JSON");
    spacesize->add_option("--layers", o.synth_layers, "synthetic layer count");
    spacesize->add_option("--rows", o.synth_rows, "synthetic rows per layer");
    spacesize->add_option("--num-tiers", o.num_tiers, "tier count")->check(CLI::Range(1, 64));

    CLI::App* search = app.add_subcommand("search", "stage-1 Pareto search");
    add_common(search);
    add_search(search);
    add_sensitivity(search);
    search->add_flag("--tri-objective", o.tri_objective,
                     "search latency+energy+quality in one pass");

    CLI::App* remap_cmd = app.add_subcommand("remap", "stage-2 accuracy-driven row remap");
    add_common(remap_cmd);
    add_remap(remap_cmd);
    add_sensitivity(remap_cmd);
    remap_cmd->add_option("--alloc", o.alloc_digest, "starting allocation digest")->required();

    CLI::App* pipeline = app.add_subcommand("pipeline", "full two-stage flow");
    add_common(pipeline);
    add_search(pipeline);
    add_remap(pipeline);
    add_sensitivity(pipeline);

    CLI::App* evaluate = app.add_subcommand("evaluate", "baseline strategies and LEP table");
    add_common(evaluate);
    evaluate->add_option("--alloc", o.alloc_digest, "extra allocation digest to evaluate");

    CLI::App* bruteforce = app.add_subcommand("bruteforce", "exhaustive exact Pareto front");
    add_common(bruteforce);
    bruteforce->add_option("--max-combos", o.max_combos, "enumeration cap");

    CLI::App* report = app.add_subcommand("report", "LEP scores from a strategy CSV");
    add_common(report);
    report->add_option("--input", o.report_input, "CSV: name,latency_s,energy_j,quality");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (spacesize->parsed()) return run_spacesize(o);
        if (search->parsed()) return run_search(o);
        if (remap_cmd->parsed()) return run_remap_cmd(o);
        if (pipeline->parsed()) return run_pipeline(o);
        if (evaluate->parsed()) return run_evaluate(o);
        if (bruteforce->parsed()) return run_bruteforce(o);
        if (report->parsed()) return run_report(o);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const ContractError& e) {
        std::fprintf(stderr, "internal contract violation: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    }
    return 0;
}
