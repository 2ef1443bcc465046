#include "sempref/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iostream>
#include <map>

#include "sempref/consensus.hpp"
#include "sempref/detail/sha256.hpp"
#include "sempref/dpo.hpp"
#include "sempref/entropy.hpp"
#include "sempref/errors.hpp"
#include "sempref/jsonl.hpp"
#include "sempref/metrics.hpp"
#include "jsonl_util.hpp"

namespace sempref {

namespace fs = std::filesystem;
using jsonl_util::ojson;

RunPaths RunPaths::in(const fs::path& run_dir) {
    RunPaths p;
    p.run_dir = run_dir;
    p.manifest = run_dir / "manifest.json";
    p.traces = run_dir / "traces" / "traces.jsonl";
    p.partitions = run_dir / "partitions.jsonl";
    p.entropy_report = run_dir / "entropy.report";
    p.consensus_report = run_dir / "consensus.report";
    p.pairs = run_dir / "pairs";
    p.dpo_export = run_dir / "pairs.dpo.jsonl";
    p.train_log = run_dir / "train.log";
    p.policy = run_dir / "policy.jsonl";
    p.metrics_report = run_dir / "metrics.report";
    p.sweep_report = run_dir / "sweep.report";
    p.error_record = run_dir / "error.json";
    return p;
}

void RunConfig::validate() const {
    if (problems_file.empty() || !fs::exists(problems_file))
        throw ConfigError("problems file not found: '" + problems_file.string() + "'");
    if (candidates_file.empty() || !fs::exists(candidates_file))
        throw ConfigError("candidates file not found: '" + candidates_file.string() + "'");
    if (run_dir.empty()) throw ConfigError("run directory not set");
    executor.validate();
    if (!(tau > 0.0) || tau > 1.0) throw ConfigError("tau must lie in (0,1]");
    if (max_losers < 1) throw ConfigError("max_losers must be >= 1");
    if (!(beta > 0.0)) throw ConfigError("beta must be > 0");
    if (train_steps < 0) throw ConfigError("train_steps must be >= 0");
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
    if (!external_partitions.empty() && !fs::exists(external_partitions))
        throw ConfigError("external partitions file not found: '" +
                          external_partitions.string() + "'");
}

std::string file_sha256(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw StageError("cannot read '" + file.string() + "'");
    detail::Sha256 h;
    char buf[65536];
    while (in.read(buf, sizeof buf) || in.gcount() > 0)
        h.update(buf, static_cast<std::size_t>(in.gcount()));
    return h.hex_digest();
}

namespace {

Dataset load_input_dataset(const RunConfig& config) {
    return jsonl::load_dataset(config.problems_file, config.candidates_file);
}

std::map<std::string, std::vector<ExecutionTrace>> traces_by_problem(
    const std::vector<ExecutionTrace>& traces) {
    std::map<std::string, std::vector<ExecutionTrace>> grouped;
    for (const ExecutionTrace& t : traces) grouped[t.problem_id].push_back(t);
    return grouped;
}

std::set<std::string> kept_problems(const fs::path& entropy_report) {
    std::set<std::string> kept;
    for (const CurationEntry& e : load_curation_report(entropy_report))
        if (e.kept) kept.insert(e.problem_id);
    return kept;
}

} // namespace

ExecStats stage_execute(const RunConfig& config, const RunPaths& paths) {
    const Dataset ds = load_input_dataset(config);
    const auto inputs = strip_oracles(ds.problems);
    BatchResult batch = execute_all(inputs, ds.candidates, config.executor);
    jsonl::save_traces(batch.traces, paths.traces);
    return batch.stats;
}

void stage_entropy(const RunConfig&, const RunPaths& paths) {
    const auto traces = jsonl::load_traces(paths.traces);
    std::vector<BehavioralPartition> partitions;
    for (const auto& [pid, group] : traces_by_problem(traces))
        partitions.push_back(cluster_by_trace(group));
    save_partitions(partitions, paths.partitions);
}

void stage_curate(const RunConfig& config, const RunPaths& paths) {
    const auto partitions = load_partitions(paths.partitions);
    std::vector<EntropyRecord> records;
    records.reserve(partitions.size());
    for (const BehavioralPartition& part : partitions) {
        if (part.surviving_count >= 1) {
            records.push_back(semantic_entropy(part));
        } else {
            EntropyRecord r;
            r.problem_id = part.problem_id;
            r.surviving_count = 0;
            records.push_back(std::move(r));
        }
    }
    const CurationResult result = curate(records, config.tau);
    for (const std::string& warning : result.warnings) std::cerr << "warning: " << warning << '\n';
    if (result.kept.empty())
        std::cerr << "warning: curation kept no problems at tau=" << config.tau << '\n';
    save_curation_report(result, paths.entropy_report);
}

void stage_pairs(const RunConfig& config, const RunPaths& paths) {
    const Dataset ds = load_input_dataset(config);
    const auto inputs = strip_oracles(ds.problems);
    const auto traces = jsonl::load_traces(paths.traces);
    const auto kept = kept_problems(paths.entropy_report);
    const auto grouped = traces_by_problem(traces);

    std::vector<ConsensusTable> tables;
    std::vector<ExecutionTrace> kept_traces;
    std::vector<PreferencePair> pairs;
    for (const ProblemInputs& problem : inputs) {
        if (!kept.count(problem.id)) continue;
        auto it = grouped.find(problem.id);
        if (it == grouped.end()) continue;
        ConsensusTable table = consensus_scores(problem, it->second);
        PairConstruction built = construct_pairs(problem, table, it->second, config.max_losers);
        for (const std::string& note : built.notes) std::cerr << "note: " << note << '\n';
        pairs.insert(pairs.end(), built.pairs.begin(), built.pairs.end());
        kept_traces.insert(kept_traces.end(), it->second.begin(), it->second.end());
        tables.push_back(std::move(table));
    }
    save_consensus_report(tables, kept_traces, paths.consensus_report);
    jsonl::save_pairs(pairs, paths.pairs);

    const auto exported = export_dpo_records(inputs, ds.candidates, pairs);
    save_dpo_export(exported, paths.dpo_export);
}

void stage_train(const RunConfig& config, const RunPaths& paths) {
    const Dataset ds = load_input_dataset(config);
    const auto pairs = jsonl::load_pairs(paths.pairs);
    ToyTrainConfig train_config;
    train_config.steps = config.train_steps;
    train_config.learning_rate = config.learning_rate;
    train_config.beta = config.beta;
    train_config.seed = config.seed;
    const ToyTrainResult result = train_toy(ds.candidates, pairs, train_config);
    save_train_log(result.log, paths.train_log);
    save_policy(result.policy, paths.policy);
}

void stage_metrics(const RunConfig& config, const RunPaths& paths) {
    const Dataset ds = load_input_dataset(config);
    const auto traces = jsonl::load_traces(paths.traces);
    std::vector<PreferencePair> pairs;
    if (fs::exists(paths.pairs)) pairs = jsonl::load_pairs(paths.pairs);

    std::map<std::string, double> external;
    if (!config.external_partitions.empty()) {
        for (const BehavioralPartition& part : load_partitions(config.external_partitions))
            if (part.surviving_count >= 1)
                external[part.problem_id] = semantic_entropy(part).raw_entropy;
    }
    const MetricsReport report = compute_metrics(ds.problems, ds.candidates, traces, pairs, external);
    save_metrics_report(report, paths.metrics_report);
}

void stage_sweep(const RunConfig& config, const RunPaths& paths,
                 const std::vector<double>& taus) {
    const Dataset ds = load_input_dataset(config);
    const auto traces = jsonl::load_traces(paths.traces);
    const auto rows = threshold_sweep(ds.problems, traces, taus, config.max_losers);
    save_sweep_report(rows, paths.sweep_report);
}

namespace {

ojson semantic_config_json(const RunConfig& config) {
    // Only settings that determine artifact bytes. Environment knobs
    // (workers, cache_dir, run_dir) are excluded: parallelism invariance
    // and cache soundness guarantee they cannot change any output.
    ojson j;
    j["command_template"] = config.executor.command_template;
    j["timeout_ms"] = config.executor.timeout.count();
    j["max_output_bytes"] = config.executor.max_output_bytes;
    j["tau"] = config.tau;
    j["max_losers"] = config.max_losers;
    j["beta"] = config.beta;
    j["seed"] = config.seed;
    j["train_steps"] = config.train_steps;
    j["learning_rate"] = config.learning_rate;
    j["run_train"] = config.run_train;
    j["run_metrics"] = config.run_metrics;
    j["external_partitions"] = config.external_partitions.string();
    return j;
}

void write_error_record(const RunPaths& paths, const std::string& stage,
                        const std::string& message) {
    try {
        auto out = jsonl_util::open_for_write(paths.error_record);
        ojson rec;
        rec["stage"] = stage;
        rec["error"] = message;
        out << rec.dump() << '\n';
    } catch (...) {
        // Failing to record the failure must not mask it.
    }
}

} // namespace

PipelineSummary run_pipeline(const RunConfig& config) {
    config.validate();
    const RunPaths paths = RunPaths::in(config.run_dir);
    fs::create_directories(paths.run_dir);

    const Dataset ds = load_input_dataset(config); // validates referential integrity up front
    const bool has_oracles =
        std::all_of(ds.problems.begin(), ds.problems.end(),
                    [](const Problem& p) { return p.oracle_outputs.has_value(); });

    PipelineSummary summary;
    ojson timings;
    std::string current_stage = "setup";

    auto timed = [&](const std::string& name, auto&& fn) {
        current_stage = name;
        const auto start = std::chrono::steady_clock::now();
        fn();
        const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                                 std::chrono::steady_clock::now() - start)
                                 .count();
        timings[name + "_ms"] = elapsed;
        summary.stages.emplace_back(name, "ok");
    };

    try {
        timed("execute", [&] { summary.exec_stats = stage_execute(config, paths); });
        timed("entropy", [&] { stage_entropy(config, paths); });
        timed("curate", [&] { stage_curate(config, paths); });
        timed("pairs", [&] { stage_pairs(config, paths); });
        if (config.run_train) {
            timed("train", [&] { stage_train(config, paths); });
        } else {
            summary.stages.emplace_back("train", "skipped");
        }
        if (config.run_metrics && has_oracles) {
            timed("metrics", [&] { stage_metrics(config, paths); });
        } else {
            summary.stages.emplace_back("metrics",
                                        config.run_metrics ? "skipped: no oracles" : "skipped");
        }
    } catch (const std::exception& e) {
        write_error_record(paths, current_stage, e.what());
        throw;
    }

    // Manifest: deterministic apart from the timings object.
    ojson manifest;
    manifest["tool"] = "sempref";
    manifest["version"] = "0.1.0";
    const ojson config_echo = semantic_config_json(config);
    manifest["config"] = config_echo;
    manifest["config_hash"] = detail::sha256_hex(config_echo.dump());
    ojson inputs;
    inputs["problems"] = ojson{{"sha256", file_sha256(config.problems_file)},
                               {"count", ds.problems.size()}};
    inputs["candidates"] = ojson{{"sha256", file_sha256(config.candidates_file)},
                                 {"count", ds.candidates.size()}};
    manifest["inputs"] = std::move(inputs);
    ojson stages = ojson::array();
    for (const auto& [name, status] : summary.stages)
        stages.push_back(ojson{{"name", name}, {"status", status}});
    manifest["stages"] = std::move(stages);
    ojson outputs;
    for (const auto& [label, path] :
         std::initializer_list<std::pair<const char*, const fs::path*>>{
             {"traces", &paths.traces},
             {"partitions", &paths.partitions},
             {"entropy_report", &paths.entropy_report},
             {"consensus_report", &paths.consensus_report},
             {"pairs", &paths.pairs},
             {"dpo_export", &paths.dpo_export},
             {"train_log", &paths.train_log},
             {"policy", &paths.policy},
             {"metrics_report", &paths.metrics_report}}) {
        if (fs::exists(*path)) outputs[label] = file_sha256(*path);
    }
    manifest["outputs"] = std::move(outputs);
    manifest["timings"] = std::move(timings);

    auto out = jsonl_util::open_for_write(paths.manifest);
    out << manifest.dump(2) << '\n';
    return summary;
}

} // namespace sempref
