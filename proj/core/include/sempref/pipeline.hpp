#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sempref/executor.hpp"
#include "sempref/records.hpp"

namespace sempref {

// Artifact layout inside a run directory. Every path is overridable; these
// are the defaults the pipeline and the stage subcommands agree on.
struct RunPaths {
    std::filesystem::path run_dir;
    std::filesystem::path manifest;         // manifest.json
    std::filesystem::path traces;           // traces/traces.jsonl
    std::filesystem::path partitions;       // partitions.jsonl
    std::filesystem::path entropy_report;   // entropy.report
    std::filesystem::path consensus_report; // consensus.report
    std::filesystem::path pairs;            // pairs
    std::filesystem::path dpo_export;       // pairs.dpo.jsonl
    std::filesystem::path train_log;        // train.log
    std::filesystem::path policy;           // policy.jsonl
    std::filesystem::path metrics_report;   // metrics.report
    std::filesystem::path sweep_report;     // sweep.report
    std::filesystem::path error_record;     // error.json

    static RunPaths in(const std::filesystem::path& run_dir);
};

struct RunConfig {
    std::filesystem::path problems_file;
    std::filesystem::path candidates_file;
    std::filesystem::path run_dir;
    ExecutorConfig executor;
    double tau = 0.3;
    int max_losers = 3;
    double beta = 0.1;
    std::uint64_t seed = 0;
    int train_steps = 200;
    double learning_rate = 0.5;
    bool run_train = true;
    bool run_metrics = true; // needs oracles; skipped with a note when absent
    std::filesystem::path external_partitions; // optional, feeds metrics

    void validate() const; // throws ConfigError
};

// ─── stages ────────────────────────────────────────────────────────
//
// Each stage reads its inputs from files and writes its artifacts, so
// running them one at a time through the CLI produces byte-identical
// results to the single pipeline command, which calls exactly these.

ExecStats stage_execute(const RunConfig& config, const RunPaths& paths);
void stage_entropy(const RunConfig& config, const RunPaths& paths);
void stage_curate(const RunConfig& config, const RunPaths& paths);
void stage_pairs(const RunConfig& config, const RunPaths& paths);
void stage_train(const RunConfig& config, const RunPaths& paths);
void stage_metrics(const RunConfig& config, const RunPaths& paths);
void stage_sweep(const RunConfig& config, const RunPaths& paths,
                 const std::vector<double>& taus);

struct PipelineSummary {
    std::vector<std::pair<std::string, std::string>> stages; // (name, status)
    ExecStats exec_stats;
};

// Runs execute -> entropy -> curate -> pairs -> [train] -> [metrics] and
// writes the manifest. On a stage failure the error is recorded in
// error.json (machine readable), partial artifacts are kept, and the
// exception propagates. Reruns with identical config and inputs are
// byte-identical; only the manifest's "timings" object varies.
PipelineSummary run_pipeline(const RunConfig& config);

// Digest of a file's bytes, as recorded in the manifest.
std::string file_sha256(const std::filesystem::path& file);

} // namespace sempref
