// sempref: curate consensus-weighted preference data from executed
// candidate programs. Subcommands cover the full pipeline and each stage
// individually; see README.md for the file formats.

#include <exception>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sempref/corpus.hpp"
#include "sempref/entropy.hpp"
#include "sempref/errors.hpp"
#include "sempref/jsonl.hpp"
#include "sempref/pipeline.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitStage = 3;

struct CliState {
    sempref::RunConfig config;
    long long timeout_ms = 2000;
    std::string cache_dir;
    std::string external_partitions;
    bool no_train = false;
    bool no_metrics = false;
};

void add_dataset_options(CLI::App* cmd, CliState& state) {
    cmd->add_option("--problems", state.config.problems_file, "Problems record file (JSONL)")
        ->required();
    cmd->add_option("--candidates", state.config.candidates_file,
                    "Candidates record file (JSONL)")
        ->required();
}

void add_run_dir_option(CLI::App* cmd, CliState& state) {
    cmd->add_option("--run-dir", state.config.run_dir, "Run directory for all artifacts")
        ->required();
}

void add_executor_options(CLI::App* cmd, CliState& state) {
    cmd->add_option("--command", state.config.executor.command_template,
                    "Command template with a {src} placeholder, e.g. 'python3 -S {src}'")
        ->required();
    cmd->add_option("--timeout-ms", state.timeout_ms, "Per-execution wall clock limit")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--max-output-bytes", state.config.executor.max_output_bytes,
                    "Stdout cap per execution; beyond it the run counts as a crash")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--workers", state.config.executor.workers, "Parallel executor workers")
        ->check(CLI::PositiveNumber)
        ->envname("SEMPREF_WORKERS")
        ->capture_default_str();
    cmd->add_option("--cache-dir", state.cache_dir,
                    "Outcome cache directory (empty disables caching)")
        ->envname("SEMPREF_CACHE_DIR");
}

void add_curation_options(CLI::App* cmd, CliState& state) {
    cmd->add_option("--tau", state.config.tau,
                    "Upper threshold on normalized entropy, in (0,1]")
        ->capture_default_str();
}

void add_pair_options(CLI::App* cmd, CliState& state) {
    cmd->add_option("--max-losers", state.config.max_losers, "Losers per problem, at most")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
}

void add_train_options(CLI::App* cmd, CliState& state) {
    cmd->add_option("--beta", state.config.beta, "DPO reward scale")->capture_default_str();
    cmd->add_option("--train-steps", state.config.train_steps, "Toy trainer gradient steps")
        ->capture_default_str();
    cmd->add_option("--learning-rate", state.config.learning_rate, "Toy trainer learning rate")
        ->capture_default_str();
    cmd->add_option("--seed", state.config.seed, "Seed recorded with the run")
        ->capture_default_str();
}

void finalize(CliState& state) {
    state.config.executor.timeout = std::chrono::milliseconds(state.timeout_ms);
    state.config.executor.cache_dir = state.cache_dir;
    state.config.external_partitions = state.external_partitions;
    state.config.run_train = !state.no_train;
    state.config.run_metrics = !state.no_metrics;
}

int guarded(const std::function<void()>& body) {
    try {
        body();
        return kExitOk;
    } catch (const sempref::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const sempref::ValidationError& e) {
        std::cerr << "validation error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitStage;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"sempref: execution-based curation of consensus-weighted preference data"};
    app.require_subcommand(1);

    CliState state;
    std::vector<double> taus = {1.0, 0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1};

    // gen-corpus settings
    sempref::CorpusSpec corpus_spec;
    std::string out_problems = "problems.jsonl";
    std::string out_candidates = "candidates.jsonl";
    std::string out_truth = "truth.jsonl";
    std::vector<double> mix = {0.2, 0.4, 0.3, 0.1};

    auto* pipeline_cmd =
        app.add_subcommand("pipeline", "Run every stage in order and write a manifest");
    add_dataset_options(pipeline_cmd, state);
    add_run_dir_option(pipeline_cmd, state);
    add_executor_options(pipeline_cmd, state);
    add_curation_options(pipeline_cmd, state);
    add_pair_options(pipeline_cmd, state);
    add_train_options(pipeline_cmd, state);
    pipeline_cmd->add_flag("--no-train", state.no_train, "Skip the toy training stage");
    pipeline_cmd->add_flag("--no-metrics", state.no_metrics, "Skip the metrics stage");
    pipeline_cmd->add_option("--external-partitions", state.external_partitions,
                             "Partition file feeding the external_entropy metric");
    pipeline_cmd->set_config("--config", "", "INI/TOML config file; flags take precedence");

    auto* execute_cmd = app.add_subcommand("execute", "Run all candidates and write traces");
    add_dataset_options(execute_cmd, state);
    add_run_dir_option(execute_cmd, state);
    add_executor_options(execute_cmd, state);
    execute_cmd->set_config("--config");

    auto* entropy_cmd =
        app.add_subcommand("entropy", "Cluster traces by behavior and write partitions");
    add_run_dir_option(entropy_cmd, state);
    std::string supplied_partitions;
    entropy_cmd->add_option("--from-partitions", supplied_partitions,
                            "Use an externally supplied partition file instead of "
                            "clustering the run's traces");
    entropy_cmd->set_config("--config");

    auto* curate_cmd =
        app.add_subcommand("curate", "Normalize entropies and filter the curriculum");
    add_run_dir_option(curate_cmd, state);
    add_curation_options(curate_cmd, state);
    curate_cmd->set_config("--config");

    auto* pairs_cmd =
        app.add_subcommand("pairs", "Score consensus and construct preference pairs");
    add_dataset_options(pairs_cmd, state);
    add_run_dir_option(pairs_cmd, state);
    add_pair_options(pairs_cmd, state);
    pairs_cmd->set_config("--config");

    auto* train_cmd = app.add_subcommand("train-toy", "Optimize the toy policy on the pairs");
    add_dataset_options(train_cmd, state);
    add_run_dir_option(train_cmd, state);
    add_train_options(train_cmd, state);
    train_cmd->set_config("--config");

    auto* metrics_cmd =
        app.add_subcommand("metrics", "Evaluate against oracles (pass rate, AUC, correlations)");
    add_dataset_options(metrics_cmd, state);
    add_run_dir_option(metrics_cmd, state);
    metrics_cmd->add_option("--external-partitions", state.external_partitions,
                            "Partition file feeding the external_entropy metric");
    metrics_cmd->set_config("--config");

    auto* sweep_cmd =
        app.add_subcommand("sweep", "Golden-rate report over a grid of tau thresholds");
    add_dataset_options(sweep_cmd, state);
    add_run_dir_option(sweep_cmd, state);
    add_pair_options(sweep_cmd, state);
    sweep_cmd->add_option("--taus", taus, "Thresholds to sweep")
        ->delimiter(',')
        ->capture_default_str();
    sweep_cmd->set_config("--config");

    auto* gen_cmd = app.add_subcommand("gen-corpus", "Generate a seeded synthetic benchmark");
    gen_cmd->add_option("--seed", corpus_spec.seed, "Corpus seed")->capture_default_str();
    gen_cmd->add_option("--n-problems", corpus_spec.n_problems, "Problem count")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    gen_cmd->add_option("--candidates-per-problem", corpus_spec.candidates_per_problem,
                        "Candidates per problem")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    gen_cmd->add_option("--inputs-per-problem", corpus_spec.inputs_per_problem,
                        "Test inputs per problem")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    gen_cmd->add_option("--mix", mix,
                        "Regime proportions mastered,learnable,fragmented,consistent-failure")
        ->delimiter(',')
        ->expected(1, 4);
    gen_cmd->add_option("--out-problems", out_problems, "Output problems file")
        ->capture_default_str();
    gen_cmd->add_option("--out-candidates", out_candidates, "Output candidates file")
        ->capture_default_str();
    gen_cmd->add_option("--out-truth", out_truth, "Output regime truth sidecar")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    finalize(state);
    const sempref::RunPaths paths = sempref::RunPaths::in(state.config.run_dir);

    if (pipeline_cmd->parsed()) {
        return guarded([&] {
            const auto summary = sempref::run_pipeline(state.config);
            for (const auto& [name, status] : summary.stages)
                std::cerr << name << ": " << status << '\n';
            std::cerr << "executions: " << summary.exec_stats.launches
                      << ", cache hits: " << summary.exec_stats.cache_hits << '\n';
        });
    }
    if (execute_cmd->parsed()) {
        return guarded([&] {
            state.config.executor.validate();
            const auto stats = sempref::stage_execute(state.config, paths);
            std::cerr << "executions: " << stats.launches << ", cache hits: " << stats.cache_hits
                      << ", cache repairs: " << stats.cache_repairs << '\n';
        });
    }
    if (entropy_cmd->parsed()) {
        return guarded([&] {
            if (!supplied_partitions.empty()) {
                const auto partitions = sempref::load_partitions(supplied_partitions);
                sempref::save_partitions(partitions, paths.partitions);
            } else {
                sempref::stage_entropy(state.config, paths);
            }
        });
    }
    if (curate_cmd->parsed())
        return guarded([&] { sempref::stage_curate(state.config, paths); });
    if (pairs_cmd->parsed())
        return guarded([&] { sempref::stage_pairs(state.config, paths); });
    if (train_cmd->parsed())
        return guarded([&] { sempref::stage_train(state.config, paths); });
    if (metrics_cmd->parsed())
        return guarded([&] { sempref::stage_metrics(state.config, paths); });
    if (sweep_cmd->parsed())
        return guarded([&] { sempref::stage_sweep(state.config, paths, taus); });
    if (gen_cmd->parsed()) {
        return guarded([&] {
            if (mix.size() != 4)
                throw sempref::ConfigError("--mix needs exactly four proportions");
            corpus_spec.mix = {mix[0], mix[1], mix[2], mix[3]};
            const auto corpus = sempref::generate(corpus_spec);
            sempref::jsonl::save_problems(corpus.problems, out_problems);
            sempref::jsonl::save_candidates(corpus.candidates, out_candidates);
            sempref::save_truth(corpus.truth, out_truth);
            std::cerr << "generated " << corpus.problems.size() << " problems, "
                      << corpus.candidates.size() << " candidates (runner: '"
                      << sempref::corpus_command_template() << "')\n";
        });
    }
    return kExitConfig;
}
