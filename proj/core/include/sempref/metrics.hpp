#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sempref/records.hpp"

namespace sempref {

// Evaluation-only analytics. This is the one module allowed to read
// oracle_outputs; everything upstream works on oracle-stripped views.

// True iff the candidate's outcome matches the oracle on every input, where
// matching compares normalized output payloads; Crash/Timeout never match.
bool candidate_passes(const Problem& problem, const ExecutionTrace& trace);

// Fraction of candidates whose trace matches the oracle on every input.
// Throws ValidationError when the problem has no oracle_outputs.
double pass_rate(const Problem& problem, std::span<const ExecutionTrace> traces);

// Fraction of candidates with no valid output at all.
double crash_rate(std::span<const ExecutionTrace> traces);

struct LabeledValue {
    double value = 0.0;
    bool solvable = false; // pass rate > 0
};

// Mann-Whitney AUC for separating unsolvable from solvable problems: over
// all (unsolvable, solvable) pairs, score 1 when the metric ranks the
// unsolvable problem as more uncertain, 0.5 on exact ties, else 0, and
// average. With higher_means_uncertain = false the ordering is flipped.
// Requires at least one value of each label.
double auc(std::span<const LabeledValue> values, bool higher_means_uncertain);

struct CorrelationResult {
    std::optional<double> pearson, spearman, kendall; // kendall is tau-b
    // Approximate p-values: t-approximation for pearson/spearman, normal
    // approximation (untied variance) for tau-b.
    std::optional<double> pearson_p, spearman_p, kendall_p;
    std::optional<std::string> undefined_reason;
};

// Pearson, Spearman (average ranks) and Kendall tau-b between x and y.
// Requires n >= 3 and equal lengths; zero variance in either sequence makes
// the coefficients undefined and is reported via undefined_reason.
CorrelationResult correlations(std::span<const double> x, std::span<const double> y);

struct GoldenStats {
    std::size_t golden_count = 0;
    std::size_t pair_count = 0;
    double rate = 0.0; // 0 when there are no pairs
};

// A pair is golden when its winner passes every oracle comparison and its
// loser fails at least one. Requires oracles for every referenced problem.
GoldenStats golden_stats(std::span<const PreferencePair> pairs,
                         std::span<const Problem> problems,
                         std::span<const ExecutionTrace> traces);

struct ProblemMetrics {
    std::string problem_id;
    std::optional<double> pass_rate;            // only with oracles
    double crash_rate = 0.0;
    std::optional<double> code_semantic_entropy; // absent if nothing survived
    std::optional<double> nll_mean;
    std::optional<double> token_entropy_mean;
    std::optional<double> external_entropy; // from a supplied partition file
};

struct MetricSummary {
    // metric name -> AUC over solvable/unsolvable problems
    std::map<std::string, double> auc_per_metric;
    std::map<std::string, CorrelationResult> correlations_per_metric;
    std::optional<GoldenStats> golden;
};

struct MetricsReport {
    std::vector<ProblemMetrics> per_problem; // sorted by problem_id
    MetricSummary summary;
};

// Per-problem metrics plus the summary block. nll/token_entropy aggregate as
// arithmetic means over the candidates that carry them. external_entropy
// comes from optional externally supplied per-problem entropies.
MetricsReport compute_metrics(std::span<const Problem> problems,
                              std::span<const Candidate> candidates,
                              std::span<const ExecutionTrace> traces,
                              std::span<const PreferencePair> pairs,
                              const std::map<std::string, double>& external_entropy = {});

struct SweepRow {
    double tau = 0.0;
    std::size_t kept_count = 0;
    std::size_t pair_count = 0;
    std::size_t golden_count = 0;
    double golden_rate = 0.0;
};

// Runs curation and pair construction per tau over fixed traces and reports
// the golden-pair composition of each resulting dataset.
std::vector<SweepRow> threshold_sweep(std::span<const Problem> problems,
                                      std::span<const ExecutionTrace> traces,
                                      std::span<const double> taus, int max_losers = 3);

// ─── files ─────────────────────────────────────────────────────────

void save_metrics_report(const MetricsReport& report, const std::filesystem::path& file);
void save_sweep_report(std::span<const SweepRow> rows, const std::filesystem::path& file);

} // namespace sempref
