#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sempref/records.hpp"

namespace sempref {

struct ConsensusTable {
    std::string problem_id;
    std::map<std::string, double> scores;    // candidate_id -> R in [0,1]
    std::vector<int> per_input_valid_counts; // |V_j| for j = 0..M-1
};

// Behavioral consensus score per candidate: for every input j, the valid
// outputs of all candidates form a multiset V_j; a candidate whose outcome
// at j is a valid output contributes (multiplicity of its output in V_j) /
// |V_j|, otherwise 0 (also when V_j is empty). R is the mean contribution
// over the M inputs. Fully crashed candidates score exactly 0.
ConsensusTable consensus_scores(const ProblemInputs& problem,
                                std::span<const ExecutionTrace> traces);

struct PairConstruction {
    std::vector<PreferencePair> pairs;
    // Diagnostics: winner ties across distinct clusters, crashed losers
    // used as fallback, or why no pairs were emitted.
    std::vector<std::string> notes;
};

// Builds up to max_losers preference pairs for one curriculum-kept problem.
// The winner is the candidate with maximal R (ties broken by smallest id);
// losers are candidates with strictly lower R, preferring non-crashed ones
// in ascending R order before falling back to crashed ones. Every pair
// carries weight = R(winner). A problem whose best candidate crashed or
// scored 0 yields no pairs.
PairConstruction construct_pairs(const ProblemInputs& problem, const ConsensusTable& table,
                                 std::span<const ExecutionTrace> traces, int max_losers = 3);

// ─── trainer hand-off ──────────────────────────────────────────────

struct DpoExportRecord {
    std::string prompt;
    std::string chosen;
    std::string rejected;
    double weight = 0.0;
};

// Code-generation prompt for one problem, optionally conditioned on the
// observation tag recorded for the chosen candidate.
std::string render_code_prompt(const ProblemInputs& problem,
                               const std::optional<std::string>& observation_id);

// One prompt/chosen/rejected/weight record per pair, ready for an external
// DPO trainer.
std::vector<DpoExportRecord> export_dpo_records(std::span<const ProblemInputs> problems,
                                                std::span<const Candidate> candidates,
                                                std::span<const PreferencePair> pairs);

// ─── files ─────────────────────────────────────────────────────────

void save_consensus_report(std::span<const ConsensusTable> tables,
                           std::span<const ExecutionTrace> traces,
                           const std::filesystem::path& file);

void save_dpo_export(std::span<const DpoExportRecord> records, const std::filesystem::path& file);

} // namespace sempref
