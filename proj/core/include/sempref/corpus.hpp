#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "sempref/records.hpp"

namespace sempref {

enum class Regime {
    Mastered,          // every candidate correct: entropy 0, pass rate 1
    Learnable,         // correct majority plus a few distinct buggy behaviors
    Fragmented,        // >= 5 distinct buggy behaviors, high entropy
    ConsistentFailure, // one wrong behavior shared by all candidates
};

std::string to_string(Regime regime);

struct CorpusSpec {
    std::uint64_t seed = 0;
    int n_problems = 10;
    int candidates_per_problem = 15;
    int inputs_per_problem = 3;
    struct Mix {
        double mastered = 0.2;
        double learnable = 0.4;
        double fragmented = 0.3;
        double consistent_failure = 0.1;
    } mix;

    void validate() const; // throws ValidationError
};

struct TruthEntry {
    std::string problem_id;
    Regime regime = Regime::Mastered;
    std::vector<std::string> correct_candidate_ids; // sorted
};

struct GeneratedCorpus {
    std::vector<Problem> problems; // with oracle_outputs
    std::vector<Candidate> candidates;
    std::vector<TruthEntry> truth; // consumed only by tests and analysis
};

// Deterministic synthetic benchmark: tiny integer/string tasks with hidden
// reference implementations, candidates emitted as Python programs derived
// from enumerable mutation templates (off-by-one bounds, wrong operator,
// missing edge case, guaranteed crash). Cluster profiles are fixed per
// regime and variant behaviors are verified pairwise distinct on every
// generated input, so the labeled regimes are guaranteed, not probabilistic.
// Same spec -> byte-identical corpus.
GeneratedCorpus generate(const CorpusSpec& spec);

// The runner the generated candidates expect ("python3 -S {src}").
std::string corpus_command_template();

void save_truth(std::span<const TruthEntry> truth, const std::filesystem::path& file);
std::vector<TruthEntry> load_truth(const std::filesystem::path& file);

} // namespace sempref
