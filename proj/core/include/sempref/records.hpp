#pragma once

#include <optional>
#include <string>
#include <vector>

namespace sempref {

// ─── Domain records ───────────────────────────────────────────────
//
// Byte payloads (test inputs, program outputs, oracle outputs) are held
// as std::string and may contain arbitrary bytes including newlines.

// Oracle-free view of a problem. Curation stages (execution, clustering,
// entropy, consensus, pair construction) accept only this type; expected
// outputs live in Problem and are read by the metrics module alone.
struct ProblemInputs {
    std::string id;
    std::string description;
    std::vector<std::string> test_inputs; // stdin payload per test, j = 0..M-1
};

struct Problem : ProblemInputs {
    // Evaluation-only expected outputs, same length as test_inputs.
    std::optional<std::vector<std::string>> oracle_outputs;
};

struct Candidate {
    std::string id;         // unique within its problem
    std::string problem_id;
    std::string source;
    std::optional<std::string> observation_id; // sampling provenance tag
    std::optional<double> nll;                 // externally supplied, >= 0
    std::optional<double> token_entropy;       // externally supplied, >= 0
};

// One execution result. Output holds the normalized stdout text; Crash and
// Timeout carry no payload.
struct Outcome {
    enum class Kind { Output, Crash, Timeout };

    Kind kind = Kind::Crash;
    std::string output;

    static Outcome output_of(std::string text) { return {Kind::Output, std::move(text)}; }
    static Outcome crash() { return {Kind::Crash, {}}; }
    static Outcome timeout() { return {Kind::Timeout, {}}; }

    bool is_output() const { return kind == Kind::Output; }

    friend bool operator==(const Outcome&, const Outcome&) = default;
};

struct ExecutionTrace {
    std::string candidate_id;
    std::string problem_id;
    std::vector<Outcome> outcomes; // length M of the owning problem
};

struct PreferencePair {
    std::string problem_id;
    std::string winner_id;
    std::string loser_id;
    double weight = 0.0; // winner's consensus score, in [0,1]
};

struct Dataset {
    std::vector<Problem> problems;
    std::vector<Candidate> candidates;
};

// Validates every record invariant plus referential integrity (unique ids,
// non-empty inputs/sources, oracle lengths, candidate -> problem links).
// Throws ValidationError describing the first violation.
void validate_dataset(const Dataset& dataset);

// Copies the oracle-free part of each problem, in input order.
std::vector<ProblemInputs> strip_oracles(const std::vector<Problem>& problems);

} // namespace sempref
