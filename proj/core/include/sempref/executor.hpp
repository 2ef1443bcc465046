#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sempref/records.hpp"

namespace sempref {

// Judge-style output equivalence: trailing whitespace is stripped from every
// line, then trailing blank lines are dropped. Idempotent. The normalized
// form never ends in a newline.
std::string normalize_output(std::string_view raw);

struct ExecutorConfig {
    // Whitespace-separated command whose "{src}" placeholder is replaced by
    // the path of a temp file holding the candidate source, e.g.
    // "python3 -S {src}". The spawned process receives the test input on
    // stdin and must write its answer to stdout.
    std::string command_template;
    std::chrono::milliseconds timeout{2000};
    std::uint64_t max_output_bytes = 1 << 20;
    int workers = 1;
    // Empty disables caching. Entries are one file per (source, input,
    // template, timeout) key, named by the key's hex digest. The cache is
    // safe for concurrent use within one process; sharing it across
    // processes needs external locking.
    std::filesystem::path cache_dir;

    void validate() const; // throws ConfigError
};

struct ExecStats {
    std::uint64_t launches = 0;     // processes actually spawned
    std::uint64_t cache_hits = 0;
    std::uint64_t cache_repairs = 0; // corrupt entries recomputed

    ExecStats& operator+=(const ExecStats& other) {
        launches += other.launches;
        cache_hits += other.cache_hits;
        cache_repairs += other.cache_repairs;
        return *this;
    }
};

// True iff no input produced a valid output, i.e. every outcome is Crash or
// Timeout. Such candidates are excluded from clustering and score zero.
bool is_crashed(const ExecutionTrace& trace);

// Runs one candidate against every test input of its problem, one fresh
// process per input so a crash on one input cannot contaminate the others.
// Exit status 0 within the timeout yields Output(normalized stdout); nonzero
// exit, termination by signal, or failure to start yields Crash; exceeding
// the timeout yields Timeout; output past max_output_bytes is treated as
// erroneous behavior and yields Crash.
//
// Note: the first execution in a process installs SIG_IGN for SIGPIPE so
// that candidates exiting without reading stdin are handled gracefully.
ExecutionTrace execute_candidate(const Candidate& candidate, const ProblemInputs& problem,
                                 const ExecutorConfig& config, ExecStats* stats = nullptr);

struct BatchResult {
    std::vector<ExecutionTrace> traces; // sorted by (problem_id, candidate_id)
    ExecStats stats;
};

// Runs every candidate with a bounded worker pool. The trace set is
// identical for any worker count. Individual failures become Crash/Timeout
// outcomes and never abort the batch; configuration errors throw.
// Candidates whose programs behave nondeterministically (clocks, real
// randomness) are the caller's responsibility: the cache keeps
// first-observed outcomes.
BatchResult execute_all(std::span<const ProblemInputs> problems,
                        std::span<const Candidate> candidates, const ExecutorConfig& config);

} // namespace sempref
