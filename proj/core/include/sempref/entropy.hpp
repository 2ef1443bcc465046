#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "sempref/records.hpp"

namespace sempref {

// Problems need at least this many non-crashed candidates for the entropy
// to mean anything; smaller ones are size-gated out of the curriculum.
inline constexpr int kMinSurvivors = 3;

struct BehavioralPartition {
    std::string problem_id;
    // Canonical order: clusters by descending size, ties by smallest member
    // id; members sorted by id. Cluster membership means element-wise equal
    // outcome sequences, with Crash and Timeout as distinguished symbols, so
    // a partially crashed candidate still participates.
    std::vector<std::vector<std::string>> clusters;
    int surviving_count = 0;
    std::vector<std::string> excluded_crashed; // sorted by id
};

struct EntropyRecord {
    std::string problem_id;
    double raw_entropy = 0.0; // nats unless stated otherwise
    std::optional<double> normalized_entropy;
    int cluster_count = 0;
    int surviving_count = 0;
};

// Groups one problem's traces into behavioral clusters. Fully crashed
// candidates go to excluded_crashed. Throws ValidationError on inconsistent
// trace lengths or duplicate candidate ids.
BehavioralPartition cluster_by_trace(std::span<const ExecutionTrace> traces);

// Shannon entropy of the cluster-size distribution. The partition must have
// surviving_count >= 1. Natural log by default; the base only rescales raw
// values and never changes the filtered set (min-max normalization is
// affine-invariant), so nats are reported.
EntropyRecord semantic_entropy(const BehavioralPartition& partition);
EntropyRecord semantic_entropy(const BehavioralPartition& partition, double log_base);

enum class ExclusionReason { ZeroEntropy, AboveThreshold, Degenerate, SizeGate };

std::string to_string(ExclusionReason reason);

struct CurationEntry {
    std::string problem_id;
    double raw_entropy = 0.0;
    std::optional<double> normalized_entropy; // absent for size-gated problems
    int cluster_count = 0;
    int surviving_count = 0;
    bool kept = false;
    std::optional<ExclusionReason> exclusion_reason;
};

struct CurationResult {
    std::set<std::string> kept;
    std::vector<CurationEntry> report; // sorted by problem_id
    bool degenerate = false;           // max raw entropy == min raw entropy
    std::vector<std::string> warnings;
};

// Min-max normalizes raw entropies over the given records and keeps problems
// with 0 < H_norm < tau (strict on both sides). Every record must already
// satisfy surviving_count >= kMinSurvivors; tau must lie in (0,1].
// When all raw entropies are equal the normalization is degenerate: every
// H_norm is defined as 0 and nothing is kept.
//
// Note the strict lower bound applies to the *normalized* value: when the
// minimum raw entropy over the surviving problems is positive, the problem
// attaining it maps to H_norm = 0 and is excluded even though it has
// behavioral variation. Its raw_entropy in the report makes this auditable.
CurationResult normalize_and_filter(std::span<const EntropyRecord> records, double tau);

// Applies the size gate, then normalize_and_filter over the survivors. The
// report covers size-gated problems too.
CurationResult curate(std::span<const EntropyRecord> records, double tau);

// ─── report / partition files ──────────────────────────────────────

void save_curation_report(const CurationResult& result, const std::filesystem::path& file);
std::vector<CurationEntry> load_curation_report(const std::filesystem::path& file);

// Partition files let a caller supply an externally computed clustering
// (e.g. a text-embedding grouping) and run the same entropy machinery on it.
void save_partitions(std::span<const BehavioralPartition> partitions,
                     const std::filesystem::path& file);
std::vector<BehavioralPartition> load_partitions(const std::filesystem::path& file);

} // namespace sempref
