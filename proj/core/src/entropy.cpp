#include "sempref/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_set>

#include "sempref/errors.hpp"
#include "sempref/executor.hpp"
#include "jsonl_util.hpp"

namespace sempref {

namespace {

// Stable equality key for an outcome sequence. Output payloads are length
// prefixed so arbitrary bytes cannot alias the separators; Crash and Timeout
// are distinguished symbols.
std::string trace_key(const ExecutionTrace& trace) {
    std::string key;
    for (const Outcome& o : trace.outcomes) {
        switch (o.kind) {
            case Outcome::Kind::Output:
                key += 'o';
                key += std::to_string(o.output.size());
                key += ':';
                key += o.output;
                break;
            case Outcome::Kind::Crash:
                key += 'c';
                break;
            case Outcome::Kind::Timeout:
                key += 't';
                break;
        }
        key += ';';
    }
    return key;
}

} // namespace

BehavioralPartition cluster_by_trace(std::span<const ExecutionTrace> traces) {
    BehavioralPartition part;
    if (traces.empty()) return part;
    part.problem_id = traces.front().problem_id;

    std::unordered_set<std::string> seen_ids;
    std::map<std::string, std::vector<std::string>> groups;
    const std::size_t m = traces.front().outcomes.size();
    for (const ExecutionTrace& t : traces) {
        if (t.problem_id != part.problem_id)
            throw ValidationError("cluster_by_trace: traces span problems '" + part.problem_id +
                                  "' and '" + t.problem_id + "'");
        if (t.outcomes.size() != m)
            throw ValidationError("inconsistent trace length for candidate '" + t.candidate_id +
                                  "' of problem '" + t.problem_id + "'");
        if (!seen_ids.insert(t.candidate_id).second)
            throw ValidationError("duplicate trace for candidate '" + t.candidate_id + "'");
        if (is_crashed(t)) {
            part.excluded_crashed.push_back(t.candidate_id);
        } else {
            groups[trace_key(t)].push_back(t.candidate_id);
        }
    }

    std::sort(part.excluded_crashed.begin(), part.excluded_crashed.end());
    for (auto& [key, members] : groups) {
        std::sort(members.begin(), members.end());
        part.surviving_count += static_cast<int>(members.size());
        part.clusters.push_back(std::move(members));
    }
    std::sort(part.clusters.begin(), part.clusters.end(),
              [](const std::vector<std::string>& a, const std::vector<std::string>& b) {
                  if (a.size() != b.size()) return a.size() > b.size();
                  return a.front() < b.front();
              });
    return part;
}

EntropyRecord semantic_entropy(const BehavioralPartition& partition) {
    if (partition.surviving_count < 1)
        throw ValidationError("semantic_entropy: problem '" + partition.problem_id +
                              "' has no surviving candidates");

    EntropyRecord rec;
    rec.problem_id = partition.problem_id;
    rec.cluster_count = static_cast<int>(partition.clusters.size());
    rec.surviving_count = partition.surviving_count;

    const double total = partition.surviving_count;
    double h = 0.0;
    for (const auto& cluster : partition.clusters) {
        const double p = static_cast<double>(cluster.size()) / total;
        h -= p * std::log(p);
    }
    // A single cluster must give exactly zero, not -0.0 or 1e-17 dust.
    rec.raw_entropy = (rec.cluster_count <= 1) ? 0.0 : h;
    return rec;
}

EntropyRecord semantic_entropy(const BehavioralPartition& partition, double log_base) {
    if (!(log_base > 0.0) || log_base == 1.0)
        throw ValidationError("semantic_entropy: invalid log base");
    EntropyRecord rec = semantic_entropy(partition);
    rec.raw_entropy /= std::log(log_base);
    if (rec.cluster_count <= 1) rec.raw_entropy = 0.0;
    return rec;
}

std::string to_string(ExclusionReason reason) {
    switch (reason) {
        case ExclusionReason::ZeroEntropy: return "zero-entropy";
        case ExclusionReason::AboveThreshold: return "above-threshold";
        case ExclusionReason::Degenerate: return "degenerate";
        case ExclusionReason::SizeGate: return "size-gate";
    }
    return "unknown";
}

CurationResult normalize_and_filter(std::span<const EntropyRecord> records, double tau) {
    if (!(tau > 0.0) || tau > 1.0)
        throw ValidationError("tau must lie in (0,1], got " + std::to_string(tau));
    for (const EntropyRecord& r : records) {
        if (r.surviving_count < kMinSurvivors)
            throw ValidationError("normalize_and_filter: problem '" + r.problem_id +
                                  "' has surviving_count " + std::to_string(r.surviving_count) +
                                  " < " + std::to_string(kMinSurvivors) +
                                  "; size-gated problems must be removed first");
    }

    CurationResult result;
    if (records.empty()) return result;

    double h_min = records.front().raw_entropy;
    double h_max = h_min;
    for (const EntropyRecord& r : records) {
        h_min = std::min(h_min, r.raw_entropy);
        h_max = std::max(h_max, r.raw_entropy);
    }
    result.degenerate = (h_max == h_min);
    if (result.degenerate)
        result.warnings.push_back(
            "degenerate normalization: all raw entropies equal; nothing kept");

    for (const EntropyRecord& r : records) {
        CurationEntry entry;
        entry.problem_id = r.problem_id;
        entry.raw_entropy = r.raw_entropy;
        entry.cluster_count = r.cluster_count;
        entry.surviving_count = r.surviving_count;
        if (result.degenerate) {
            entry.normalized_entropy = 0.0;
            entry.kept = false;
            entry.exclusion_reason = ExclusionReason::Degenerate;
        } else {
            const double h_norm = (r.raw_entropy - h_min) / (h_max - h_min);
            entry.normalized_entropy = h_norm;
            if (h_norm <= 0.0) {
                entry.exclusion_reason = ExclusionReason::ZeroEntropy;
            } else if (h_norm >= tau) {
                entry.exclusion_reason = ExclusionReason::AboveThreshold;
            } else {
                entry.kept = true;
                result.kept.insert(r.problem_id);
            }
        }
        result.report.push_back(std::move(entry));
    }
    std::sort(result.report.begin(), result.report.end(),
              [](const CurationEntry& a, const CurationEntry& b) {
                  return a.problem_id < b.problem_id;
              });
    return result;
}

CurationResult curate(std::span<const EntropyRecord> records, double tau) {
    std::vector<EntropyRecord> surviving;
    std::vector<CurationEntry> gated;
    for (const EntropyRecord& r : records) {
        if (r.surviving_count >= kMinSurvivors) {
            surviving.push_back(r);
        } else {
            CurationEntry entry;
            entry.problem_id = r.problem_id;
            entry.raw_entropy = r.raw_entropy;
            entry.cluster_count = r.cluster_count;
            entry.surviving_count = r.surviving_count;
            entry.kept = false;
            entry.exclusion_reason = ExclusionReason::SizeGate;
            gated.push_back(std::move(entry));
        }
    }
    CurationResult result = normalize_and_filter(surviving, tau);
    for (CurationEntry& entry : gated) result.report.push_back(std::move(entry));
    std::sort(result.report.begin(), result.report.end(),
              [](const CurationEntry& a, const CurationEntry& b) {
                  return a.problem_id < b.problem_id;
              });
    return result;
}

// ─── files ──────────────────────────────────────────────────────────

using jsonl_util::ojson;

void save_curation_report(const CurationResult& result, const std::filesystem::path& file) {
    auto out = jsonl_util::open_for_write(file);
    for (const CurationEntry& e : result.report) {
        ojson rec;
        rec["problem_id"] = e.problem_id;
        rec["raw_entropy"] = e.raw_entropy;
        if (e.normalized_entropy) rec["normalized_entropy"] = *e.normalized_entropy;
        rec["cluster_count"] = e.cluster_count;
        rec["surviving_count"] = e.surviving_count;
        rec["kept"] = e.kept;
        if (e.exclusion_reason) rec["exclusion_reason"] = to_string(*e.exclusion_reason);
        out << rec.dump() << '\n';
    }
}

std::vector<CurationEntry> load_curation_report(const std::filesystem::path& file) {
    std::vector<CurationEntry> entries;
    jsonl_util::for_each_record(file, [&](const ojson& rec, std::size_t line) {
        CurationEntry e;
        e.problem_id = jsonl_util::require_string(rec, "problem_id", file, line);
        e.raw_entropy = jsonl_util::require_number(rec, "raw_entropy", file, line);
        if (rec.contains("normalized_entropy"))
            e.normalized_entropy = jsonl_util::require_number(rec, "normalized_entropy", file, line);
        e.cluster_count = static_cast<int>(jsonl_util::require_number(rec, "cluster_count", file, line));
        e.surviving_count =
            static_cast<int>(jsonl_util::require_number(rec, "surviving_count", file, line));
        auto kept = rec.find("kept");
        if (kept == rec.end() || !kept->is_boolean())
            jsonl_util::fail_at(file, line, "missing or non-boolean field 'kept'");
        e.kept = kept->get<bool>();
        if (rec.contains("exclusion_reason")) {
            const std::string reason = jsonl_util::require_string(rec, "exclusion_reason", file, line);
            if (reason == "zero-entropy") e.exclusion_reason = ExclusionReason::ZeroEntropy;
            else if (reason == "above-threshold") e.exclusion_reason = ExclusionReason::AboveThreshold;
            else if (reason == "degenerate") e.exclusion_reason = ExclusionReason::Degenerate;
            else if (reason == "size-gate") e.exclusion_reason = ExclusionReason::SizeGate;
            else jsonl_util::fail_at(file, line, "unknown exclusion_reason '" + reason + "'");
        }
        entries.push_back(std::move(e));
    });
    return entries;
}

void save_partitions(std::span<const BehavioralPartition> partitions,
                     const std::filesystem::path& file) {
    std::vector<const BehavioralPartition*> sorted;
    sorted.reserve(partitions.size());
    for (const auto& p : partitions) sorted.push_back(&p);
    std::sort(sorted.begin(), sorted.end(),
              [](const BehavioralPartition* a, const BehavioralPartition* b) {
                  return a->problem_id < b->problem_id;
              });
    auto out = jsonl_util::open_for_write(file);
    for (const BehavioralPartition* p : sorted) {
        ojson rec;
        rec["problem_id"] = p->problem_id;
        rec["clusters"] = p->clusters;
        rec["surviving_count"] = p->surviving_count;
        rec["excluded_crashed"] = p->excluded_crashed;
        out << rec.dump() << '\n';
    }
}

std::vector<BehavioralPartition> load_partitions(const std::filesystem::path& file) {
    std::vector<BehavioralPartition> partitions;
    jsonl_util::for_each_record(file, [&](const ojson& rec, std::size_t line) {
        BehavioralPartition p;
        p.problem_id = jsonl_util::require_string(rec, "problem_id", file, line);
        auto clusters = rec.find("clusters");
        if (clusters == rec.end() || !clusters->is_array())
            jsonl_util::fail_at(file, line, "missing or non-array field 'clusters'");
        for (const auto& cluster : *clusters) {
            if (!cluster.is_array() || cluster.empty())
                jsonl_util::fail_at(file, line, "clusters must be non-empty arrays");
            std::vector<std::string> members;
            for (const auto& id : cluster) {
                if (!id.is_string()) jsonl_util::fail_at(file, line, "cluster members must be strings");
                members.push_back(id.get<std::string>());
            }
            p.clusters.push_back(std::move(members));
        }
        p.surviving_count =
            static_cast<int>(jsonl_util::require_number(rec, "surviving_count", file, line));
        if (rec.contains("excluded_crashed")) {
            for (const auto& id : rec.at("excluded_crashed"))
                p.excluded_crashed.push_back(id.get<std::string>());
        }
        int member_total = 0;
        std::unordered_set<std::string> seen;
        for (const auto& cluster : p.clusters) {
            for (const std::string& id : cluster) {
                if (!seen.insert(id).second)
                    jsonl_util::fail_at(file, line, "candidate '" + id + "' in two clusters");
                ++member_total;
            }
        }
        if (member_total != p.surviving_count)
            jsonl_util::fail_at(file, line, "surviving_count does not match cluster members");
        partitions.push_back(std::move(p));
    });
    return partitions;
}

} // namespace sempref
