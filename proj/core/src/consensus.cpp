#include "sempref/consensus.hpp"

#include <algorithm>
#include <unordered_map>

#include "sempref/errors.hpp"
#include "sempref/executor.hpp"
#include "jsonl_util.hpp"

namespace sempref {

ConsensusTable consensus_scores(const ProblemInputs& problem,
                                std::span<const ExecutionTrace> traces) {
    const std::size_t m = problem.test_inputs.size();
    ConsensusTable table;
    table.problem_id = problem.id;
    table.per_input_valid_counts.assign(m, 0);

    for (const ExecutionTrace& t : traces) {
        if (t.problem_id != problem.id)
            throw ValidationError("consensus_scores: trace for candidate '" + t.candidate_id +
                                  "' belongs to problem '" + t.problem_id + "', expected '" +
                                  problem.id + "'");
        if (t.outcomes.size() != m)
            throw ValidationError("consensus_scores: trace length mismatch for candidate '" +
                                  t.candidate_id + "'");
        if (!table.scores.emplace(t.candidate_id, 0.0).second)
            throw ValidationError("consensus_scores: duplicate trace for candidate '" +
                                  t.candidate_id + "'");
    }

    for (std::size_t j = 0; j < m; ++j) {
        // V_j: multiset of valid outputs at input j over all candidates.
        std::unordered_map<std::string, int> freq;
        int valid = 0;
        for (const ExecutionTrace& t : traces) {
            if (t.outcomes[j].is_output()) {
                ++freq[t.outcomes[j].output];
                ++valid;
            }
        }
        table.per_input_valid_counts[j] = valid;
        if (valid == 0) continue; // no consensus signal from this input
        for (const ExecutionTrace& t : traces) {
            if (t.outcomes[j].is_output())
                table.scores[t.candidate_id] +=
                    static_cast<double>(freq[t.outcomes[j].output]) / valid;
        }
    }

    for (auto& [id, score] : table.scores) score /= static_cast<double>(m);
    return table;
}

PairConstruction construct_pairs(const ProblemInputs& problem, const ConsensusTable& table,
                                 std::span<const ExecutionTrace> traces, int max_losers) {
    if (max_losers < 1) throw ValidationError("max_losers must be >= 1");
    PairConstruction result;
    if (table.scores.empty()) return result;

    std::unordered_map<std::string_view, const ExecutionTrace*> trace_of;
    trace_of.reserve(traces.size());
    for (const ExecutionTrace& t : traces) trace_of.emplace(t.candidate_id, &t);
    for (const auto& [id, score] : table.scores) {
        if (!trace_of.count(id))
            throw ValidationError("construct_pairs: no trace for candidate '" + id + "'");
    }

    // Winner: maximal R, ties by smallest candidate id. scores is ordered by
    // id, so the first maximal entry wins.
    const auto winner = std::max_element(
        table.scores.begin(), table.scores.end(),
        [](const auto& a, const auto& b) { return a.second < b.second; });
    const std::string& winner_id = winner->first;
    const double winner_score = winner->second;

    if (winner_score <= 0.0 || is_crashed(*trace_of.at(winner_id))) {
        result.notes.push_back("problem '" + problem.id +
                               "': no candidate with positive consensus and a valid output; "
                               "no pairs emitted");
        return result;
    }

    int tied = 0;
    for (const auto& [id, score] : table.scores)
        if (score == winner_score) ++tied;
    if (tied > 1)
        result.notes.push_back("problem '" + problem.id + "': winner score " +
                               std::to_string(winner_score) + " shared by " +
                               std::to_string(tied) + " candidates; smallest id '" + winner_id +
                               "' chosen");

    // Loser pool: strictly lower R. Non-crashed first in ascending R order
    // (id as tiebreak), then crashed ones.
    struct PoolEntry {
        const std::string* id;
        double score;
        bool crashed;
    };
    std::vector<PoolEntry> pool;
    for (const auto& [id, score] : table.scores) {
        if (score < winner_score)
            pool.push_back({&id, score, is_crashed(*trace_of.at(id))});
    }
    std::sort(pool.begin(), pool.end(), [](const PoolEntry& a, const PoolEntry& b) {
        if (a.crashed != b.crashed) return !a.crashed;
        if (a.score != b.score) return a.score < b.score;
        return *a.id < *b.id;
    });

    for (const PoolEntry& loser : pool) {
        if (static_cast<int>(result.pairs.size()) >= max_losers) break;
        result.pairs.push_back({problem.id, winner_id, *loser.id, winner_score});
        if (loser.crashed)
            result.notes.push_back("problem '" + problem.id + "': crashed candidate '" +
                                   *loser.id + "' used as fallback loser");
    }
    return result;
}

std::string render_code_prompt(const ProblemInputs& problem,
                               const std::optional<std::string>& observation_id) {
    std::string prompt =
        "You are an expert competitive programmer. Solve the following problem.\n\n"
        "Problem:\n" +
        problem.description + "\n\n";
    if (observation_id && !observation_id->empty())
        prompt += "Observation to guide your solution:\n" + *observation_id + "\n\n";
    prompt +=
        "Write a complete program that reads the input from standard input and writes "
        "the answer to standard output.";
    return prompt;
}

std::vector<DpoExportRecord> export_dpo_records(std::span<const ProblemInputs> problems,
                                                std::span<const Candidate> candidates,
                                                std::span<const PreferencePair> pairs) {
    std::unordered_map<std::string_view, const ProblemInputs*> problem_of;
    for (const ProblemInputs& p : problems) problem_of.emplace(p.id, &p);
    std::unordered_map<std::string, const Candidate*> candidate_of;
    for (const Candidate& c : candidates)
        candidate_of.emplace(c.problem_id + "\x1f" + c.id, &c);

    std::vector<DpoExportRecord> records;
    records.reserve(pairs.size());
    for (const PreferencePair& pair : pairs) {
        auto prob = problem_of.find(pair.problem_id);
        if (prob == problem_of.end())
            throw ValidationError("pair references unknown problem '" + pair.problem_id + "'");
        auto winner = candidate_of.find(pair.problem_id + "\x1f" + pair.winner_id);
        auto loser = candidate_of.find(pair.problem_id + "\x1f" + pair.loser_id);
        if (winner == candidate_of.end() || loser == candidate_of.end())
            throw ValidationError("pair for problem '" + pair.problem_id +
                                  "' references unknown candidates");
        DpoExportRecord rec;
        rec.prompt = render_code_prompt(*prob->second, winner->second->observation_id);
        rec.chosen = winner->second->source;
        rec.rejected = loser->second->source;
        rec.weight = pair.weight;
        records.push_back(std::move(rec));
    }
    return records;
}

// ─── files ──────────────────────────────────────────────────────────

using jsonl_util::ojson;

void save_consensus_report(std::span<const ConsensusTable> tables,
                           std::span<const ExecutionTrace> traces,
                           const std::filesystem::path& file) {
    std::unordered_map<std::string, bool> crashed;
    crashed.reserve(traces.size());
    for (const ExecutionTrace& t : traces)
        crashed[t.problem_id + "\x1f" + t.candidate_id] = is_crashed(t);

    std::vector<const ConsensusTable*> sorted;
    sorted.reserve(tables.size());
    for (const auto& t : tables) sorted.push_back(&t);
    std::sort(sorted.begin(), sorted.end(),
              [](const ConsensusTable* a, const ConsensusTable* b) {
                  return a->problem_id < b->problem_id;
              });

    auto out = jsonl_util::open_for_write(file);
    for (const ConsensusTable* table : sorted) {
        for (const auto& [candidate_id, score] : table->scores) {
            ojson rec;
            rec["problem_id"] = table->problem_id;
            rec["candidate_id"] = candidate_id;
            rec["score"] = score;
            auto it = crashed.find(table->problem_id + "\x1f" + candidate_id);
            rec["crashed"] = (it != crashed.end()) ? it->second : false;
            out << rec.dump() << '\n';
        }
    }
}

void save_dpo_export(std::span<const DpoExportRecord> records,
                     const std::filesystem::path& file) {
    auto out = jsonl_util::open_for_write(file);
    for (const DpoExportRecord& rec : records) {
        ojson j;
        j["prompt"] = rec.prompt;
        j["chosen"] = rec.chosen;
        j["rejected"] = rec.rejected;
        j["weight"] = rec.weight;
        out << j.dump() << '\n';
    }
}

} // namespace sempref
