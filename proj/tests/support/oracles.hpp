#pragma once

// Independent reference implementations used to check the library. These
// deliberately avoid the library's clustering/scoring code paths: the
// partitioner works by pairwise comparisons over a union-find, the scorer
// is a direct nested-loop transcription, and the entropy sum is written
// against cluster sizes alone.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "sempref/records.hpp"

namespace testsupport {

// Pairwise-equality partition of non-crashed traces via union-find; returns
// clusters in the library's canonical order (size desc, then smallest id)
// with members sorted, plus the crashed ids.
struct BruteForcePartition {
    std::vector<std::vector<std::string>> clusters;
    std::vector<std::string> crashed;
};

inline bool brute_is_crashed(const sempref::ExecutionTrace& t) {
    for (const auto& o : t.outcomes)
        if (o.kind == sempref::Outcome::Kind::Output) return false;
    return true;
}

inline BruteForcePartition brute_partition(const std::vector<sempref::ExecutionTrace>& traces) {
    BruteForcePartition result;
    std::vector<const sempref::ExecutionTrace*> alive;
    for (const auto& t : traces) {
        if (brute_is_crashed(t))
            result.crashed.push_back(t.candidate_id);
        else
            alive.push_back(&t);
    }
    std::sort(result.crashed.begin(), result.crashed.end());

    std::vector<std::size_t> parent(alive.size());
    std::iota(parent.begin(), parent.end(), 0);
    std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
        return parent[x] == x ? x : parent[x] = find(parent[x]);
    };
    for (std::size_t i = 0; i < alive.size(); ++i)
        for (std::size_t j = i + 1; j < alive.size(); ++j)
            if (alive[i]->outcomes == alive[j]->outcomes) parent[find(i)] = find(j);

    std::map<std::size_t, std::vector<std::string>> groups;
    for (std::size_t i = 0; i < alive.size(); ++i)
        groups[find(i)].push_back(alive[i]->candidate_id);
    for (auto& [root, members] : groups) {
        std::sort(members.begin(), members.end());
        result.clusters.push_back(members);
    }
    std::sort(result.clusters.begin(), result.clusters.end(),
              [](const auto& a, const auto& b) {
                  if (a.size() != b.size()) return a.size() > b.size();
                  return a.front() < b.front();
              });
    return result;
}

inline double brute_entropy(const std::vector<std::vector<std::string>>& clusters) {
    std::size_t total = 0;
    for (const auto& c : clusters) total += c.size();
    double h = 0.0;
    for (const auto& c : clusters) {
        const double p = static_cast<double>(c.size()) / static_cast<double>(total);
        h -= p * std::log(p);
    }
    return clusters.size() <= 1 ? 0.0 : h;
}

// Direct transcription of the consensus-score recurrence: for every
// candidate and every input, count how often its valid output appears among
// all valid outputs at that input, divide by the number of valid outputs,
// sum and divide by the input count.
inline std::map<std::string, double> brute_consensus(
    const std::vector<sempref::ExecutionTrace>& traces, std::size_t m) {
    std::map<std::string, double> scores;
    for (const auto& tk : traces) {
        double r = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            std::vector<std::string> valid;
            for (const auto& tl : traces)
                if (tl.outcomes[j].kind == sempref::Outcome::Kind::Output)
                    valid.push_back(tl.outcomes[j].output);
            if (valid.empty()) continue;
            if (tk.outcomes[j].kind != sempref::Outcome::Kind::Output) continue;
            std::size_t freq = 0;
            for (const auto& o : valid)
                if (o == tk.outcomes[j].output) ++freq;
            r += static_cast<double>(freq) / static_cast<double>(valid.size());
        }
        scores[tk.candidate_id] = r / static_cast<double>(m);
    }
    return scores;
}

} // namespace testsupport
