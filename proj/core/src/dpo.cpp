#include "sempref/dpo.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

#include "sempref/errors.hpp"
#include "jsonl_util.hpp"

namespace sempref {

double reward_difference(const PairLogProbs& lp) {
    return lp.beta * ((lp.logp_policy_w - lp.logp_ref_w) - (lp.logp_policy_l - lp.logp_ref_l));
}

double log_sigmoid(double x) {
    // log(1/(1+e^-x)) without overflow on either side.
    if (x >= 0.0) return -std::log1p(std::exp(-x));
    return x - std::log1p(std::exp(x));
}

double weighted_dpo_loss(const PairLogProbs& lp) {
    return lp.weight * -log_sigmoid(reward_difference(lp));
}

PairGradient weighted_dpo_grad(const PairLogProbs& lp) {
    const double r = reward_difference(lp);
    // sigmoid(-r), stable for large |r|.
    const double sig_neg = (r >= 0.0) ? std::exp(-r) / (1.0 + std::exp(-r))
                                      : 1.0 / (1.0 + std::exp(r));
    // Association matters: weight * (beta * sig) keeps the gradient exactly
    // linear in weight.
    const double slope = lp.weight * (lp.beta * sig_neg);
    return {-slope, +slope};
}

// ─── toy trainer ─────────────────────────────────────────────────────

const ToyPolicy::Entry* ToyPolicy::find(const std::string& problem_id) const {
    auto it = std::lower_bound(entries.begin(), entries.end(), problem_id,
                               [](const Entry& e, const std::string& id) {
                                   return e.problem_id < id;
                               });
    if (it == entries.end() || it->problem_id != problem_id) return nullptr;
    return &*it;
}

std::vector<double> ToyPolicy::probabilities(const std::vector<double>& logits) {
    double max_logit = logits.empty() ? 0.0 : *std::max_element(logits.begin(), logits.end());
    std::vector<double> probs(logits.size());
    double z = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        probs[i] = std::exp(logits[i] - max_logit);
        z += probs[i];
    }
    for (double& p : probs) p /= z;
    return probs;
}

namespace {

double log_softmax_at(const std::vector<double>& logits, std::size_t index) {
    double max_logit = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double l : logits) z += std::exp(l - max_logit);
    return logits[index] - max_logit - std::log(z);
}

struct IndexedPair {
    std::size_t entry;
    std::size_t winner;
    std::size_t loser;
    double weight;
};

} // namespace

ToyTrainResult train_toy(std::span<const Candidate> candidates,
                         std::span<const PreferencePair> pairs, const ToyTrainConfig& config) {
    if (config.steps < 0) throw ValidationError("train_toy: steps must be >= 0");
    if (!(config.learning_rate > 0.0)) throw ValidationError("train_toy: learning_rate must be > 0");
    if (!(config.beta > 0.0)) throw ValidationError("train_toy: beta must be > 0");

    ToyTrainResult result;
    ToyPolicy& policy = result.policy;

    std::map<std::string, std::vector<std::string>> ids_by_problem;
    for (const Candidate& c : candidates) ids_by_problem[c.problem_id].push_back(c.id);
    policy.entries.reserve(ids_by_problem.size());
    std::unordered_map<std::string, std::size_t> entry_index;
    for (auto& [problem_id, ids] : ids_by_problem) {
        std::sort(ids.begin(), ids.end());
        ToyPolicy::Entry entry;
        entry.problem_id = problem_id;
        entry.candidate_ids = std::move(ids);
        entry.logits.assign(entry.candidate_ids.size(), 0.0);
        entry.ref_logits = entry.logits;
        entry_index.emplace(problem_id, policy.entries.size());
        policy.entries.push_back(std::move(entry));
    }

    std::vector<IndexedPair> batch;
    batch.reserve(pairs.size());
    for (const PreferencePair& pair : pairs) {
        auto entry_it = entry_index.find(pair.problem_id);
        if (entry_it == entry_index.end())
            throw ValidationError("pair references unknown problem '" + pair.problem_id + "'");
        const ToyPolicy::Entry& entry = policy.entries[entry_it->second];
        auto locate = [&entry, &pair](const std::string& id) {
            auto it = std::lower_bound(entry.candidate_ids.begin(), entry.candidate_ids.end(), id);
            if (it == entry.candidate_ids.end() || *it != id)
                throw ValidationError("pair for problem '" + pair.problem_id +
                                      "' references unknown candidate '" + id + "'");
            return static_cast<std::size_t>(it - entry.candidate_ids.begin());
        };
        batch.push_back({entry_it->second, locate(pair.winner_id), locate(pair.loser_id),
                         pair.weight});
    }

    // Winner probability is averaged over problems that have at least one
    // pair; each such problem has a unique winner by construction.
    std::vector<std::pair<std::size_t, std::size_t>> winner_of_entry;
    {
        std::map<std::size_t, std::size_t> winners;
        for (const IndexedPair& p : batch) winners.emplace(p.entry, p.winner);
        winner_of_entry.assign(winners.begin(), winners.end());
    }

    auto evaluate = [&](int step) {
        TrainStepLog log_entry;
        log_entry.step = step;
        for (const IndexedPair& p : batch) {
            const ToyPolicy::Entry& entry = policy.entries[p.entry];
            PairLogProbs lp;
            lp.logp_policy_w = log_softmax_at(entry.logits, p.winner);
            lp.logp_policy_l = log_softmax_at(entry.logits, p.loser);
            lp.logp_ref_w = log_softmax_at(entry.ref_logits, p.winner);
            lp.logp_ref_l = log_softmax_at(entry.ref_logits, p.loser);
            lp.weight = p.weight;
            lp.beta = config.beta;
            log_entry.total_loss += weighted_dpo_loss(lp);
        }
        if (!winner_of_entry.empty()) {
            double sum = 0.0;
            for (const auto& [entry_idx, winner_idx] : winner_of_entry) {
                const auto probs = ToyPolicy::probabilities(policy.entries[entry_idx].logits);
                sum += probs[winner_idx];
            }
            log_entry.mean_winner_prob = sum / static_cast<double>(winner_of_entry.size());
        }
        return log_entry;
    };

    result.log.push_back(evaluate(0));
    for (int step = 1; step <= config.steps; ++step) {
        // Accumulate full-batch gradients on the logits. The pair loss
        // depends only on logit differences, so log Z cancels and only the
        // winner/loser coordinates move.
        std::vector<std::vector<double>> grad(policy.entries.size());
        for (const IndexedPair& p : batch) {
            ToyPolicy::Entry& entry = policy.entries[p.entry];
            if (grad[p.entry].empty()) grad[p.entry].assign(entry.logits.size(), 0.0);
            PairLogProbs lp;
            lp.logp_policy_w = log_softmax_at(entry.logits, p.winner);
            lp.logp_policy_l = log_softmax_at(entry.logits, p.loser);
            lp.logp_ref_w = log_softmax_at(entry.ref_logits, p.winner);
            lp.logp_ref_l = log_softmax_at(entry.ref_logits, p.loser);
            lp.weight = p.weight;
            lp.beta = config.beta;
            const PairGradient g = weighted_dpo_grad(lp);
            grad[p.entry][p.winner] += g.d_logp_policy_w;
            grad[p.entry][p.loser] += g.d_logp_policy_l;
        }
        for (std::size_t e = 0; e < policy.entries.size(); ++e) {
            if (grad[e].empty()) continue;
            auto& logits = policy.entries[e].logits;
            for (std::size_t i = 0; i < logits.size(); ++i)
                logits[i] -= config.learning_rate * grad[e][i];
        }
        result.log.push_back(evaluate(step));
    }
    return result;
}

// ─── files ──────────────────────────────────────────────────────────

using jsonl_util::ojson;

void save_train_log(std::span<const TrainStepLog> log, const std::filesystem::path& file) {
    auto out = jsonl_util::open_for_write(file);
    for (const TrainStepLog& entry : log) {
        ojson rec;
        rec["step"] = entry.step;
        rec["total_loss"] = entry.total_loss;
        rec["mean_winner_prob"] = entry.mean_winner_prob;
        out << rec.dump() << '\n';
    }
}

void save_policy(const ToyPolicy& policy, const std::filesystem::path& file) {
    auto out = jsonl_util::open_for_write(file);
    for (const ToyPolicy::Entry& entry : policy.entries) {
        const auto probs = ToyPolicy::probabilities(entry.logits);
        ojson rec;
        rec["problem_id"] = entry.problem_id;
        ojson cands = ojson::array();
        for (std::size_t i = 0; i < entry.candidate_ids.size(); ++i) {
            ojson c;
            c["id"] = entry.candidate_ids[i];
            c["logit"] = entry.logits[i];
            c["prob"] = probs[i];
            cands.push_back(std::move(c));
        }
        rec["candidates"] = std::move(cands);
        out << rec.dump() << '\n';
    }
}

} // namespace sempref
