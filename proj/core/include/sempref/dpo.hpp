#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "sempref/records.hpp"

namespace sempref {

// Log-probabilities of one preference pair under the trained policy and the
// frozen reference, plus the pair weight (the winner's consensus score) and
// the DPO scale beta.
struct PairLogProbs {
    double logp_policy_w = 0.0;
    double logp_ref_w = 0.0;
    double logp_policy_l = 0.0;
    double logp_ref_l = 0.0;
    double weight = 1.0; // in [0,1]
    double beta = 0.1;   // > 0
};

// beta * ((logp_policy_w - logp_ref_w) - (logp_policy_l - logp_ref_l)).
double reward_difference(const PairLogProbs& lp);

// log(sigmoid(x)), stable for |x| up to 1e4 and beyond.
double log_sigmoid(double x);

// Consensus-weighted DPO loss: -weight * log(sigmoid(reward_difference)).
// weight = 1 is exactly the standard DPO loss; weight = 0 silences the pair.
double weighted_dpo_loss(const PairLogProbs& lp);

struct PairGradient {
    double d_logp_policy_w = 0.0;
    double d_logp_policy_l = 0.0;
    // Gradients w.r.t. the reference log-probs are identically zero: the
    // reference is frozen.
};

// Analytic gradient of weighted_dpo_loss w.r.t. the policy log-probs:
//   d/d logp_policy_w = -weight * beta * sigmoid(-r)
//   d/d logp_policy_l = +weight * beta * sigmoid(-r)
// Computed so that the gradient is exactly linear in weight.
PairGradient weighted_dpo_grad(const PairLogProbs& lp);

// ─── toy trainer ───────────────────────────────────────────────────
//
// A categorical policy over each problem's candidate set: pi(c|p) is the
// softmax of per-problem logits. This is a minimal stand-in for a code
// model, enough to optimize the weighted objective end to end. The pair
// loss only depends on logit differences, so the softmax normalizer
// cancels and only winner/loser logits receive gradient.

struct ToyPolicy {
    struct Entry {
        std::string problem_id;
        std::vector<std::string> candidate_ids; // sorted
        std::vector<double> logits;
        std::vector<double> ref_logits; // frozen at initialization
    };
    std::vector<Entry> entries; // sorted by problem_id

    const Entry* find(const std::string& problem_id) const;
    // Softmax probabilities under the trained (or reference) logits.
    static std::vector<double> probabilities(const std::vector<double>& logits);
};

struct ToyTrainConfig {
    int steps = 200;
    double learning_rate = 0.5;
    double beta = 0.1;
    std::uint64_t seed = 0; // recorded in the log; initialization is uniform
};

struct TrainStepLog {
    int step = 0; // 0 is the pre-update state
    double total_loss = 0.0;
    double mean_winner_prob = 0.0;
};

struct ToyTrainResult {
    ToyPolicy policy;
    std::vector<TrainStepLog> log;
};

// Full-batch gradient descent on the summed pair losses. The policy starts
// uniform (all logits zero) and the frozen reference is its copy, so
// reference log-ratios start at zero. Every problem with candidates gets a
// policy entry; problems without pairs keep their initialization. Throws
// ValidationError on pairs referencing unknown candidates.
ToyTrainResult train_toy(std::span<const Candidate> candidates,
                         std::span<const PreferencePair> pairs, const ToyTrainConfig& config);

// ─── files ─────────────────────────────────────────────────────────

void save_train_log(std::span<const TrainStepLog> log, const std::filesystem::path& file);
void save_policy(const ToyPolicy& policy, const std::filesystem::path& file);

} // namespace sempref
