#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "sempref/consensus.hpp"
#include "sempref/corpus.hpp"
#include "sempref/entropy.hpp"
#include "sempref/errors.hpp"
#include "sempref/executor.hpp"
#include "sempref/jsonl.hpp"
#include "sempref/metrics.hpp"
#include "support/temp_dir.hpp"

using namespace sempref;
using testsupport::TempDir;

namespace {

CorpusSpec small_spec() {
    CorpusSpec spec;
    spec.seed = 7;
    spec.n_problems = 8;
    spec.candidates_per_problem = 15;
    spec.inputs_per_problem = 3;
    return spec;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

std::map<std::string, Regime> regime_of(const GeneratedCorpus& corpus) {
    std::map<std::string, Regime> out;
    for (const auto& t : corpus.truth) out[t.problem_id] = t.regime;
    return out;
}

} // namespace

TEST_SUITE("corpus") {

TEST_CASE("same seed gives a byte-identical corpus, different seeds differ") {
    TempDir tmp;
    const auto a = generate(small_spec());
    const auto b = generate(small_spec());
    jsonl::save_problems(a.problems, tmp / "a_problems");
    jsonl::save_problems(b.problems, tmp / "b_problems");
    jsonl::save_candidates(a.candidates, tmp / "a_cands");
    jsonl::save_candidates(b.candidates, tmp / "b_cands");
    CHECK(slurp(tmp / "a_problems") == slurp(tmp / "b_problems"));
    CHECK(slurp(tmp / "a_cands") == slurp(tmp / "b_cands"));

    auto other_spec = small_spec();
    other_spec.seed = 8;
    const auto c = generate(other_spec);
    jsonl::save_problems(c.problems, tmp / "c_problems");
    CHECK(slurp(tmp / "a_problems") != slurp(tmp / "c_problems"));
}

TEST_CASE("generated datasets validate and regime counts follow the mix") {
    CorpusSpec spec = small_spec();
    spec.n_problems = 20;
    const auto corpus = generate(spec);
    Dataset ds;
    ds.problems = corpus.problems;
    ds.candidates = corpus.candidates;
    validate_dataset(ds); // throws on any structural problem
    CHECK(corpus.problems.size() == 20);
    CHECK(corpus.candidates.size() == 20 * 15);

    std::map<Regime, int> counts;
    for (const auto& t : corpus.truth) counts[t.regime]++;
    CHECK(counts[Regime::Mastered] == 4);
    CHECK(counts[Regime::Learnable] == 8);
    CHECK(counts[Regime::Fragmented] == 6);
    CHECK(counts[Regime::ConsistentFailure] == 2);
}

TEST_CASE("unsatisfiable specs are rejected") {
    CorpusSpec spec = small_spec();
    spec.candidates_per_problem = 4; // fragmented needs more
    CHECK_THROWS_AS(generate(spec), ValidationError);

    spec = small_spec();
    spec.mix = {0.5, 0.5, 0.25, 0.0}; // sums to 1.25
    CHECK_THROWS_AS(generate(spec), ValidationError);

    spec = small_spec();
    spec.mix = {1.0, 0.0, 0.0, 0.0};
    spec.candidates_per_problem = 1; // mastered is fine with one candidate
    CHECK_NOTHROW(generate(spec));
}

TEST_CASE("mastered-only corpus: every candidate matches the oracle formula") {
    CorpusSpec spec = small_spec();
    spec.mix = {1.0, 0.0, 0.0, 0.0};
    spec.n_problems = 4;
    const auto corpus = generate(spec);
    for (const auto& t : corpus.truth) {
        CHECK(t.regime == Regime::Mastered);
        CHECK(t.correct_candidate_ids.size() == 15);
    }
}

// Executes the generated Python against the recorded oracles: the labeled
// regimes must be reproduced behaviorally, not just structurally.
TEST_CASE("regime soundness under real execution") {
    TempDir tmp;
    CorpusSpec spec;
    spec.seed = 1234;
    spec.n_problems = 8; // two per regime
    spec.candidates_per_problem = 15;
    spec.inputs_per_problem = 2;
    spec.mix = {0.25, 0.25, 0.25, 0.25};
    const auto corpus = generate(spec);

    ExecutorConfig cfg;
    cfg.command_template = corpus_command_template();
    cfg.timeout = std::chrono::milliseconds(5000);
    cfg.workers = 8;
    cfg.cache_dir = tmp / "cache";

    std::vector<Problem> problems = corpus.problems;
    const auto inputs = strip_oracles(problems);
    const auto batch = execute_all(inputs, corpus.candidates, cfg);

    std::map<std::string, std::vector<ExecutionTrace>> by_problem;
    for (const auto& t : batch.traces) by_problem[t.problem_id].push_back(t);
    std::map<std::string, const Problem*> problem_of;
    for (const auto& p : problems) problem_of[p.id] = &p;
    const auto regimes = regime_of(corpus);

    double learnable_max_entropy = 0.0;
    double fragmented_min_entropy = 1e300;
    int seen_learnable = 0, seen_fragmented = 0;

    for (const auto& truth : corpus.truth) {
        const auto& traces = by_problem.at(truth.problem_id);
        const Problem& problem = *problem_of.at(truth.problem_id);
        const auto part = cluster_by_trace(traces);
        REQUIRE(part.surviving_count >= 1);
        const double entropy = semantic_entropy(part).raw_entropy;
        const double rate = pass_rate(problem, traces);

        switch (truth.regime) {
            case Regime::Mastered:
                CHECK(entropy == 0.0);
                CHECK(rate == doctest::Approx(1.0));
                break;
            case Regime::ConsistentFailure:
                CHECK(entropy == 0.0);
                CHECK(rate == 0.0);
                break;
            case Regime::Learnable: {
                ++seen_learnable;
                CHECK(entropy > 0.0);
                learnable_max_entropy = std::max(learnable_max_entropy, entropy);
                // The correct behavior forms the largest cluster.
                std::set<std::string> correct(truth.correct_candidate_ids.begin(),
                                              truth.correct_candidate_ids.end());
                REQUIRE_FALSE(part.clusters.empty());
                for (const std::string& member : part.clusters.front())
                    CHECK(correct.count(member) == 1);
                for (std::size_t i = 1; i < part.clusters.size(); ++i)
                    CHECK(part.clusters[i].size() < part.clusters.front().size());
                break;
            }
            case Regime::Fragmented: {
                ++seen_fragmented;
                CHECK(part.clusters.size() >= 5);
                fragmented_min_entropy = std::min(fragmented_min_entropy, entropy);
                // The winner by consensus is never a correct candidate.
                const auto table = consensus_scores(problem, traces);
                const auto built = construct_pairs(problem, table, traces, 3);
                REQUIRE_FALSE(built.pairs.empty());
                std::set<std::string> correct(truth.correct_candidate_ids.begin(),
                                              truth.correct_candidate_ids.end());
                CHECK(correct.count(built.pairs.front().winner_id) == 0);
                break;
            }
        }
    }
    REQUIRE(seen_learnable > 0);
    REQUIRE(seen_fragmented > 0);
    CHECK(fragmented_min_entropy > learnable_max_entropy);
    CHECK(regimes.size() == corpus.problems.size());
}

TEST_CASE("truth sidecar round-trips") {
    TempDir tmp;
    const auto corpus = generate(small_spec());
    const auto file = tmp / "truth.jsonl";
    save_truth(corpus.truth, file);
    const auto loaded = load_truth(file);
    REQUIRE(loaded.size() == corpus.truth.size());
    for (std::size_t i = 0; i < loaded.size(); ++i) {
        CHECK(loaded[i].problem_id == corpus.truth[i].problem_id);
        CHECK(loaded[i].regime == corpus.truth[i].regime);
        CHECK(loaded[i].correct_candidate_ids == corpus.truth[i].correct_candidate_ids);
    }
}

} // TEST_SUITE
