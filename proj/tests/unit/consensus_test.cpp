#include <doctest.h>

#include "sempref/consensus.hpp"
#include "sempref/detail/rng.hpp"
#include "sempref/errors.hpp"
#include "support/oracles.hpp"

using namespace sempref;

namespace {

ExecutionTrace trace_of(const std::string& id, std::vector<Outcome> outcomes) {
    ExecutionTrace t;
    t.candidate_id = id;
    t.problem_id = "p";
    t.outcomes = std::move(outcomes);
    return t;
}

ProblemInputs problem_with_inputs(std::size_t m) {
    ProblemInputs p;
    p.id = "p";
    p.description = "d";
    for (std::size_t j = 0; j < m; ++j) p.test_inputs.push_back(std::to_string(j) + "\n");
    return p;
}

Outcome out(const std::string& s) { return Outcome::output_of(s); }

} // namespace

TEST_SUITE("consensus") {

TEST_CASE("hand-worked scores: A=B=5/6, C=2/3") {
    const auto problem = problem_with_inputs(2);
    std::vector<ExecutionTrace> traces = {
        trace_of("A", {out("1"), out("2")}),
        trace_of("B", {out("1"), out("2")}),
        trace_of("C", {out("1"), out("3")}),
    };
    const auto table = consensus_scores(problem, traces);
    CHECK(table.scores.at("A") == doctest::Approx(5.0 / 6.0).epsilon(1e-13));
    CHECK(table.scores.at("B") == doctest::Approx(5.0 / 6.0).epsilon(1e-13));
    CHECK(table.scores.at("C") == doctest::Approx(2.0 / 3.0).epsilon(1e-13));
    CHECK(table.per_input_valid_counts == std::vector<int>{3, 3});
}

TEST_CASE("unanimous candidates all score 1") {
    const auto problem = problem_with_inputs(3);
    std::vector<ExecutionTrace> traces;
    for (int i = 0; i < 5; ++i)
        traces.push_back(trace_of("c" + std::to_string(i), {out("x"), out("y"), out("z")}));
    const auto table = consensus_scores(problem, traces);
    for (const auto& [id, score] : table.scores) CHECK(score == doctest::Approx(1.0));
}

TEST_CASE("fully crashed candidates score exactly zero") {
    const auto problem = problem_with_inputs(2);
    std::vector<ExecutionTrace> traces = {
        trace_of("A", {out("1"), out("2")}),
        trace_of("D", {Outcome::crash(), Outcome::timeout()}),
    };
    const auto table = consensus_scores(problem, traces);
    CHECK(table.scores.at("D") == 0.0);
}

TEST_CASE("empty V_j contributes nothing to anyone") {
    const auto problem = problem_with_inputs(2);
    std::vector<ExecutionTrace> traces = {
        trace_of("A", {out("1"), Outcome::crash()}),
        trace_of("B", {out("1"), Outcome::timeout()}),
    };
    const auto table = consensus_scores(problem, traces);
    CHECK(table.per_input_valid_counts == std::vector<int>{2, 0});
    CHECK(table.scores.at("A") == doctest::Approx(0.5));
    CHECK(table.scores.at("B") == doctest::Approx(0.5));
}

TEST_CASE("brute-force equivalence on random instances") {
    detail::SplitMix64 rng(4242);
    for (int iter = 0; iter < 300; ++iter) {
        const std::size_t k = 1 + rng.below(8);
        const std::size_t m = 1 + rng.below(4);
        const auto problem = problem_with_inputs(m);
        std::vector<ExecutionTrace> traces;
        for (std::size_t c = 0; c < k; ++c) {
            std::vector<Outcome> outcomes;
            for (std::size_t j = 0; j < m; ++j) {
                const auto roll = rng.below(5);
                if (roll == 0) outcomes.push_back(Outcome::crash());
                else if (roll == 1) outcomes.push_back(Outcome::timeout());
                else outcomes.push_back(out(std::to_string(rng.below(3))));
            }
            traces.push_back(trace_of("c" + std::to_string(c), std::move(outcomes)));
        }
        const auto table = consensus_scores(problem, traces);
        const auto reference = testsupport::brute_consensus(traces, m);
        for (const auto& [id, score] : table.scores) {
            CHECK(score == doctest::Approx(reference.at(id)).epsilon(1e-13));
            CHECK(score >= 0.0);
            CHECK(score <= 1.0);
        }
        // Identical traces receive identical scores.
        for (std::size_t a = 0; a < k; ++a)
            for (std::size_t b = a + 1; b < k; ++b)
                if (traces[a].outcomes == traces[b].outcomes)
                    CHECK(table.scores.at(traces[a].candidate_id) ==
                          table.scores.at(traces[b].candidate_id));
    }
}

TEST_CASE("pair construction: winner tie-break, loser priority, crashed fallback") {
    const auto problem = problem_with_inputs(2);
    // A and B share the top behavior; C is lower; D crashed.
    std::vector<ExecutionTrace> traces = {
        trace_of("A", {out("1"), out("2")}),
        trace_of("B", {out("1"), out("2")}),
        trace_of("C", {out("1"), out("3")}),
        trace_of("D", {Outcome::crash(), Outcome::crash()}),
    };
    const auto table = consensus_scores(problem, traces);
    const auto built = construct_pairs(problem, table, traces, 3);
    REQUIRE(built.pairs.size() == 2); // B shares the winner score: never a loser
    CHECK(built.pairs[0].winner_id == "A");
    CHECK(built.pairs[0].loser_id == "C"); // non-crashed before crashed
    CHECK(built.pairs[1].loser_id == "D");
    for (const auto& pair : built.pairs)
        CHECK(pair.weight == doctest::Approx(table.scores.at("A")));
}

TEST_CASE("losers are taken in ascending score order") {
    ProblemInputs problem = problem_with_inputs(1);
    ConsensusTable table;
    table.problem_id = "p";
    table.scores = {{"W", 0.9}, {"L1", 0.5}, {"L2", 0.4}, {"L3", 0.3}, {"L4", 0.2}};
    table.per_input_valid_counts = {5};
    std::vector<ExecutionTrace> traces;
    for (const auto& [id, score] : table.scores)
        traces.push_back(trace_of(id, {out(id)}));
    const auto built = construct_pairs(problem, table, traces, 3);
    REQUIRE(built.pairs.size() == 3);
    CHECK(built.pairs[0].loser_id == "L4");
    CHECK(built.pairs[1].loser_id == "L3");
    CHECK(built.pairs[2].loser_id == "L2");
    for (const auto& pair : built.pairs) CHECK(pair.weight == doctest::Approx(0.9));
}

TEST_CASE("single behavioral cluster yields no pairs") {
    const auto problem = problem_with_inputs(1);
    std::vector<ExecutionTrace> traces = {
        trace_of("A", {out("1")}),
        trace_of("B", {out("1")}),
    };
    const auto table = consensus_scores(problem, traces);
    const auto built = construct_pairs(problem, table, traces, 3);
    CHECK(built.pairs.empty());
}

TEST_CASE("all-crashed problem yields no pairs and a warning note") {
    const auto problem = problem_with_inputs(1);
    std::vector<ExecutionTrace> traces = {
        trace_of("A", {Outcome::crash()}),
        trace_of("B", {Outcome::timeout()}),
    };
    const auto table = consensus_scores(problem, traces);
    const auto built = construct_pairs(problem, table, traces, 3);
    CHECK(built.pairs.empty());
    REQUIRE_FALSE(built.notes.empty());
}

TEST_CASE("pair count never exceeds max_losers and winner dominates every weight") {
    detail::SplitMix64 rng(77);
    for (int iter = 0; iter < 200; ++iter) {
        const std::size_t k = 2 + rng.below(7);
        const std::size_t m = 1 + rng.below(3);
        const auto problem = problem_with_inputs(m);
        std::vector<ExecutionTrace> traces;
        for (std::size_t c = 0; c < k; ++c) {
            std::vector<Outcome> outcomes;
            for (std::size_t j = 0; j < m; ++j) {
                const auto roll = rng.below(4);
                if (roll == 0) outcomes.push_back(Outcome::crash());
                else outcomes.push_back(out(std::to_string(rng.below(2))));
            }
            traces.push_back(trace_of("c" + std::to_string(c), std::move(outcomes)));
        }
        const auto table = consensus_scores(problem, traces);
        const int max_losers = 1 + static_cast<int>(rng.below(4));
        const auto built = construct_pairs(problem, table, traces, max_losers);
        CHECK(built.pairs.size() <= static_cast<std::size_t>(max_losers));
        double best = 0.0;
        for (const auto& [id, score] : table.scores) best = std::max(best, score);
        for (const auto& pair : built.pairs) {
            CHECK(pair.weight == best);
            CHECK(pair.winner_id != pair.loser_id);
            CHECK(table.scores.at(pair.loser_id) < table.scores.at(pair.winner_id));
        }
    }
}

TEST_CASE("dpo export renders prompts with observation tags") {
    ProblemInputs problem;
    problem.id = "p";
    problem.description = "Print the answer.";
    problem.test_inputs = {"1\n"};
    Candidate winner;
    winner.id = "w";
    winner.problem_id = "p";
    winner.source = "print(1)\n";
    winner.observation_id = "obs-2";
    Candidate loser;
    loser.id = "l";
    loser.problem_id = "p";
    loser.source = "print(2)\n";
    const PreferencePair pair{"p", "w", "l", 0.8};

    const auto records = export_dpo_records(std::vector<ProblemInputs>{problem},
                                            std::vector<Candidate>{winner, loser},
                                            std::vector<PreferencePair>{pair});
    REQUIRE(records.size() == 1);
    CHECK(records[0].chosen == winner.source);
    CHECK(records[0].rejected == loser.source);
    CHECK(records[0].weight == 0.8);
    CHECK(records[0].prompt.find("Print the answer.") != std::string::npos);
    CHECK(records[0].prompt.find("obs-2") != std::string::npos);

    // Without an observation tag the prompt omits the section.
    winner.observation_id.reset();
    const auto plain = export_dpo_records(std::vector<ProblemInputs>{problem},
                                          std::vector<Candidate>{winner, loser},
                                          std::vector<PreferencePair>{pair});
    CHECK(plain[0].prompt.find("Observation") == std::string::npos);

    // Dangling references are rejected.
    const PreferencePair broken{"p", "w", "ghost", 0.8};
    CHECK_THROWS_AS(export_dpo_records(std::vector<ProblemInputs>{problem},
                                       std::vector<Candidate>{winner, loser},
                                       std::vector<PreferencePair>{broken}),
                    ValidationError);
}

} // TEST_SUITE
