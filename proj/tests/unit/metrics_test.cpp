#include <doctest.h>

#include <cmath>

#include "sempref/detail/rng.hpp"
#include "sempref/detail/stats.hpp"
#include "sempref/errors.hpp"
#include "sempref/metrics.hpp"

using namespace sempref;

namespace {

Problem oracle_problem(std::vector<std::string> inputs, std::vector<std::string> oracles,
                       const std::string& id = "p") {
    Problem p;
    p.id = id;
    p.description = "d";
    p.test_inputs = std::move(inputs);
    p.oracle_outputs = std::move(oracles);
    return p;
}

ExecutionTrace trace_of(const std::string& id, std::vector<Outcome> outcomes,
                        const std::string& problem = "p") {
    ExecutionTrace t;
    t.candidate_id = id;
    t.problem_id = problem;
    t.outcomes = std::move(outcomes);
    return t;
}

Outcome out(const std::string& s) { return Outcome::output_of(s); }

} // namespace

TEST_SUITE("metrics") {

TEST_CASE("pass rate counts fully matching candidates only") {
    const auto problem = oracle_problem({"a\n", "b\n"}, {"1\n", "2\n"});
    std::vector<ExecutionTrace> traces = {
        trace_of("c0", {out("1"), out("2")}),          // passes
        trace_of("c1", {out("1"), out("999")}),        // wrong on input 1
        trace_of("c2", {out("1"), Outcome::crash()}),  // crash never matches
    };
    CHECK(pass_rate(problem, traces) == doctest::Approx(1.0 / 3.0));

    // Oracle comparison normalizes both sides.
    std::vector<ExecutionTrace> padded = {trace_of("c0", {out("1"), out("2")})};
    const auto sloppy = oracle_problem({"a\n", "b\n"}, {"1  \n\n", "2\t\n"});
    CHECK(pass_rate(sloppy, padded) == doctest::Approx(1.0));

    Problem no_oracle = problem;
    no_oracle.oracle_outputs.reset();
    CHECK_THROWS_AS(pass_rate(no_oracle, traces), ValidationError);
}

TEST_CASE("auc examples") {
    SUBCASE("perfect separation") {
        std::vector<LabeledValue> values = {{0.1, true}, {0.2, true}, {0.8, false}, {0.9, false}};
        CHECK(auc(values, true) == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("constant metric gives exactly 0.5") {
        std::vector<LabeledValue> values = {{0.3, true}, {0.3, false}, {0.3, true}, {0.3, false}};
        CHECK(auc(values, true) == 0.5);
    }
    SUBCASE("hand-enumerated mixed case") {
        std::vector<LabeledValue> values = {{0.3, true}, {0.3, false}, {0.7, false}};
        CHECK(auc(values, true) == doctest::Approx(0.75).epsilon(1e-12));
    }
    SUBCASE("orientation flip maps AUC to 1-AUC") {
        detail::SplitMix64 rng(31);
        for (int iter = 0; iter < 100; ++iter) {
            std::vector<LabeledValue> values;
            for (int i = 0; i < 12; ++i)
                values.push_back({static_cast<double>(rng.below(6)), rng.below(2) == 0});
            bool both = false, has_s = false, has_u = false;
            for (const auto& v : values) (v.solvable ? has_s : has_u) = true;
            both = has_s && has_u;
            if (!both) continue;
            CHECK(auc(values, true) == doctest::Approx(1.0 - auc(values, false)).epsilon(1e-12));
        }
    }
    SUBCASE("single class throws") {
        std::vector<LabeledValue> values = {{0.1, true}, {0.2, true}};
        CHECK_THROWS_AS(auc(values, true), ValidationError);
    }
}

TEST_CASE("correlation examples") {
    SUBCASE("perfect monotone linear") {
        std::vector<double> x = {1, 2, 3, 4, 5};
        std::vector<double> y = {3, 5, 7, 9, 11}; // y = 2x+1
        const auto c = correlations(x, y);
        CHECK(*c.pearson == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(*c.spearman == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(*c.kendall == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("perfect negative") {
        std::vector<double> x = {1, 2, 3, 4};
        std::vector<double> y = {-1, -2, -3, -4};
        const auto c = correlations(x, y);
        CHECK(*c.pearson == doctest::Approx(-1.0).epsilon(1e-12));
        CHECK(*c.spearman == doctest::Approx(-1.0).epsilon(1e-12));
        CHECK(*c.kendall == doctest::Approx(-1.0).epsilon(1e-12));
    }
    SUBCASE("hand-enumerated kendall and spearman") {
        std::vector<double> x = {1, 2, 3, 4};
        std::vector<double> y = {1, 3, 2, 4};
        const auto c = correlations(x, y);
        CHECK(*c.kendall == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
        CHECK(*c.spearman == doctest::Approx(0.8).epsilon(1e-12));
    }
    SUBCASE("symmetry") {
        std::vector<double> x = {1, 5, 2, 8, 3};
        std::vector<double> y = {2, 1, 4, 4, 9};
        const auto a = correlations(x, y);
        const auto b = correlations(y, x);
        CHECK(*a.pearson == doctest::Approx(*b.pearson).epsilon(1e-12));
        CHECK(*a.spearman == doctest::Approx(*b.spearman).epsilon(1e-12));
        CHECK(*a.kendall == doctest::Approx(*b.kendall).epsilon(1e-12));
    }
    SUBCASE("rank invariance under strictly increasing transforms") {
        std::vector<double> x = {0.3, 1.7, 0.9, 2.5, 4.0, 0.05};
        std::vector<double> y = {2, 1, 4, 4, 9, 3};
        std::vector<double> tx;
        for (double v : x) tx.push_back(std::exp(3.0 * v) + 7.0);
        const auto plain = correlations(x, y);
        const auto transformed = correlations(tx, y);
        CHECK(*plain.spearman == doctest::Approx(*transformed.spearman).epsilon(1e-12));
        CHECK(*plain.kendall == doctest::Approx(*transformed.kendall).epsilon(1e-12));
    }
    SUBCASE("zero variance is undefined with a reason") {
        std::vector<double> x = {2, 2, 2, 2};
        std::vector<double> y = {1, 2, 3, 4};
        const auto c = correlations(x, y);
        CHECK_FALSE(c.pearson.has_value());
        CHECK(c.undefined_reason.has_value());
    }
    SUBCASE("n < 3 throws") {
        std::vector<double> x = {1, 2};
        std::vector<double> y = {1, 2};
        CHECK_THROWS_AS(correlations(x, y), ValidationError);
    }
}

TEST_CASE("p-value approximations are sane") {
    // Student-t and normal tail helpers against standard table values.
    CHECK(detail::student_t_two_sided_p(2.086, 20) == doctest::Approx(0.05).epsilon(1e-3));
    CHECK(detail::normal_two_sided_p(1.959964) == doctest::Approx(0.05).epsilon(1e-4));

    std::vector<double> x = {1, 2, 3, 4, 5, 6, 7, 8};
    std::vector<double> y = {2.1, 2.9, 4.2, 4.8, 6.1, 7.2, 7.8, 9.1};
    const auto c = correlations(x, y);
    REQUIRE(c.pearson_p.has_value());
    CHECK(*c.pearson_p > 0.0);
    CHECK(*c.pearson_p < 1e-4); // near-perfect correlation, tiny p
    CHECK(*c.kendall_p > 0.0);
    CHECK(*c.kendall_p < 0.01);
}

TEST_CASE("golden pairs require a fully correct winner and a failing loser") {
    const auto problem = oracle_problem({"a\n"}, {"1\n"});
    std::vector<Problem> problems = {problem};
    std::vector<ExecutionTrace> traces = {
        trace_of("good", {out("1")}),
        trace_of("wrong", {out("2")}),
        trace_of("dead", {Outcome::crash()}),
        trace_of("good2", {out("1")}),
    };

    SUBCASE("winner correct, loser crashed: golden") {
        std::vector<PreferencePair> pairs = {{"p", "good", "dead", 0.9}};
        const auto stats = golden_stats(pairs, problems, traces);
        CHECK(stats.golden_count == 1);
        CHECK(stats.rate == 1.0);
    }
    SUBCASE("both correct: not golden") {
        std::vector<PreferencePair> pairs = {{"p", "good", "good2", 0.9}};
        CHECK(golden_stats(pairs, problems, traces).golden_count == 0);
    }
    SUBCASE("winner wrong: not golden") {
        std::vector<PreferencePair> pairs = {{"p", "wrong", "dead", 0.9}};
        CHECK(golden_stats(pairs, problems, traces).golden_count == 0);
    }
    SUBCASE("missing oracle is an error") {
        Problem no_oracle = problem;
        no_oracle.oracle_outputs.reset();
        std::vector<Problem> bad = {no_oracle};
        std::vector<PreferencePair> pairs = {{"p", "good", "dead", 0.9}};
        CHECK_THROWS_AS(golden_stats(pairs, bad, traces), ValidationError);
    }
}

TEST_CASE("compute_metrics aggregates per problem and quarantines oracles upstream") {
    std::vector<Problem> problems = {
        oracle_problem({"a\n"}, {"1\n"}, "p1"),
        oracle_problem({"a\n"}, {"2\n"}, "p2"),
        oracle_problem({"a\n"}, {"3\n"}, "p3"),
    };
    std::vector<Candidate> candidates;
    for (const char* pid : {"p1", "p2", "p3"}) {
        for (int i = 0; i < 2; ++i) {
            Candidate c;
            c.id = "c" + std::to_string(i);
            c.problem_id = pid;
            c.source = "s";
            c.nll = 1.0 + i;
            candidates.push_back(c);
        }
    }
    std::vector<ExecutionTrace> traces = {
        trace_of("c0", {out("1")}, "p1"),  trace_of("c1", {out("1")}, "p1"),
        trace_of("c0", {out("9")}, "p2"),  trace_of("c1", {Outcome::crash()}, "p2"),
        trace_of("c0", {out("3")}, "p3"),  trace_of("c1", {out("8")}, "p3"),
    };
    const auto report = compute_metrics(problems, candidates, traces, {});
    REQUIRE(report.per_problem.size() == 3);
    CHECK(*report.per_problem[0].pass_rate == doctest::Approx(1.0));
    CHECK(report.per_problem[0].crash_rate == 0.0);
    CHECK(*report.per_problem[0].code_semantic_entropy == 0.0);
    CHECK(*report.per_problem[1].pass_rate == 0.0);
    CHECK(report.per_problem[1].crash_rate == doctest::Approx(0.5));
    CHECK(*report.per_problem[2].pass_rate == doctest::Approx(0.5));
    CHECK(*report.per_problem[2].code_semantic_entropy ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(*report.per_problem[0].nll_mean == doctest::Approx(1.5));
    CHECK(report.summary.auc_per_metric.count("code_semantic_entropy") == 1);
    CHECK(report.summary.correlations_per_metric.count("nll_mean") == 1);
}

TEST_CASE("external entropies flow through to the report") {
    std::vector<Problem> problems = {oracle_problem({"a\n"}, {"1\n"}, "p1")};
    std::vector<ExecutionTrace> traces = {trace_of("c0", {out("1")}, "p1")};
    std::map<std::string, double> external = {{"p1", 0.42}};
    const auto report = compute_metrics(problems, {}, traces, {}, external);
    REQUIRE(report.per_problem.size() == 1);
    CHECK(*report.per_problem[0].external_entropy == 0.42);
}

} // TEST_SUITE
