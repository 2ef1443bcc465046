#include "sempref/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "sempref/detail/stats.hpp"
#include "sempref/entropy.hpp"
#include "sempref/errors.hpp"
#include "sempref/executor.hpp"
#include "sempref/consensus.hpp"
#include "jsonl_util.hpp"

namespace sempref {

bool candidate_passes(const Problem& problem, const ExecutionTrace& trace) {
    if (!problem.oracle_outputs)
        throw ValidationError("problem '" + problem.id + "' has no oracle outputs");
    if (trace.outcomes.size() != problem.test_inputs.size())
        throw ValidationError("trace length mismatch for candidate '" + trace.candidate_id + "'");
    for (std::size_t j = 0; j < trace.outcomes.size(); ++j) {
        const Outcome& o = trace.outcomes[j];
        if (!o.is_output()) return false;
        if (o.output != normalize_output((*problem.oracle_outputs)[j])) return false;
    }
    return true;
}

double pass_rate(const Problem& problem, std::span<const ExecutionTrace> traces) {
    if (!problem.oracle_outputs)
        throw ValidationError("pass_rate: problem '" + problem.id + "' has no oracle outputs");
    if (traces.empty()) return 0.0;
    std::size_t passing = 0;
    for (const ExecutionTrace& t : traces)
        if (candidate_passes(problem, t)) ++passing;
    return static_cast<double>(passing) / static_cast<double>(traces.size());
}

double crash_rate(std::span<const ExecutionTrace> traces) {
    if (traces.empty()) return 0.0;
    std::size_t crashed = 0;
    for (const ExecutionTrace& t : traces)
        if (is_crashed(t)) ++crashed;
    return static_cast<double>(crashed) / static_cast<double>(traces.size());
}

double auc(std::span<const LabeledValue> values, bool higher_means_uncertain) {
    std::size_t n_solvable = 0, n_unsolvable = 0;
    for (const LabeledValue& v : values) (v.solvable ? n_solvable : n_unsolvable)++;
    if (n_solvable == 0 || n_unsolvable == 0)
        throw ValidationError("auc: need at least one solvable and one unsolvable problem");

    double score = 0.0;
    for (const LabeledValue& u : values) {
        if (u.solvable) continue;
        for (const LabeledValue& s : values) {
            if (!s.solvable) continue;
            if (u.value == s.value) {
                score += 0.5;
            } else {
                const bool u_more_uncertain =
                    higher_means_uncertain ? (u.value > s.value) : (u.value < s.value);
                if (u_more_uncertain) score += 1.0;
            }
        }
    }
    return score / (static_cast<double>(n_solvable) * static_cast<double>(n_unsolvable));
}

namespace {

// Average ranks (1-based), ties share the mean rank.
std::vector<double> average_ranks(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double mean_rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mean_rank;
        i = j + 1;
    }
    return ranks;
}

std::optional<double> pearson_of(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    const double mean_x = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double mean_y = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mean_x, dy = y[i] - mean_y;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) return std::nullopt;
    double r = sxy / std::sqrt(sxx * syy);
    return std::clamp(r, -1.0, 1.0);
}

double t_approx_p(double r, std::size_t n) {
    if (std::fabs(r) >= 1.0) return 0.0;
    const double df = static_cast<double>(n) - 2.0;
    const double t = r * std::sqrt(df / (1.0 - r * r));
    return detail::student_t_two_sided_p(t, df);
}

} // namespace

CorrelationResult correlations(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size())
        throw ValidationError("correlations: size mismatch");
    if (x.size() < 3)
        throw ValidationError("correlations: need n >= 3");
    const std::size_t n = x.size();

    CorrelationResult result;
    const auto pearson = pearson_of(x, y);
    if (!pearson) {
        result.undefined_reason = "zero variance in x or y";
        return result;
    }
    result.pearson = *pearson;
    result.pearson_p = t_approx_p(*pearson, n);

    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    const auto spearman = pearson_of(rx, ry);
    if (spearman) {
        result.spearman = *spearman;
        result.spearman_p = t_approx_p(*spearman, n);
    }

    // Kendall tau-b with tie correction.
    double concordant = 0.0, discordant = 0.0;
    double ties_x = 0.0, ties_y = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double dx = x[i] - x[j], dy = y[i] - y[j];
            if (dx == 0.0 && dy == 0.0) {
                ties_x += 1.0;
                ties_y += 1.0;
            } else if (dx == 0.0) {
                ties_x += 1.0;
            } else if (dy == 0.0) {
                ties_y += 1.0;
            } else if ((dx > 0.0) == (dy > 0.0)) {
                concordant += 1.0;
            } else {
                discordant += 1.0;
            }
        }
    }
    const double n0 = static_cast<double>(n) * (n - 1) / 2.0;
    const double denom = std::sqrt((n0 - ties_x) * (n0 - ties_y));
    if (denom > 0.0) {
        result.kendall = std::clamp((concordant - discordant) / denom, -1.0, 1.0);
        // Normal approximation with the untied variance; documented as
        // approximate.
        const double var = static_cast<double>(n) * (n - 1) * (2.0 * n + 5.0) / 18.0;
        const double z = (concordant - discordant) / std::sqrt(var);
        result.kendall_p = detail::normal_two_sided_p(z);
    }
    return result;
}

GoldenStats golden_stats(std::span<const PreferencePair> pairs,
                         std::span<const Problem> problems,
                         std::span<const ExecutionTrace> traces) {
    std::unordered_map<std::string_view, const Problem*> problem_of;
    for (const Problem& p : problems) problem_of.emplace(p.id, &p);
    std::unordered_map<std::string, const ExecutionTrace*> trace_of;
    for (const ExecutionTrace& t : traces)
        trace_of.emplace(t.problem_id + "\x1f" + t.candidate_id, &t);

    GoldenStats stats;
    stats.pair_count = pairs.size();
    for (const PreferencePair& pair : pairs) {
        auto prob = problem_of.find(pair.problem_id);
        if (prob == problem_of.end() || !prob->second->oracle_outputs)
            throw ValidationError("golden_stats: problem '" + pair.problem_id +
                                  "' missing or has no oracles");
        auto winner = trace_of.find(pair.problem_id + "\x1f" + pair.winner_id);
        auto loser = trace_of.find(pair.problem_id + "\x1f" + pair.loser_id);
        if (winner == trace_of.end() || loser == trace_of.end())
            throw ValidationError("golden_stats: missing trace for pair in problem '" +
                                  pair.problem_id + "'");
        if (candidate_passes(*prob->second, *winner->second) &&
            !candidate_passes(*prob->second, *loser->second))
            ++stats.golden_count;
    }
    stats.rate = pairs.empty() ? 0.0
                               : static_cast<double>(stats.golden_count) /
                                     static_cast<double>(stats.pair_count);
    return stats;
}

MetricsReport compute_metrics(std::span<const Problem> problems,
                              std::span<const Candidate> candidates,
                              std::span<const ExecutionTrace> traces,
                              std::span<const PreferencePair> pairs,
                              const std::map<std::string, double>& external_entropy) {
    std::unordered_map<std::string_view, std::vector<const ExecutionTrace*>> traces_by_problem;
    for (const ExecutionTrace& t : traces) traces_by_problem[t.problem_id].push_back(&t);
    std::unordered_map<std::string_view, std::vector<const Candidate*>> cands_by_problem;
    for (const Candidate& c : candidates) cands_by_problem[c.problem_id].push_back(&c);

    MetricsReport report;
    report.per_problem.reserve(problems.size());

    std::vector<const Problem*> sorted;
    for (const Problem& p : problems) sorted.push_back(&p);
    std::sort(sorted.begin(), sorted.end(),
              [](const Problem* a, const Problem* b) { return a->id < b->id; });

    for (const Problem* p : sorted) {
        ProblemMetrics m;
        m.problem_id = p->id;

        std::vector<ExecutionTrace> own;
        auto it = traces_by_problem.find(p->id);
        if (it != traces_by_problem.end())
            for (const ExecutionTrace* t : it->second) own.push_back(*t);

        m.crash_rate = crash_rate(own);
        if (p->oracle_outputs) m.pass_rate = pass_rate(*p, own);

        if (!own.empty()) {
            const BehavioralPartition part = cluster_by_trace(own);
            if (part.surviving_count >= 1)
                m.code_semantic_entropy = semantic_entropy(part).raw_entropy;
        }

        auto cands = cands_by_problem.find(p->id);
        if (cands != cands_by_problem.end()) {
            double nll_sum = 0.0, tok_sum = 0.0;
            std::size_t nll_n = 0, tok_n = 0;
            for (const Candidate* c : cands->second) {
                if (c->nll) {
                    nll_sum += *c->nll;
                    ++nll_n;
                }
                if (c->token_entropy) {
                    tok_sum += *c->token_entropy;
                    ++tok_n;
                }
            }
            if (nll_n) m.nll_mean = nll_sum / static_cast<double>(nll_n);
            if (tok_n) m.token_entropy_mean = tok_sum / static_cast<double>(tok_n);
        }
        auto ext = external_entropy.find(p->id);
        if (ext != external_entropy.end()) m.external_entropy = ext->second;

        report.per_problem.push_back(std::move(m));
    }

    // Summary: AUC and correlations per metric over problems with oracles.
    struct MetricColumn {
        const char* name;
        std::function<std::optional<double>(const ProblemMetrics&)> get;
    };
    const std::vector<MetricColumn> columns = {
        {"code_semantic_entropy", [](const ProblemMetrics& m) { return m.code_semantic_entropy; }},
        {"crash_rate", [](const ProblemMetrics& m) { return std::optional<double>(m.crash_rate); }},
        {"nll_mean", [](const ProblemMetrics& m) { return m.nll_mean; }},
        {"token_entropy_mean", [](const ProblemMetrics& m) { return m.token_entropy_mean; }},
        {"external_entropy", [](const ProblemMetrics& m) { return m.external_entropy; }},
    };

    for (const MetricColumn& col : columns) {
        std::vector<LabeledValue> labeled;
        std::vector<double> xs, ys;
        for (const ProblemMetrics& m : report.per_problem) {
            const auto value = col.get(m);
            if (!m.pass_rate || !value) continue;
            labeled.push_back({*value, *m.pass_rate > 0.0});
            xs.push_back(*value);
            ys.push_back(*m.pass_rate);
        }
        if (xs.size() >= 3) {
            bool has_solvable = false, has_unsolvable = false;
            for (const LabeledValue& v : labeled) (v.solvable ? has_solvable : has_unsolvable) = true;
            if (has_solvable && has_unsolvable)
                report.summary.auc_per_metric[col.name] = auc(labeled, /*higher_means_uncertain=*/true);
            report.summary.correlations_per_metric[col.name] = correlations(xs, ys);
        }
    }

    if (!pairs.empty()) report.summary.golden = golden_stats(pairs, problems, traces);
    return report;
}

std::vector<SweepRow> threshold_sweep(std::span<const Problem> problems,
                                      std::span<const ExecutionTrace> traces,
                                      std::span<const double> taus, int max_losers) {
    std::unordered_map<std::string_view, std::vector<ExecutionTrace>> traces_by_problem;
    for (const ExecutionTrace& t : traces) traces_by_problem[t.problem_id].push_back(t);

    // Partitions, entropies and consensus tables are tau-independent;
    // compute them once.
    std::vector<EntropyRecord> records;
    std::unordered_map<std::string_view, const Problem*> problem_of;
    for (const Problem& p : problems) {
        problem_of.emplace(p.id, &p);
        auto it = traces_by_problem.find(p.id);
        if (it == traces_by_problem.end()) continue;
        const BehavioralPartition part = cluster_by_trace(it->second);
        if (part.surviving_count >= 1) {
            records.push_back(semantic_entropy(part));
        } else {
            EntropyRecord r;
            r.problem_id = p.id;
            r.surviving_count = 0;
            records.push_back(std::move(r));
        }
    }

    std::vector<SweepRow> rows;
    rows.reserve(taus.size());
    for (double tau : taus) {
        const CurationResult curated = curate(records, tau);
        std::vector<PreferencePair> pairs;
        for (const std::string& pid : curated.kept) {
            const Problem* p = problem_of.at(pid);
            const auto& own = traces_by_problem.at(pid);
            const ConsensusTable table = consensus_scores(*p, own);
            auto built = construct_pairs(*p, table, own, max_losers);
            pairs.insert(pairs.end(), built.pairs.begin(), built.pairs.end());
        }
        const GoldenStats stats = golden_stats(pairs, problems, traces);
        rows.push_back({tau, curated.kept.size(), stats.pair_count, stats.golden_count,
                        stats.rate});
    }
    return rows;
}

// ─── files ──────────────────────────────────────────────────────────

using jsonl_util::ojson;

namespace {

ojson correlation_to_json(const CorrelationResult& c) {
    ojson j;
    if (c.pearson) j["pearson"] = *c.pearson;
    if (c.pearson_p) j["pearson_p"] = *c.pearson_p;
    if (c.spearman) j["spearman"] = *c.spearman;
    if (c.spearman_p) j["spearman_p"] = *c.spearman_p;
    if (c.kendall) j["kendall"] = *c.kendall;
    if (c.kendall_p) j["kendall_p"] = *c.kendall_p;
    if (c.undefined_reason) j["undefined_reason"] = *c.undefined_reason;
    return j;
}

} // namespace

void save_metrics_report(const MetricsReport& report, const std::filesystem::path& file) {
    auto out = jsonl_util::open_for_write(file);
    for (const ProblemMetrics& m : report.per_problem) {
        ojson rec;
        rec["problem_id"] = m.problem_id;
        if (m.pass_rate) rec["pass_rate"] = *m.pass_rate;
        rec["crash_rate"] = m.crash_rate;
        if (m.code_semantic_entropy) rec["code_semantic_entropy"] = *m.code_semantic_entropy;
        if (m.nll_mean) rec["nll_mean"] = *m.nll_mean;
        if (m.token_entropy_mean) rec["token_entropy_mean"] = *m.token_entropy_mean;
        if (m.external_entropy) rec["external_entropy"] = *m.external_entropy;
        out << rec.dump() << '\n';
    }
    ojson summary;
    ojson aucs;
    for (const auto& [name, value] : report.summary.auc_per_metric) aucs[name] = value;
    summary["auc_per_metric"] = std::move(aucs);
    ojson corrs;
    for (const auto& [name, corr] : report.summary.correlations_per_metric)
        corrs[name] = correlation_to_json(corr);
    summary["correlations_per_metric"] = std::move(corrs);
    if (report.summary.golden) {
        ojson golden;
        golden["golden_count"] = report.summary.golden->golden_count;
        golden["pair_count"] = report.summary.golden->pair_count;
        golden["golden_rate"] = report.summary.golden->rate;
        summary["golden"] = std::move(golden);
    }
    ojson rec;
    rec["summary"] = std::move(summary);
    out << rec.dump() << '\n';
}

void save_sweep_report(std::span<const SweepRow> rows, const std::filesystem::path& file) {
    auto out = jsonl_util::open_for_write(file);
    for (const SweepRow& row : rows) {
        ojson rec;
        rec["tau"] = row.tau;
        rec["kept_count"] = row.kept_count;
        rec["pair_count"] = row.pair_count;
        rec["golden_count"] = row.golden_count;
        rec["golden_rate"] = row.golden_rate;
        out << rec.dump() << '\n';
    }
}

} // namespace sempref
