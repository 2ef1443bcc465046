#include "sempref/jsonl.hpp"

#include <algorithm>

#include "sempref/detail/base64.hpp"
#include "sempref/errors.hpp"
#include "jsonl_util.hpp"

namespace sempref::jsonl_util {

void for_each_record(const std::filesystem::path& file,
                     const std::function<void(const ojson&, std::size_t)>& fn) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw ConfigError("cannot open '" + file.string() + "'");
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        ojson rec = ojson::parse(line, nullptr, false);
        if (rec.is_discarded() || !rec.is_object())
            fail_at(file, line_no, "malformed record");
        fn(rec, line_no);
    }
}

std::ofstream open_for_write(const std::filesystem::path& file) {
    if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw StageError("cannot write '" + file.string() + "'");
    return out;
}

void fail_at(const std::filesystem::path& file, std::size_t line, const std::string& message) {
    throw ValidationError(file.string() + ":" + std::to_string(line) + ": " + message);
}

std::string require_string(const ojson& rec, const char* key,
                           const std::filesystem::path& file, std::size_t line) {
    auto it = rec.find(key);
    if (it == rec.end() || !it->is_string())
        fail_at(file, line, std::string("missing or non-string field '") + key + "'");
    return it->get<std::string>();
}

double require_number(const ojson& rec, const char* key,
                      const std::filesystem::path& file, std::size_t line) {
    auto it = rec.find(key);
    if (it == rec.end() || !it->is_number())
        fail_at(file, line, std::string("missing or non-numeric field '") + key + "'");
    return it->get<double>();
}

std::string require_base64(const ojson& value, const std::filesystem::path& file,
                           std::size_t line, const char* key) {
    if (!value.is_string()) fail_at(file, line, std::string("field '") + key + "' must be a base64 string");
    auto decoded = detail::base64_decode(value.get<std::string>());
    if (!decoded) fail_at(file, line, std::string("field '") + key + "' is not valid base64");
    return *decoded;
}

ojson outcome_to_json(const Outcome& outcome) {
    ojson j;
    switch (outcome.kind) {
        case Outcome::Kind::Output:
            j["outcome"] = "output";
            j["data"] = detail::base64_encode(outcome.output);
            break;
        case Outcome::Kind::Crash:
            j["outcome"] = "crash";
            break;
        case Outcome::Kind::Timeout:
            j["outcome"] = "timeout";
            break;
    }
    return j;
}

Outcome outcome_from_json(const ojson& value, const std::filesystem::path& file,
                          std::size_t line) {
    if (!value.is_object()) fail_at(file, line, "outcome must be an object");
    auto it = value.find("outcome");
    if (it == value.end() || !it->is_string()) fail_at(file, line, "outcome missing tag");
    const std::string tag = it->get<std::string>();
    if (tag == "output") {
        auto data = value.find("data");
        if (data == value.end()) fail_at(file, line, "output outcome missing 'data'");
        return Outcome::output_of(require_base64(*data, file, line, "data"));
    }
    if (tag == "crash") return Outcome::crash();
    if (tag == "timeout") return Outcome::timeout();
    fail_at(file, line, "unknown outcome tag '" + tag + "'");
}

} // namespace sempref::jsonl_util

namespace sempref::jsonl {

using jsonl_util::ojson;
using jsonl_util::fail_at;
using jsonl_util::for_each_record;
using jsonl_util::open_for_write;
using jsonl_util::require_base64;
using jsonl_util::require_number;
using jsonl_util::require_string;

namespace {

std::vector<std::string> read_payload_array(const ojson& rec, const char* key,
                                            const std::filesystem::path& file,
                                            std::size_t line) {
    auto it = rec.find(key);
    if (it == rec.end() || !it->is_array())
        fail_at(file, line, std::string("missing or non-array field '") + key + "'");
    std::vector<std::string> out;
    out.reserve(it->size());
    for (const auto& elem : *it) out.push_back(require_base64(elem, file, line, key));
    return out;
}

ojson payload_array(const std::vector<std::string>& payloads) {
    ojson arr = ojson::array();
    for (const std::string& p : payloads) arr.push_back(detail::base64_encode(p));
    return arr;
}

} // namespace

std::vector<Problem> load_problems(const std::filesystem::path& file) {
    std::vector<Problem> out;
    for_each_record(file, [&](const ojson& rec, std::size_t line) {
        Problem p;
        p.id = require_string(rec, "id", file, line);
        p.description = require_string(rec, "description", file, line);
        p.test_inputs = read_payload_array(rec, "test_inputs", file, line);
        if (rec.contains("oracle_outputs"))
            p.oracle_outputs = read_payload_array(rec, "oracle_outputs", file, line);
        out.push_back(std::move(p));
    });
    return out;
}

std::vector<Candidate> load_candidates(const std::filesystem::path& file) {
    std::vector<Candidate> out;
    for_each_record(file, [&](const ojson& rec, std::size_t line) {
        Candidate c;
        c.id = require_string(rec, "id", file, line);
        c.problem_id = require_string(rec, "problem_id", file, line);
        c.source = require_string(rec, "source", file, line);
        if (rec.contains("observation_id"))
            c.observation_id = require_string(rec, "observation_id", file, line);
        if (rec.contains("nll")) c.nll = require_number(rec, "nll", file, line);
        if (rec.contains("token_entropy"))
            c.token_entropy = require_number(rec, "token_entropy", file, line);
        out.push_back(std::move(c));
    });
    return out;
}

std::vector<ExecutionTrace> load_traces(const std::filesystem::path& file) {
    std::vector<ExecutionTrace> out;
    for_each_record(file, [&](const ojson& rec, std::size_t line) {
        ExecutionTrace t;
        t.candidate_id = require_string(rec, "candidate_id", file, line);
        t.problem_id = require_string(rec, "problem_id", file, line);
        auto it = rec.find("outcomes");
        if (it == rec.end() || !it->is_array())
            fail_at(file, line, "missing or non-array field 'outcomes'");
        for (const auto& elem : *it)
            t.outcomes.push_back(jsonl_util::outcome_from_json(elem, file, line));
        out.push_back(std::move(t));
    });
    return out;
}

std::vector<PreferencePair> load_pairs(const std::filesystem::path& file) {
    std::vector<PreferencePair> out;
    for_each_record(file, [&](const ojson& rec, std::size_t line) {
        PreferencePair p;
        p.problem_id = require_string(rec, "problem_id", file, line);
        p.winner_id = require_string(rec, "winner_id", file, line);
        p.loser_id = require_string(rec, "loser_id", file, line);
        p.weight = require_number(rec, "weight", file, line);
        if (p.winner_id == p.loser_id)
            fail_at(file, line, "pair with winner_id == loser_id");
        if (p.weight < 0.0 || p.weight > 1.0)
            fail_at(file, line, "pair weight outside [0,1]");
        out.push_back(std::move(p));
    });
    return out;
}

Dataset load_dataset(const std::filesystem::path& problems_file,
                     const std::filesystem::path& candidates_file) {
    Dataset ds;
    ds.problems = load_problems(problems_file);
    ds.candidates = load_candidates(candidates_file);
    validate_dataset(ds);
    return ds;
}

void save_problems(std::span<const Problem> records, const std::filesystem::path& file) {
    std::vector<const Problem*> sorted;
    sorted.reserve(records.size());
    for (const auto& r : records) sorted.push_back(&r);
    std::sort(sorted.begin(), sorted.end(),
              [](const Problem* a, const Problem* b) { return a->id < b->id; });
    auto out = open_for_write(file);
    for (const Problem* p : sorted) {
        ojson rec;
        rec["id"] = p->id;
        rec["description"] = p->description;
        rec["test_inputs"] = payload_array(p->test_inputs);
        if (p->oracle_outputs) rec["oracle_outputs"] = payload_array(*p->oracle_outputs);
        out << rec.dump() << '\n';
    }
}

void save_candidates(std::span<const Candidate> records, const std::filesystem::path& file) {
    std::vector<const Candidate*> sorted;
    sorted.reserve(records.size());
    for (const auto& r : records) sorted.push_back(&r);
    std::sort(sorted.begin(), sorted.end(), [](const Candidate* a, const Candidate* b) {
        return std::tie(a->problem_id, a->id) < std::tie(b->problem_id, b->id);
    });
    auto out = open_for_write(file);
    for (const Candidate* c : sorted) {
        ojson rec;
        rec["id"] = c->id;
        rec["problem_id"] = c->problem_id;
        rec["source"] = c->source;
        if (c->observation_id) rec["observation_id"] = *c->observation_id;
        if (c->nll) rec["nll"] = *c->nll;
        if (c->token_entropy) rec["token_entropy"] = *c->token_entropy;
        out << rec.dump() << '\n';
    }
}

void save_traces(std::span<const ExecutionTrace> records, const std::filesystem::path& file) {
    std::vector<const ExecutionTrace*> sorted;
    sorted.reserve(records.size());
    for (const auto& r : records) sorted.push_back(&r);
    std::sort(sorted.begin(), sorted.end(), [](const ExecutionTrace* a, const ExecutionTrace* b) {
        return std::tie(a->problem_id, a->candidate_id) < std::tie(b->problem_id, b->candidate_id);
    });
    auto out = open_for_write(file);
    for (const ExecutionTrace* t : sorted) {
        ojson rec;
        rec["candidate_id"] = t->candidate_id;
        rec["problem_id"] = t->problem_id;
        ojson outcomes = ojson::array();
        for (const Outcome& o : t->outcomes) outcomes.push_back(jsonl_util::outcome_to_json(o));
        rec["outcomes"] = std::move(outcomes);
        out << rec.dump() << '\n';
    }
}

void save_pairs(std::span<const PreferencePair> records, const std::filesystem::path& file) {
    std::vector<const PreferencePair*> sorted;
    sorted.reserve(records.size());
    for (const auto& r : records) sorted.push_back(&r);
    std::sort(sorted.begin(), sorted.end(),
              [](const PreferencePair* a, const PreferencePair* b) {
                  return std::tie(a->problem_id, a->winner_id, a->loser_id) <
                         std::tie(b->problem_id, b->winner_id, b->loser_id);
              });
    auto out = open_for_write(file);
    for (const PreferencePair* p : sorted) {
        ojson rec;
        rec["problem_id"] = p->problem_id;
        rec["winner_id"] = p->winner_id;
        rec["loser_id"] = p->loser_id;
        rec["weight"] = p->weight;
        out << rec.dump() << '\n';
    }
}

} // namespace sempref::jsonl
