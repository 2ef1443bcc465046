#include "sempref/records.hpp"

#include <unordered_map>
#include <unordered_set>

#include "sempref/errors.hpp"

namespace sempref {

void validate_dataset(const Dataset& dataset) {
    std::unordered_map<std::string, std::size_t> problem_m;
    problem_m.reserve(dataset.problems.size());
    for (const Problem& p : dataset.problems) {
        if (p.id.empty()) throw ValidationError("problem with empty id");
        if (!problem_m.emplace(p.id, p.test_inputs.size()).second)
            throw ValidationError("duplicate problem id '" + p.id + "'");
        if (p.test_inputs.empty())
            throw ValidationError("problem '" + p.id + "' has no test inputs");
        if (p.oracle_outputs && p.oracle_outputs->size() != p.test_inputs.size())
            throw ValidationError("oracle length mismatch for problem '" + p.id + "': " +
                                  std::to_string(p.oracle_outputs->size()) + " oracle outputs vs " +
                                  std::to_string(p.test_inputs.size()) + " test inputs");
    }

    std::unordered_set<std::string> candidate_keys;
    candidate_keys.reserve(dataset.candidates.size());
    for (const Candidate& c : dataset.candidates) {
        if (c.id.empty()) throw ValidationError("candidate with empty id");
        if (c.source.empty())
            throw ValidationError("candidate '" + c.id + "' has empty source");
        if (!problem_m.count(c.problem_id))
            throw ValidationError("dangling reference: candidate '" + c.id +
                                  "' names unknown problem '" + c.problem_id + "'");
        if (!candidate_keys.insert(c.problem_id + "\x1f" + c.id).second)
            throw ValidationError("duplicate candidate id '" + c.id + "' in problem '" +
                                  c.problem_id + "'");
        if (c.nll && *c.nll < 0.0)
            throw ValidationError("candidate '" + c.id + "' has negative nll");
        if (c.token_entropy && *c.token_entropy < 0.0)
            throw ValidationError("candidate '" + c.id + "' has negative token_entropy");
    }
}

std::vector<ProblemInputs> strip_oracles(const std::vector<Problem>& problems) {
    std::vector<ProblemInputs> out;
    out.reserve(problems.size());
    for (const Problem& p : problems) out.push_back(static_cast<const ProblemInputs&>(p));
    return out;
}

} // namespace sempref
