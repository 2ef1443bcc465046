#include "sempref/corpus.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>
#include <sstream>

#include "sempref/detail/rng.hpp"
#include "sempref/errors.hpp"
#include "jsonl_util.hpp"

namespace sempref {

namespace {

using detail::SplitMix64;

// ─── task families ─────────────────────────────────────────────────
//
// Variant indices: 0 = correct, 1..6 = mutually distinct buggy behaviors,
// 7 = guaranteed crash. Each family provides the Python source per variant
// and a C++ mirror of the variant's behavior, used to compute oracles and
// to verify that the variants really disagree on the generated inputs.

constexpr int kCorrect = 0;
constexpr int kCrash = 7;
constexpr int kBugCount = 6;

struct ParsedLine {
    std::vector<long long> values;
};

ParsedLine parse_ints(const std::string& input) {
    ParsedLine out;
    std::istringstream in(input);
    long long v;
    while (in >> v) out.values.push_back(v);
    return out;
}

std::string int_line(long long v) { return std::to_string(v) + "\n"; }

// family 0: sum of 1..n
std::string family_sum_source(int variant) {
    const char* body = nullptr;
    switch (variant) {
        case kCorrect:
            body = "print(n * (n + 1) // 2)\n";
            break;
        case 1:
            body =
                "total = 0\n"
                "for i in range(1, n + 2):\n"
                "    total += i\n"
                "print(total)\n";
            break;
        case 2:
            body =
                "total = 0\n"
                "for i in range(1, n):\n"
                "    total += i\n"
                "print(total)\n";
            break;
        case 3:
            body = "print(n * n)\n";
            break;
        case 4:
            body = "print(n * (n + 1))\n";
            break;
        case 5:
            body =
                "total = 1\n"
                "for i in range(1, n + 1):\n"
                "    total += i\n"
                "print(total)\n";
            break;
        case 6:
            body = "print(n * n // 2)\n";
            break;
        case kCrash:
            body = "print(n // 0)\n";
            break;
    }
    return std::string("import sys\n\nn = int(sys.stdin.readline())\n") + body;
}

std::string family_sum_eval(int variant, const std::string& input) {
    const long long n = parse_ints(input).values.at(0);
    switch (variant) {
        case kCorrect: return int_line(n * (n + 1) / 2);
        case 1: return int_line((n + 1) * (n + 2) / 2);
        case 2: return int_line(n * (n - 1) / 2);
        case 3: return int_line(n * n);
        case 4: return int_line(n * (n + 1));
        case 5: return int_line(n * (n + 1) / 2 + 1);
        case 6: return int_line(n * n / 2);
    }
    throw StageError("family_sum_eval: bad variant");
}

std::string family_sum_input(SplitMix64& rng) {
    return std::to_string(3 + rng.below(58)) + "\n"; // n in [3,60]
}

// family 1: count of even values
std::string family_evens_source(int variant) {
    const char* body = nullptr;
    switch (variant) {
        case kCorrect:
            body = "print(sum(1 for v in values if v % 2 == 0))\n";
            break;
        case 1:
            body = "print(sum(1 for v in values if v % 2 == 1))\n";
            break;
        case 2:
            body = "print(len(values))\n";
            break;
        case 3:
            body = "print(sum(v for v in values if v % 2 == 0))\n";
            break;
        case 4:
            body = "print(sum(1 for v in values[1:] if v % 2 == 0))\n";
            break;
        case 5:
            body =
                "count = 1\n"
                "for v in values:\n"
                "    if v % 2 == 0:\n"
                "        count += 1\n"
                "print(count)\n";
            break;
        case 6:
            body = "print(2 * sum(1 for v in values if v % 2 == 0))\n";
            break;
        case kCrash:
            body = "print(values[99])\n";
            break;
    }
    return std::string("import sys\n\nvalues = [int(t) for t in sys.stdin.readline().split()]\n") +
           body;
}

std::string family_evens_eval(int variant, const std::string& input) {
    const auto values = parse_ints(input).values;
    const long long L = static_cast<long long>(values.size());
    long long evens = 0, even_sum = 0, evens_skip_first = 0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i] % 2 == 0) {
            ++evens;
            even_sum += values[i];
            if (i > 0) ++evens_skip_first;
        }
    }
    switch (variant) {
        case kCorrect: return int_line(evens);
        case 1: return int_line(L - evens);
        case 2: return int_line(L);
        case 3: return int_line(even_sum);
        case 4: return int_line(evens_skip_first);
        case 5: return int_line(evens + 1);
        case 6: return int_line(2 * evens);
    }
    throw StageError("family_evens_eval: bad variant");
}

std::string family_evens_input(SplitMix64& rng) {
    // (length, even count) pairs chosen so that all seven behaviors are
    // pairwise distinct on any conforming line: 2 <= e <= L-2,
    // 2e not in {L-1, L, L+1}, 3e != L, first value even, values >= 10.
    static constexpr std::array<std::pair<int, int>, 7> kShapes = {
        {{6, 4}, {7, 2}, {7, 5}, {8, 2}, {8, 3}, {8, 5}, {8, 6}}};
    const auto [length, evens] = kShapes[rng.below(kShapes.size())];

    std::vector<int> even_slots(length, 0);
    even_slots[0] = 1;
    int placed = 1;
    while (placed < evens) {
        const std::size_t at = 1 + rng.below(length - 1);
        if (!even_slots[at]) {
            even_slots[at] = 1;
            ++placed;
        }
    }
    std::string line;
    for (int i = 0; i < length; ++i) {
        const long long v = even_slots[i] ? 10 + 2 * static_cast<long long>(rng.below(45))
                                          : 11 + 2 * static_cast<long long>(rng.below(44));
        if (i) line += ' ';
        line += std::to_string(v);
    }
    return line + "\n";
}

// family 2: max minus min
std::string family_range_source(int variant) {
    const char* body = nullptr;
    switch (variant) {
        case kCorrect:
            body = "print(max(values) - min(values))\n";
            break;
        case 1:
            body = "print(max(values))\n";
            break;
        case 2:
            body = "print(min(values))\n";
            break;
        case 3:
            body = "print(max(values) - min(values) + 1)\n";
            break;
        case 4:
            body = "print(values[-1] - values[0])\n";
            break;
        case 5:
            body =
                "rest = values[1:]\n"
                "print(max(rest) - min(rest))\n";
            break;
        case 6:
            body = "print(max(values) + min(values))\n";
            break;
        case kCrash:
            body = "print(values[0] // (max(values) - max(values)))\n";
            break;
    }
    return std::string("import sys\n\nvalues = [int(t) for t in sys.stdin.readline().split()]\n") +
           body;
}

std::string family_range_eval(int variant, const std::string& input) {
    const auto values = parse_ints(input).values;
    const long long vmax = *std::max_element(values.begin(), values.end());
    const long long vmin = *std::min_element(values.begin(), values.end());
    switch (variant) {
        case kCorrect: return int_line(vmax - vmin);
        case 1: return int_line(vmax);
        case 2: return int_line(vmin);
        case 3: return int_line(vmax - vmin + 1);
        case 4: return int_line(values.back() - values.front());
        case 5: {
            const long long m2 = *std::max_element(values.begin() + 1, values.end());
            const long long n2 = *std::min_element(values.begin() + 1, values.end());
            return int_line(m2 - n2);
        }
        case 6: return int_line(vmax + vmin);
    }
    throw StageError("family_range_eval: bad variant");
}

std::string family_range_input(SplitMix64& rng) {
    const int length = 4 + static_cast<int>(rng.below(4)); // [4,7]
    std::set<long long> chosen;
    while (static_cast<int>(chosen.size()) < length) chosen.insert(10 + rng.below(90));
    std::vector<long long> values(chosen.begin(), chosen.end());
    // Shuffle, then pin the minimum to the front and keep the maximum away
    // from the back so the "assumed sorted" bug stays visibly wrong.
    for (std::size_t i = values.size(); i > 1; --i)
        std::swap(values[i - 1], values[rng.below(i)]);
    auto min_it = std::min_element(values.begin(), values.end());
    std::swap(values.front(), *min_it);
    if (values.back() == *std::max_element(values.begin(), values.end()))
        std::swap(values.back(), values[1 + rng.below(values.size() - 2)]);
    std::string line;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) line += ' ';
        line += std::to_string(values[i]);
    }
    return line + "\n";
}

// family 3: vowel count
std::string family_vowels_source(int variant) {
    const char* body = nullptr;
    switch (variant) {
        case kCorrect:
            body = "print(sum(1 for ch in word if ch in \"aeiou\"))\n";
            break;
        case 1:
            body = "print(sum(1 for ch in word if ch not in \"aeiou\"))\n";
            break;
        case 2:
            body = "print(len(word))\n";
            break;
        case 3:
            body =
                "count = 1\n"
                "for ch in word:\n"
                "    if ch in \"aeiou\":\n"
                "        count += 1\n"
                "print(count)\n";
            break;
        case 4:
            body = "print(sum(1 for ch in word[1:] if ch in \"aeiou\"))\n";
            break;
        case 5:
            body = "print(sum(1 for ch in word if ch in \"aeio\"))\n";
            break;
        case 6:
            body = "print(2 * sum(1 for ch in word if ch in \"aeiou\"))\n";
            break;
        case kCrash:
            body = "print(word[50])\n";
            break;
    }
    return std::string("import sys\n\nword = sys.stdin.readline().strip()\n") + body;
}

std::string family_vowels_eval(int variant, const std::string& input) {
    std::string word = input;
    while (!word.empty() && (word.back() == '\n' || word.back() == '\r' || word.back() == ' '))
        word.pop_back();
    auto is_vowel = [](char c) {
        return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u';
    };
    long long vowels = 0, vowels_no_u = 0, vowels_skip_first = 0;
    for (std::size_t i = 0; i < word.size(); ++i) {
        if (is_vowel(word[i])) {
            ++vowels;
            if (word[i] != 'u') ++vowels_no_u;
            if (i > 0) ++vowels_skip_first;
        }
    }
    const long long len = static_cast<long long>(word.size());
    switch (variant) {
        case kCorrect: return int_line(vowels);
        case 1: return int_line(len - vowels);
        case 2: return int_line(len);
        case 3: return int_line(vowels + 1);
        case 4: return int_line(vowels_skip_first);
        case 5: return int_line(vowels_no_u);
        case 6: return int_line(2 * vowels);
    }
    throw StageError("family_vowels_eval: bad variant");
}

std::string family_vowels_input(SplitMix64& rng) {
    static constexpr char kOtherVowels[] = {'a', 'e', 'i', 'o'};
    static constexpr char kConsonants[] = {'b', 'c', 'd', 'f', 'g', 'h', 'k',
                                           'l', 'm', 'n', 'p', 'r', 's', 't'};
    // (length, vowel count) combinations where vowel count, consonant count,
    // word length and their bug offsets stay pairwise distinct.
    static constexpr std::array<std::pair<int, int>, 3> kShapes = {{{8, 3}, {10, 3}, {10, 4}}};
    const auto [length, vowels] = kShapes[rng.below(kShapes.size())];
    // Two 'u's (one leading) keep the missing-'u' bug observable; remaining
    // vowels come from aeio.
    std::string word(static_cast<std::size_t>(length), '?');
    word[0] = 'u';
    std::vector<std::size_t> slots;
    for (std::size_t i = 1; i < word.size(); ++i) slots.push_back(i);
    for (std::size_t i = slots.size(); i > 1; --i) std::swap(slots[i - 1], slots[rng.below(i)]);
    word[slots[0]] = 'u';
    for (int k = 1; k < vowels - 1; ++k)
        word[slots[k]] = kOtherVowels[rng.below(sizeof kOtherVowels)];
    for (std::size_t k = vowels - 1; k < slots.size(); ++k)
        word[slots[k]] = kConsonants[rng.below(sizeof kConsonants)];
    return word + "\n";
}

struct Family {
    const char* name;
    const char* description;
    std::string (*source)(int variant);
    std::string (*eval)(int variant, const std::string& input);
    std::string (*gen_input)(SplitMix64& rng);
};

constexpr int kFamilyCount = 4;

const Family& family_at(int index) {
    static const std::array<Family, kFamilyCount> kFamilies = {{
        {"sum-to-n",
         "Read an integer n from standard input and print the sum of the integers "
         "from 1 to n inclusive.",
         family_sum_source, family_sum_eval, family_sum_input},
        {"count-evens",
         "Read one line of space-separated integers and print how many of them are even.",
         family_evens_source, family_evens_eval, family_evens_input},
        {"value-range",
         "Read one line of space-separated integers and print the difference between "
         "the largest and the smallest value.",
         family_range_source, family_range_eval, family_range_input},
        {"vowel-count",
         "Read a lowercase word and print the number of vowels (a, e, i, o, u) it contains.",
         family_vowels_source, family_vowels_eval, family_vowels_input},
    }};
    return kFamilies[static_cast<std::size_t>(index)];
}

// ─── cluster profiles ──────────────────────────────────────────────
//
// A profile is a list of (variant slot, count). Slot 0 is the correct
// behavior, slots 1..6 pick distinct bug variants, slot 7 crashes. The
// canonical profiles below are for 15 candidates; other sizes are scaled
// with the first cluster absorbing the remainder.

struct ProfileCluster {
    int slot;
    int count;
};

using Profile = std::vector<ProfileCluster>;

// Learnable: correct strictly largest, raw entropy in (0, 0.9503].
Profile learnable_profile(int which, int k) {
    static const std::vector<std::vector<int>> kShapes = {
        {9, 3, 2, -1}, // trailing -1 marks one crashed candidate
        {10, 3, 2},
        {9, 3, 3},
        {11, 2, 2},
    };
    const auto& shape = kShapes[which % kShapes.size()];
    Profile profile;
    int total = 0;
    int slot = 0;
    for (int raw : shape) {
        if (raw < 0) {
            profile.push_back({kCrash, 1});
            total += 1;
        } else {
            const int scaled = std::max(1, raw * k / 15);
            profile.push_back({slot == 0 ? kCorrect : slot, scaled});
            total += scaled;
            ++slot;
        }
    }
    profile.front().count += k - total; // correct cluster absorbs remainder
    return profile;
}

// Fragmented: >= 5 clusters, all or mostly wrong, raw entropy above every
// learnable profile. Shapes 3 and 4 hide a small correct cluster that can
// never win consensus, so unfiltered training is pulled the wrong way.
Profile fragmented_profile(int which, int k) {
    struct Shape {
        std::vector<int> sizes;
        int correct_at; // index into sizes, -1 = no correct cluster
    };
    static const std::vector<Shape> kShapes = {
        {{3, 3, 3, 2, 2, 2}, -1},
        {{3, 3, 3, 3, 3}, -1},
        {{4, 4, 3, 2, 2}, -1},
        {{6, 3, 2, 2, 2}, 2},
        {{8, 2, 2, 2, 1}, 4},
        {{10, 2, 1, 1, 1}, -1},
    };
    const Shape& shape = kShapes[which % kShapes.size()];
    Profile profile;
    int total = 0;
    int bug_slot = 1;
    for (std::size_t i = 0; i < shape.sizes.size(); ++i) {
        const int scaled = std::max(1, shape.sizes[i] * k / 15);
        const int slot = (static_cast<int>(i) == shape.correct_at) ? kCorrect : bug_slot++;
        profile.push_back({slot, scaled});
        total += scaled;
    }
    profile.front().count += k - total;
    return profile;
}

double profile_entropy(const Profile& profile) {
    int surviving = 0;
    for (const ProfileCluster& c : profile)
        if (c.slot != kCrash) surviving += c.count;
    double h = 0.0;
    int clusters = 0;
    for (const ProfileCluster& c : profile) {
        if (c.slot == kCrash) continue;
        ++clusters;
        const double p = static_cast<double>(c.count) / surviving;
        h -= p * std::log(p);
    }
    return clusters <= 1 ? 0.0 : h;
}

std::string zero_pad(int value, int width) {
    std::string s = std::to_string(value);
    while (static_cast<int>(s.size()) < width) s.insert(s.begin(), '0');
    return s;
}

} // namespace

std::string to_string(Regime regime) {
    switch (regime) {
        case Regime::Mastered: return "mastered";
        case Regime::Learnable: return "learnable";
        case Regime::Fragmented: return "fragmented";
        case Regime::ConsistentFailure: return "consistent-failure";
    }
    return "unknown";
}

void CorpusSpec::validate() const {
    if (n_problems < 1) throw ValidationError("corpus: n_problems must be >= 1");
    if (candidates_per_problem < 1)
        throw ValidationError("corpus: candidates_per_problem must be >= 1");
    if (inputs_per_problem < 1) throw ValidationError("corpus: inputs_per_problem must be >= 1");
    const double sum = mix.mastered + mix.learnable + mix.fragmented + mix.consistent_failure;
    if (std::fabs(sum - 1.0) > 1e-9)
        throw ValidationError("corpus: difficulty mix must sum to 1");
    if (mix.mastered < 0 || mix.learnable < 0 || mix.fragmented < 0 ||
        mix.consistent_failure < 0)
        throw ValidationError("corpus: difficulty mix proportions must be non-negative");
    if (mix.learnable > 0 && candidates_per_problem < 5)
        throw ValidationError("corpus: unsatisfiable mix: learnable problems need >= 5 candidates");
    if (mix.fragmented > 0 && candidates_per_problem < 8)
        throw ValidationError("corpus: unsatisfiable mix: fragmented problems need >= 8 candidates");
}

GeneratedCorpus generate(const CorpusSpec& spec) {
    spec.validate();
    SplitMix64 master(spec.seed ^ 0x5eedc0de5eedc0deULL);

    // Regime counts by largest remainder, then a seeded shuffle.
    const std::array<double, 4> fractions = {spec.mix.mastered, spec.mix.learnable,
                                             spec.mix.fragmented, spec.mix.consistent_failure};
    std::array<int, 4> counts{};
    std::array<double, 4> remainders{};
    int assigned = 0;
    for (int r = 0; r < 4; ++r) {
        const double exact = fractions[r] * spec.n_problems;
        counts[r] = static_cast<int>(exact);
        remainders[r] = exact - counts[r];
        assigned += counts[r];
    }
    while (assigned < spec.n_problems) {
        const int best = static_cast<int>(std::max_element(remainders.begin(), remainders.end()) -
                                          remainders.begin());
        ++counts[best];
        remainders[best] = -1.0;
        ++assigned;
    }
    std::vector<Regime> regimes;
    regimes.reserve(spec.n_problems);
    for (int r = 0; r < 4; ++r)
        for (int i = 0; i < counts[r]; ++i) regimes.push_back(static_cast<Regime>(r));
    for (std::size_t i = regimes.size(); i > 1; --i)
        std::swap(regimes[i - 1], regimes[master.below(i)]);

    // Profile entropy bands must not overlap or the regime labels lie.
    double learnable_max = 0.0, fragmented_min = 1e300;
    for (int w = 0; w < 4; ++w)
        learnable_max = std::max(learnable_max,
                                 profile_entropy(learnable_profile(w, spec.candidates_per_problem)));
    for (int w = 0; w < 6; ++w)
        fragmented_min = std::min(
            fragmented_min, profile_entropy(fragmented_profile(w, spec.candidates_per_problem)));
    if (counts[1] > 0 && counts[2] > 0 && fragmented_min <= learnable_max)
        throw ValidationError(
            "corpus: unsatisfiable mix: fragmented/learnable entropy bands overlap at this "
            "candidate count");

    GeneratedCorpus corpus;
    const int id_width = std::max(4, static_cast<int>(std::to_string(spec.n_problems).size()));
    const int cand_width =
        std::max(2, static_cast<int>(std::to_string(spec.candidates_per_problem - 1).size()));
    int learnable_seen = 0, fragmented_seen = 0;

    for (int index = 0; index < spec.n_problems; ++index) {
        SplitMix64 rng(master.next_u64());
        const Regime regime = regimes[index];
        const Family& family = family_at(index % kFamilyCount);

        Problem problem;
        problem.id = "p" + zero_pad(index, id_width);
        problem.description = family.description;

        // Inputs, re-drawn until every non-crash variant behaves uniquely.
        // The family input constraints make collisions rare to impossible;
        // the check turns "rare" into "never".
        for (int attempt = 0;; ++attempt) {
            if (attempt >= 1000)
                throw StageError("corpus: could not generate distinct-behavior inputs for '" +
                                 problem.id + "'");
            problem.test_inputs.clear();
            for (int j = 0; j < spec.inputs_per_problem; ++j)
                problem.test_inputs.push_back(family.gen_input(rng));
            bool all_distinct = true;
            for (const std::string& input : problem.test_inputs) {
                for (int a = 0; a < kBugCount + 1 && all_distinct; ++a)
                    for (int b = a + 1; b < kBugCount + 1 && all_distinct; ++b)
                        if (family.eval(a, input) == family.eval(b, input)) all_distinct = false;
                if (!all_distinct) break;
            }
            if (all_distinct) break;
        }

        std::vector<std::string> oracle;
        for (const std::string& input : problem.test_inputs)
            oracle.push_back(family.eval(kCorrect, input));
        problem.oracle_outputs = std::move(oracle);

        // Pick the cluster profile and map its bug slots onto a seeded
        // permutation of the six bug variants.
        Profile profile;
        switch (regime) {
            case Regime::Mastered:
                profile = {{kCorrect, spec.candidates_per_problem}};
                break;
            case Regime::Learnable:
                profile = learnable_profile(learnable_seen++, spec.candidates_per_problem);
                break;
            case Regime::Fragmented:
                profile = fragmented_profile(fragmented_seen++, spec.candidates_per_problem);
                break;
            case Regime::ConsistentFailure:
                profile = {{1, spec.candidates_per_problem}};
                break;
        }
        std::array<int, kBugCount> bug_variants = {1, 2, 3, 4, 5, 6};
        for (std::size_t i = bug_variants.size(); i > 1; --i)
            std::swap(bug_variants[i - 1], bug_variants[rng.below(i)]);

        std::vector<int> variant_of_candidate;
        variant_of_candidate.reserve(spec.candidates_per_problem);
        int next_bug = 0;
        for (const ProfileCluster& cluster : profile) {
            int variant;
            if (cluster.slot == kCorrect) variant = kCorrect;
            else if (cluster.slot == kCrash) variant = kCrash;
            else variant = bug_variants[next_bug++ % kBugCount];
            for (int c = 0; c < cluster.count; ++c) variant_of_candidate.push_back(variant);
        }
        for (std::size_t i = variant_of_candidate.size(); i > 1; --i)
            std::swap(variant_of_candidate[i - 1], variant_of_candidate[rng.below(i)]);

        TruthEntry truth;
        truth.problem_id = problem.id;
        truth.regime = regime;

        for (int c = 0; c < spec.candidates_per_problem; ++c) {
            const int variant = variant_of_candidate[c];
            Candidate cand;
            cand.id = "c" + zero_pad(c, cand_width);
            cand.problem_id = problem.id;
            cand.source = "# attempt " + std::to_string(c + 1) + " for " + family.name + "\n" +
                          family.source(variant);
            cand.observation_id = "obs-" + std::to_string(c % 3 + 1);
            cand.nll = 0.3 + 2.7 * rng.unit();
            cand.token_entropy = 0.2 + 2.3 * rng.unit();
            if (variant == kCorrect) truth.correct_candidate_ids.push_back(cand.id);
            corpus.candidates.push_back(std::move(cand));
        }
        std::sort(truth.correct_candidate_ids.begin(), truth.correct_candidate_ids.end());
        corpus.truth.push_back(std::move(truth));
        corpus.problems.push_back(std::move(problem));
    }
    return corpus;
}

std::string corpus_command_template() { return "python3 -S {src}"; }

// ─── files ──────────────────────────────────────────────────────────

using jsonl_util::ojson;

void save_truth(std::span<const TruthEntry> truth, const std::filesystem::path& file) {
    std::vector<const TruthEntry*> sorted;
    sorted.reserve(truth.size());
    for (const auto& t : truth) sorted.push_back(&t);
    std::sort(sorted.begin(), sorted.end(),
              [](const TruthEntry* a, const TruthEntry* b) { return a->problem_id < b->problem_id; });
    auto out = jsonl_util::open_for_write(file);
    for (const TruthEntry* t : sorted) {
        ojson rec;
        rec["problem_id"] = t->problem_id;
        rec["regime"] = to_string(t->regime);
        rec["correct_candidate_ids"] = t->correct_candidate_ids;
        out << rec.dump() << '\n';
    }
}

std::vector<TruthEntry> load_truth(const std::filesystem::path& file) {
    std::vector<TruthEntry> entries;
    jsonl_util::for_each_record(file, [&](const ojson& rec, std::size_t line) {
        TruthEntry t;
        t.problem_id = jsonl_util::require_string(rec, "problem_id", file, line);
        const std::string regime = jsonl_util::require_string(rec, "regime", file, line);
        if (regime == "mastered") t.regime = Regime::Mastered;
        else if (regime == "learnable") t.regime = Regime::Learnable;
        else if (regime == "fragmented") t.regime = Regime::Fragmented;
        else if (regime == "consistent-failure") t.regime = Regime::ConsistentFailure;
        else jsonl_util::fail_at(file, line, "unknown regime '" + regime + "'");
        auto ids = rec.find("correct_candidate_ids");
        if (ids == rec.end() || !ids->is_array())
            jsonl_util::fail_at(file, line, "missing correct_candidate_ids");
        for (const auto& id : *ids) t.correct_candidate_ids.push_back(id.get<std::string>());
        entries.push_back(std::move(t));
    });
    return entries;
}

} // namespace sempref
