#pragma once

#include "leapbridge/chain.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace leapbridge::inject {

// Inclusive integer range.
struct IntRange {
    int lo = 1;
    int hi = 1;

    bool operator==(const IntRange &) const = default;
};

// Step-removal policy. Defaults mirror the corpus construction recipe:
// chains need at least 6 steps, short chains (<= 10 steps) lose 1-2 steps,
// long chains lose 1-3, and 20% of eligible chains are kept complete so a
// bridge model also learns to say "nothing is missing". The final step is
// always protected; there is deliberately no knob to disable that.
struct RemovalPolicy {
    int min_steps = 6;
    int short_chain_max = 10;
    IntRange k_del_short{1, 2};
    IntRange k_del_long{1, 3};
    double keep_complete_prob = 0.2;
    bool allow_remove_first = true;

    bool operator==(const RemovalPolicy &) const = default;
};

// Throws std::invalid_argument when ranges are empty/non-positive or the
// keep probability leaves [0, 1].
void check_policy(const RemovalPolicy & policy);

// One reasoning gap: the leap sits between step gap_index and step
// gap_index+1 of the incomplete chain, where index 0 is the question.
struct LeapRecord {
    int gap_index = 0;
    std::vector<std::string> missing_steps;

    bool operator==(const LeapRecord &) const = default;
};

// An incomplete chain plus the ground truth needed to undo the damage.
struct InjectedSample {
    std::string id;
    std::string source_id;
    cot::Chain incomplete;
    std::vector<LeapRecord> leaps;  // ascending, unique gap_index
    uint64_t seed = 0;
    bool kept_complete = false;

    bool operator==(const InjectedSample &) const = default;
};

// Degradation ladder: mild/moderate/severe remove 1/2/3 intermediate steps,
// extreme keeps only the final answer step.
enum class Severity {
    mild,
    moderate,
    severe,
    extreme,
};

const char * to_string(Severity severity);
Severity severity_from_string(std::string_view name);  // throws on unknown name

// True iff the chain has at least policy.min_steps solution steps.
bool eligible(const cot::Chain & chain, const RemovalPolicy & policy);

// Removes steps from an eligible chain under the policy's rules.
//
// Sampling order is pinned so seeds stay portable: (1) keep-complete coin,
// (2) k_del uniform from the applicable range, (3) removal indices via
// partial Fisher-Yates over the eligible index set, then sorted. Adjacent
// removed steps merge into one LeapRecord. Identical (chain, policy, seed)
// yields identical output. Throws TooShortError below policy.min_steps.
InjectedSample inject(const cot::Chain & chain, const RemovalPolicy & policy, uint64_t seed);

// Splices every leap's missing steps back into the incomplete chain,
// reproducing the source chain exactly. Throws GapOutOfRangeError when a
// gap_index falls outside [0, n-1].
cot::Chain restore(const InjectedSample & sample);

// Severity-ladder removal. The final step is always retained; the removal
// count is clamped to the available intermediate steps, so short chains
// degrade gracefully instead of erroring.
cot::Chain degrade(const cot::Chain & chain, Severity severity, uint64_t seed);

}  // namespace leapbridge::inject
