#pragma once

#include "leapbridge/chain.hpp"
#include "leapbridge/prompts.hpp"

#include <optional>
#include <string_view>
#include <vector>

namespace leapbridge::augment {

// Positional class of an inserted span: right after the question, interior,
// or immediately before the final step.
enum class Category {
    begin,
    middle,
    end,
};

const char * to_string(Category category);
Category category_from_string(std::string_view name);  // throws on unknown name

struct InsertedSpan {
    int gap_index = 0;  // pre-insertion coordinates
    int start = 0;      // first inserted step, post-insertion coordinates
    int len = 0;
    Category category = Category::middle;
    std::optional<double> score;

    bool operator==(const InsertedSpan &) const = default;
};

// A chain with bridge content spliced in. Stripping every inserted span
// reproduces the pre-insertion chain byte-exactly.
struct BridgedChain {
    cot::Chain chain;
    std::vector<InsertedSpan> inserted;  // ascending by start, disjoint

    bool operator==(const BridgedChain &) const = default;
};

// begin iff gap 0; end iff gap n-1 with n > 1; middle otherwise. A
// single-step chain's only gap classifies as begin. Throws
// GapOutOfRangeError outside [0, n-1].
Category categorize(int gap_index, int n_steps);

// Splices predicted content into the chain. Content is re-segmented by the
// chain's delimiter before insertion so step granularity stays uniform;
// gap 0 goes directly after the question. Throws GapOutOfRangeError and
// EmptyContentError per the prediction's leaps.
BridgedChain insert_bridges(const cot::Chain & chain, const prompt::BridgePrediction & pred);

// Deletes every inserted span, recovering the pre-insertion chain.
cot::Chain strip_all(const BridgedChain & bridged);

// Deletes all inserted spans of one category; surviving spans are
// re-addressed to the new step coordinates.
BridgedChain ablate_category(const BridgedChain & bridged, Category category);

// Deletes inserted spans whose score is below the threshold. Every span
// must carry a score (see MissingScoreError); scores arrive via sidecar
// files, never computed here.
BridgedChain filter_by_score(const BridgedChain & bridged, double threshold);

}  // namespace leapbridge::augment
