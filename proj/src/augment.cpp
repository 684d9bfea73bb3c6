#include "leapbridge/augment.hpp"

#include "leapbridge/errors.hpp"

#include <algorithm>
#include <stdexcept>

namespace leapbridge::augment {

namespace {

// Rebuilds the chain without the spans selected by `drop`; kept spans are
// shifted left by the dropped lengths before them.
BridgedChain remove_spans(const BridgedChain & bridged, const std::vector<bool> & drop) {
    BridgedChain out;
    out.chain.id = bridged.chain.id;
    out.chain.question = bridged.chain.question;
    out.chain.delimiter = bridged.chain.delimiter;

    std::vector<bool> dead(bridged.chain.steps.size(), false);
    for (size_t i = 0; i < bridged.inserted.size(); ++i) {
        if (!drop[i]) {
            continue;
        }
        const auto & span = bridged.inserted[i];
        for (int j = 0; j < span.len; ++j) {
            dead[static_cast<size_t>(span.start + j)] = true;
        }
    }

    std::vector<int> new_index(bridged.chain.steps.size(), -1);
    for (size_t i = 0; i < bridged.chain.steps.size(); ++i) {
        if (dead[i]) {
            continue;
        }
        new_index[i] = static_cast<int>(out.chain.steps.size());
        out.chain.steps.push_back(bridged.chain.steps[i]);
    }

    for (size_t i = 0; i < bridged.inserted.size(); ++i) {
        if (drop[i]) {
            continue;
        }
        InsertedSpan span = bridged.inserted[i];
        span.start = new_index[static_cast<size_t>(span.start)];
        out.inserted.push_back(span);
    }
    return out;
}

void check_spans(const BridgedChain & bridged) {
    const int n = static_cast<int>(bridged.chain.steps.size());
    int prev_end = 0;
    for (const auto & span : bridged.inserted) {
        if (span.len <= 0 || span.start < prev_end || span.start + span.len > n) {
            throw Error("bridged chain '" + bridged.chain.id + "': inserted spans overlap or leave bounds");
        }
        prev_end = span.start + span.len;
    }
}

}  // namespace

const char * to_string(Category category) {
    switch (category) {
        case Category::begin:  return "begin";
        case Category::middle: return "middle";
        case Category::end:    return "end";
    }
    return "unknown";
}

Category category_from_string(std::string_view name) {
    if (name == "begin")  return Category::begin;
    if (name == "middle") return Category::middle;
    if (name == "end")    return Category::end;
    throw std::invalid_argument("unknown category: " + std::string(name));
}

Category categorize(int gap_index, int n_steps) {
    if (n_steps < 1 || gap_index < 0 || gap_index > n_steps - 1) {
        throw GapOutOfRangeError("categorize: gap " + std::to_string(gap_index) +
                                 " invalid for " + std::to_string(n_steps) + " steps");
    }
    if (gap_index == 0) {
        return Category::begin;  // includes the n == 1 tie-break
    }
    if (gap_index == n_steps - 1) {
        return Category::end;
    }
    return Category::middle;
}

BridgedChain insert_bridges(const cot::Chain & chain, const prompt::BridgePrediction & pred) {
    const int n = static_cast<int>(chain.steps.size());

    struct Insertion {
        int gap;
        std::vector<std::string> steps;
    };
    std::vector<Insertion> insertions;
    for (const auto & leap : pred.leaps) {
        if (leap.gap_index < 0 || leap.gap_index >= n) {
            throw GapOutOfRangeError("insert_bridges: gap " + std::to_string(leap.gap_index) +
                                     " out of range [0, " + std::to_string(n - 1) + "] for chain '" +
                                     chain.id + "'");
        }
        if (leap.content.empty()) {
            throw EmptyContentError("insert_bridges: empty content at gap " +
                                    std::to_string(leap.gap_index) + " for chain '" + chain.id + "'");
        }
        cot::DelimiterPolicy policy{"insert", chain.delimiter, /*trim_segments=*/false, /*drop_empty=*/true};
        insertions.push_back({leap.gap_index, cot::segment(leap.content, policy)});
    }
    std::sort(insertions.begin(), insertions.end(),
              [](const Insertion & a, const Insertion & b) { return a.gap < b.gap; });

    BridgedChain out;
    out.chain.id = chain.id;
    out.chain.question = chain.question;
    out.chain.delimiter = chain.delimiter;

    // Single ascending walk; gap k splices right after original step k
    // (k = 0: before the first step, directly after the question).
    size_t next = 0;
    for (int k = 0; k <= n; ++k) {
        if (k > 0) {
            out.chain.steps.push_back(chain.steps[static_cast<size_t>(k - 1)]);
        }
        while (next < insertions.size() && insertions[next].gap == k) {
            InsertedSpan span;
            span.gap_index = k;
            span.start = static_cast<int>(out.chain.steps.size());
            span.len = static_cast<int>(insertions[next].steps.size());
            span.category = categorize(k, n);
            for (auto & step : insertions[next].steps) {
                out.chain.steps.push_back(std::move(step));
            }
            out.inserted.push_back(std::move(span));
            ++next;
        }
    }
    return out;
}

cot::Chain strip_all(const BridgedChain & bridged) {
    check_spans(bridged);
    return remove_spans(bridged, std::vector<bool>(bridged.inserted.size(), true)).chain;
}

BridgedChain ablate_category(const BridgedChain & bridged, Category category) {
    check_spans(bridged);
    std::vector<bool> drop(bridged.inserted.size(), false);
    for (size_t i = 0; i < bridged.inserted.size(); ++i) {
        drop[i] = bridged.inserted[i].category == category;
    }
    return remove_spans(bridged, drop);
}

BridgedChain filter_by_score(const BridgedChain & bridged, double threshold) {
    check_spans(bridged);
    std::vector<bool> drop(bridged.inserted.size(), false);
    for (size_t i = 0; i < bridged.inserted.size(); ++i) {
        const auto & span = bridged.inserted[i];
        if (!span.score.has_value()) {
            throw MissingScoreError("filter_by_score: span at gap " + std::to_string(span.gap_index) +
                                    " of chain '" + bridged.chain.id + "' has no score");
        }
        drop[i] = *span.score < threshold;
    }
    return remove_spans(bridged, drop);
}

}  // namespace leapbridge::augment
