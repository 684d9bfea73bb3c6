#include "leapbridge/injector.hpp"

#include "leapbridge/errors.hpp"
#include "leapbridge/rng.hpp"

#include <algorithm>
#include <stdexcept>

namespace leapbridge::inject {

namespace {

// Draws k distinct values from `pool` by partial Fisher-Yates, then sorts.
// The draw sequence is part of the pinned sampling order.
std::vector<int> draw_without_replacement(rng::Engine & g, std::vector<int> pool, size_t k) {
    k = std::min(k, pool.size());
    for (size_t i = 0; i < k; ++i) {
        const size_t j = i + static_cast<size_t>(rng::below(g, pool.size() - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    std::sort(pool.begin(), pool.end());
    return pool;
}

}  // namespace

void check_policy(const RemovalPolicy & policy) {
    auto bad_range = [](const IntRange & r) { return r.lo < 1 || r.hi < r.lo; };
    if (policy.min_steps < 1) {
        throw std::invalid_argument("removal policy: min_steps must be >= 1");
    }
    if (bad_range(policy.k_del_short) || bad_range(policy.k_del_long)) {
        throw std::invalid_argument("removal policy: k_del ranges must be non-empty with positive bounds");
    }
    if (policy.keep_complete_prob < 0.0 || policy.keep_complete_prob > 1.0) {
        throw std::invalid_argument("removal policy: keep_complete_prob must lie in [0, 1]");
    }
}

const char * to_string(Severity severity) {
    switch (severity) {
        case Severity::mild:     return "mild";
        case Severity::moderate: return "moderate";
        case Severity::severe:   return "severe";
        case Severity::extreme:  return "extreme";
    }
    return "unknown";
}

Severity severity_from_string(std::string_view name) {
    if (name == "mild")     return Severity::mild;
    if (name == "moderate") return Severity::moderate;
    if (name == "severe")   return Severity::severe;
    if (name == "extreme")  return Severity::extreme;
    throw std::invalid_argument("unknown severity: " + std::string(name));
}

bool eligible(const cot::Chain & chain, const RemovalPolicy & policy) {
    return static_cast<int>(chain.steps.size()) >= policy.min_steps;
}

InjectedSample inject(const cot::Chain & chain, const RemovalPolicy & policy, uint64_t seed) {
    check_policy(policy);
    const int m = static_cast<int>(chain.steps.size());
    if (m < policy.min_steps) {
        throw TooShortError("inject: chain '" + chain.id + "' has " + std::to_string(m) +
                            " steps, policy requires " + std::to_string(policy.min_steps));
    }

    InjectedSample sample;
    sample.id = chain.id;
    sample.source_id = chain.id;
    sample.seed = seed;

    rng::Engine g = rng::make_engine(seed);

    // (1) keep-complete coin
    if (rng::unit(g) < policy.keep_complete_prob) {
        sample.kept_complete = true;
        sample.incomplete = chain;
        return sample;
    }

    // (2) removal count, scaled by chain length
    const IntRange & range = (m <= policy.short_chain_max) ? policy.k_del_short : policy.k_del_long;
    size_t k_del = static_cast<size_t>(
        rng::between(g, static_cast<uint64_t>(range.lo), static_cast<uint64_t>(range.hi)));

    // (3) removal indices, 1-based; the final step s_m is never eligible
    std::vector<int> pool;
    for (int i = policy.allow_remove_first ? 1 : 2; i <= m - 1; ++i) {
        pool.push_back(i);
    }
    k_del = std::min(k_del, pool.size());  // graceful clamp for custom policies
    const std::vector<int> removed = draw_without_replacement(g, std::move(pool), k_del);

    if (removed.empty()) {
        // Unreachable under defaults (m >= 6). A custom policy can leave no
        // eligible index; kept_complete <=> no leaps, so record it as kept.
        sample.kept_complete = true;
        sample.incomplete = chain;
        return sample;
    }

    sample.incomplete.id = chain.id;
    sample.incomplete.question = chain.question;
    sample.incomplete.delimiter = chain.delimiter;

    // Build the surviving step list and merge contiguous removed runs into
    // single leaps. gap_index is the incomplete-chain index of the last
    // surviving step before the run (0 when that is the question).
    size_t r = 0;
    int removed_before = 0;
    for (int i = 1; i <= m; ++i) {
        if (r < removed.size() && removed[r] == i) {
            const int run_start = i;
            LeapRecord leap;
            leap.gap_index = (run_start - 1) - removed_before;
            while (r < removed.size() && removed[r] == i) {
                leap.missing_steps.push_back(chain.steps[static_cast<size_t>(i - 1)]);
                ++removed_before;
                ++r;
                ++i;
            }
            sample.leaps.push_back(std::move(leap));
            if (i > m) {
                break;
            }
        }
        sample.incomplete.steps.push_back(chain.steps[static_cast<size_t>(i - 1)]);
    }

    return sample;
}

cot::Chain restore(const InjectedSample & sample) {
    const int n = static_cast<int>(sample.incomplete.steps.size());
    for (const auto & leap : sample.leaps) {
        if (leap.gap_index < 0 || leap.gap_index >= n) {
            throw GapOutOfRangeError("restore: gap_index " + std::to_string(leap.gap_index) +
                                     " out of range [0, " + std::to_string(n - 1) + "] for sample '" +
                                     sample.id + "'");
        }
    }

    cot::Chain out;
    out.id = sample.source_id;
    out.question = sample.incomplete.question;
    out.delimiter = sample.incomplete.delimiter;
    out.steps = sample.incomplete.steps;

    // Descending gap order keeps earlier indices valid while splicing.
    std::vector<const LeapRecord *> ordered;
    ordered.reserve(sample.leaps.size());
    for (const auto & leap : sample.leaps) {
        ordered.push_back(&leap);
    }
    std::sort(ordered.begin(), ordered.end(),
              [](const LeapRecord * a, const LeapRecord * b) { return a->gap_index > b->gap_index; });
    for (const LeapRecord * leap : ordered) {
        out.steps.insert(out.steps.begin() + leap->gap_index,
                         leap->missing_steps.begin(), leap->missing_steps.end());
    }
    return out;
}

cot::Chain degrade(const cot::Chain & chain, Severity severity, uint64_t seed) {
    const int m = static_cast<int>(chain.steps.size());
    cot::Chain out;
    out.id = chain.id;
    out.question = chain.question;
    out.delimiter = chain.delimiter;
    if (m == 0) {
        return out;
    }

    if (severity == Severity::extreme) {
        out.steps.push_back(chain.steps.back());
        return out;
    }

    const int want = severity == Severity::mild ? 1 : severity == Severity::moderate ? 2 : 3;
    const int available = m - 1;  // the final step is never removed
    const size_t k = static_cast<size_t>(std::min(want, available));

    rng::Engine g = rng::make_engine(seed);
    std::vector<int> pool;
    for (int i = 1; i <= m - 1; ++i) {
        pool.push_back(i);
    }
    const std::vector<int> removed = draw_without_replacement(g, std::move(pool), k);

    size_t r = 0;
    for (int i = 1; i <= m; ++i) {
        if (r < removed.size() && removed[r] == i) {
            ++r;
            continue;
        }
        out.steps.push_back(chain.steps[static_cast<size_t>(i - 1)]);
    }
    return out;
}

}  // namespace leapbridge::inject
