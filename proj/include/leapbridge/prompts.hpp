#pragma once

#include "leapbridge/chain.hpp"
#include "leapbridge/injector.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace leapbridge::prompt {

// Bumped whenever the template wording under resources/templates/ changes.
inline constexpr std::string_view kTemplateVersion = "1";

// System + user message pair. The user text carries the
// <incomplete_solution> block with steps labeled Step 0 (the question)
// through Step N.
struct PromptPair {
    std::string system;
    std::string user;

    bool operator==(const PromptPair &) const = default;
};

struct PredictedLeap {
    int gap_index = 0;
    std::string content;

    bool operator==(const PredictedLeap &) const = default;
};

// A model's claimed leaps for one chain, or an explicit "no leaps" verdict.
struct BridgePrediction {
    std::string chain_id;
    std::vector<PredictedLeap> leaps;  // ascending, unique gap_index
    bool explicit_none = false;
    std::vector<std::string> warnings;
    std::string raw;

    bool operator==(const BridgePrediction &) const = default;
};

enum class TrainingMode {
    detect,   // find every gap and fill it
    variant,  // fill one named gap
};

const char * to_string(TrainingMode mode);

struct TrainingSample {
    PromptPair prompt;
    std::string target;
    TrainingMode mode = TrainingMode::detect;
};

// Template wording, byte-identical to resources/templates/*.txt; a test
// keeps the two in sync.
std::string_view detect_system_text();
std::string_view variant_system_text();

// Exact no-leap target sentence.
inline constexpr std::string_view kNoMissingSteps = "No missing steps.";

// Builds the detection user prompt for any chain (no ground truth needed).
PromptPair render_detect_prompt(const cot::Chain & chain);

// Variant user prompt naming one gap. Throws GapOutOfRangeError when
// gap_index falls outside [0, n-1].
PromptPair render_variant_prompt(const cot::Chain & chain, int gap_index);

// Detection training target: the no-leap sentence for kept-complete
// samples, otherwise one Missing Step block per leap in ascending gap
// order, each block's content being the leap's missing steps joined with
// the chain delimiter.
std::string render_detect_target(const inject::InjectedSample & sample);

TrainingSample render_detect(const inject::InjectedSample & sample);

// Variant training pair for sample.leaps[leap_choice]. Throws
// NoLeapAvailableError on kept-complete samples.
TrainingSample render_variant(const inject::InjectedSample & sample, size_t leap_choice);

// Uniform gap in [0, n_steps-1] for inference-time random bridging.
int random_gap(int n_steps, uint64_t seed);

// Parses detection-mode model output back into a structured prediction.
//
// Accepts either the exact no-leap sentence or one-plus Missing Step
// blocks. The placement sentence, not the block numbering, decides the gap
// index. Out-of-range gaps and duplicate gaps drop the offending block and
// leave a note in warnings. Header matching is ASCII case-insensitive and
// ignores trailing whitespace. Throws ParseError when no recognizable form
// is present; never crashes on arbitrary bytes.
BridgePrediction parse_output(std::string_view text, int n_steps);

// Parses variant-mode output ("The missing step is:" + content). Returns
// the content only; the gap is whatever the caller prompted. Throws
// ParseError when the marker is absent or the content is empty.
std::string parse_variant_output(std::string_view text);

}  // namespace leapbridge::prompt
