#include "leapbridge/prompts.hpp"

#include "leapbridge/errors.hpp"
#include "leapbridge/rng.hpp"

#include <algorithm>
#include <cctype>
#include <optional>
#include <stdexcept>

namespace leapbridge::prompt {

namespace {

// Keep these byte-identical to resources/templates/*.txt (enforced by a
// test). The "as follows::" double colon is part of the source wording.
constexpr std::string_view kDetectSystem =
    "You are a mathematics teacher reviewing a solution that may be missing one or more steps.\n"
    "Your task is to:\n"
    "1. Identify all points in the logical flow where a step is missing. For each missing step, "
    "specify exactly between which two consecutive steps it should be placed.\n"
    "2. Provide the complete missing step(s) with necessary explanations and equations. The "
    "solution may be missing multiple steps or might be complete. The steps in the solution are "
    "labeled from Step 0 (problem statement) to Step N.\n"
    "For each missing step, please format your response as follows::\n"
    "Missing Step X:\n"
    "The missing step should be placed between Step Y and Step Y+1.\n"
    "The missing step is:\n"
    "[Write the complete missing step here with necessary explanations and equations]\n"
    "\n"
    "If there are no missing steps, please output:\n"
    "No missing steps.";

constexpr std::string_view kVariantSystem =
    "You are a mathematics teacher reviewing a solution that appears to be missing one step. "
    "Given the position of the missing step, your task is to fill in the missing step.\n"
    "The steps in the solution are labeled from Step 0 (problem statement) to Step N.\n"
    "Please format your response as:\n"
    "The missing step is:\n"
    "[Write the complete missing step here with necessary explanations and equations]";

constexpr std::string_view kContentMarker = "the missing step is:";

bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\r' || c == '\f' || c == '\v';
}

std::string_view strip(std::string_view s) {
    while (!s.empty() && is_space(s.front())) {
        s.remove_prefix(1);
    }
    while (!s.empty() && is_space(s.back())) {
        s.remove_suffix(1);
    }
    return s;
}

char lower(char c) {
    return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

// Consumes `lit` from the front of `s`, ASCII case-insensitively, treating
// any whitespace run in either string as equivalent. Returns false and
// leaves `s` untouched on mismatch.
bool ci_consume(std::string_view & s, std::string_view lit) {
    std::string_view rest = s;
    size_t i = 0;
    while (i < lit.size()) {
        if (is_space(lit[i])) {
            if (rest.empty() || !is_space(rest.front())) {
                return false;
            }
            while (!rest.empty() && is_space(rest.front())) {
                rest.remove_prefix(1);
            }
            while (i < lit.size() && is_space(lit[i])) {
                ++i;
            }
            continue;
        }
        if (rest.empty() || lower(rest.front()) != lower(lit[i])) {
            return false;
        }
        rest.remove_prefix(1);
        ++i;
    }
    s = rest;
    return true;
}

void skip_spaces(std::string_view & s) {
    while (!s.empty() && is_space(s.front())) {
        s.remove_prefix(1);
    }
}

// Parses an optionally-signed decimal integer; false on overflow or no digits.
bool consume_int(std::string_view & s, long & value) {
    std::string_view rest = s;
    bool neg = false;
    if (!rest.empty() && (rest.front() == '-' || rest.front() == '+')) {
        neg = rest.front() == '-';
        rest.remove_prefix(1);
    }
    if (rest.empty() || !std::isdigit(static_cast<unsigned char>(rest.front()))) {
        return false;
    }
    long v = 0;
    size_t digits = 0;
    while (!rest.empty() && std::isdigit(static_cast<unsigned char>(rest.front()))) {
        if (++digits > 10) {  // far past any plausible step count
            return false;
        }
        v = v * 10 + (rest.front() - '0');
        rest.remove_prefix(1);
    }
    value = neg ? -v : v;
    s = rest;
    return true;
}

// "Missing Step X:" with an optional label number.
bool match_block_header(std::string_view line) {
    std::string_view s = strip(line);
    if (!ci_consume(s, "missing step")) {
        return false;
    }
    skip_spaces(s);
    long label = 0;
    consume_int(s, label);  // label is decorative
    skip_spaces(s);
    if (s.empty() || s.front() != ':') {
        return false;
    }
    s.remove_prefix(1);
    return strip(s).empty();
}

// "The missing step should be placed between Step Y and Step Y+1."
// Y is authoritative; a non-adjacent second number is accepted with a note.
bool match_placement(std::string_view line, long & gap, bool & adjacent) {
    std::string_view s = strip(line);
    if (!ci_consume(s, "the missing step should be placed between step")) {
        return false;
    }
    skip_spaces(s);
    long y = 0;
    if (!consume_int(s, y)) {
        return false;
    }
    if (!ci_consume(s, " and step")) {
        return false;
    }
    skip_spaces(s);
    long z = 0;
    if (!consume_int(s, z)) {
        return false;
    }
    skip_spaces(s);
    if (!s.empty() && s.front() == '.') {
        s.remove_prefix(1);
    }
    if (!strip(s).empty()) {
        return false;
    }
    gap = y;
    adjacent = (z == y + 1);
    return true;
}

// "The missing step is:" with optional inline content after the colon.
bool match_content_marker(std::string_view line, std::string_view & inline_rest) {
    std::string_view s = strip(line);
    if (!ci_consume(s, kContentMarker)) {
        return false;
    }
    inline_rest = strip(s);
    return true;
}

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    size_t pos = 0;
    while (pos <= text.size()) {
        const size_t nl = text.find('\n', pos);
        std::string_view line = (nl == std::string_view::npos)
                                    ? text.substr(pos)
                                    : text.substr(pos, nl - pos);
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        lines.push_back(line);
        if (nl == std::string_view::npos) {
            break;
        }
        pos = nl + 1;
    }
    return lines;
}

bool is_no_leap_sentence(std::string_view text) {
    // Surrounding whitespace of any kind (including newlines) is tolerated;
    // the sentence itself must sit on one line.
    while (!text.empty() && (is_space(text.front()) || text.front() == '\n')) {
        text.remove_prefix(1);
    }
    while (!text.empty() && (is_space(text.back()) || text.back() == '\n')) {
        text.remove_suffix(1);
    }
    std::string_view s = text;
    // Tolerate a missing final period, nothing else.
    if (!ci_consume(s, "no missing steps")) {
        return false;
    }
    if (!s.empty() && s.front() == '.') {
        s.remove_prefix(1);
    }
    return strip(s).empty();
}

// Joins lines [first, last) with '\n' after dropping leading and trailing
// blank lines. Interior bytes are preserved verbatim.
std::string assemble_content(const std::vector<std::string_view> & lines, size_t first, size_t last,
                             std::string_view inline_rest) {
    std::vector<std::string_view> body;
    if (!inline_rest.empty()) {
        body.push_back(inline_rest);
    }
    for (size_t i = first; i < last; ++i) {
        body.push_back(lines[i]);
    }
    size_t b = 0;
    size_t e = body.size();
    while (b < e && strip(body[b]).empty()) {
        ++b;
    }
    while (e > b && strip(body[e - 1]).empty()) {
        --e;
    }
    std::string out;
    for (size_t i = b; i < e; ++i) {
        if (i > b) {
            out += '\n';
        }
        out += body[i];
    }
    return out;
}

std::string step_block(const cot::Chain & chain) {
    std::string out = "<incomplete_solution>\nStep 0:\n";
    out += chain.question;
    for (size_t i = 0; i < chain.steps.size(); ++i) {
        out += "\nStep " + std::to_string(i + 1) + ":\n";
        out += chain.steps[i];
    }
    out += "\n</incomplete_solution>";
    return out;
}

}  // namespace

const char * to_string(TrainingMode mode) {
    return mode == TrainingMode::detect ? "detect" : "variant";
}

std::string_view detect_system_text() {
    return kDetectSystem;
}

std::string_view variant_system_text() {
    return kVariantSystem;
}

PromptPair render_detect_prompt(const cot::Chain & chain) {
    return {std::string(kDetectSystem), step_block(chain)};
}

PromptPair render_variant_prompt(const cot::Chain & chain, int gap_index) {
    const int n = static_cast<int>(chain.steps.size());
    if (gap_index < 0 || gap_index >= n) {
        throw GapOutOfRangeError("render_variant_prompt: gap " + std::to_string(gap_index) +
                                 " out of range [0, " + std::to_string(n - 1) + "]");
    }
    std::string user = "There is a missing step between Step " + std::to_string(gap_index) +
                       " and Step " + std::to_string(gap_index + 1) + ".\n";
    user += step_block(chain);
    return {std::string(kVariantSystem), std::move(user)};
}

std::string render_detect_target(const inject::InjectedSample & sample) {
    if (sample.kept_complete || sample.leaps.empty()) {
        return std::string(kNoMissingSteps);
    }
    std::string out;
    for (size_t i = 0; i < sample.leaps.size(); ++i) {
        const auto & leap = sample.leaps[i];
        if (i > 0) {
            out += "\n\n";
        }
        out += "Missing Step " + std::to_string(i + 1) + ":\n";
        out += "The missing step should be placed between Step " + std::to_string(leap.gap_index) +
               " and Step " + std::to_string(leap.gap_index + 1) + ".\n";
        out += "The missing step is:\n";
        out += cot::join_steps(leap.missing_steps, sample.incomplete.delimiter);
    }
    return out;
}

TrainingSample render_detect(const inject::InjectedSample & sample) {
    TrainingSample out;
    out.prompt = render_detect_prompt(sample.incomplete);
    out.target = render_detect_target(sample);
    out.mode = TrainingMode::detect;
    return out;
}

TrainingSample render_variant(const inject::InjectedSample & sample, size_t leap_choice) {
    if (sample.kept_complete || sample.leaps.empty()) {
        throw NoLeapAvailableError("render_variant: sample '" + sample.id + "' has no leaps");
    }
    if (leap_choice >= sample.leaps.size()) {
        throw std::out_of_range("render_variant: leap_choice " + std::to_string(leap_choice) +
                                " >= " + std::to_string(sample.leaps.size()));
    }
    const auto & leap = sample.leaps[leap_choice];
    TrainingSample out;
    out.prompt = render_variant_prompt(sample.incomplete, leap.gap_index);
    out.target = "The missing step is:\n" +
                 cot::join_steps(leap.missing_steps, sample.incomplete.delimiter);
    out.mode = TrainingMode::variant;
    return out;
}

int random_gap(int n_steps, uint64_t seed) {
    if (n_steps < 1) {
        throw GapOutOfRangeError("random_gap: chain has no steps");
    }
    rng::Engine g = rng::make_engine(seed);
    return static_cast<int>(rng::below(g, static_cast<uint64_t>(n_steps)));
}

BridgePrediction parse_output(std::string_view text, int n_steps) {
    if (n_steps < 1) {
        throw std::invalid_argument("parse_output: n_steps must be >= 1");
    }

    BridgePrediction pred;
    pred.raw = std::string(text);

    if (is_no_leap_sentence(text)) {
        pred.explicit_none = true;
        return pred;
    }

    const std::vector<std::string_view> lines = split_lines(text);
    std::vector<size_t> headers;
    for (size_t i = 0; i < lines.size(); ++i) {
        if (match_block_header(lines[i])) {
            headers.push_back(i);
        }
    }
    if (headers.empty()) {
        throw ParseError("parse_output: no Missing Step block and no no-leap sentence");
    }

    struct Block {
        long gap;
        std::string content;
    };
    std::vector<Block> blocks;
    std::vector<std::string> structural_warnings;

    for (size_t h = 0; h < headers.size(); ++h) {
        const size_t begin = headers[h] + 1;
        const size_t end = (h + 1 < headers.size()) ? headers[h + 1] : lines.size();
        const std::string block_name = "block " + std::to_string(h + 1);

        std::optional<long> gap;
        bool adjacent = true;
        size_t marker_line = end;
        std::string_view inline_rest;
        for (size_t i = begin; i < end; ++i) {
            long y = 0;
            bool adj = true;
            if (!gap && match_placement(lines[i], y, adj)) {
                gap = y;
                adjacent = adj;
                continue;
            }
            if (gap && match_content_marker(lines[i], inline_rest)) {
                marker_line = i;
                break;
            }
        }

        if (!gap) {
            structural_warnings.push_back(block_name + ": no placement sentence, discarded");
            continue;
        }
        if (marker_line == end) {
            structural_warnings.push_back(block_name + ": no content marker, discarded");
            continue;
        }
        std::string content = assemble_content(lines, marker_line + 1, end, inline_rest);
        if (content.empty()) {
            structural_warnings.push_back(block_name + ": empty content, discarded");
            continue;
        }
        if (!adjacent) {
            pred.warnings.push_back(block_name + ": placement steps not adjacent, kept gap " +
                                    std::to_string(*gap));
        }
        blocks.push_back({*gap, std::move(content)});
    }

    if (blocks.empty()) {
        // Headers existed but nothing was structurally usable.
        const std::string detail =
            structural_warnings.empty() ? "" : (" (" + structural_warnings.front() + ")");
        throw ParseError("parse_output: Missing Step headers without usable blocks" + detail);
    }
    for (auto & w : structural_warnings) {
        pred.warnings.push_back(std::move(w));
    }

    for (auto & block : blocks) {
        if (block.gap < 0 || block.gap >= n_steps) {
            pred.warnings.push_back("gap " + std::to_string(block.gap) + " out of range [0, " +
                                    std::to_string(n_steps - 1) + "], block discarded");
            continue;
        }
        const int gap = static_cast<int>(block.gap);
        const bool duplicate = std::any_of(pred.leaps.begin(), pred.leaps.end(),
                                           [gap](const PredictedLeap & l) { return l.gap_index == gap; });
        if (duplicate) {
            pred.warnings.push_back("duplicate gap " + std::to_string(gap) + ", kept first block");
            continue;
        }
        pred.leaps.push_back({gap, std::move(block.content)});
    }
    std::sort(pred.leaps.begin(), pred.leaps.end(),
              [](const PredictedLeap & a, const PredictedLeap & b) { return a.gap_index < b.gap_index; });
    return pred;
}

std::string parse_variant_output(std::string_view text) {
    const std::vector<std::string_view> lines = split_lines(text);
    for (size_t i = 0; i < lines.size(); ++i) {
        std::string_view inline_rest;
        if (match_content_marker(lines[i], inline_rest)) {
            std::string content = assemble_content(lines, i + 1, lines.size(), inline_rest);
            if (content.empty()) {
                throw ParseError("parse_variant_output: empty content after marker");
            }
            return content;
        }
    }
    throw ParseError("parse_variant_output: no 'The missing step is:' marker");
}

}  // namespace leapbridge::prompt
