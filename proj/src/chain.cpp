#include "leapbridge/chain.hpp"

#include "leapbridge/errors.hpp"

#include <algorithm>
#include <cctype>
#include <mutex>

namespace leapbridge::cot {

namespace {

std::mutex g_registry_mutex;

std::vector<DelimiterPolicy> & registry() {
    static std::vector<DelimiterPolicy> policies = {
        {"newline", "\n", /*trim_segments=*/false, /*drop_empty=*/true},
        {"double_newline", "\n\n", /*trim_segments=*/false, /*drop_empty=*/true},
    };
    return policies;
}

std::string trim_copy(std::string_view s) {
    size_t b = 0;
    size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) {
        ++b;
    }
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) {
        --e;
    }
    return std::string(s.substr(b, e - b));
}

}  // namespace

const DelimiterPolicy * find_policy(std::string_view name) {
    std::lock_guard<std::mutex> lock(g_registry_mutex);
    for (const auto & p : registry()) {
        if (p.name == name) {
            return &p;
        }
    }
    return nullptr;
}

void register_policy(DelimiterPolicy policy) {
    if (policy.delimiter.empty()) {
        throw Error("delimiter policy '" + policy.name + "' has an empty delimiter");
    }
    std::lock_guard<std::mutex> lock(g_registry_mutex);
    for (auto & p : registry()) {
        if (p.name == policy.name) {
            p = std::move(policy);
            return;
        }
    }
    registry().push_back(std::move(policy));
}

std::vector<std::string> policy_names() {
    std::lock_guard<std::mutex> lock(g_registry_mutex);
    std::vector<std::string> names;
    names.reserve(registry().size());
    for (const auto & p : registry()) {
        names.push_back(p.name);
    }
    return names;
}

std::vector<std::string> segment(std::string_view text, const DelimiterPolicy & policy) {
    if (policy.delimiter.empty()) {
        throw Error("segment: empty delimiter in policy '" + policy.name + "'");
    }
    if (text.empty()) {
        throw EmptyInputError("segment: input text is empty");
    }

    std::vector<std::string> out;
    size_t pos = 0;
    while (true) {
        const size_t hit = text.find(policy.delimiter, pos);
        std::string_view piece = (hit == std::string_view::npos)
                                     ? text.substr(pos)
                                     : text.substr(pos, hit - pos);
        std::string step = policy.trim_segments ? trim_copy(piece) : std::string(piece);
        if (!policy.drop_empty || !step.empty()) {
            out.push_back(std::move(step));
        }
        if (hit == std::string_view::npos) {
            break;
        }
        pos = hit + policy.delimiter.size();
    }

    if (out.empty()) {
        throw EmptyInputError("segment: all segments were dropped");
    }
    return out;
}

std::string join_steps(const std::vector<std::string> & steps, std::string_view delimiter) {
    std::string out;
    for (size_t i = 0; i < steps.size(); ++i) {
        if (i > 0) {
            out += delimiter;
        }
        out += steps[i];
    }
    return out;
}

std::string join(const std::vector<std::string> & steps, const DelimiterPolicy & policy) {
    for (size_t i = 0; i < steps.size(); ++i) {
        if (steps[i].empty()) {
            throw InvalidStepError("join: step " + std::to_string(i) + " is empty");
        }
        if (steps[i].find(policy.delimiter) != std::string::npos) {
            throw InvalidStepError("join: step " + std::to_string(i) + " contains the delimiter");
        }
    }
    return join_steps(steps, policy.delimiter);
}

std::vector<Violation> validate(const Chain & chain) {
    std::vector<Violation> out;
    if (chain.question.empty()) {
        out.push_back({Violation::Kind::empty_question, -1, "question is empty"});
    }
    if (chain.delimiter.empty()) {
        out.push_back({Violation::Kind::empty_delimiter, -1, "delimiter is empty"});
    }
    if (chain.steps.empty()) {
        out.push_back({Violation::Kind::no_steps, -1, "chain has no steps"});
    }
    for (size_t i = 0; i < chain.steps.size(); ++i) {
        if (chain.steps[i].empty()) {
            out.push_back({Violation::Kind::empty_step, static_cast<int>(i),
                           "step " + std::to_string(i) + " is empty"});
        } else if (!chain.delimiter.empty() &&
                   chain.steps[i].find(chain.delimiter) != std::string::npos) {
            out.push_back({Violation::Kind::delimiter_in_step, static_cast<int>(i),
                           "step " + std::to_string(i) + " contains the delimiter"});
        }
    }
    return out;
}

}  // namespace leapbridge::cot
