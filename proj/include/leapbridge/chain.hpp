#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace leapbridge::cot {

// How raw solution text maps to discrete steps. Common math corpora use
// literal "\n" (MetaMathQA) or "\n\n" (NuminaMath) delimiters; the registry
// below keys these by name and accepts custom entries.
struct DelimiterPolicy {
    std::string name;
    std::string delimiter;
    bool trim_segments = false;  // default off: byte-exact reconstruction matters more
    bool drop_empty = false;

    bool operator==(const DelimiterPolicy &) const = default;
};

// Registry of named policies. "newline" and "double_newline" are built in,
// both with drop_empty=true so ingestion never yields empty steps.
const DelimiterPolicy * find_policy(std::string_view name);
void register_policy(DelimiterPolicy policy);
std::vector<std::string> policy_names();

// A question plus ordered solution steps. Steps are opaque UTF-8; no
// normalization is ever applied. Equality is structural.
struct Chain {
    std::string id;
    std::string question;
    std::vector<std::string> steps;
    std::string delimiter = "\n";

    bool operator==(const Chain &) const = default;
};

// Splits raw text on the policy's literal delimiter, left to right and
// non-overlapping. Throws EmptyInputError when text is empty or every
// segment is dropped.
std::vector<std::string> segment(std::string_view text, const DelimiterPolicy & policy);

// Inverse of segment. Throws InvalidStepError when a step is empty or
// contains the delimiter (round-trip would break).
std::string join(const std::vector<std::string> & steps, const DelimiterPolicy & policy);

// join with a bare delimiter string, e.g. chain.delimiter.
std::string join_steps(const std::vector<std::string> & steps, std::string_view delimiter);

struct Violation {
    enum class Kind {
        empty_question,
        empty_delimiter,
        no_steps,
        empty_step,
        delimiter_in_step,
    };
    Kind kind;
    int step_index = -1;  // for per-step kinds
    std::string message;
};

// Reports every violated Chain invariant; an empty list means ok.
// Violations are data, not failures.
std::vector<Violation> validate(const Chain & chain);

}  // namespace leapbridge::cot
