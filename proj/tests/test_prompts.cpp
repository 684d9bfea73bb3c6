#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "leapbridge/errors.hpp"
#include "leapbridge/injector.hpp"
#include "leapbridge/prompts.hpp"
#include "leapbridge/rng.hpp"

#include "testutil.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace leapbridge;

namespace {

std::string slurp(const std::string & path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE_MESSAGE(in.good(), "missing file: " << path);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

std::string golden(const std::string & name) {
    return slurp(std::string(LEAPBRIDGE_SOURCE_DIR) + "/tests/golden/" + name);
}

// The fixture behind the golden files: "What is 2+3+4?" with the middle
// step removed.
inject::InjectedSample golden_sample() {
    inject::InjectedSample sample;
    sample.id = "golden-1";
    sample.source_id = "golden-1";
    sample.incomplete.id = "golden-1";
    sample.incomplete.question = "What is 2+3+4?";
    sample.incomplete.steps = { "Add 2 and 3 to get 5.", "The answer is 9." };
    sample.incomplete.delimiter = "\n";
    sample.leaps = { { 1, { "Add 4 to the total: 5 + 4 = 9." } } };
    return sample;
}

inject::InjectedSample two_leap_sample() {
    inject::InjectedSample sample;
    sample.id = "golden-2";
    sample.source_id = "golden-2";
    sample.incomplete.id = "golden-2";
    sample.incomplete.question = "Q?";
    sample.incomplete.steps = { "Step body one.", "Step body two." };
    sample.incomplete.delimiter = "\n";
    sample.leaps = {
        { 0, { "First bridge step.", "Second bridge step." } },
        { 1, { "Third bridge step." } },
    };
    return sample;
}

}  // namespace

TEST_CASE("embedded system templates match the committed template files") {
    // the .txt files end with one trailing newline; the embedded constants
    // carry the body only
    const std::string detect =
        slurp(std::string(LEAPBRIDGE_SOURCE_DIR) + "/resources/templates/detect_system.txt");
    CHECK(std::string(prompt::detect_system_text()) + "\n" == detect);

    const std::string variant =
        slurp(std::string(LEAPBRIDGE_SOURCE_DIR) + "/resources/templates/variant_system.txt");
    CHECK(std::string(prompt::variant_system_text()) + "\n" == variant);
}

TEST_CASE("detect template carries its exact wording quirks") {
    const std::string_view text = prompt::detect_system_text();
    CHECK(text.find("as follows::") != std::string_view::npos);
    CHECK(text.find("labeled from Step 0 (problem statement) to Step N") != std::string_view::npos);
    CHECK(text.find("No missing steps.") != std::string_view::npos);
    CHECK(text.back() == '.');  // no trailing whitespace or newline
}

TEST_CASE("detect render matches the golden files byte-exactly") {
    const inject::InjectedSample sample = golden_sample();
    const prompt::TrainingSample ts = prompt::render_detect(sample);
    CHECK(ts.prompt.system == std::string(prompt::detect_system_text()));
    CHECK(ts.prompt.user == golden("detect_user.txt"));
    CHECK(ts.target == golden("detect_target.txt"));
    CHECK(ts.mode == prompt::TrainingMode::detect);
}

TEST_CASE("kept-complete samples render the no-leap sentence") {
    inject::InjectedSample sample = golden_sample();
    sample.kept_complete = true;
    sample.leaps.clear();
    CHECK(prompt::render_detect_target(sample) == golden("detect_target_complete.txt"));
    CHECK(std::string(prompt::kNoMissingSteps) == golden("detect_target_complete.txt"));
}

TEST_CASE("multi-leap targets join blocks with a blank line") {
    CHECK(prompt::render_detect_target(two_leap_sample()) == golden("detect_target_two.txt"));
}

TEST_CASE("variant render matches the golden files byte-exactly") {
    const inject::InjectedSample sample = golden_sample();
    const prompt::TrainingSample ts = prompt::render_variant(sample, 0);
    CHECK(ts.prompt.system == std::string(prompt::variant_system_text()));
    CHECK(ts.prompt.user == golden("variant_user.txt"));
    CHECK(ts.target == golden("variant_target.txt"));
    CHECK(ts.mode == prompt::TrainingMode::variant);
}

TEST_CASE("variant render failure modes") {
    inject::InjectedSample complete = golden_sample();
    complete.kept_complete = true;
    complete.leaps.clear();
    CHECK_THROWS_AS(prompt::render_variant(complete, 0), NoLeapAvailableError);

    CHECK_THROWS_AS(prompt::render_variant(golden_sample(), 5), std::out_of_range);

    cot::Chain chain = golden_sample().incomplete;
    CHECK_THROWS_AS(prompt::render_variant_prompt(chain, -1), GapOutOfRangeError);
    CHECK_THROWS_AS(prompt::render_variant_prompt(chain, 2), GapOutOfRangeError);
}

TEST_CASE("parse_output: no-leap sentence variants") {
    auto check_none = [](std::string_view text) {
        const prompt::BridgePrediction pred = prompt::parse_output(text, 5);
        CHECK(pred.explicit_none);
        CHECK(pred.leaps.empty());
    };
    check_none("No missing steps.");
    check_none("no missing steps");
    check_none("  No Missing Steps.  \n");

    // trailing prose disqualifies the sentence and there is no block either
    CHECK_THROWS_AS(prompt::parse_output("No missing steps, except one.", 5), ParseError);
}

TEST_CASE("parse_output: single well-formed block") {
    const std::string text =
        "Missing Step 1:\n"
        "The missing step should be placed between Step 2 and Step 3.\n"
        "The missing step is:\n"
        "Multiply both sides by 4.\n"
        "This isolates x.";
    const prompt::BridgePrediction pred = prompt::parse_output(text, 6);
    CHECK_FALSE(pred.explicit_none);
    REQUIRE(pred.leaps.size() == 1);
    CHECK(pred.leaps[0].gap_index == 2);
    CHECK(pred.leaps[0].content == "Multiply both sides by 4.\nThis isolates x.");
    CHECK(pred.warnings.empty());
    CHECK(pred.raw == text);
}

TEST_CASE("parse_output tolerates case, spacing and inline content") {
    const std::string text =
        "missing step:\n"
        "the missing step should be placed between step 0 and step 1\n"
        "THE MISSING STEP IS: x = 2 follows directly.";
    const prompt::BridgePrediction pred = prompt::parse_output(text, 4);
    REQUIRE(pred.leaps.size() == 1);
    CHECK(pred.leaps[0].gap_index == 0);
    CHECK(pred.leaps[0].content == "x = 2 follows directly.");
}

TEST_CASE("parse_output flags non-adjacent placement but keeps the first index") {
    const std::string text =
        "Missing Step 1:\n"
        "The missing step should be placed between Step 1 and Step 4.\n"
        "The missing step is:\n"
        "content here";
    const prompt::BridgePrediction pred = prompt::parse_output(text, 6);
    REQUIRE(pred.leaps.size() == 1);
    CHECK(pred.leaps[0].gap_index == 1);
    REQUIRE_FALSE(pred.warnings.empty());
}

TEST_CASE("parse_output discards broken blocks with warnings, keeps good ones") {
    const std::string text =
        "Missing Step 1:\n"
        "The missing step is:\n"
        "orphan content without a placement line\n"
        "\n"
        "Missing Step 2:\n"
        "The missing step should be placed between Step 3 and Step 4.\n"
        "The missing step is:\n"
        "good content";
    const prompt::BridgePrediction pred = prompt::parse_output(text, 8);
    REQUIRE(pred.leaps.size() == 1);
    CHECK(pred.leaps[0].gap_index == 3);
    CHECK(pred.leaps[0].content == "good content");
    REQUIRE_FALSE(pred.warnings.empty());
}

TEST_CASE("parse_output drops out-of-range and duplicate gaps with warnings") {
    const std::string text =
        "Missing Step 1:\n"
        "The missing step should be placed between Step 7 and Step 8.\n"
        "The missing step is:\n"
        "too far right\n"
        "\n"
        "Missing Step 2:\n"
        "The missing step should be placed between Step 1 and Step 2.\n"
        "The missing step is:\n"
        "first claim\n"
        "\n"
        "Missing Step 3:\n"
        "The missing step should be placed between Step 1 and Step 2.\n"
        "The missing step is:\n"
        "second claim";
    const prompt::BridgePrediction pred = prompt::parse_output(text, 4);
    REQUIRE(pred.leaps.size() == 1);
    CHECK(pred.leaps[0].gap_index == 1);
    CHECK(pred.leaps[0].content == "first claim");
    CHECK(pred.warnings.size() == 2);
}

TEST_CASE("parse_output hard failures") {
    CHECK_THROWS_AS(prompt::parse_output("The weather is nice today.", 5), ParseError);
    CHECK_THROWS_AS(prompt::parse_output("", 5), ParseError);
    // header with nothing usable underneath
    CHECK_THROWS_AS(prompt::parse_output("Missing Step 1:\njust prose", 5), ParseError);
    CHECK_THROWS_AS(prompt::parse_output("x", 0), std::invalid_argument);
}

TEST_CASE("parse leaps come out sorted by gap") {
    const std::string text =
        "Missing Step 1:\n"
        "The missing step should be placed between Step 4 and Step 5.\n"
        "The missing step is:\n"
        "later\n"
        "\n"
        "Missing Step 2:\n"
        "The missing step should be placed between Step 0 and Step 1.\n"
        "The missing step is:\n"
        "earlier";
    const prompt::BridgePrediction pred = prompt::parse_output(text, 8);
    REQUIRE(pred.leaps.size() == 2);
    CHECK(pred.leaps[0].gap_index == 0);
    CHECK(pred.leaps[1].gap_index == 4);
}

TEST_CASE("parse(render(target)) reproduces ground truth over the corpus") {
    const inject::RemovalPolicy policy;
    size_t with_leaps = 0;
    for (const cot::Chain & chain : testutil::make_corpus(21, 400)) {
        const inject::InjectedSample sample =
            inject::inject(chain, policy, rng::record_seed(21, chain.id));
        const std::string target = prompt::render_detect_target(sample);
        const prompt::BridgePrediction pred =
            prompt::parse_output(target, static_cast<int>(sample.incomplete.steps.size()));
        if (sample.kept_complete) {
            CHECK(pred.explicit_none);
            CHECK(pred.leaps.empty());
            continue;
        }
        with_leaps += 1;
        REQUIRE(pred.leaps.size() == sample.leaps.size());
        for (size_t i = 0; i < pred.leaps.size(); ++i) {
            CHECK(pred.leaps[i].gap_index == sample.leaps[i].gap_index);
            CHECK(pred.leaps[i].content ==
                  cot::join_steps(sample.leaps[i].missing_steps, sample.incomplete.delimiter));
        }
    }
    CHECK(with_leaps > 200);
}

TEST_CASE("parse_variant_output extracts content after the marker") {
    CHECK(prompt::parse_variant_output("The missing step is:\nx = 4.") == "x = 4.");
    CHECK(prompt::parse_variant_output("noise\nThe missing step is: inline answer") ==
          "inline answer");
    CHECK(prompt::parse_variant_output("The missing step is:\n\n  \nbody line 1\nbody line 2\n\n") ==
          "body line 1\nbody line 2");
    CHECK_THROWS_AS(prompt::parse_variant_output("no marker here"), ParseError);
    CHECK_THROWS_AS(prompt::parse_variant_output("The missing step is:\n   \n"), ParseError);
}

TEST_CASE("fuzzing the parser never crashes and throws only ParseError") {
    rng::Engine g = rng::make_engine(4242);
    const std::string alphabet =
        "Missing Step 123:\n .TheissingstepshouldbeplacedbetweenandNo\tmissing\r";
    size_t parsed = 0, rejected = 0;
    for (int i = 0; i < 20000; ++i) {
        std::string text;
        const size_t len = rng::below(g, 160);
        for (size_t j = 0; j < len; ++j) {
            text.push_back(alphabet[rng::below(g, alphabet.size())]);
        }
        try {
            prompt::parse_output(text, 6);
            parsed += 1;
        } catch (const ParseError &) {
            rejected += 1;
        }
    }
    CHECK(parsed + rejected == 20000);
    CHECK(rejected > 0);
}

TEST_CASE("random_gap is in range, deterministic and roughly uniform") {
    CHECK_THROWS_AS(prompt::random_gap(0, 1), GapOutOfRangeError);
    CHECK(prompt::random_gap(5, 77) == prompt::random_gap(5, 77));

    const int n = 6;
    std::vector<int> counts(n, 0);
    const int trials = 6000;
    for (int i = 0; i < trials; ++i) {
        const int gap = prompt::random_gap(n, 1000 + static_cast<uint64_t>(i));
        REQUIRE(gap >= 0);
        REQUIRE(gap < n);
        counts[static_cast<size_t>(gap)] += 1;
    }
    // chi-square against uniform; 99.9th percentile for df=5 is 20.5
    const double expected = static_cast<double>(trials) / n;
    double chi2 = 0.0;
    for (int c : counts) {
        const double d = c - expected;
        chi2 += d * d / expected;
    }
    CHECK(chi2 < 20.5);
}
