#include "leapbridge/pipeline.hpp"
#include "leapbridge/version.hpp"

#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"

namespace {

// The config file must be applied before CLI11 binds flag values on top
// (flags beat file, file beats defaults), so --config is located with a
// plain argv scan before parsing.
std::string find_config_path(int argc, char ** argv) {
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--config" && i + 1 < argc) {
            return argv[i + 1];
        }
        if (arg.rfind("--config=", 0) == 0) {
            return arg.substr(9);
        }
    }
    return "";
}

void add_common(CLI::App & cmd, leapbridge::pipeline::RunConfig & config,
                std::string & config_path) {
    cmd.add_option("--input", config.input, "input JSONL path");
    cmd.add_option("--output", config.output, "output path");
    cmd.add_option("--seed", config.seed, "global seed; per-record seeds derive from it");
    cmd.add_option("--config", config_path, "JSON config file (flags override it)");
}

void add_endpoint(CLI::App & cmd, leapbridge::pipeline::RunConfig & config) {
    cmd.add_option("--endpoint", config.endpoint.base_url,
                   "endpoint base URL, e.g. http://localhost:8000/v1");
    cmd.add_option("--model", config.endpoint.model, "model name sent to the endpoint");
    cmd.add_option("--temperature", config.endpoint.temperature, "sampling temperature");
    cmd.add_option("--max-tokens", config.endpoint.max_tokens, "completion token budget");
    cmd.add_option("--timeout", config.endpoint.timeout_sec, "request timeout in seconds");
    cmd.add_option("--concurrency", config.endpoint.max_concurrent,
                   "max in-flight requests");
    cmd.add_option("--retries", config.endpoint.retry.count, "retries per request");
    cmd.add_option("--backoff-ms", config.endpoint.retry.backoff_ms,
                   "linear backoff unit in milliseconds");
}

}  // namespace

int main(int argc, char ** argv) {
    using leapbridge::pipeline::RunConfig;

    RunConfig config;
    const std::string preloaded = find_config_path(argc, argv);
    if (!preloaded.empty()) {
        try {
            config = leapbridge::pipeline::config_from_file(preloaded);
        } catch (const std::exception & e) {
            std::fprintf(stderr, "error: %s\n", e.what());
            return 1;
        }
    }

    CLI::App app{ "leapbridge: inject, detect and bridge reasoning gaps in "
                  "chain-of-thought corpora" };
    app.set_version_flag("--version", leapbridge::kVersion);
    app.require_subcommand(1);
    std::string config_path;  // parsed again here only so --config shows in help

    CLI::App * inject = app.add_subcommand("inject", "remove steps to manufacture gaps");
    add_common(*inject, config, config_path);
    inject->add_option("--delimiter-policy", config.delimiter_policy,
                       "policy for records carrying raw text");
    inject->add_option("--keep-prob", config.removal.keep_complete_prob,
                       "probability of keeping a chain complete");
    inject->add_option("--min-steps", config.removal.min_steps,
                       "minimum step count for eligibility");

    CLI::App * degrade = app.add_subcommand("degrade", "remove steps at a fixed severity");
    add_common(*degrade, config, config_path);
    degrade->add_option("--delimiter-policy", config.delimiter_policy,
                        "policy for records carrying raw text");
    degrade->add_option("--severity", config.severity, "mild | moderate | severe | extreme");

    CLI::App * render = app.add_subcommand("render", "emit supervised training samples");
    add_common(*render, config, config_path);
    render->add_option("--mode", config.mode, "detect | variant");

    CLI::App * bridge = app.add_subcommand("bridge", "query a model for missing steps");
    add_common(*bridge, config, config_path);
    bridge->add_option("--mode", config.mode, "detect | variant | variant_random");
    bridge->add_option("--gap", config.gap, "gap index for --mode variant");
    bridge->add_option("--stub", config.stub,
                       "offline completer: oracle | none | fixed | malformed");
    bridge->add_option("--stub-reply", config.stub_reply, "reply text for --stub fixed");
    add_endpoint(*bridge, config);

    CLI::App * insert = app.add_subcommand("insert", "splice predicted steps into chains");
    add_common(*insert, config, config_path);
    insert->add_option("--predictions", config.predictions, "predictions JSONL path");
    insert->add_option("--scores", config.scores, "optional per-gap score JSONL path");

    CLI::App * eval = app.add_subcommand("eval", "score predictions against ground truth");
    add_common(*eval, config, config_path);
    eval->add_option("--predictions", config.predictions, "predictions JSONL path");
    eval->add_option("--backend", config.backend, "exact | token_f1 | embedding");
    eval->add_flag("--micro", config.micro, "micro-average instead of macro");
    add_endpoint(*eval, config);

    CLI::App * stats = app.add_subcommand("stats", "category counts of a bridged corpus");
    add_common(*stats, config, config_path);

    CLI::App * ablate = app.add_subcommand("ablate", "drop inserted spans by category");
    add_common(*ablate, config, config_path);
    ablate->add_option("--category", config.category, "begin | middle | end | all");

    CLI::App * filter = app.add_subcommand("filter", "drop inserted spans below a score");
    add_common(*filter, config, config_path);
    filter->add_option("--threshold", config.threshold, "keep spans with score >= threshold");

    CLI11_PARSE(app, argc, argv);

    config.command = app.get_subcommands().front()->get_name();
    const leapbridge::pipeline::CommandResult result = leapbridge::pipeline::run(config);
    if (result.exit_code == 1) {
        std::fprintf(stderr, "error: %s\n", result.error.c_str());
        return 1;
    }
    if (result.manifest.contains("counts")) {
        std::fprintf(stdout, "%s\n", result.manifest["counts"].dump().c_str());
    }
    return result.exit_code;
}
