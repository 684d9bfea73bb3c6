#pragma once

#include "leapbridge/client.hpp"
#include "leapbridge/injector.hpp"
#include "leapbridge/io.hpp"

#include <cstdint>
#include <string>

namespace leapbridge::pipeline {

// Full resolved settings for one command run. Defaults here are the
// shipped defaults; a JSON config file and CLI flags override field by
// field. The manifest written next to every output embeds this struct, so
// a manifest alone is enough to repeat the run.
struct RunConfig {
    std::string command;
    std::string input;
    std::string output;
    std::string predictions;  // insert, eval
    std::string scores;       // insert: optional per-gap score sidecar

    // Used only when a chains.jsonl record carries raw "text" instead of
    // pre-split "steps".
    std::string delimiter_policy = "newline";

    uint64_t seed = 0;

    inject::RemovalPolicy removal;      // inject
    std::string severity = "moderate";  // degrade

    std::string mode = "detect";  // render/bridge: detect | variant | variant_random
    int gap = -1;                 // bridge --mode variant: fixed gap index

    std::string stub;        // bridge: "" (live endpoint) | oracle | none | fixed | malformed
    std::string stub_reply;  // bridge --stub fixed: the canned text
    client::ModelEndpoint endpoint;

    std::string backend = "exact";  // eval: exact | token_f1 | embedding
    bool micro = false;             // eval: micro-average instead of macro

    double threshold = 0.0;  // filter
    std::string category;    // ablate: begin | middle | end | all
};

io::json config_to_json(const RunConfig & config);

// Overrides fields present in j; leaves the rest untouched. Unknown keys
// raise std::invalid_argument so config typos fail loudly.
void config_apply_json(RunConfig & config, const io::json & j);

RunConfig config_from_file(const std::string & path);

struct CommandResult {
    int exit_code = 0;   // 0 ok, 1 config/schema error, 2 rejects non-empty
    std::string error;   // set when exit_code == 1
    io::json manifest;   // what was written to <output>.run_manifest.json
};

// Paths of the sidecar files written next to an output.
std::string manifest_path(const std::string & output);
std::string rejects_path(const std::string & output);

CommandResult cmd_inject(const RunConfig & config);
CommandResult cmd_degrade(const RunConfig & config);
CommandResult cmd_render(const RunConfig & config);
CommandResult cmd_bridge(const RunConfig & config);
CommandResult cmd_insert(const RunConfig & config);
CommandResult cmd_eval(const RunConfig & config);
CommandResult cmd_stats(const RunConfig & config);
CommandResult cmd_ablate(const RunConfig & config);
CommandResult cmd_filter(const RunConfig & config);

// Dispatches on config.command; converts thrown config/schema errors into
// exit code 1 with the message in CommandResult::error.
CommandResult run(const RunConfig & config);

}  // namespace leapbridge::pipeline
