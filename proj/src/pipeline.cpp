#include "leapbridge/pipeline.hpp"

#include "leapbridge/augment.hpp"
#include "leapbridge/errors.hpp"
#include "leapbridge/metrics.hpp"
#include "leapbridge/prompts.hpp"
#include "leapbridge/rng.hpp"
#include "leapbridge/version.hpp"

#include <cstdlib>
#include <fstream>
#include <map>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>
#include <utility>

namespace leapbridge::pipeline {

using io::json;

json config_to_json(const RunConfig & c) {
    return json{
        { "command", c.command },
        { "input", c.input },
        { "output", c.output },
        { "predictions", c.predictions },
        { "scores", c.scores },
        { "delimiter_policy", c.delimiter_policy },
        { "seed", c.seed },
        { "removal",
          json{
              { "min_steps", c.removal.min_steps },
              { "short_chain_max", c.removal.short_chain_max },
              { "k_del_short", json::array({ c.removal.k_del_short.lo, c.removal.k_del_short.hi }) },
              { "k_del_long", json::array({ c.removal.k_del_long.lo, c.removal.k_del_long.hi }) },
              { "keep_complete_prob", c.removal.keep_complete_prob },
              { "allow_remove_first", c.removal.allow_remove_first },
          } },
        { "severity", c.severity },
        { "mode", c.mode },
        { "gap", c.gap },
        { "stub", c.stub },
        { "stub_reply", c.stub_reply },
        { "endpoint",
          json{
              { "base_url", c.endpoint.base_url },
              { "model", c.endpoint.model },
              { "api_key", c.endpoint.api_key },
              { "temperature", c.endpoint.temperature },
              { "max_tokens", c.endpoint.max_tokens },
              { "timeout_sec", c.endpoint.timeout_sec },
              { "max_concurrent", c.endpoint.max_concurrent },
              { "retry",
                json{
                    { "count", c.endpoint.retry.count },
                    { "backoff_ms", c.endpoint.retry.backoff_ms },
                } },
          } },
        { "backend", c.backend },
        { "micro", c.micro },
        { "threshold", c.threshold },
        { "category", c.category },
    };
}

namespace {

[[noreturn]] void unknown_key(const std::string & scope, const std::string & key) {
    throw std::invalid_argument("unknown config key: " + scope + key);
}

void apply_range(inject::IntRange & range, const json & j) {
    if (!j.is_array() || j.size() != 2) {
        throw std::invalid_argument("removal range must be a two-element array [lo, hi]");
    }
    range.lo = j[0].get<int>();
    range.hi = j[1].get<int>();
}

void apply_removal(inject::RemovalPolicy & removal, const json & j) {
    for (const auto & [key, value] : j.items()) {
        if (key == "min_steps") {
            removal.min_steps = value.get<int>();
        } else if (key == "short_chain_max") {
            removal.short_chain_max = value.get<int>();
        } else if (key == "k_del_short") {
            apply_range(removal.k_del_short, value);
        } else if (key == "k_del_long") {
            apply_range(removal.k_del_long, value);
        } else if (key == "keep_complete_prob") {
            removal.keep_complete_prob = value.get<double>();
        } else if (key == "allow_remove_first") {
            removal.allow_remove_first = value.get<bool>();
        } else {
            unknown_key("removal.", key);
        }
    }
}

void apply_endpoint(client::ModelEndpoint & endpoint, const json & j) {
    for (const auto & [key, value] : j.items()) {
        if (key == "base_url") {
            endpoint.base_url = value.get<std::string>();
        } else if (key == "model") {
            endpoint.model = value.get<std::string>();
        } else if (key == "api_key") {
            endpoint.api_key = value.get<std::string>();
        } else if (key == "temperature") {
            endpoint.temperature = value.get<double>();
        } else if (key == "max_tokens") {
            endpoint.max_tokens = value.get<int>();
        } else if (key == "timeout_sec") {
            endpoint.timeout_sec = value.get<int>();
        } else if (key == "max_concurrent") {
            endpoint.max_concurrent = value.get<int>();
        } else if (key == "retry") {
            for (const auto & [rkey, rvalue] : value.items()) {
                if (rkey == "count") {
                    endpoint.retry.count = rvalue.get<int>();
                } else if (rkey == "backoff_ms") {
                    endpoint.retry.backoff_ms = rvalue.get<int>();
                } else {
                    unknown_key("endpoint.retry.", rkey);
                }
            }
        } else {
            unknown_key("endpoint.", key);
        }
    }
}

}  // namespace

void config_apply_json(RunConfig & config, const json & j) {
    if (!j.is_object()) {
        throw std::invalid_argument("config must be a JSON object");
    }
    for (const auto & [key, value] : j.items()) {
        if (key == "command") {
            config.command = value.get<std::string>();
        } else if (key == "input") {
            config.input = value.get<std::string>();
        } else if (key == "output") {
            config.output = value.get<std::string>();
        } else if (key == "predictions") {
            config.predictions = value.get<std::string>();
        } else if (key == "scores") {
            config.scores = value.get<std::string>();
        } else if (key == "delimiter_policy") {
            config.delimiter_policy = value.get<std::string>();
        } else if (key == "seed") {
            config.seed = value.get<uint64_t>();
        } else if (key == "removal") {
            apply_removal(config.removal, value);
        } else if (key == "severity") {
            config.severity = value.get<std::string>();
        } else if (key == "mode") {
            config.mode = value.get<std::string>();
        } else if (key == "gap") {
            config.gap = value.get<int>();
        } else if (key == "stub") {
            config.stub = value.get<std::string>();
        } else if (key == "stub_reply") {
            config.stub_reply = value.get<std::string>();
        } else if (key == "endpoint") {
            apply_endpoint(config.endpoint, value);
        } else if (key == "backend") {
            config.backend = value.get<std::string>();
        } else if (key == "micro") {
            config.micro = value.get<bool>();
        } else if (key == "threshold") {
            config.threshold = value.get<double>();
        } else if (key == "category") {
            config.category = value.get<std::string>();
        } else {
            unknown_key("", key);
        }
    }
}

RunConfig config_from_file(const std::string & path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open config file: " + path);
    }
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) {
        throw std::invalid_argument("config file is not valid JSON: " + path);
    }
    RunConfig config;
    config_apply_json(config, j);
    return config;
}

std::string manifest_path(const std::string & output) {
    return output + ".run_manifest.json";
}

std::string rejects_path(const std::string & output) {
    return output + ".rejects.jsonl";
}

namespace {

void require(bool ok, const std::string & message) {
    if (!ok) {
        throw std::invalid_argument(message);
    }
}

json make_manifest(const RunConfig & config, json counts) {
    return json{
        { "version", kVersion },
        { "command", config.command },
        { "config", config_to_json(config) },
        { "counts", std::move(counts) },
    };
}

void write_json_file(const std::string & path, const json & j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open output file: " + path);
    }
    out << j.dump(2) << '\n';
    if (!out) {
        throw std::runtime_error("write failed: " + path);
    }
}

CommandResult finish(const RunConfig & config, json counts, int exit_code = 0) {
    CommandResult result;
    result.exit_code = exit_code;
    result.manifest = make_manifest(config, std::move(counts));
    write_json_file(manifest_path(config.output), result.manifest);
    return result;
}

// chains.jsonl records normally carry pre-split "steps"; a record may
// instead carry raw "text", which is segmented with the configured policy
// (or the record's own delimiter when present).
cot::Chain chain_from_record(const json & j, const cot::DelimiterPolicy & policy) {
    if (j.contains("steps")) {
        return io::chain_from_json(j);
    }
    cot::DelimiterPolicy effective = policy;
    if (j.contains("delimiter")) {
        effective.delimiter = j.at("delimiter").get<std::string>();
    }
    cot::Chain chain;
    chain.id = j.at("id").get<std::string>();
    chain.question = j.at("question").get<std::string>();
    chain.delimiter = effective.delimiter;
    chain.steps = cot::segment(j.at("text").get<std::string>(), effective);
    return chain;
}

const cot::DelimiterPolicy & named_policy(const std::string & name) {
    const cot::DelimiterPolicy * policy = cot::find_policy(name);
    if (policy == nullptr) {
        throw std::invalid_argument("unknown delimiter policy: " + name);
    }
    return *policy;
}

metrics::EmbeddingConfig embedding_config(const RunConfig & config) {
    metrics::EmbeddingConfig emb;
    emb.base_url = config.endpoint.base_url;
    emb.model = config.endpoint.model;
    emb.api_key = config.endpoint.api_key;
    if (emb.api_key.empty()) {
        const char * env = std::getenv("LEAPBRIDGE_API_KEY");
        emb.api_key = env == nullptr ? std::string() : std::string(env);
    }
    emb.timeout_sec = config.endpoint.timeout_sec;
    emb.max_retries = config.endpoint.retry.count;
    emb.backoff_ms = config.endpoint.retry.backoff_ms;
    return emb;
}

}  // namespace

CommandResult cmd_inject(const RunConfig & config) {
    require(!config.input.empty() && !config.output.empty(), "inject needs --input and --output");
    inject::check_policy(config.removal);
    const cot::DelimiterPolicy & policy = named_policy(config.delimiter_policy);

    io::JsonlWriter writer(config.output);
    size_t read = 0, injected = 0, ineligible = 0, kept_complete = 0;
    io::for_each_jsonl(config.input, [&](size_t, const json & j) {
        read += 1;
        const cot::Chain chain = chain_from_record(j, policy);
        if (!inject::eligible(chain, config.removal)) {
            ineligible += 1;
            return;
        }
        const inject::InjectedSample sample =
            inject::inject(chain, config.removal, rng::record_seed(config.seed, chain.id));
        kept_complete += sample.kept_complete ? 1 : 0;
        writer.write(io::injected_to_json(sample));
        injected += 1;
    });

    return finish(config, json{
                              { "read", read },
                              { "injected", injected },
                              { "ineligible", ineligible },
                              { "kept_complete", kept_complete },
                          });
}

CommandResult cmd_degrade(const RunConfig & config) {
    require(!config.input.empty() && !config.output.empty(), "degrade needs --input and --output");
    const inject::Severity severity = inject::severity_from_string(config.severity);
    const cot::DelimiterPolicy & policy = named_policy(config.delimiter_policy);

    io::JsonlWriter writer(config.output);
    size_t read = 0;
    io::for_each_jsonl(config.input, [&](size_t, const json & j) {
        read += 1;
        const cot::Chain chain = chain_from_record(j, policy);
        const cot::Chain degraded =
            inject::degrade(chain, severity, rng::record_seed(config.seed, chain.id));
        writer.write(io::chain_to_json(degraded));
    });

    return finish(config, json{ { "read", read }, { "written", read } });
}

CommandResult cmd_render(const RunConfig & config) {
    require(!config.input.empty() && !config.output.empty(), "render needs --input and --output");
    const bool variant = config.mode == "variant";
    require(variant || config.mode == "detect", "render --mode must be detect or variant");

    io::JsonlWriter writer(config.output);
    size_t read = 0, rendered = 0, skipped_complete = 0;
    io::for_each_jsonl(config.input, [&](size_t, const json & j) {
        read += 1;
        const inject::InjectedSample sample = io::injected_from_json(j);
        prompt::TrainingSample ts;
        if (variant) {
            if (sample.kept_complete || sample.leaps.empty()) {
                skipped_complete += 1;
                return;
            }
            rng::Engine g(rng::record_seed(config.seed, sample.id));
            ts = prompt::render_variant(sample, rng::below(g, sample.leaps.size()));
        } else {
            ts = prompt::render_detect(sample);
        }
        writer.write(io::training_to_json(io::TrainingRecord{
            sample.id,
            ts.prompt.system,
            ts.prompt.user,
            ts.target,
            prompt::to_string(ts.mode),
        }));
        rendered += 1;
    });

    return finish(config, json{
                              { "read", read },
                              { "rendered", rendered },
                              { "skipped_complete", skipped_complete },
                          });
}

namespace {

std::unique_ptr<client::Completer> make_completer(const RunConfig & config,
                                                  std::vector<inject::InjectedSample> samples) {
    if (config.stub.empty()) {
        return std::make_unique<client::HttpCompleter>(config.endpoint);
    }
    if (config.stub == "oracle") {
        return client::make_oracle_stub(std::move(samples));
    }
    if (config.stub == "none") {
        return client::make_none_stub();
    }
    if (config.stub == "fixed") {
        return client::make_fixed_stub(config.stub_reply);
    }
    if (config.stub == "malformed") {
        return client::make_malformed_stub();
    }
    throw std::invalid_argument("unknown stub kind: " + config.stub);
}

struct BridgeOutcome {
    bool ok = false;
    prompt::BridgePrediction pred;
    std::string raw;
    std::string error;
};

BridgeOutcome bridge_one(const inject::InjectedSample & sample, const RunConfig & config,
                         client::Completer & completer) {
    BridgeOutcome outcome;
    const cot::Chain & chain = sample.incomplete;
    const int n_steps = static_cast<int>(chain.steps.size());
    try {
        prompt::PromptPair pp;
        int gap = -1;
        if (config.mode == "detect") {
            pp = prompt::render_detect_prompt(chain);
        } else {
            gap = config.mode == "variant"
                      ? config.gap
                      : prompt::random_gap(n_steps, rng::record_seed(config.seed, sample.id));
            pp = prompt::render_variant_prompt(chain, gap);
        }
        outcome.raw = completer.complete(pp, chain.id);
        if (config.mode == "detect") {
            outcome.pred = prompt::parse_output(outcome.raw, n_steps);
            outcome.pred.chain_id = chain.id;
        } else {
            outcome.pred.chain_id = chain.id;
            outcome.pred.raw = outcome.raw;
            outcome.pred.leaps.push_back({ gap, prompt::parse_variant_output(outcome.raw) });
        }
        outcome.ok = true;
    } catch (const std::exception & e) {
        outcome.ok = false;
        outcome.error = e.what();
    }
    return outcome;
}

}  // namespace

CommandResult cmd_bridge(const RunConfig & config) {
    require(!config.input.empty() && !config.output.empty(), "bridge needs --input and --output");
    require(config.mode == "detect" || config.mode == "variant" || config.mode == "variant_random",
            "bridge --mode must be detect, variant or variant_random");
    require(config.mode != "variant" || config.gap >= 0,
            "bridge --mode variant needs a non-negative --gap");
    client::check_endpoint(config.endpoint);

    const std::vector<inject::InjectedSample> samples = io::read_injected(config.input);
    std::unique_ptr<client::Completer> completer =
        make_completer(config, config.stub == "oracle" ? samples
                                                       : std::vector<inject::InjectedSample>{});

    std::vector<BridgeOutcome> outcomes(samples.size());
    client::parallel_for(samples.size(), config.endpoint.max_concurrent, [&](size_t i) {
        outcomes[i] = bridge_one(samples[i], config, *completer);
    });

    io::JsonlWriter writer(config.output);
    io::JsonlWriter reject_writer(rejects_path(config.output));
    size_t predicted = 0, rejected = 0;
    for (size_t i = 0; i < samples.size(); ++i) {
        if (outcomes[i].ok) {
            writer.write(io::prediction_to_json(outcomes[i].pred));
            predicted += 1;
        } else {
            reject_writer.write(io::reject_to_json(
                io::RejectRecord{ samples[i].id, outcomes[i].error, outcomes[i].raw }));
            rejected += 1;
        }
    }

    return finish(config,
                  json{
                      { "read", samples.size() },
                      { "predicted", predicted },
                      { "rejected", rejected },
                  },
                  rejected > 0 ? 2 : 0);
}

CommandResult cmd_insert(const RunConfig & config) {
    require(!config.input.empty() && !config.output.empty() && !config.predictions.empty(),
            "insert needs --input, --predictions and --output");

    const std::vector<prompt::BridgePrediction> preds = io::read_predictions(config.predictions);
    std::unordered_map<std::string, const prompt::BridgePrediction *> preds_by_id;
    for (const prompt::BridgePrediction & pred : preds) {
        preds_by_id[pred.chain_id] = &pred;
    }

    std::map<std::pair<std::string, int>, double> score_by_gap;
    if (!config.scores.empty()) {
        for (const io::ScoreRecord & record : io::read_scores(config.scores)) {
            score_by_gap[{ record.chain_id, record.gap_index }] = record.score;
        }
    }

    io::JsonlWriter writer(config.output);
    io::JsonlWriter reject_writer(rejects_path(config.output));
    size_t read = 0, inserted_spans = 0, missing_predictions = 0, rejected = 0,
           scored_spans = 0;
    std::unordered_set<std::string> seen_ids;
    io::for_each_jsonl(config.input, [&](size_t, const json & j) {
        read += 1;
        const inject::InjectedSample sample = io::injected_from_json(j);
        seen_ids.insert(sample.id);
        auto it = preds_by_id.find(sample.id);
        const prompt::BridgePrediction empty{ sample.id, {}, true, {}, "" };
        const prompt::BridgePrediction & pred = it == preds_by_id.end() ? empty : *it->second;
        if (it == preds_by_id.end()) {
            missing_predictions += 1;
        }
        try {
            augment::BridgedChain bridged = augment::insert_bridges(sample.incomplete, pred);
            for (augment::InsertedSpan & span : bridged.inserted) {
                auto score_it = score_by_gap.find({ sample.id, span.gap_index });
                if (score_it != score_by_gap.end()) {
                    span.score = score_it->second;
                    scored_spans += 1;
                }
            }
            inserted_spans += bridged.inserted.size();
            writer.write(io::bridged_to_json(bridged));
        } catch (const std::exception & e) {
            reject_writer.write(io::reject_to_json(io::RejectRecord{ sample.id, e.what(), pred.raw }));
            rejected += 1;
        }
    });

    size_t orphan_predictions = 0;
    for (const prompt::BridgePrediction & pred : preds) {
        if (!seen_ids.count(pred.chain_id)) {
            orphan_predictions += 1;
        }
    }

    return finish(config,
                  json{
                      { "read", read },
                      { "written", read - rejected },
                      { "inserted_spans", inserted_spans },
                      { "scored_spans", scored_spans },
                      { "missing_predictions", missing_predictions },
                      { "orphan_predictions", orphan_predictions },
                      { "rejected", rejected },
                  },
                  rejected > 0 ? 2 : 0);
}

CommandResult cmd_eval(const RunConfig & config) {
    require(!config.input.empty() && !config.output.empty() && !config.predictions.empty(),
            "eval needs --input (ground truth), --predictions and --output");

    const std::vector<inject::InjectedSample> gt = io::read_injected(config.input);
    const std::vector<prompt::BridgePrediction> preds = io::read_predictions(config.predictions);
    const std::unique_ptr<metrics::SimilarityBackend> backend =
        metrics::make_backend(config.backend, embedding_config(config));

    const metrics::EvalReport report = metrics::evaluate_dataset(gt, preds, *backend, config.micro);
    write_json_file(config.output, io::report_to_json(report));

    return finish(config, json{
                              { "samples", report.n },
                              { "predictions", preds.size() },
                              { "missing_predictions", report.missing_predictions },
                          });
}

CommandResult cmd_stats(const RunConfig & config) {
    require(!config.input.empty() && !config.output.empty(), "stats needs --input and --output");

    size_t chains = 0, chains_with_insertions = 0;
    size_t begin_count = 0, middle_count = 0, end_count = 0;
    io::for_each_jsonl(config.input, [&](size_t, const json & j) {
        chains += 1;
        const augment::BridgedChain bridged = io::bridged_from_json(j);
        if (!bridged.inserted.empty()) {
            chains_with_insertions += 1;
        }
        for (const augment::InsertedSpan & span : bridged.inserted) {
            switch (span.category) {
                case augment::Category::begin:
                    begin_count += 1;
                    break;
                case augment::Category::middle:
                    middle_count += 1;
                    break;
                case augment::Category::end:
                    end_count += 1;
                    break;
            }
        }
    });

    const size_t total = begin_count + middle_count + end_count;
    const double denom = total == 0 ? 1.0 : static_cast<double>(total);
    const json stats{
        { "chains", chains },
        { "chains_with_insertions", chains_with_insertions },
        { "begin", begin_count },
        { "middle", middle_count },
        { "end", end_count },
        { "total", total },
        { "ratios",
          json{
              { "begin", static_cast<double>(begin_count) / denom },
              { "middle", static_cast<double>(middle_count) / denom },
              { "end", static_cast<double>(end_count) / denom },
          } },
    };
    write_json_file(config.output, stats);

    return finish(config, stats);
}

CommandResult cmd_ablate(const RunConfig & config) {
    require(!config.input.empty() && !config.output.empty(), "ablate needs --input and --output");
    require(!config.category.empty(), "ablate needs --category (begin|middle|end|all)");
    const bool all = config.category == "all";
    const augment::Category category =
        all ? augment::Category::begin : augment::category_from_string(config.category);

    io::JsonlWriter writer(config.output);
    size_t read = 0, spans_before = 0, spans_after = 0;
    io::for_each_jsonl(config.input, [&](size_t, const json & j) {
        read += 1;
        const augment::BridgedChain bridged = io::bridged_from_json(j);
        spans_before += bridged.inserted.size();
        augment::BridgedChain out;
        if (all) {
            out.chain = augment::strip_all(bridged);
        } else {
            out = augment::ablate_category(bridged, category);
        }
        spans_after += out.inserted.size();
        writer.write(io::bridged_to_json(out));
    });

    return finish(config, json{
                              { "read", read },
                              { "spans_before", spans_before },
                              { "spans_after", spans_after },
                              { "removed", spans_before - spans_after },
                          });
}

CommandResult cmd_filter(const RunConfig & config) {
    require(!config.input.empty() && !config.output.empty(), "filter needs --input and --output");

    io::JsonlWriter writer(config.output);
    io::JsonlWriter reject_writer(rejects_path(config.output));
    size_t read = 0, spans_before = 0, spans_after = 0, rejected = 0;
    io::for_each_jsonl(config.input, [&](size_t, const json & j) {
        read += 1;
        const augment::BridgedChain bridged = io::bridged_from_json(j);
        try {
            const augment::BridgedChain out = augment::filter_by_score(bridged, config.threshold);
            spans_before += bridged.inserted.size();
            spans_after += out.inserted.size();
            writer.write(io::bridged_to_json(out));
        } catch (const std::exception & e) {
            reject_writer.write(
                io::reject_to_json(io::RejectRecord{ bridged.chain.id, e.what(), "" }));
            rejected += 1;
        }
    });

    return finish(config,
                  json{
                      { "read", read },
                      { "spans_before", spans_before },
                      { "spans_after", spans_after },
                      { "removed", spans_before - spans_after },
                      { "rejected", rejected },
                  },
                  rejected > 0 ? 2 : 0);
}

CommandResult run(const RunConfig & config) {
    try {
        if (config.command == "inject") {
            return cmd_inject(config);
        }
        if (config.command == "degrade") {
            return cmd_degrade(config);
        }
        if (config.command == "render") {
            return cmd_render(config);
        }
        if (config.command == "bridge") {
            return cmd_bridge(config);
        }
        if (config.command == "insert") {
            return cmd_insert(config);
        }
        if (config.command == "eval") {
            return cmd_eval(config);
        }
        if (config.command == "stats") {
            return cmd_stats(config);
        }
        if (config.command == "ablate") {
            return cmd_ablate(config);
        }
        if (config.command == "filter") {
            return cmd_filter(config);
        }
        throw std::invalid_argument("unknown command: " + config.command);
    } catch (const std::exception & e) {
        CommandResult result;
        result.exit_code = 1;
        result.error = e.what();
        return result;
    }
}

}  // namespace leapbridge::pipeline
