#include "leapbridge/io.hpp"

#include "leapbridge/errors.hpp"

#include <stdexcept>

namespace leapbridge::io {

json chain_to_json(const cot::Chain & chain) {
    return json{
        { "id", chain.id },
        { "question", chain.question },
        { "steps", chain.steps },
        { "delimiter", chain.delimiter },
    };
}

cot::Chain chain_from_json(const json & j) {
    cot::Chain chain;
    chain.id = j.at("id").get<std::string>();
    chain.question = j.at("question").get<std::string>();
    chain.steps = j.at("steps").get<std::vector<std::string>>();
    chain.delimiter = j.at("delimiter").get<std::string>();
    return chain;
}

json injected_to_json(const inject::InjectedSample & sample) {
    json leaps = json::array();
    for (const inject::LeapRecord & leap : sample.leaps) {
        leaps.push_back(json{
            { "gap_index", leap.gap_index },
            { "missing", leap.missing_steps },
        });
    }
    return json{
        { "id", sample.id },
        { "source_id", sample.source_id },
        { "question", sample.incomplete.question },
        { "steps", sample.incomplete.steps },
        { "delimiter", sample.incomplete.delimiter },
        { "leaps", std::move(leaps) },
        { "seed", sample.seed },
        { "kept_complete", sample.kept_complete },
    };
}

inject::InjectedSample injected_from_json(const json & j) {
    inject::InjectedSample sample;
    sample.id = j.at("id").get<std::string>();
    sample.source_id = j.at("source_id").get<std::string>();
    sample.incomplete.id = sample.id;
    sample.incomplete.question = j.at("question").get<std::string>();
    sample.incomplete.steps = j.at("steps").get<std::vector<std::string>>();
    sample.incomplete.delimiter = j.at("delimiter").get<std::string>();
    for (const json & leap_json : j.at("leaps")) {
        inject::LeapRecord leap;
        leap.gap_index = leap_json.at("gap_index").get<int>();
        leap.missing_steps = leap_json.at("missing").get<std::vector<std::string>>();
        sample.leaps.push_back(std::move(leap));
    }
    sample.seed = j.at("seed").get<uint64_t>();
    sample.kept_complete = j.at("kept_complete").get<bool>();
    return sample;
}

json prediction_to_json(const prompt::BridgePrediction & pred) {
    json leaps = json::array();
    for (const prompt::PredictedLeap & leap : pred.leaps) {
        leaps.push_back(json{
            { "gap_index", leap.gap_index },
            { "content", leap.content },
        });
    }
    return json{
        { "chain_id", pred.chain_id },
        { "leaps", std::move(leaps) },
        { "explicit_none", pred.explicit_none },
        { "warnings", pred.warnings },
        { "raw", pred.raw },
    };
}

prompt::BridgePrediction prediction_from_json(const json & j) {
    prompt::BridgePrediction pred;
    pred.chain_id = j.at("chain_id").get<std::string>();
    for (const json & leap_json : j.at("leaps")) {
        prompt::PredictedLeap leap;
        leap.gap_index = leap_json.at("gap_index").get<int>();
        leap.content = leap_json.at("content").get<std::string>();
        pred.leaps.push_back(std::move(leap));
    }
    pred.explicit_none = j.at("explicit_none").get<bool>();
    pred.warnings = j.at("warnings").get<std::vector<std::string>>();
    pred.raw = j.at("raw").get<std::string>();
    return pred;
}

json bridged_to_json(const augment::BridgedChain & bridged) {
    json spans = json::array();
    for (const augment::InsertedSpan & span : bridged.inserted) {
        json span_json{
            { "gap_index", span.gap_index },
            { "start", span.start },
            { "len", span.len },
            { "category", augment::to_string(span.category) },
        };
        if (span.score.has_value()) {
            span_json["score"] = *span.score;
        } else {
            span_json["score"] = nullptr;
        }
        spans.push_back(std::move(span_json));
    }
    return json{
        { "id", bridged.chain.id },
        { "question", bridged.chain.question },
        { "steps", bridged.chain.steps },
        { "delimiter", bridged.chain.delimiter },
        { "inserted", std::move(spans) },
    };
}

augment::BridgedChain bridged_from_json(const json & j) {
    augment::BridgedChain bridged;
    bridged.chain.id = j.at("id").get<std::string>();
    bridged.chain.question = j.at("question").get<std::string>();
    bridged.chain.steps = j.at("steps").get<std::vector<std::string>>();
    bridged.chain.delimiter = j.at("delimiter").get<std::string>();
    for (const json & span_json : j.at("inserted")) {
        augment::InsertedSpan span;
        span.gap_index = span_json.at("gap_index").get<int>();
        span.start = span_json.at("start").get<int>();
        span.len = span_json.at("len").get<int>();
        span.category = augment::category_from_string(span_json.at("category").get<std::string>());
        const json & score = span_json.at("score");
        if (!score.is_null()) {
            span.score = score.get<double>();
        }
        bridged.inserted.push_back(std::move(span));
    }
    return bridged;
}

json score_to_json(const ScoreRecord & record) {
    return json{
        { "chain_id", record.chain_id },
        { "gap_index", record.gap_index },
        { "score", record.score },
    };
}

ScoreRecord score_from_json(const json & j) {
    ScoreRecord record;
    record.chain_id = j.at("chain_id").get<std::string>();
    record.gap_index = j.at("gap_index").get<int>();
    record.score = j.at("score").get<double>();
    return record;
}

json reject_to_json(const RejectRecord & record) {
    return json{
        { "chain_id", record.chain_id },
        { "error", record.error },
        { "raw", record.raw },
    };
}

json training_to_json(const TrainingRecord & record) {
    return json{
        { "id", record.id },
        { "system", record.system },
        { "user", record.user },
        { "target", record.target },
        { "mode", record.mode },
    };
}

json report_to_json(const metrics::EvalReport & report) {
    json per_sample = json::array();
    for (const metrics::SampleEval & row : report.per_sample) {
        per_sample.push_back(json{
            { "chain_id", row.chain_id },
            { "tp", row.position.tp },
            { "precision", row.position.precision },
            { "recall", row.position.recall },
            { "redundancy", row.position.redundancy },
            { "pos_aware", row.pos_aware },
            { "n_gt", row.n_gt },
            { "n_pred", row.n_pred },
            { "missing_prediction", row.missing_prediction },
        });
    }
    return json{
        { "backend", report.backend },
        { "mode", report.averaging },
        { "n", report.n },
        { "missing_predictions", report.missing_predictions },
        { "macro",
          json{
              { "precision", report.aggregate.precision },
              { "recall", report.aggregate.recall },
              { "redundancy", report.aggregate.redundancy },
              { "overall", report.aggregate.overall },
          } },
        { "per_sample", std::move(per_sample) },
    };
}

void for_each_jsonl(const std::string & path,
                    const std::function<void(size_t line, const json & j)> & fn) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open input file: " + path);
    }
    std::string line;
    size_t line_number = 0;
    while (std::getline(in, line)) {
        line_number += 1;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.find_first_not_of(" \t") == std::string::npos) {
            continue;
        }
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) {
            throw SchemaError(path + ": invalid JSON", line_number);
        }
        try {
            fn(line_number, j);
        } catch (const SchemaError &) {
            throw;
        } catch (const std::exception & e) {
            throw SchemaError(path + ": " + e.what(), line_number);
        }
    }
}

std::vector<cot::Chain> read_chains(const std::string & path) {
    std::vector<cot::Chain> out;
    for_each_jsonl(path, [&](size_t, const json & j) { out.push_back(chain_from_json(j)); });
    return out;
}

std::vector<inject::InjectedSample> read_injected(const std::string & path) {
    std::vector<inject::InjectedSample> out;
    for_each_jsonl(path, [&](size_t, const json & j) { out.push_back(injected_from_json(j)); });
    return out;
}

std::vector<prompt::BridgePrediction> read_predictions(const std::string & path) {
    std::vector<prompt::BridgePrediction> out;
    for_each_jsonl(path, [&](size_t, const json & j) { out.push_back(prediction_from_json(j)); });
    return out;
}

std::vector<augment::BridgedChain> read_bridged(const std::string & path) {
    std::vector<augment::BridgedChain> out;
    for_each_jsonl(path, [&](size_t, const json & j) { out.push_back(bridged_from_json(j)); });
    return out;
}

std::vector<ScoreRecord> read_scores(const std::string & path) {
    std::vector<ScoreRecord> out;
    for_each_jsonl(path, [&](size_t, const json & j) { out.push_back(score_from_json(j)); });
    return out;
}

JsonlWriter::JsonlWriter(const std::string & path) : path_(path), out_(path, std::ios::binary) {
    if (!out_) {
        throw std::runtime_error("cannot open output file: " + path);
    }
}

void JsonlWriter::write(const json & j) {
    // flushed per line so an interrupted run leaves only complete records
    out_ << j.dump() << '\n' << std::flush;
    if (!out_) {
        throw std::runtime_error("write failed: " + path_);
    }
    lines_ += 1;
}

}  // namespace leapbridge::io
