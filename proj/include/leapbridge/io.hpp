#pragma once

#include "leapbridge/augment.hpp"
#include "leapbridge/chain.hpp"
#include "leapbridge/injector.hpp"
#include "leapbridge/metrics.hpp"
#include "leapbridge/prompts.hpp"

#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"

namespace leapbridge::io {

using json = nlohmann::ordered_json;

// One similarity measurement for a single inserted bridge.
struct ScoreRecord {
    std::string chain_id;
    int gap_index = 0;
    double score = 0.0;
};

// A record the pipeline could not process, preserved for inspection.
struct RejectRecord {
    std::string chain_id;
    std::string error;
    std::string raw;
};

// One supervised sample rendered from an injected record.
struct TrainingRecord {
    std::string id;
    std::string system;
    std::string user;
    std::string target;
    std::string mode;  // "detect" | "variant"
};

json chain_to_json(const cot::Chain & chain);
cot::Chain chain_from_json(const json & j);

json injected_to_json(const inject::InjectedSample & sample);
inject::InjectedSample injected_from_json(const json & j);

json prediction_to_json(const prompt::BridgePrediction & pred);
prompt::BridgePrediction prediction_from_json(const json & j);

json bridged_to_json(const augment::BridgedChain & bridged);
augment::BridgedChain bridged_from_json(const json & j);

json score_to_json(const ScoreRecord & record);
ScoreRecord score_from_json(const json & j);

json reject_to_json(const RejectRecord & record);
json training_to_json(const TrainingRecord & record);

json report_to_json(const metrics::EvalReport & report);

// Streams a JSONL file line by line. Blank lines are skipped; any malformed
// line or handler failure is rethrown as SchemaError carrying the 1-based
// line number.
void for_each_jsonl(const std::string & path,
                    const std::function<void(size_t line, const json & j)> & fn);

std::vector<cot::Chain> read_chains(const std::string & path);
std::vector<inject::InjectedSample> read_injected(const std::string & path);
std::vector<prompt::BridgePrediction> read_predictions(const std::string & path);
std::vector<augment::BridgedChain> read_bridged(const std::string & path);
std::vector<ScoreRecord> read_scores(const std::string & path);

// Writes one compact JSON document per line. Throws std::runtime_error if
// the file cannot be opened or a write fails.
class JsonlWriter {
  public:
    explicit JsonlWriter(const std::string & path);
    void write(const json & j);
    size_t lines_written() const { return lines_; }

  private:
    std::string path_;
    std::ofstream out_;
    size_t lines_ = 0;
};

template <typename T, typename Fn>
void write_jsonl(const std::string & path, const std::vector<T> & records, Fn to_json) {
    JsonlWriter writer(path);
    for (const T & record : records) {
        writer.write(to_json(record));
    }
}

}  // namespace leapbridge::io
