#pragma once

#include "leapbridge/injector.hpp"
#include "leapbridge/prompts.hpp"

#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace leapbridge::metrics {

// Exact-match position scores for one sample. precision + redundancy == 1
// whenever predictions exist.
struct PositionMetrics {
    int tp = 0;
    double precision = 0.0;
    double recall = 0.0;
    double redundancy = 0.0;

    bool operator==(const PositionMetrics &) const = default;
};

// TP = |G ∩ P|. Zero-denominator conventions: with no predictions and no
// ground truth the sample counts as perfect abstention (precision = recall
// = 1); predictions on an empty ground truth keep the plain formulas;
// redundancy is 0 whenever |P| = 0.
PositionMetrics position_metrics(const std::set<int> & gt, const std::set<int> & pred);

// Text similarity in [0, 1]; sim(a, a) == 1 and sim is symmetric for the
// local backends.
class SimilarityBackend {
  public:
    virtual ~SimilarityBackend() = default;
    virtual std::string_view name() const = 0;
    virtual double score(std::string_view a, std::string_view b) = 0;
};

struct Normalization {
    bool collapse_whitespace = true;
    bool casefold = false;
};

// Indicator of normalized equality.
std::unique_ptr<SimilarityBackend> make_exact_backend(Normalization norm = {});

// F1 of multiset token overlap after lowercasing and whitespace
// tokenization. The deterministic CI backend.
std::unique_ptr<SimilarityBackend> make_token_f1_backend();

struct EmbeddingConfig {
    std::string base_url;  // POST {base_url}/embeddings
    std::string model;
    std::string api_key;
    int timeout_sec = 30;
    int max_retries = 2;
    int backoff_ms = 200;
};

// Cosine of endpoint-provided vectors, clamped to [0, 1]. Endpoint failures
// surface as BackendUnavailableError, never as a silent substitute.
std::unique_ptr<SimilarityBackend> make_embedding_backend(EmbeddingConfig config);

// "exact" | "token_f1" | "embedding" (the latter needs config).
std::unique_ptr<SimilarityBackend> make_backend(std::string_view name,
                                                const EmbeddingConfig & embedding = {});

// Mean similarity of generated vs. reference content over matched gaps,
// divided by the ground-truth gap count; unmatched ground-truth gaps
// contribute zero. With no ground-truth gaps, an empty prediction scores 1
// and a non-empty one scores 0.
double pos_aware_score(const std::vector<inject::LeapRecord> & gt,
                       const prompt::BridgePrediction & pred, SimilarityBackend & backend,
                       std::string_view delimiter);

// How the exhaustive full-position baseline turns similarity scores into
// keep/drop decisions. The score is sim(candidate, flanking-step
// concatenation) in every mode.
enum class FilterMode {
    ge_threshold,     // keep iff score >= threshold
    le_threshold,     // keep iff score <= threshold (drops near-duplicates)
    keep_all_at_max,  // ge_threshold, except threshold >= 1 keeps everything
};

const char * to_string(FilterMode mode);
FilterMode filter_mode_from_string(std::string_view name);  // throws on unknown name

// Filters one candidate per gap (candidates.size() must equal the step
// count) down to a prediction.
prompt::BridgePrediction full_position_filter(const cot::Chain & chain,
                                              const std::vector<std::string> & candidates,
                                              double threshold, SimilarityBackend & backend,
                                              FilterMode mode = FilterMode::ge_threshold);

struct SampleEval {
    std::string chain_id;
    PositionMetrics position;
    double pos_aware = 0.0;
    int n_gt = 0;
    int n_pred = 0;
    bool missing_prediction = false;
};

struct AggregateScores {
    double precision = 0.0;
    double recall = 0.0;
    double redundancy = 0.0;
    double overall = 0.0;
};

struct EvalReport {
    std::string backend;
    std::string averaging;  // "macro" (default) or "micro"
    size_t n = 0;
    size_t missing_predictions = 0;
    AggregateScores aggregate;
    std::vector<SampleEval> per_sample;
};

// Scores a prediction set against its ground truth, joined by chain id.
// Samples without a prediction are scored as empty predictions and counted.
EvalReport evaluate_dataset(const std::vector<inject::InjectedSample> & gt,
                            const std::vector<prompt::BridgePrediction> & preds,
                            SimilarityBackend & backend, bool micro = false);

}  // namespace leapbridge::metrics
