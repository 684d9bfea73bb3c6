#include "leapbridge/metrics.hpp"

#include "leapbridge/errors.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <unordered_map>

#include "httplib.h"
#include "json.hpp"

namespace leapbridge::metrics {

PositionMetrics position_metrics(const std::set<int> & gt, const std::set<int> & pred) {
    PositionMetrics out;
    for (int g : pred) {
        if (gt.count(g)) {
            out.tp += 1;
        }
    }
    if (pred.empty()) {
        const bool perfect_abstention = gt.empty();
        out.precision = perfect_abstention ? 1.0 : 0.0;
        out.recall = perfect_abstention ? 1.0 : 0.0;
        out.redundancy = 0.0;
        return out;
    }
    out.precision = static_cast<double>(out.tp) / static_cast<double>(pred.size());
    out.redundancy = static_cast<double>(pred.size() - out.tp) / static_cast<double>(pred.size());
    out.recall = gt.empty() ? 0.0 : static_cast<double>(out.tp) / static_cast<double>(gt.size());
    return out;
}

namespace {

std::string normalize_text(std::string_view text, const Normalization & norm) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    bool seen_content = false;
    for (char c : text) {
        const bool is_space = std::isspace(static_cast<unsigned char>(c)) != 0;
        if (norm.collapse_whitespace) {
            if (is_space) {
                pending_space = seen_content;
                continue;
            }
            if (pending_space) {
                out.push_back(' ');
                pending_space = false;
            }
        }
        seen_content = true;
        if (norm.casefold) {
            out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        } else {
            out.push_back(c);
        }
    }
    if (!norm.collapse_whitespace) {
        return out;
    }
    return out;
}

class ExactBackend final : public SimilarityBackend {
  public:
    explicit ExactBackend(Normalization norm) : norm_(norm) {}

    std::string_view name() const override { return "exact"; }

    double score(std::string_view a, std::string_view b) override {
        return normalize_text(a, norm_) == normalize_text(b, norm_) ? 1.0 : 0.0;
    }

  private:
    Normalization norm_;
};

std::vector<std::string> lowercase_tokens(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!current.empty()) {
                tokens.push_back(std::move(current));
                current.clear();
            }
            continue;
        }
        current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    if (!current.empty()) {
        tokens.push_back(std::move(current));
    }
    return tokens;
}

class TokenF1Backend final : public SimilarityBackend {
  public:
    std::string_view name() const override { return "token_f1"; }

    double score(std::string_view a, std::string_view b) override {
        const std::vector<std::string> ta = lowercase_tokens(a);
        const std::vector<std::string> tb = lowercase_tokens(b);
        if (ta.empty() && tb.empty()) {
            return 1.0;
        }
        if (ta.empty() || tb.empty()) {
            return 0.0;
        }
        std::unordered_map<std::string, int> counts;
        for (const std::string & t : ta) {
            counts[t] += 1;
        }
        size_t overlap = 0;
        for (const std::string & t : tb) {
            auto it = counts.find(t);
            if (it != counts.end() && it->second > 0) {
                it->second -= 1;
                overlap += 1;
            }
        }
        return 2.0 * static_cast<double>(overlap) / static_cast<double>(ta.size() + tb.size());
    }
};

// Splits "http://host:port/prefix" into the httplib origin and the path
// prefix to prepend to request paths.
void split_base_url(const std::string & base_url, std::string & origin, std::string & prefix) {
    const size_t scheme = base_url.find("://");
    const size_t path_start =
        base_url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    if (path_start == std::string::npos) {
        origin = base_url;
        prefix.clear();
        return;
    }
    origin = base_url.substr(0, path_start);
    prefix = base_url.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') {
        prefix.pop_back();
    }
}

double cosine_clamped(const std::vector<double> & a, const std::vector<double> & b) {
    if (a.size() != b.size() || a.empty()) {
        throw BackendUnavailableError("embedding response vectors have mismatched sizes");
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) {
        return 0.0;
    }
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), 0.0, 1.0);
}

class EmbeddingBackend final : public SimilarityBackend {
  public:
    explicit EmbeddingBackend(EmbeddingConfig config) : config_(std::move(config)) {
        if (config_.base_url.empty()) {
            throw std::invalid_argument("embedding backend requires a base_url");
        }
        split_base_url(config_.base_url, origin_, prefix_);
    }

    std::string_view name() const override { return "embedding"; }

    double score(std::string_view a, std::string_view b) override {
        const nlohmann::json body = {
            { "model", config_.model },
            { "input", { std::string(a), std::string(b) } },
        };
        std::string last_error = "no attempt made";
        for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
            if (attempt > 0) {
                std::this_thread::sleep_for(
                    std::chrono::milliseconds(config_.backoff_ms * attempt));
            }
            httplib::Client cli(origin_);
            cli.set_connection_timeout(config_.timeout_sec, 0);
            cli.set_read_timeout(config_.timeout_sec, 0);
            httplib::Headers headers;
            if (!config_.api_key.empty()) {
                headers.emplace("Authorization", "Bearer " + config_.api_key);
            }
            httplib::Result res =
                cli.Post(prefix_ + "/embeddings", headers, body.dump(), "application/json");
            if (!res) {
                last_error = "connection failed: " + httplib::to_string(res.error());
                continue;
            }
            if (res->status == 401 || res->status == 403) {
                throw BackendUnavailableError("embedding endpoint rejected credentials (status " +
                                              std::to_string(res->status) + ")");
            }
            if (res->status == 429 || res->status >= 500) {
                last_error = "status " + std::to_string(res->status);
                continue;
            }
            if (res->status != 200) {
                throw BackendUnavailableError("embedding endpoint returned status " +
                                              std::to_string(res->status));
            }
            return parse_pair(res->body);
        }
        throw BackendUnavailableError("embedding endpoint unreachable after " +
                                      std::to_string(config_.max_retries + 1) +
                                      " attempts: " + last_error);
    }

  private:
    double parse_pair(const std::string & body) const {
        nlohmann::json j = nlohmann::json::parse(body, nullptr, false);
        if (j.is_discarded() || !j.contains("data") || !j["data"].is_array() ||
            j["data"].size() < 2) {
            throw BackendUnavailableError("malformed embedding response body");
        }
        try {
            const std::vector<double> va = j["data"][0].at("embedding").get<std::vector<double>>();
            const std::vector<double> vb = j["data"][1].at("embedding").get<std::vector<double>>();
            return cosine_clamped(va, vb);
        } catch (const nlohmann::json::exception & e) {
            throw BackendUnavailableError(std::string("malformed embedding response body: ") +
                                          e.what());
        }
    }

    EmbeddingConfig config_;
    std::string origin_;
    std::string prefix_;
};

}  // namespace

std::unique_ptr<SimilarityBackend> make_exact_backend(Normalization norm) {
    return std::make_unique<ExactBackend>(norm);
}

std::unique_ptr<SimilarityBackend> make_token_f1_backend() {
    return std::make_unique<TokenF1Backend>();
}

std::unique_ptr<SimilarityBackend> make_embedding_backend(EmbeddingConfig config) {
    return std::make_unique<EmbeddingBackend>(std::move(config));
}

std::unique_ptr<SimilarityBackend> make_backend(std::string_view name,
                                                const EmbeddingConfig & embedding) {
    if (name == "exact") {
        return make_exact_backend();
    }
    if (name == "token_f1") {
        return make_token_f1_backend();
    }
    if (name == "embedding") {
        return make_embedding_backend(embedding);
    }
    throw std::invalid_argument("unknown similarity backend: " + std::string(name));
}

namespace {

// Sum of sim(prediction, reference) over the predicted gaps present in the
// ground truth. References are the removed steps re-joined with the chain
// delimiter.
double matched_similarity_sum(const std::vector<inject::LeapRecord> & gt,
                              const prompt::BridgePrediction & pred, SimilarityBackend & backend,
                              std::string_view delimiter) {
    std::map<int, std::string> references;
    for (const inject::LeapRecord & leap : gt) {
        references[leap.gap_index] = cot::join_steps(leap.missing_steps, delimiter);
    }
    double sum = 0.0;
    for (const prompt::PredictedLeap & leap : pred.leaps) {
        auto it = references.find(leap.gap_index);
        if (it != references.end()) {
            sum += backend.score(leap.content, it->second);
        }
    }
    return sum;
}

}  // namespace

double pos_aware_score(const std::vector<inject::LeapRecord> & gt,
                       const prompt::BridgePrediction & pred, SimilarityBackend & backend,
                       std::string_view delimiter) {
    if (gt.empty()) {
        return pred.leaps.empty() ? 1.0 : 0.0;
    }
    return matched_similarity_sum(gt, pred, backend, delimiter) / static_cast<double>(gt.size());
}

const char * to_string(FilterMode mode) {
    switch (mode) {
        case FilterMode::ge_threshold:
            return "ge_threshold";
        case FilterMode::le_threshold:
            return "le_threshold";
        case FilterMode::keep_all_at_max:
            return "keep_all_at_max";
    }
    throw std::invalid_argument("unknown filter mode value");
}

FilterMode filter_mode_from_string(std::string_view name) {
    if (name == "ge_threshold") {
        return FilterMode::ge_threshold;
    }
    if (name == "le_threshold") {
        return FilterMode::le_threshold;
    }
    if (name == "keep_all_at_max") {
        return FilterMode::keep_all_at_max;
    }
    throw std::invalid_argument("unknown filter mode: " + std::string(name));
}

prompt::BridgePrediction full_position_filter(const cot::Chain & chain,
                                              const std::vector<std::string> & candidates,
                                              double threshold, SimilarityBackend & backend,
                                              FilterMode mode) {
    if (candidates.size() != chain.steps.size()) {
        throw std::invalid_argument("full_position_filter: need exactly one candidate per gap (" +
                                    std::to_string(chain.steps.size()) + " gaps, got " +
                                    std::to_string(candidates.size()) + " candidates)");
    }
    if (!(threshold >= 0.0) || !(threshold <= 1.0)) {
        throw std::invalid_argument("full_position_filter: threshold must lie in [0, 1]");
    }
    const bool keep_everything = mode == FilterMode::keep_all_at_max && threshold >= 1.0;
    prompt::BridgePrediction pred;
    pred.chain_id = chain.id;
    for (size_t k = 0; k < candidates.size(); ++k) {
        const std::string & left = k == 0 ? chain.question : chain.steps[k - 1];
        const std::string context = left + chain.delimiter + chain.steps[k];
        const double score = backend.score(candidates[k], context);
        bool keep = false;
        if (keep_everything) {
            keep = true;
        } else if (mode == FilterMode::le_threshold) {
            keep = score <= threshold;
        } else {
            keep = score >= threshold;
        }
        if (keep) {
            pred.leaps.push_back({ static_cast<int>(k), candidates[k] });
        }
    }
    pred.explicit_none = pred.leaps.empty();
    return pred;
}

namespace {

std::set<int> gap_set_of_gt(const inject::InjectedSample & sample) {
    std::set<int> gaps;
    for (const inject::LeapRecord & leap : sample.leaps) {
        gaps.insert(leap.gap_index);
    }
    return gaps;
}

std::set<int> gap_set_of_pred(const prompt::BridgePrediction & pred) {
    std::set<int> gaps;
    for (const prompt::PredictedLeap & leap : pred.leaps) {
        gaps.insert(leap.gap_index);
    }
    return gaps;
}

}  // namespace

EvalReport evaluate_dataset(const std::vector<inject::InjectedSample> & gt,
                            const std::vector<prompt::BridgePrediction> & preds,
                            SimilarityBackend & backend, bool micro) {
    std::unordered_map<std::string, const prompt::BridgePrediction *> by_id;
    for (const prompt::BridgePrediction & pred : preds) {
        by_id[pred.chain_id] = &pred;  // later lines win on duplicate ids
    }

    EvalReport report;
    report.backend = std::string(backend.name());
    report.averaging = micro ? "micro" : "macro";
    report.n = gt.size();

    long long total_tp = 0, total_pred = 0, total_gt = 0;
    double total_sim = 0.0;
    double sum_precision = 0.0, sum_recall = 0.0, sum_redundancy = 0.0, sum_pos_aware = 0.0;

    const prompt::BridgePrediction empty_pred;
    for (const inject::InjectedSample & sample : gt) {
        auto it = by_id.find(sample.id);
        const prompt::BridgePrediction & pred = it == by_id.end() ? empty_pred : *it->second;

        SampleEval row;
        row.chain_id = sample.id;
        row.missing_prediction = it == by_id.end();
        if (row.missing_prediction) {
            report.missing_predictions += 1;
        }

        const std::set<int> gt_gaps = gap_set_of_gt(sample);
        const std::set<int> pred_gaps = gap_set_of_pred(pred);
        row.n_gt = static_cast<int>(gt_gaps.size());
        row.n_pred = static_cast<int>(pred_gaps.size());
        row.position = position_metrics(gt_gaps, pred_gaps);
        row.pos_aware =
            pos_aware_score(sample.leaps, pred, backend, sample.incomplete.delimiter);

        total_tp += row.position.tp;
        total_pred += row.n_pred;
        total_gt += row.n_gt;
        total_sim += matched_similarity_sum(sample.leaps, pred, backend,
                                            sample.incomplete.delimiter);
        sum_precision += row.position.precision;
        sum_recall += row.position.recall;
        sum_redundancy += row.position.redundancy;
        sum_pos_aware += row.pos_aware;

        report.per_sample.push_back(std::move(row));
    }

    if (report.n == 0) {
        return report;
    }
    if (micro) {
        if (total_pred == 0) {
            report.aggregate.precision = total_gt == 0 ? 1.0 : 0.0;
            report.aggregate.redundancy = 0.0;
        } else {
            report.aggregate.precision =
                static_cast<double>(total_tp) / static_cast<double>(total_pred);
            report.aggregate.redundancy =
                static_cast<double>(total_pred - total_tp) / static_cast<double>(total_pred);
        }
        if (total_gt == 0) {
            report.aggregate.recall = total_pred == 0 ? 1.0 : 0.0;
            report.aggregate.overall = total_pred == 0 ? 1.0 : 0.0;
        } else {
            report.aggregate.recall =
                static_cast<double>(total_tp) / static_cast<double>(total_gt);
            report.aggregate.overall = total_sim / static_cast<double>(total_gt);
        }
    } else {
        const double n = static_cast<double>(report.n);
        report.aggregate.precision = sum_precision / n;
        report.aggregate.recall = sum_recall / n;
        report.aggregate.redundancy = sum_redundancy / n;
        report.aggregate.overall = sum_pos_aware / n;
    }
    return report;
}

}  // namespace leapbridge::metrics
