#pragma once

#include "leapbridge/chain.hpp"
#include "leapbridge/injector.hpp"
#include "leapbridge/prompts.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace leapbridge::client {

struct RetryPolicy {
    int count = 2;       // retries after the first attempt
    int backoff_ms = 200;  // linear backoff: attempt i sleeps i * backoff_ms
};

// Connection settings for a chat-completion-compatible endpoint.
struct ModelEndpoint {
    std::string base_url;  // POST {base_url}/chat/completions
    std::string model;
    std::string api_key;  // falls back to $LEAPBRIDGE_API_KEY when empty
    double temperature = 0.0;
    int max_tokens = 2048;
    int timeout_sec = 60;
    int max_concurrent = 4;
    RetryPolicy retry;
};

// Throws std::invalid_argument when max_tokens <= 0 or max_concurrent < 1.
void check_endpoint(const ModelEndpoint & endpoint);

// A text-completion source. record_id identifies the record being processed
// so deterministic fakes can key their replies.
class Completer {
  public:
    virtual ~Completer() = default;
    virtual std::string complete(const prompt::PromptPair & prompt, std::string_view record_id) = 0;
};

// Talks to a live endpoint. Retries connection failures, 429 and 5xx per
// the retry policy; 401/403 raise AuthError immediately. After retries are
// exhausted: TimeoutError for timeouts, RateLimitedError for 429, HttpError
// otherwise.
class HttpCompleter final : public Completer {
  public:
    explicit HttpCompleter(ModelEndpoint endpoint);
    std::string complete(const prompt::PromptPair & prompt, std::string_view record_id) override;
    const ModelEndpoint & endpoint() const { return endpoint_; }

  private:
    ModelEndpoint endpoint_;
    std::string origin_;
    std::string path_prefix_;
};

// Always answers with the same canned text.
std::unique_ptr<Completer> make_fixed_stub(std::string reply);

// Always answers "No missing steps."
std::unique_ptr<Completer> make_none_stub();

// Answers with text that violates the output grammar, so every record lands
// in the reject file.
std::unique_ptr<Completer> make_malformed_stub();

// Replays the ground-truth detection target for the record id; the perfect
// model. Unknown ids raise std::out_of_range.
std::unique_ptr<Completer> make_oracle_stub(std::vector<inject::InjectedSample> samples);

// What bridge_chain should ask the model for: find-and-fill all gaps
// (detect), fill one given gap (variant), or fill one uniformly drawn gap
// (variant_random).
struct BridgeMode {
    enum class Kind { detect, variant, variant_random };

    Kind kind = Kind::detect;
    int gap = 0;        // variant only
    uint64_t seed = 0;  // variant_random only

    static BridgeMode detect() { return {}; }
    static BridgeMode variant(int gap) { return { Kind::variant, gap, 0 }; }
    static BridgeMode variant_random(uint64_t seed) {
        return { Kind::variant_random, 0, seed };
    }
};

// render -> complete -> parse for one chain. Raises the completer's
// transport errors and the parser's ParseError; callers route ParseError
// records to a reject file with the raw reply preserved.
prompt::BridgePrediction bridge_chain(const cot::Chain & chain, const BridgeMode & mode,
                                      Completer & completer);

// Runs fn(0..n-1) on up to max_concurrent worker threads. fn must write
// only to its own slot; the first exception is rethrown after all workers
// finish.
void parallel_for(size_t n, int max_concurrent, const std::function<void(size_t)> & fn);

}  // namespace leapbridge::client
