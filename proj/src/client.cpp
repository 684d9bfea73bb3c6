#include "leapbridge/client.hpp"

#include "leapbridge/errors.hpp"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <unordered_map>
#include <utility>

#include "httplib.h"
#include "json.hpp"

namespace leapbridge::client {

void check_endpoint(const ModelEndpoint & endpoint) {
    if (endpoint.max_tokens <= 0) {
        throw std::invalid_argument("endpoint: max_tokens must be positive");
    }
    if (endpoint.max_concurrent < 1) {
        throw std::invalid_argument("endpoint: max_concurrent must be at least 1");
    }
    if (endpoint.retry.count < 0 || endpoint.retry.backoff_ms < 0) {
        throw std::invalid_argument("endpoint: retry settings must be non-negative");
    }
}

namespace {

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

std::string resolve_api_key(const std::string & configured) {
    if (!configured.empty()) {
        return configured;
    }
    const char * env = std::getenv("LEAPBRIDGE_API_KEY");
    return env == nullptr ? std::string() : std::string(env);
}

std::string extract_reply(const std::string & body) {
    nlohmann::json j = nlohmann::json::parse(body, nullptr, false);
    if (j.is_discarded()) {
        throw HttpError("endpoint returned a non-JSON body", 200);
    }
    try {
        return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception & e) {
        throw HttpError(std::string("endpoint reply missing choices[0].message.content: ") +
                            e.what(),
                        200);
    }
}

}  // namespace

HttpCompleter::HttpCompleter(ModelEndpoint endpoint) : endpoint_(std::move(endpoint)) {
    check_endpoint(endpoint_);
    if (endpoint_.base_url.empty()) {
        throw std::invalid_argument("endpoint: base_url must not be empty");
    }
    split_base_url(endpoint_.base_url, origin_, path_prefix_);
}

std::string HttpCompleter::complete(const prompt::PromptPair & prompt, std::string_view) {
    const nlohmann::json body = {
        { "model", endpoint_.model },
        { "messages",
          {
              { { "role", "system" }, { "content", prompt.system } },
              { { "role", "user" }, { "content", prompt.user } },
          } },
        { "temperature", endpoint_.temperature },
        { "max_tokens", endpoint_.max_tokens },
    };
    const std::string api_key = resolve_api_key(endpoint_.api_key);

    int last_status = 0;
    bool last_was_timeout = false;
    std::string last_error = "no attempt made";
    for (int attempt = 0; attempt <= endpoint_.retry.count; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(
                std::chrono::milliseconds(endpoint_.retry.backoff_ms * attempt));
        }
        httplib::Client cli(origin_);
        cli.set_connection_timeout(endpoint_.timeout_sec, 0);
        cli.set_read_timeout(endpoint_.timeout_sec, 0);
        cli.set_write_timeout(endpoint_.timeout_sec, 0);
        httplib::Headers headers;
        if (!api_key.empty()) {
            headers.emplace("Authorization", "Bearer " + api_key);
        }
        httplib::Result res = cli.Post(path_prefix_ + "/chat/completions", headers, body.dump(),
                                       "application/json");
        if (!res) {
            last_was_timeout = res.error() == httplib::Error::ConnectionTimeout ||
                               res.error() == httplib::Error::Read ||
                               res.error() == httplib::Error::Write;
            last_status = 0;
            last_error = httplib::to_string(res.error());
            continue;
        }
        if (res->status == 401 || res->status == 403) {
            throw AuthError("endpoint rejected credentials (status " +
                            std::to_string(res->status) + ")");
        }
        if (res->status == 429 || res->status >= 500) {
            last_was_timeout = false;
            last_status = res->status;
            last_error = "status " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200) {
            throw HttpError("endpoint returned status " + std::to_string(res->status),
                            res->status);
        }
        return extract_reply(res->body);
    }

    const std::string detail = "after " + std::to_string(endpoint_.retry.count + 1) +
                               " attempts: " + last_error;
    if (last_status == 429) {
        throw RateLimitedError("endpoint rate limited " + detail);
    }
    if (last_was_timeout) {
        throw TimeoutError("endpoint timed out " + detail);
    }
    throw HttpError("endpoint unreachable " + detail, last_status);
}

namespace {

class FixedStub final : public Completer {
  public:
    explicit FixedStub(std::string reply) : reply_(std::move(reply)) {}
    std::string complete(const prompt::PromptPair &, std::string_view) override { return reply_; }

  private:
    std::string reply_;
};

class OracleStub final : public Completer {
  public:
    explicit OracleStub(std::vector<inject::InjectedSample> samples) {
        for (inject::InjectedSample & sample : samples) {
            std::string id = sample.id;
            samples_.emplace(std::move(id), std::move(sample));
        }
    }

    std::string complete(const prompt::PromptPair &, std::string_view record_id) override {
        auto it = samples_.find(std::string(record_id));
        if (it == samples_.end()) {
            throw std::out_of_range("oracle stub has no record " + std::string(record_id));
        }
        return prompt::render_detect_target(it->second);
    }

  private:
    std::unordered_map<std::string, inject::InjectedSample> samples_;
};

}  // namespace

std::unique_ptr<Completer> make_fixed_stub(std::string reply) {
    return std::make_unique<FixedStub>(std::move(reply));
}

std::unique_ptr<Completer> make_none_stub() {
    return std::make_unique<FixedStub>(std::string(prompt::kNoMissingSteps));
}

std::unique_ptr<Completer> make_malformed_stub() {
    // A header with no placement line and no content marker: fails the
    // output grammar without tripping the no-leap detector.
    return std::make_unique<FixedStub>("Missing Step 1:\nBecause I said so.");
}

std::unique_ptr<Completer> make_oracle_stub(std::vector<inject::InjectedSample> samples) {
    return std::make_unique<OracleStub>(std::move(samples));
}

prompt::BridgePrediction bridge_chain(const cot::Chain & chain, const BridgeMode & mode,
                                      Completer & completer) {
    const int n_steps = static_cast<int>(chain.steps.size());
    if (mode.kind == BridgeMode::Kind::detect) {
        const prompt::PromptPair pp = prompt::render_detect_prompt(chain);
        const std::string reply = completer.complete(pp, chain.id);
        prompt::BridgePrediction pred = prompt::parse_output(reply, n_steps);
        pred.chain_id = chain.id;
        return pred;
    }

    const int gap = mode.kind == BridgeMode::Kind::variant
                        ? mode.gap
                        : prompt::random_gap(n_steps, mode.seed);
    const prompt::PromptPair pp = prompt::render_variant_prompt(chain, gap);
    const std::string reply = completer.complete(pp, chain.id);
    prompt::BridgePrediction pred;
    pred.chain_id = chain.id;
    pred.raw = reply;
    pred.leaps.push_back({ gap, prompt::parse_variant_output(reply) });
    return pred;
}

void parallel_for(size_t n, int max_concurrent, const std::function<void(size_t)> & fn) {
    if (max_concurrent < 1) {
        throw std::invalid_argument("parallel_for: max_concurrent must be at least 1");
    }
    if (n == 0) {
        return;
    }
    const size_t workers = std::min(static_cast<size_t>(max_concurrent), n);
    if (workers == 1) {
        for (size_t i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }

    std::atomic<size_t> next{ 0 };
    std::mutex error_mutex;
    std::exception_ptr first_error;

    auto worker = [&]() {
        while (true) {
            const size_t i = next.fetch_add(1);
            if (i >= n) {
                return;
            }
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) {
                    first_error = std::current_exception();
                }
            }
        }
    };

    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (size_t w = 0; w < workers; ++w) {
        threads.emplace_back(worker);
    }
    for (std::thread & t : threads) {
        t.join();
    }
    if (first_error) {
        std::rethrow_exception(first_error);
    }
}

}  // namespace leapbridge::client
