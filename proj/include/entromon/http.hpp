#pragma once

#include <chrono>
#include <cstdlib>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "entromon/clients.hpp"
#include "entromon/errors.hpp"
#include "entromon/monitor.hpp"
#include "entromon/random.hpp"
#include "entromon/taxonomy.hpp"

namespace entromon {

struct RetryPolicy {
    int max_retries = 3;      // retries after the first attempt, on 429/5xx
    int base_backoff_ms = 200;
    double timeout_seconds = 30.0;
};

namespace detail {

struct SplitUrl {
    std::string base;        // scheme://host[:port]
    std::string path_prefix; // optional leading path, no trailing slash
};

inline SplitUrl split_url(const std::string& url) {
    const std::size_t scheme = url.find("://");
    if (scheme == std::string::npos) throw ConfigError("endpoint URL needs a scheme: " + url);
    if (url.substr(0, scheme) != "http") {
        // The vendored client is built without TLS; anything but plain
        // http would otherwise abort deep inside the transport.
        throw ConfigError("unsupported URL scheme in '" + url + "': this build speaks http only");
    }
    const std::size_t slash = url.find('/', scheme + 3);
    if (slash == std::string::npos) return {url, ""};
    std::string prefix = url.substr(slash);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {url.substr(0, slash), prefix};
}

inline std::optional<std::string> bearer_from_env(const std::string& env_name) {
    if (env_name.empty()) return std::nullopt;
    const char* value = std::getenv(env_name.c_str());
    if (value == nullptr || *value == '\0') return std::nullopt;
    return std::string(value);
}

/// POST a JSON body, retrying 429/5xx with exponential backoff and
/// jitter. Transport failures surface as TimeoutError, 401/403 as
/// AuthFailureError, other unexpected statuses as
/// MalformedResponseError, spent retries as ExhaustedRetriesError.
inline nlohmann::json post_json(const std::string& url, const nlohmann::json& body,
                                const std::string& auth_env, const RetryPolicy& policy) {
    const SplitUrl split = split_url(url);
    thread_local Rng jitter_rng(0x6a697474ULL);

    int backoff_ms = policy.base_backoff_ms;
    for (int attempt = 0;; ++attempt) {
        httplib::Client client(split.base);
        client.set_connection_timeout(std::chrono::duration<double>(policy.timeout_seconds));
        client.set_read_timeout(std::chrono::duration<double>(policy.timeout_seconds));
        httplib::Headers headers;
        if (const auto token = bearer_from_env(auth_env)) {
            headers.emplace("Authorization", "Bearer " + *token);
        }

        auto result = client.Post(split.path_prefix.empty() ? "/" : split.path_prefix, headers,
                                  body.dump(), "application/json");
        if (!result) {
            throw TimeoutError("POST " + url + ": " + httplib::to_string(result.error()));
        }
        const int status = result->status;
        if (status == 200) {
            try {
                return nlohmann::json::parse(result->body);
            } catch (const nlohmann::json::exception& e) {
                throw MalformedResponseError("POST " + url + ": invalid JSON body: " + e.what());
            }
        }
        if (status == 401 || status == 403) {
            throw AuthFailureError("POST " + url + ": HTTP " + std::to_string(status));
        }
        const bool transient = status == 429 || (status >= 500 && status < 600);
        if (!transient) {
            throw MalformedResponseError("POST " + url + ": unexpected HTTP " +
                                         std::to_string(status));
        }
        if (attempt >= policy.max_retries) {
            throw ExhaustedRetriesError("POST " + url + ": HTTP " + std::to_string(status) +
                                        " after " + std::to_string(attempt + 1) + " attempts");
        }
        const double jitter = 0.5 + 0.5 * jitter_rng.uniform();
        std::this_thread::sleep_for(
            std::chrono::milliseconds(static_cast<int>(backoff_ms * jitter)));
        backoff_ms *= 2;
    }
}

} // namespace detail

/// Generation backend speaking the native wire protocol:
/// POST {endpoint}/v1/generate
///   request  {"prompt": str, "n": int, "temperature": num, "max_tokens": int?}
///   response {"responses": [str]}
class HttpModelClient : public ModelClient {
public:
    explicit HttpModelClient(ModelHandle handle, RetryPolicy policy = {})
        : handle_(std::move(handle)), policy_(policy) {
        if (handle_.model_id.empty()) throw ConfigError("ModelHandle.model_id must be non-empty");
    }

    GenerationResponse generate(const GenerationRequest& request) override {
        if (request.n < 1) throw OutOfRangeError("generate: n must be >= 1");
        nlohmann::json body{
            {"prompt", request.prompt},
            {"n", request.n},
            {"temperature", request.temperature},
        };
        if (request.max_tokens) body["max_tokens"] = *request.max_tokens;

        const nlohmann::json reply =
            detail::post_json(handle_.endpoint + "/v1/generate", body, handle_.auth_env, policy_);
        if (!reply.contains("responses") || !reply["responses"].is_array()) {
            throw MalformedResponseError("generate: missing 'responses' array");
        }
        GenerationResponse response;
        for (const auto& item : reply["responses"]) {
            if (!item.is_string()) throw MalformedResponseError("generate: non-string response");
            response.responses.push_back(item.get<std::string>());
        }
        if (static_cast<int>(response.responses.size()) != request.n) {
            throw MalformedResponseError("generate: got " +
                                         std::to_string(response.responses.size()) +
                                         " responses, requested " + std::to_string(request.n));
        }
        return response;
    }

    std::string model_id() const override { return handle_.model_id; }

private:
    ModelHandle handle_;
    RetryPolicy policy_;
};

/// Classification endpoint:
/// POST {endpoint}/v1/classify
///   request  {"responses": [str]}
///   response {"labels": [str], "probs": [[num x5]]?}
class HttpClassifierClient : public ClassifierClient {
public:
    explicit HttpClassifierClient(std::string endpoint, std::string auth_env = "",
                                  RetryPolicy policy = {})
        : endpoint_(std::move(endpoint)), auth_env_(std::move(auth_env)), policy_(policy) {}

    ClassificationResponse classify(const ClassificationRequest& request) override {
        if (request.responses.empty()) throw OutOfRangeError("classify: empty request");
        const nlohmann::json reply = detail::post_json(
            endpoint_ + "/v1/classify", nlohmann::json{{"responses", request.responses}},
            auth_env_, policy_);

        if (!reply.contains("labels") || !reply["labels"].is_array()) {
            throw MalformedResponseError("classify: missing 'labels' array");
        }
        ClassificationResponse response;
        for (const auto& item : reply["labels"]) {
            if (!item.is_string()) throw MalformedResponseError("classify: non-string label");
            response.labels.push_back(parse_goal(item.get<std::string>()));
        }
        if (response.labels.size() != request.responses.size()) {
            throw MalformedResponseError("classify: got " +
                                         std::to_string(response.labels.size()) +
                                         " labels for " + std::to_string(request.responses.size()) +
                                         " responses");
        }
        if (reply.contains("probs")) {
            if (!reply["probs"].is_array() || reply["probs"].size() != response.labels.size()) {
                throw MalformedResponseError("classify: probs length mismatch");
            }
            std::vector<std::array<double, 5>> probs;
            for (const auto& row : reply["probs"]) {
                if (!row.is_array() || row.size() != 5) {
                    throw MalformedResponseError("classify: probs row is not 5 numbers");
                }
                std::array<double, 5> p{};
                double sum = 0.0;
                for (std::size_t i = 0; i < 5; ++i) {
                    p[i] = row[i].get<double>();
                    sum += p[i];
                }
                if (std::abs(sum - 1.0) > 1e-6) {
                    throw MalformedResponseError("classify: probs row sums to " +
                                                 std::to_string(sum));
                }
                probs.push_back(p);
            }
            // Per-class probabilities are authoritative: argmax with the
            // lowest-goal tie-break replaces the label field.
            for (std::size_t i = 0; i < probs.size(); ++i) {
                response.labels[i] = label_from_probs(probs[i]);
            }
            response.probs = std::move(probs);
        }
        return response;
    }

private:
    std::string endpoint_;
    std::string auth_env_;
    RetryPolicy policy_;
};

/// Adapter mapping generate() onto an OpenAI-compatible chat-completions
/// endpoint (n-sample and temperature pass through), so real models plug
/// in without code changes.
class OpenAiChatModelClient : public ModelClient {
public:
    explicit OpenAiChatModelClient(ModelHandle handle, RetryPolicy policy = {})
        : handle_(std::move(handle)), policy_(policy) {
        if (handle_.model_id.empty()) throw ConfigError("ModelHandle.model_id must be non-empty");
    }

    GenerationResponse generate(const GenerationRequest& request) override {
        if (request.n < 1) throw OutOfRangeError("generate: n must be >= 1");
        nlohmann::json body{
            {"model", handle_.model_id},
            {"messages", nlohmann::json::array({{{"role", "user"}, {"content", request.prompt}}})},
            {"n", request.n},
            {"temperature", request.temperature},
        };
        if (request.max_tokens) body["max_tokens"] = *request.max_tokens;

        const nlohmann::json reply = detail::post_json(
            handle_.endpoint + "/v1/chat/completions", body, handle_.auth_env, policy_);
        if (!reply.contains("choices") || !reply["choices"].is_array()) {
            throw MalformedResponseError("chat completions: missing 'choices'");
        }
        GenerationResponse response;
        for (const auto& choice : reply["choices"]) {
            if (!choice.contains("message") || !choice["message"].contains("content")) {
                throw MalformedResponseError("chat completions: choice without message content");
            }
            response.responses.push_back(choice["message"]["content"].get<std::string>());
        }
        if (static_cast<int>(response.responses.size()) != request.n) {
            throw MalformedResponseError("chat completions: got " +
                                         std::to_string(response.responses.size()) +
                                         " choices, requested " + std::to_string(request.n));
        }
        return response;
    }

    std::string model_id() const override { return handle_.model_id; }

private:
    ModelHandle handle_;
    RetryPolicy policy_;
};

/// Alert sink POSTing each AlertEvent as JSON to a webhook, 5 s timeout.
class WebhookSink : public AlertSink {
public:
    explicit WebhookSink(std::string url, double timeout_seconds = 5.0)
        : url_(std::move(url)), timeout_seconds_(timeout_seconds) {}

    void deliver(const AlertEvent& event) override {
        const detail::SplitUrl split = detail::split_url(url_);
        httplib::Client client(split.base);
        client.set_connection_timeout(std::chrono::duration<double>(timeout_seconds_));
        client.set_read_timeout(std::chrono::duration<double>(timeout_seconds_));
        auto result = client.Post(split.path_prefix.empty() ? "/" : split.path_prefix,
                                  to_json(event).dump(), "application/json");
        if (!result) {
            throw SinkError("webhook POST " + url_ + ": " + httplib::to_string(result.error()));
        }
        if (result->status < 200 || result->status >= 300) {
            throw SinkError("webhook POST " + url_ + ": HTTP " + std::to_string(result->status));
        }
    }

    std::string_view name() const override { return "webhook"; }

private:
    std::string url_;
    double timeout_seconds_;
};

/// Retrain trigger delivering the alert to a webhook; the monitor applies
/// its bounded-retry policy around each invocation.
inline RetrainTrigger make_webhook_trigger(std::string url, double timeout_seconds = 5.0) {
    return [sink = std::make_shared<WebhookSink>(std::move(url), timeout_seconds)](
               const AlertEvent& event) { sink->deliver(event); };
}

} // namespace entromon
