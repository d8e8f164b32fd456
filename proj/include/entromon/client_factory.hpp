#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>

#include "entromon/clients.hpp"
#include "entromon/config.hpp"
#include "entromon/errors.hpp"
#include "entromon/http.hpp"
#include "entromon/simulator.hpp"

namespace entromon {

namespace detail {

struct SimUrl {
    std::string host;
    std::map<std::string, std::string> params;
};

inline SimUrl parse_sim_url(const std::string& url) {
    const std::string body = url.substr(6); // past "sim://"
    SimUrl out;
    const std::size_t q = body.find('?');
    out.host = body.substr(0, q);
    if (q == std::string::npos) return out;
    std::string query = body.substr(q + 1);
    std::size_t pos = 0;
    while (pos < query.size()) {
        std::size_t amp = query.find('&', pos);
        if (amp == std::string::npos) amp = query.size();
        const std::string pair = query.substr(pos, amp - pos);
        const std::size_t eq = pair.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("bad sim:// query parameter: " + pair);
        }
        out.params[pair.substr(0, eq)] = pair.substr(eq + 1);
        pos = amp + 1;
    }
    return out;
}

inline std::uint64_t parse_u64_param(const std::string& value, const std::string& name) {
    try {
        std::size_t used = 0;
        const std::uint64_t parsed = std::stoull(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return parsed;
    } catch (const std::exception&) {
        throw ConfigError("bad sim:// " + name + " value: '" + value + "'");
    }
}

inline double parse_double_param(const std::string& value, const std::string& name) {
    try {
        std::size_t used = 0;
        const double parsed = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return parsed;
    } catch (const std::exception&) {
        throw ConfigError("bad sim:// " + name + " value: '" + value + "'");
    }
}

inline std::set<std::int64_t> parse_index_list(const std::string& csv) {
    std::set<std::int64_t> out;
    std::size_t pos = 0;
    while (pos < csv.size()) {
        std::size_t comma = csv.find(',', pos);
        if (comma == std::string::npos) comma = csv.size();
        out.insert(static_cast<std::int64_t>(
            parse_u64_param(csv.substr(pos, comma - pos), "fail_at")));
        pos = comma + 1;
    }
    return out;
}

} // namespace detail

inline bool is_sim_url(const std::string& url) { return url.rfind("sim://", 0) == 0; }

/// Owns a model client together with any wrapped inner client.
struct OwnedModelClient {
    std::unique_ptr<ModelClient> inner; // kept alive for wrappers, may be null
    std::unique_ptr<ModelClient> client;
    ModelClient& get() { return *client; }
};

/// Owns a classifier together with any wrapped inner classifier.
struct OwnedClassifierClient {
    std::unique_ptr<ClassifierClient> inner;
    std::unique_ptr<ClassifierClient> client;
    ClassifierClient& get() { return *client; }
};

/// Build a model client from an endpoint config. sim://<preset> URLs make
/// in-process simulated backends (params: seed, fail_every, fail_at=i,j);
/// anything else goes over HTTP with the configured kind.
inline OwnedModelClient make_model_client(const EndpointConfig& endpoint,
                                          std::optional<std::uint64_t> fallback_seed = {}) {
    OwnedModelClient owned;
    if (is_sim_url(endpoint.url)) {
        const detail::SimUrl sim = detail::parse_sim_url(endpoint.url);
        ScenarioSpec spec = preset(sim.host);
        std::uint64_t seed = fallback_seed.value_or(spec.seed);
        if (const auto it = sim.params.find("seed"); it != sim.params.end()) {
            seed = detail::parse_u64_param(it->second, "seed");
        }

        int fail_every = 0;
        std::set<std::int64_t> fail_at;
        if (const auto it = sim.params.find("fail_every"); it != sim.params.end()) {
            fail_every = static_cast<int>(detail::parse_u64_param(it->second, "fail_every"));
        }
        if (const auto it = sim.params.find("fail_at"); it != sim.params.end()) {
            fail_at = detail::parse_index_list(it->second);
        }
        for (const auto& [key, value] : sim.params) {
            if (key != "seed" && key != "fail_every" && key != "fail_at") {
                throw ConfigError("unknown sim:// parameter: " + key);
            }
        }

        auto simulated = std::make_unique<SimulatedModelClient>(spec, seed);
        if (fail_every > 0 || !fail_at.empty()) {
            owned.inner = std::move(simulated);
            owned.client = std::make_unique<FaultInjectionModelClient>(
                *owned.inner, fail_every, std::move(fail_at));
        } else {
            owned.client = std::move(simulated);
        }
        return owned;
    }

    ModelHandle handle;
    handle.model_id = endpoint.model_id.empty() ? "model" : endpoint.model_id;
    handle.endpoint = endpoint.url;
    handle.auth_env = endpoint.auth_env;
    if (endpoint.kind == "openai") {
        owned.client = std::make_unique<OpenAiChatModelClient>(handle);
    } else {
        owned.client = std::make_unique<HttpModelClient>(handle);
    }
    return owned;
}

/// Build a classifier client. sim://classifier parses the simulator's
/// goal markers exactly; add ?noise=R for the label-noise wrapper.
inline OwnedClassifierClient make_classifier_client(
    const EndpointConfig& endpoint, std::optional<std::uint64_t> fallback_seed = {}) {
    OwnedClassifierClient owned;
    if (is_sim_url(endpoint.url)) {
        const detail::SimUrl sim = detail::parse_sim_url(endpoint.url);
        if (sim.host != "classifier" && sim.host != "exact") {
            throw ConfigError("sim:// classifier host must be 'classifier': " + endpoint.url);
        }
        double noise = 0.0;
        std::uint64_t seed = fallback_seed.value_or(0);
        if (const auto it = sim.params.find("noise"); it != sim.params.end()) {
            noise = detail::parse_double_param(it->second, "noise");
        }
        if (const auto it = sim.params.find("seed"); it != sim.params.end()) {
            seed = detail::parse_u64_param(it->second, "seed");
        }
        for (const auto& [key, value] : sim.params) {
            if (key != "noise" && key != "seed") {
                throw ConfigError("unknown sim:// parameter: " + key);
            }
        }

        auto exact = std::make_unique<SimulatedClassifierClient>();
        if (noise > 0.0) {
            owned.inner = std::move(exact);
            owned.client = std::make_unique<LabelNoiseClassifier>(*owned.inner, noise, seed);
        } else {
            owned.client = std::move(exact);
        }
        return owned;
    }
    owned.client = std::make_unique<HttpClassifierClient>(endpoint.url, endpoint.auth_env);
    return owned;
}

} // namespace entromon
