#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "entromon/errors.hpp"
#include "entromon/estimation.hpp"
#include "entromon/monitor.hpp"

namespace entromon {

/// One service endpoint. `kind` selects the client implementation:
/// "wire" speaks this toolkit's /v1/generate protocol, "openai" adapts to
/// a chat-completions endpoint, and sim:// URLs build in-process
/// simulated clients regardless of kind. Auth tokens are read from the
/// environment variable named here, never stored in the file.
struct EndpointConfig {
    std::string url;
    std::string auth_env;
    std::string kind = "wire";
    std::string model_id;
};

struct ThresholdsConfig {
    double s_max = 0.2;       // nats, maximum acceptable entropy level
    double gamma_min = 0.01;  // nats/step, minimum required alignment work
};

struct PersistenceConfig {
    std::string output_dir = ".";
    std::uint64_t rotation_bytes = 0; // 0 = never rotate
};

struct Config {
    EndpointConfig generate{"sim://base_llm?seed=42", "", "wire", "base_llm"};
    EndpointConfig classify{"sim://classifier", "", "wire", ""};
    SamplingConfig sampling;
    MonitorConfig monitor;
    ThresholdsConfig thresholds;
    PersistenceConfig persistence;
};

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& obj, const std::set<std::string>& known,
                                const std::string& path) {
    for (const auto& [key, value] : obj.items()) {
        if (known.count(key) == 0) {
            throw ConfigError("unknown config key: " + path + "." + key);
        }
    }
}

template <typename T>
void read_field(const nlohmann::json& obj, const char* key, T& target, const std::string& path) {
    if (!obj.contains(key)) return;
    try {
        target = obj.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError("bad value for " + path + "." + std::string(key));
    }
}

inline EndpointConfig parse_endpoint(const nlohmann::json& obj, const std::string& path,
                                     EndpointConfig defaults) {
    reject_unknown_keys(obj, {"url", "auth_env", "kind", "model_id"}, path);
    read_field(obj, "url", defaults.url, path);
    read_field(obj, "auth_env", defaults.auth_env, path);
    read_field(obj, "kind", defaults.kind, path);
    read_field(obj, "model_id", defaults.model_id, path);
    if (defaults.kind != "wire" && defaults.kind != "openai") {
        throw ConfigError(path + ".kind must be \"wire\" or \"openai\"");
    }
    return defaults;
}

} // namespace detail

/// Parse a config object. Unknown keys are rejected so typos fail loudly.
inline Config config_from_json(const nlohmann::json& root) try {
    if (!root.is_object()) throw ConfigError("config root must be a JSON object");
    detail::reject_unknown_keys(
        root, {"endpoints", "sampling", "monitor", "thresholds", "persistence"}, "$");

    Config cfg;
    if (root.contains("endpoints")) {
        const auto& ep = root["endpoints"];
        detail::reject_unknown_keys(ep, {"generate", "classify"}, "endpoints");
        if (ep.contains("generate")) {
            cfg.generate = detail::parse_endpoint(ep["generate"], "endpoints.generate",
                                                  cfg.generate);
        }
        if (ep.contains("classify")) {
            cfg.classify = detail::parse_endpoint(ep["classify"], "endpoints.classify",
                                                  cfg.classify);
        }
    }
    if (root.contains("sampling")) {
        const auto& s = root["sampling"];
        detail::reject_unknown_keys(
            s, {"k", "temperature", "seed", "best_effort", "max_concurrency", "failure_tolerance"},
            "sampling");
        detail::read_field(s, "k", cfg.sampling.k, "sampling");
        detail::read_field(s, "temperature", cfg.sampling.temperature, "sampling");
        if (s.contains("seed")) cfg.sampling.seed = s["seed"].get<std::uint64_t>();
        detail::read_field(s, "best_effort", cfg.sampling.best_effort, "sampling");
        detail::read_field(s, "max_concurrency", cfg.sampling.max_concurrency, "sampling");
        detail::read_field(s, "failure_tolerance", cfg.sampling.failure_tolerance, "sampling");
        try {
            cfg.sampling.validate();
        } catch (const Error& e) {
            throw ConfigError(e.what());
        }
    }
    if (root.contains("monitor")) {
        const auto& m = root["monitor"];
        detail::reject_unknown_keys(m,
                                    {"epsilon", "s_threshold", "window", "k", "temperature",
                                     "mode", "risk_profile", "trigger_max_retries",
                                     "trigger_backoff_ms"},
                                    "monitor");
        if (m.contains("risk_profile")) {
            const std::string profile = m["risk_profile"].get<std::string>();
            if (profile == "safety_critical") {
                cfg.monitor.apply_risk_profile(RiskProfile::safety_critical);
            } else if (profile == "standard") {
                cfg.monitor.apply_risk_profile(RiskProfile::standard);
            } else if (profile == "low_stakes") {
                cfg.monitor.apply_risk_profile(RiskProfile::low_stakes);
            } else {
                throw ConfigError("monitor.risk_profile must be safety_critical, standard, "
                                  "or low_stakes");
            }
        }
        // An explicit epsilon overrides the risk profile's value.
        detail::read_field(m, "epsilon", cfg.monitor.epsilon, "monitor");
        detail::read_field(m, "s_threshold", cfg.monitor.s_threshold, "monitor");
        detail::read_field(m, "window", cfg.monitor.window, "monitor");
        detail::read_field(m, "k", cfg.monitor.k, "monitor");
        detail::read_field(m, "temperature", cfg.monitor.temperature, "monitor");
        if (m.contains("mode")) {
            const std::string mode = m["mode"].get<std::string>();
            if (mode == "strict_paper") {
                cfg.monitor.mode = MonitorMode::strict_paper;
            } else if (mode == "windowed") {
                cfg.monitor.mode = MonitorMode::windowed;
            } else {
                throw ConfigError("monitor.mode must be strict_paper or windowed");
            }
        }
        detail::read_field(m, "trigger_max_retries", cfg.monitor.trigger_max_retries, "monitor");
        detail::read_field(m, "trigger_backoff_ms", cfg.monitor.trigger_backoff_ms, "monitor");
        cfg.monitor.validate();
    }
    if (root.contains("thresholds")) {
        const auto& t = root["thresholds"];
        detail::reject_unknown_keys(t, {"s_max", "gamma_min"}, "thresholds");
        detail::read_field(t, "s_max", cfg.thresholds.s_max, "thresholds");
        detail::read_field(t, "gamma_min", cfg.thresholds.gamma_min, "thresholds");
        if (!(cfg.thresholds.s_max > 0.0)) throw ConfigError("thresholds.s_max must be > 0");
        if (cfg.thresholds.gamma_min < 0.0) throw ConfigError("thresholds.gamma_min must be >= 0");
    }
    if (root.contains("persistence")) {
        const auto& p = root["persistence"];
        detail::reject_unknown_keys(p, {"output_dir", "rotation_bytes"}, "persistence");
        detail::read_field(p, "output_dir", cfg.persistence.output_dir, "persistence");
        detail::read_field(p, "rotation_bytes", cfg.persistence.rotation_bytes, "persistence");
    }
    return cfg;
} catch (const nlohmann::json::exception& e) {
    // Wrong-typed sections (e.g. "sampling": "yes") land here.
    throw ConfigError(std::string("config structure error: ") + e.what());
}

inline Config load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    nlohmann::json root;
    try {
        in >> root;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config parse error in " + path.string() + ": " + e.what());
    }
    return config_from_json(root);
}

/// Generated reference of every config key with its default, printed by
/// the CLI's --config-reference flag.
inline std::string config_reference() {
    const Config d;
    std::ostringstream out;
    out << "Configuration reference (JSON). Every key is optional; unknown keys are rejected.\n"
        << "\n"
        << "endpoints.generate.url        default \"" << d.generate.url << "\"\n"
        << "                              sim://<preset>?seed=N[&fail_every=M][&fail_at=i,j]\n"
        << "                              or http://host:port for the wire protocol\n"
        << "endpoints.generate.kind       default \"wire\" (or \"openai\" for chat-completions)\n"
        << "endpoints.generate.auth_env   default \"\" (env var holding the bearer token)\n"
        << "endpoints.generate.model_id   default \"" << d.generate.model_id << "\"\n"
        << "endpoints.classify.url        default \"" << d.classify.url << "\"\n"
        << "                              sim://classifier[?noise=R&seed=N] or http://...\n"
        << "endpoints.classify.auth_env   default \"\"\n"
        << "sampling.k                    default " << d.sampling.k << " (responses per prompt)\n"
        << "sampling.temperature          default " << d.sampling.temperature << "\n"
        << "sampling.seed                 default unset (stochastic client-side choices)\n"
        << "sampling.best_effort          default false (renormalize short batches)\n"
        << "sampling.max_concurrency      default " << d.sampling.max_concurrency << "\n"
        << "sampling.failure_tolerance    default " << d.sampling.failure_tolerance
        << " (suite failure-rate limit)\n"
        << "monitor.epsilon               default " << d.monitor.epsilon << " nats/step\n"
        << "monitor.s_threshold           default " << d.monitor.s_threshold << " nats\n"
        << "monitor.window                default " << d.monitor.window << " samples\n"
        << "monitor.k                     default " << d.monitor.k << "\n"
        << "monitor.temperature           default " << d.monitor.temperature << "\n"
        << "monitor.mode                  default \"windowed\" (or \"strict_paper\")\n"
        << "monitor.risk_profile          optional: safety_critical (eps 0.0005),\n"
        << "                              standard (0.001), low_stakes (0.002);\n"
        << "                              an explicit epsilon wins\n"
        << "monitor.trigger_max_retries   default " << d.monitor.trigger_max_retries << "\n"
        << "monitor.trigger_backoff_ms    default " << d.monitor.trigger_backoff_ms << "\n"
        << "thresholds.s_max              default " << d.thresholds.s_max << " nats\n"
        << "thresholds.gamma_min          default " << d.thresholds.gamma_min << " nats/step\n"
        << "persistence.output_dir        default \".\"\n"
        << "persistence.rotation_bytes    default 0 (never rotate)\n";
    return out.str();
}

} // namespace entromon
