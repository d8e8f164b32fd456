#pragma once

#include <chrono>
#include <cstdint>
#include <deque>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <json.hpp>

#include "entromon/clients.hpp"
#include "entromon/dynamics.hpp"
#include "entromon/errors.hpp"
#include "entromon/estimation.hpp"
#include "entromon/taxonomy.hpp"

namespace entromon {

enum class MonitorMode { strict_paper, windowed };

enum class RiskProfile { safety_critical, standard, low_stakes };

inline double epsilon_for(RiskProfile profile) {
    switch (profile) {
        case RiskProfile::safety_critical: return 0.0005;
        case RiskProfile::standard: return 0.001;
        case RiskProfile::low_stakes: return 0.002;
    }
    return 0.001;
}

struct MonitorConfig {
    double epsilon = 0.001;    // nats/step, max acceptable drift
    double s_threshold = 0.2;  // nats, absolute level alarm
    int window = 100;          // trailing samples for the windowed rules
    int k = 50;                // responses sampled per prompt
    double temperature = 0.7;
    MonitorMode mode = MonitorMode::windowed;
    std::optional<std::uint64_t> seed;
    /// Retrain-trigger failure handling: initial attempt plus up to
    /// max_retries retries with doubling backoff.
    int trigger_max_retries = 3;
    int trigger_backoff_ms = 100;

    void apply_risk_profile(RiskProfile profile) { epsilon = epsilon_for(profile); }

    void validate() const {
        if (!(epsilon > 0.0)) throw ConfigError("monitor.epsilon must be > 0");
        if (window < 2) throw ConfigError("monitor.window must be >= 2");
        if (!(s_threshold > 0.0) || s_threshold > max_entropy()) {
            throw ConfigError("monitor.s_threshold outside (0, ln 5]");
        }
        if (k < 1) throw ConfigError("monitor.k must be >= 1");
        if (trigger_max_retries < 0) throw ConfigError("monitor.trigger_max_retries must be >= 0");
    }
};

enum class AlertKind { step_jump, window_drift, absolute_level };

inline std::string_view to_string(AlertKind kind) {
    switch (kind) {
        case AlertKind::step_jump: return "step_jump";
        case AlertKind::window_drift: return "window_drift";
        case AlertKind::absolute_level: return "absolute_level";
    }
    return "unknown";
}

struct AlertEvent {
    std::int64_t step = 0;
    AlertKind kind = AlertKind::step_jump;
    /// step_jump: S_t - S_prev; window_drift: windowed slope. Zero for
    /// absolute_level.
    double delta_s = 0.0;
    /// step_jump: the guarded S_t; window_drift/absolute_level: the
    /// trailing-window mean entropy.
    double s_value = 0.0;
    std::string message;
    bool triggered_retrain = false;
};

inline nlohmann::json to_json(const AlertEvent& event) {
    return nlohmann::json{
        {"step", event.step},
        {"kind", std::string(to_string(event.kind))},
        {"delta_s", event.delta_s},
        {"s_value", event.s_value},
        {"message", event.message},
        {"triggered_retrain", event.triggered_retrain},
    };
}

class AlertSink {
public:
    virtual ~AlertSink() = default;
    virtual void deliver(const AlertEvent& event) = 0;
    virtual std::string_view name() const = 0;
};

class StderrSink : public AlertSink {
public:
    void deliver(const AlertEvent& event) override {
        std::cerr << "[alert] step=" << event.step << " kind=" << to_string(event.kind) << " "
                  << event.message << "\n";
    }
    std::string_view name() const override { return "stderr"; }
};

/// Append-only JSONL alert log.
class JsonlFileSink : public AlertSink {
public:
    explicit JsonlFileSink(std::string path) : path_(std::move(path)) {
        out_.open(path_, std::ios::app);
        if (!out_) throw SinkError("cannot open alert file: " + path_);
    }

    void deliver(const AlertEvent& event) override {
        out_ << to_json(event).dump() << "\n";
        out_.flush();
        if (!out_) throw SinkError("write failed: " + path_);
    }

    std::string_view name() const override { return "jsonl"; }

private:
    std::string path_;
    std::ofstream out_;
};

using RetrainTrigger = std::function<void(const AlertEvent&)>;

/// A recorded, non-fatal problem: per-prompt client failure, sink
/// delivery failure, or retrain-trigger failure.
struct MonitorIssue {
    std::int64_t step = 0;
    std::string source;
    std::string message;
};

struct MonitorStepResult {
    std::optional<EntropySample> sample;
    std::optional<AlertEvent> alert;
};

/// Streaming drift-alert engine. One instance owns one stream's state
/// (previous entropy, trailing window); sample generation within a step
/// follows the estimation module's contract, and sinks are invoked
/// sequentially so alert order is preserved. Client errors are recorded
/// per prompt and the stream continues; sink and trigger failures never
/// interrupt monitoring.
///
/// strict_paper mode replays the per-step rule literally: S_prev starts
/// at 0, S_t uses the +1e-8 log guard, and |S_t - S_prev| > epsilon
/// raises an alert and fires the retrain trigger. windowed mode (default)
/// holds alerts until the trailing window is full, then raises
/// window_drift when the window's OLS slope exceeds epsilon by at least
/// twice its standard error (a significance gate that keeps the
/// false-alert rate under 1% for windows down to 50), or absolute_level
/// when the window mean exceeds s_threshold.
class StreamMonitor {
public:
    StreamMonitor(ModelClient& model, ClassifierClient& classifier, MonitorConfig cfg,
                  std::vector<AlertSink*> sinks = {})
        : model_(model), classifier_(classifier), cfg_(std::move(cfg)),
          sinks_(std::move(sinks)) {
        cfg_.validate();
    }

    /// At most one trigger per monitor.
    void register_retrain_trigger(RetrainTrigger trigger) {
        if (trigger_) throw AlreadyRegisteredError("retrain trigger already registered");
        trigger_ = std::move(trigger);
    }

    MonitorStepResult step(const std::string& prompt) {
        const std::int64_t step_index = next_step_++;

        SamplingConfig sampling;
        sampling.k = cfg_.k;
        sampling.temperature = cfg_.temperature;
        sampling.seed = cfg_.seed;

        EntropySample sample;
        try {
            sample = estimate_entropy(model_, prompt, classifier_, sampling);
        } catch (const Error& e) {
            issues_.push_back({step_index, "client", e.what()});
            return {};
        }
        sample.step = step_index;

        std::optional<AlertEvent> alert;
        if (cfg_.mode == MonitorMode::strict_paper) {
            alert = strict_step(step_index, sample);
        } else {
            alert = windowed_step(step_index, sample);
        }
        if (alert) emit(*alert);
        return {std::move(sample), std::move(alert)};
    }

    const std::vector<MonitorIssue>& issues() const { return issues_; }
    std::int64_t steps_processed() const { return next_step_; }

private:
    std::optional<AlertEvent> strict_step(std::int64_t step_index, const EntropySample& sample) {
        const double s_t = entropy_log_guard(sample.dist, 1e-8);
        std::optional<AlertEvent> alert;
        const double delta = s_t - s_prev_;
        if (std::abs(delta) > cfg_.epsilon) {
            AlertEvent event;
            event.step = step_index;
            event.kind = AlertKind::step_jump;
            event.delta_s = delta;
            event.s_value = s_t;
            event.message = "Entropy drift detected: dS = " + std::to_string(delta);
            alert = std::move(event);
        }
        s_prev_ = s_t;
        return alert;
    }

    std::optional<AlertEvent> windowed_step(std::int64_t step_index,
                                            const EntropySample& sample) {
        window_.push_back({static_cast<double>(step_index), sample.entropy_nats});
        if (static_cast<int>(window_.size()) > cfg_.window) window_.pop_front();
        if (static_cast<int>(window_.size()) < cfg_.window) return std::nullopt;

        std::vector<double> steps;
        std::vector<double> values;
        steps.reserve(window_.size());
        values.reserve(window_.size());
        double mean = 0.0;
        for (const auto& [s, v] : window_) {
            steps.push_back(s);
            values.push_back(v);
            mean += v;
        }
        mean /= static_cast<double>(window_.size());

        const detail::OlsFit fit = detail::ols_slope_fit(steps, values);
        if (fit.slope > cfg_.epsilon + 2.0 * fit.stderr_) {
            AlertEvent event;
            event.step = step_index;
            event.kind = AlertKind::window_drift;
            event.delta_s = fit.slope;
            event.s_value = mean;
            event.message = "Entropy drift detected: window slope " + std::to_string(fit.slope) +
                            " nats/step over " + std::to_string(cfg_.window) + " steps";
            return event;
        }
        if (mean > cfg_.s_threshold) {
            AlertEvent event;
            event.step = step_index;
            event.kind = AlertKind::absolute_level;
            event.delta_s = 0.0;
            event.s_value = mean;
            event.message = "Entropy level " + std::to_string(mean) + " nats above threshold " +
                            std::to_string(cfg_.s_threshold);
            return event;
        }
        return std::nullopt;
    }

    void emit(AlertEvent& event) {
        event.triggered_retrain = static_cast<bool>(trigger_);
        for (AlertSink* sink : sinks_) {
            try {
                sink->deliver(event);
            } catch (const std::exception& e) {
                issues_.push_back({event.step, std::string("sink:") + std::string(sink->name()),
                                   e.what()});
            }
        }
        if (!trigger_) return;
        int backoff_ms = cfg_.trigger_backoff_ms;
        for (int attempt = 0; attempt <= cfg_.trigger_max_retries; ++attempt) {
            try {
                trigger_(event);
                return;
            } catch (const std::exception& e) {
                if (attempt == cfg_.trigger_max_retries) {
                    issues_.push_back({event.step, "retrain_trigger",
                                       std::string(e.what()) + " (retries exhausted)"});
                    return;
                }
                std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
                backoff_ms *= 2;
            }
        }
    }

    ModelClient& model_;
    ClassifierClient& classifier_;
    MonitorConfig cfg_;
    std::vector<AlertSink*> sinks_;
    RetrainTrigger trigger_;

    double s_prev_ = 0.0;
    std::deque<std::pair<double, double>> window_;
    std::int64_t next_step_ = 0;
    std::vector<MonitorIssue> issues_;
};

/// Drive a monitor over an in-memory prompt sequence.
inline std::vector<MonitorStepResult> monitor_stream(std::span<const std::string> prompts,
                                                     ModelClient& model,
                                                     ClassifierClient& classifier,
                                                     const MonitorConfig& cfg,
                                                     std::vector<AlertSink*> sinks = {}) {
    StreamMonitor monitor(model, classifier, cfg, std::move(sinks));
    std::vector<MonitorStepResult> results;
    results.reserve(prompts.size());
    for (const std::string& prompt : prompts) results.push_back(monitor.step(prompt));
    return results;
}

} // namespace entromon
