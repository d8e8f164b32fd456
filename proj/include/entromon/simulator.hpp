#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "entromon/clients.hpp"
#include "entromon/dynamics.hpp"
#include "entromon/errors.hpp"
#include "entromon/random.hpp"
#include "entromon/taxonomy.hpp"

namespace entromon {

/// A ground-truth entropy trajectory: S(t) = clamp(s0 + (sigma - gamma) t,
/// 0, s_max), realized step by step as symmetric distributions via
/// distribution_for_entropy. Everything downstream of a spec is
/// deterministic given the seed.
struct ScenarioSpec {
    std::string name;
    double s0 = 0.0;      // initial entropy, nats
    double sigma = 0.0;   // entropy production, nats/step
    double gamma = 0.0;   // alignment work, nats/step
    double s_max = -1.0;  // cap; defaults to ln 5 when negative
    int horizon = 1000;
    std::uint64_t seed = 0;

    double cap() const { return s_max < 0.0 ? max_entropy() : s_max; }

    void validate() const {
        if (s0 < 0.0 || s0 > max_entropy()) {
            throw OutOfRangeError("ScenarioSpec.s0 outside [0, ln 5]");
        }
        if (sigma < 0.0 || gamma < 0.0) {
            throw OutOfRangeError("ScenarioSpec rates must be >= 0");
        }
        if (horizon < 1) throw OutOfRangeError("ScenarioSpec.horizon must be >= 1");
        if (cap() < 0.0 || cap() > max_entropy()) {
            throw OutOfRangeError("ScenarioSpec.s_max outside [0, ln 5]");
        }
    }
};

/// Analytic entropy at a step (the piecewise-linear ground truth).
inline double ground_truth_entropy(const ScenarioSpec& spec, std::int64_t step) {
    const double s = spec.s0 + (spec.sigma - spec.gamma) * static_cast<double>(step);
    return std::clamp(s, 0.0, spec.cap());
}

/// Ground-truth goal distribution at a step. Throws OutOfRangeError
/// outside [0, horizon).
inline GoalDistribution ground_truth_distribution(const ScenarioSpec& spec, std::int64_t step) {
    spec.validate();
    if (step < 0 || step >= spec.horizon) {
        throw OutOfRangeError("step " + std::to_string(step) + " outside scenario horizon");
    }
    return distribution_for_entropy(ground_truth_entropy(spec, step));
}

/// Named scenario presets. base_llm / tuned_llm carry the headline
/// dynamics (sigma 0.013 against a flat tuned trajectory); the *_base /
/// *_tuned pairs parameterize the three case-study domains by their
/// reported start and end entropies; constant_low is a flat low-entropy
/// reference for false-alert and sweep checks.
inline const std::map<std::string, ScenarioSpec>& builtin_presets() {
    static const std::map<std::string, ScenarioSpec> presets = [] {
        std::map<std::string, ScenarioSpec> m;
        auto add = [&m](std::string name, double s0, double sigma, double gamma, int horizon) {
            ScenarioSpec spec;
            spec.name = std::move(name);
            spec.s0 = s0;
            spec.sigma = sigma;
            spec.gamma = gamma;
            spec.horizon = horizon;
            m[spec.name] = spec;
        };
        add("base_llm", 0.32, 0.013, 0.0, 1000);
        add("tuned_llm", 0.12, 0.013, 0.013, 1000);
        // Case studies, rates derived from (S_final - S0) / steps.
        add("conversational_base", 0.32, (0.68 - 0.32) / 500.0, 0.0, 500);
        add("conversational_tuned", 0.12, 0.013, 0.013, 500);
        add("av_base", 0.32, (0.82 - 0.32) / 500.0, 0.0, 500);
        add("av_tuned", 0.15, 0.013, 0.013, 500);
        add("recsys_base", 0.32, (0.74 - 0.32) / 500.0, 0.0, 500);
        add("recsys_tuned", 0.18, 0.013, 0.013, 500);
        add("constant_low", 0.12, 0.0, 0.0, 1000);
        add("constant_mid", 0.32, 0.0, 0.0, 1000);
        return m;
    }();
    return presets;
}

inline ScenarioSpec preset(const std::string& name) {
    const auto& presets = builtin_presets();
    const auto it = presets.find(name);
    if (it == presets.end()) throw OutOfRangeError("unknown scenario preset: " + name);
    return it->second;
}

/// Draw the full measured trajectory for a scenario: at each step, k
/// labels multinomially from the ground-truth distribution, aggregated
/// into the plug-in EntropySample. Fully deterministic given (spec, k,
/// seed); record ts fields carry the step index so serialized output is
/// reproducible byte for byte.
inline Trajectory run_scenario(const ScenarioSpec& spec, int k, std::uint64_t seed) {
    spec.validate();
    if (k < 1) throw OutOfRangeError("run_scenario: k must be >= 1");

    Rng rng(seed);
    Trajectory traj;
    traj.model_id = spec.name;
    traj.scenario_id = spec.name;
    traj.samples.reserve(static_cast<std::size_t>(spec.horizon));
    for (int step = 0; step < spec.horizon; ++step) {
        const GoalDistribution truth =
            distribution_for_entropy(ground_truth_entropy(spec, step));
        const std::array<int, 5> counts = multinomial_counts(rng, truth.probs(), k);

        EntropySample sample;
        sample.step = step;
        sample.dist = GoalDistribution::from_counts(counts);
        sample.entropy_nats = entropy(sample.dist);
        sample.k_used = k;
        sample.prompt_id = "step-" + std::to_string(step);
        sample.model_id = spec.name;
        sample.ts = static_cast<double>(step);
        traj.samples.push_back(std::move(sample));
    }
    return traj;
}

namespace detail {

inline std::string goal_marker(Goal g) { return "[" + std::string(goal_id(g)) + "]"; }

} // namespace detail

/// Test-double generation backend: each response carries a "[gX]" marker
/// drawn from the scenario's ground-truth distribution at the client's
/// current step. The step advances once per generate call (one prompt =
/// one interaction) and holds at the final step past the horizon.
class SimulatedModelClient : public ModelClient {
public:
    SimulatedModelClient(ScenarioSpec spec, std::uint64_t seed)
        : spec_(std::move(spec)), rng_(seed) {
        spec_.validate();
    }

    GenerationResponse generate(const GenerationRequest& request) override {
        if (request.n < 1) throw OutOfRangeError("generate: n must be >= 1");
        std::lock_guard<std::mutex> lock(mutex_);
        const std::int64_t step = std::min<std::int64_t>(step_, spec_.horizon - 1);
        const GoalDistribution truth =
            distribution_for_entropy(ground_truth_entropy(spec_, step));

        GenerationResponse response;
        response.responses.reserve(static_cast<std::size_t>(request.n));
        for (int i = 0; i < request.n; ++i) {
            const Goal g = static_cast<Goal>(draw_category(rng_, truth.probs()));
            response.responses.push_back(detail::goal_marker(g) + " simulated response step=" +
                                         std::to_string(step) + " sample=" + std::to_string(i));
        }
        ++step_;
        return response;
    }

    std::string model_id() const override { return spec_.name; }

    std::int64_t current_step() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return step_;
    }

private:
    ScenarioSpec spec_;
    Rng rng_;
    std::int64_t step_ = 0;
    mutable std::mutex mutex_;
};

inline SimulatedModelClient simulated_model(const ScenarioSpec& spec, std::uint64_t seed) {
    return SimulatedModelClient(spec, seed);
}

/// Exact classifier for simulated responses: reads the leading "[gX]"
/// marker back out. Round-trips every label the simulator drew, which
/// isolates sampling variance from classification error.
class SimulatedClassifierClient : public ClassifierClient {
public:
    ClassificationResponse classify(const ClassificationRequest& request) override {
        if (request.responses.empty()) throw OutOfRangeError("classify: empty request");
        ClassificationResponse response;
        response.labels.reserve(request.responses.size());
        for (const std::string& text : request.responses) {
            const std::size_t open = text.find('[');
            const std::size_t close = text.find(']');
            if (open == std::string::npos || close == std::string::npos || close <= open + 1) {
                throw UnknownLabelError("no goal marker in simulated response");
            }
            response.labels.push_back(parse_goal(text.substr(open + 1, close - open - 1)));
        }
        return response;
    }
};

/// Default nested variance plan over a scenario: the model factor redraws
/// the ground-truth entropy around the scenario's value at `step` with a
/// small normal jitter, sampling and label-noise factors as in
/// VariancePlan.
inline VariancePlan make_scenario_variance_plan(const ScenarioSpec& spec, std::int64_t step = 14,
                                                double entropy_jitter_sd = 0.07,
                                                std::uint64_t seed = 0x5eedf00dULL) {
    spec.validate();
    const double center = ground_truth_entropy(spec, step);
    VariancePlan plan;
    plan.seed = seed;
    plan.draw_ground_truth = [center, entropy_jitter_sd](Rng& rng) {
        double target = center + entropy_jitter_sd * rng.normal();
        target = std::clamp(target, 0.0, max_entropy());
        return distribution_for_entropy(target);
    };
    return plan;
}

} // namespace entromon
