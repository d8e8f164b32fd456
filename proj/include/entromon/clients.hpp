#pragma once

#include <array>
#include <cstdint>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "entromon/errors.hpp"
#include "entromon/random.hpp"
#include "entromon/taxonomy.hpp"

namespace entromon {

/// Identifies a generation backend. The model_id is the opaque label that
/// travels into samples and reports; auth tokens are read from the named
/// environment variable at request time, never from config files.
struct ModelHandle {
    std::string model_id;
    std::string endpoint;
    std::string auth_env;
};

struct GenerationRequest {
    std::string prompt;
    int n = 1;
    double temperature = 0.7;
    std::optional<int> max_tokens;
};

struct GenerationResponse {
    std::vector<std::string> responses;
};

struct ClassificationRequest {
    std::vector<std::string> responses;
};

struct ClassificationResponse {
    std::vector<Goal> labels;
    std::optional<std::vector<std::array<double, 5>>> probs;
};

/// Argmax over per-class probabilities; ties break to the lowest goal.
inline Goal label_from_probs(const std::array<double, 5>& probs) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < 5; ++i) {
        if (probs[i] > probs[best]) best = i;
    }
    return static_cast<Goal>(best);
}

class ModelClient {
public:
    virtual ~ModelClient() = default;
    virtual GenerationResponse generate(const GenerationRequest& request) = 0;
    virtual std::string model_id() const = 0;
};

class ClassifierClient {
public:
    virtual ~ClassifierClient() = default;
    virtual ClassificationResponse classify(const ClassificationRequest& request) = 0;
};

/// Flips each label to a uniformly random other goal with probability
/// rho. At rho = 0 it is the identity (same labels, no RNG consumed), so
/// it can sit permanently in a pipeline.
class LabelNoiseClassifier : public ClassifierClient {
public:
    LabelNoiseClassifier(ClassifierClient& inner, double rho, std::uint64_t seed)
        : inner_(inner), rho_(rho), rng_(seed) {
        if (rho < 0.0 || rho > 1.0) throw OutOfRangeError("label-noise rate outside [0, 1]");
    }

    ClassificationResponse classify(const ClassificationRequest& request) override {
        ClassificationResponse response = inner_.classify(request);
        if (rho_ == 0.0) return response;
        std::lock_guard<std::mutex> lock(mutex_);
        for (Goal& label : response.labels) {
            if (rng_.uniform() < rho_) {
                const int offset = rng_.uniform_int(1, 4);
                label = static_cast<Goal>((static_cast<int>(label) + offset) % kNumGoals);
            }
        }
        response.probs.reset(); // probs no longer describe the flipped labels
        return response;
    }

private:
    ClassifierClient& inner_;
    double rho_;
    Rng rng_;
    std::mutex mutex_;
};

/// Deterministically fails selected requests, for exercising the
/// best-effort and failure-tolerance paths. Requests are counted from 1;
/// a request fails when its index is in fail_at or divisible by
/// fail_every.
class FaultInjectionModelClient : public ModelClient {
public:
    FaultInjectionModelClient(ModelClient& inner, int fail_every = 0,
                              std::set<std::int64_t> fail_at = {})
        : inner_(inner), fail_every_(fail_every), fail_at_(std::move(fail_at)) {}

    GenerationResponse generate(const GenerationRequest& request) override {
        std::int64_t index = 0;
        {
            std::lock_guard<std::mutex> lock(mutex_);
            index = ++count_;
        }
        if ((fail_every_ > 0 && index % fail_every_ == 0) || fail_at_.count(index) > 0) {
            throw TimeoutError("injected failure on request " + std::to_string(index));
        }
        return inner_.generate(request);
    }

    std::string model_id() const override { return inner_.model_id(); }

private:
    ModelClient& inner_;
    int fail_every_;
    std::set<std::int64_t> fail_at_;
    std::int64_t count_ = 0;
    std::mutex mutex_;
};

} // namespace entromon
