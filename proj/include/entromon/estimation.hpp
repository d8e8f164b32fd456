#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <future>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "entromon/clients.hpp"
#include "entromon/errors.hpp"
#include "entromon/random.hpp"
#include "entromon/taxonomy.hpp"

namespace entromon {

struct SamplingConfig {
    int k = 100;
    double temperature = 0.7;
    std::optional<std::uint64_t> seed;
    /// In best-effort mode a short batch is renormalized over the labels
    /// that did arrive (k_used < k) instead of raising PartialBatchError.
    bool best_effort = false;
    /// Generation requests per prompt may fan out concurrently when > 1.
    /// Counts merge order-insensitively; keep at 1 when bit-for-bit
    /// reproducibility against a seeded simulated client matters.
    int max_concurrency = 1;
    /// run_prompt_suite fails once this fraction of prompts has errored.
    double failure_tolerance = 0.05;

    void validate() const {
        if (k < 1) throw OutOfRangeError("SamplingConfig.k must be >= 1");
        if (temperature < 0.0) throw OutOfRangeError("SamplingConfig.temperature must be >= 0");
        if (max_concurrency < 1) throw OutOfRangeError("SamplingConfig.max_concurrency must be >= 1");
        if (failure_tolerance < 0.0 || failure_tolerance > 1.0) {
            throw OutOfRangeError("SamplingConfig.failure_tolerance outside [0, 1]");
        }
    }
};

/// One entropy measurement: the empirical goal distribution over k_used
/// labeled responses and its plug-in entropy.
struct EntropySample {
    std::int64_t step = 0;
    double entropy_nats = 0.0;
    GoalDistribution dist;
    int k_used = 0;
    std::string prompt_id;
    std::string model_id;
    double ts = 0.0; // seconds; simulated trajectories store the step index
};

inline double wall_time_seconds() {
    return std::chrono::duration<double>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

namespace detail {

inline std::array<int, 5> count_labels(std::span<const Goal> labels) {
    std::array<int, 5> counts{0, 0, 0, 0, 0};
    for (Goal g : labels) ++counts[goal_index(g)];
    return counts;
}

/// Generate n responses, in chunks when max_concurrency > 1, and return
/// their labels. Throws on any chunk failure unless best_effort, in which
/// case surviving labels are returned.
inline std::vector<Goal> sample_labels(ModelClient& model, const std::string& prompt,
                                       ClassifierClient& classifier, int n,
                                       const SamplingConfig& cfg) {
    std::vector<std::string> responses;
    responses.reserve(static_cast<std::size_t>(n));

    if (cfg.max_concurrency <= 1) {
        GenerationRequest request{prompt, n, cfg.temperature, std::nullopt};
        try {
            GenerationResponse generated = model.generate(request);
            responses = std::move(generated.responses);
        } catch (const ClientError& e) {
            if (!cfg.best_effort) {
                throw ClientError("generation failed for samples [0, " + std::to_string(n) +
                                  "): " + e.what());
            }
        }
    } else {
        const int chunk = (n + cfg.max_concurrency - 1) / cfg.max_concurrency;
        struct Chunk {
            int begin;
            int count;
            std::future<GenerationResponse> pending;
        };
        std::vector<Chunk> chunks;
        for (int begin = 0; begin < n; begin += chunk) {
            const int count = std::min(chunk, n - begin);
            GenerationRequest request{prompt, count, cfg.temperature, std::nullopt};
            chunks.push_back({begin, count,
                              std::async(std::launch::async,
                                         [&model, request] { return model.generate(request); })});
        }
        std::optional<std::string> first_error;
        for (Chunk& c : chunks) {
            try {
                GenerationResponse generated = c.pending.get();
                for (std::string& r : generated.responses) responses.push_back(std::move(r));
            } catch (const ClientError& e) {
                if (!first_error) {
                    first_error = "generation failed for samples [" + std::to_string(c.begin) +
                                  ", " + std::to_string(c.begin + c.count) + "): " + e.what();
                }
            }
        }
        if (first_error && !cfg.best_effort) throw ClientError(*first_error);
    }

    if (responses.empty()) {
        if (cfg.best_effort) return {};
        throw PartialBatchError("no responses labeled out of " + std::to_string(n));
    }

    ClassificationResponse classified;
    try {
        classified = classifier.classify(ClassificationRequest{responses});
    } catch (const ClientError& e) {
        throw ClientError("classification failed for batch of " +
                          std::to_string(responses.size()) + ": " + e.what());
    }
    if (classified.labels.size() != responses.size()) {
        throw MalformedResponseError("classifier returned " +
                                     std::to_string(classified.labels.size()) + " labels for " +
                                     std::to_string(responses.size()) + " responses");
    }
    if (classified.probs) {
        // Per-class probabilities are authoritative when present.
        if (classified.probs->size() != classified.labels.size()) {
            throw MalformedResponseError("classifier probs/labels length mismatch");
        }
        for (std::size_t i = 0; i < classified.labels.size(); ++i) {
            classified.labels[i] = label_from_probs((*classified.probs)[i]);
        }
    }
    return classified.labels;
}

inline EntropySample sample_from_counts(const std::array<int, 5>& counts, int k_used,
                                        std::string prompt_id, std::string model_id) {
    EntropySample sample;
    sample.dist = GoalDistribution::from_counts(counts);
    sample.entropy_nats = entropy(sample.dist);
    sample.k_used = k_used;
    sample.prompt_id = std::move(prompt_id);
    sample.model_id = std::move(model_id);
    sample.ts = wall_time_seconds();
    return sample;
}

} // namespace detail

/// Estimate the ethical entropy of (model, prompt): draw cfg.k responses
/// at cfg.temperature, classify each, and take the plug-in entropy of the
/// empirical goal distribution.
inline EntropySample estimate_entropy(ModelClient& model, const std::string& prompt,
                                      ClassifierClient& classifier, const SamplingConfig& cfg) {
    cfg.validate();
    std::vector<Goal> labels = detail::sample_labels(model, prompt, classifier, cfg.k, cfg);
    if (static_cast<int>(labels.size()) < cfg.k && !cfg.best_effort) {
        throw PartialBatchError("labeled " + std::to_string(labels.size()) + " of " +
                                std::to_string(cfg.k) + " requested responses");
    }
    if (labels.empty()) {
        throw ClientError("no responses could be labeled for prompt");
    }
    return detail::sample_from_counts(detail::count_labels(labels),
                                      static_cast<int>(labels.size()), prompt,
                                      model.model_id());
}

/// Bootstrap standard error of the plug-in entropy for the empirical
/// distribution implied by `counts`.
inline double bootstrap_entropy_stderr(const std::array<int, 5>& counts, Rng& rng,
                                       int replicates = 200) {
    int k = 0;
    for (int c : counts) k += c;
    if (k <= 0) throw OutOfRangeError("bootstrap over empty counts");
    std::array<double, 5> probs{};
    for (std::size_t i = 0; i < 5; ++i) probs[i] = static_cast<double>(counts[i]) / k;

    double sum = 0.0;
    double sum_sq = 0.0;
    for (int r = 0; r < replicates; ++r) {
        const std::array<int, 5> resampled = multinomial_counts(rng, probs, k);
        double h = 0.0;
        for (int c : resampled) {
            if (c > 0) {
                const double p = static_cast<double>(c) / k;
                h -= p * std::log(p);
            }
        }
        sum += h;
        sum_sq += h * h;
    }
    const double mean = sum / replicates;
    const double var = std::max(0.0, sum_sq / replicates - mean * mean);
    return std::sqrt(var);
}

/// Adaptive-k estimation: sample k_min responses, then keep doubling the
/// total until the bootstrap standard error of the entropy estimate drops
/// to variance_target or k_max is reached. k_used records the final count.
inline EntropySample estimate_entropy_adaptive(ModelClient& model, const std::string& prompt,
                                               ClassifierClient& classifier, int k_min, int k_max,
                                               double variance_target,
                                               SamplingConfig cfg = {}) {
    if (k_min < 1 || k_min > k_max) throw OutOfRangeError("need 1 <= k_min <= k_max");
    if (!(variance_target > 0.0)) throw OutOfRangeError("variance_target must be > 0");
    cfg.validate();

    Rng bootstrap_rng(cfg.seed.value_or(0x9e3779b9ULL) ^ 0x626f6f74ULL);

    std::array<int, 5> counts{0, 0, 0, 0, 0};
    int total = 0;
    int target = k_min;
    while (true) {
        std::vector<Goal> labels =
            detail::sample_labels(model, prompt, classifier, target - total, cfg);
        if (labels.empty() && cfg.best_effort) {
            throw ClientError("adaptive sampling cannot make progress: batch yielded no labels");
        }
        for (Goal g : labels) ++counts[goal_index(g)];
        total += static_cast<int>(labels.size());
        if (total == 0) throw ClientError("no responses could be labeled for prompt");

        const double se = bootstrap_entropy_stderr(counts, bootstrap_rng);
        if (se <= variance_target || total >= k_max) break;
        target = std::min(2 * total, k_max);
    }
    return detail::sample_from_counts(counts, total, prompt, model.model_id());
}

struct SuiteFailure {
    std::size_t prompt_index = 0;
    std::string prompt_id;
    std::string message;
};

struct SuiteResult {
    std::vector<EntropySample> samples; // ordered by prompt index
    std::vector<SuiteFailure> failures;
};

/// Run estimate_entropy over an ordered prompt list; sample.step is the
/// prompt index. Per-prompt client errors are recorded and the suite only
/// fails once their rate exceeds cfg.failure_tolerance.
inline SuiteResult run_prompt_suite(ModelClient& model, std::span<const std::string> prompts,
                                    ClassifierClient& classifier, const SamplingConfig& cfg) {
    cfg.validate();
    if (prompts.empty()) throw InsufficientDataError("run_prompt_suite: empty prompt list");

    SuiteResult result;
    result.samples.reserve(prompts.size());
    for (std::size_t i = 0; i < prompts.size(); ++i) {
        const std::string prompt_id = "p" + std::to_string(i);
        try {
            EntropySample sample = estimate_entropy(model, prompts[i], classifier, cfg);
            sample.step = static_cast<std::int64_t>(i);
            sample.prompt_id = prompt_id;
            result.samples.push_back(std::move(sample));
        } catch (const Error& e) {
            result.failures.push_back({i, prompt_id, e.what()});
        }
    }

    const double rate =
        static_cast<double>(result.failures.size()) / static_cast<double>(prompts.size());
    if (rate > cfg.failure_tolerance) {
        throw ClientError("prompt suite failure rate " + std::to_string(rate) +
                          " exceeds tolerance " + std::to_string(cfg.failure_tolerance) + " (" +
                          std::to_string(result.failures.size()) + "/" +
                          std::to_string(prompts.size()) + " prompts failed)");
    }
    return result;
}

/// Miller-Madow bias correction for the plug-in estimator:
/// entropy + (m_observed - 1) / (2 k_used), clamped at ln 5. Off by
/// default everywhere; measurement paths report the raw plug-in value.
inline double miller_madow_correct(const EntropySample& sample) {
    if (sample.k_used < 1) throw OutOfRangeError("miller_madow_correct: k_used must be >= 1");
    int m_observed = 0;
    for (double p : sample.dist.probs()) {
        if (p > 0.0) ++m_observed;
    }
    const double corrected =
        sample.entropy_nats + (m_observed - 1) / (2.0 * sample.k_used);
    return std::min(corrected, max_entropy());
}

enum class Aggregation { mean_of_entropies, pooled_counts };

/// Collapse per-prompt samples into one model-level entropy. The default
/// is the unweighted mean of per-prompt entropies; pooled_counts merges
/// all label counts first and takes one entropy.
inline double aggregate_entropy(std::span<const EntropySample> samples,
                                Aggregation method = Aggregation::mean_of_entropies) {
    if (samples.empty()) throw InsufficientDataError("aggregate_entropy: no samples");
    if (method == Aggregation::mean_of_entropies) {
        double sum = 0.0;
        for (const EntropySample& s : samples) sum += s.entropy_nats;
        return sum / static_cast<double>(samples.size());
    }
    std::array<double, 5> pooled{};
    for (const EntropySample& s : samples) {
        for (std::size_t i = 0; i < 5; ++i) pooled[i] += s.dist.at(i) * s.k_used;
    }
    return entropy(GoalDistribution::normalized(pooled));
}

} // namespace entromon
