#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>

#include "entromon/errors.hpp"

namespace entromon {

/// The five mutually exclusive behavioral goal categories, in their
/// canonical order. The ordering g1 < g2 < g3 < g4 < g5 is load-bearing:
/// ties anywhere in the toolkit break toward the lowest goal.
enum class Goal : int {
    helpful_aligned = 0,    // g1
    helpful_misaligned = 1, // g2
    refusal_aligned = 2,    // g3
    refusal_misaligned = 3, // g4
    off_topic = 4,          // g5
};

inline constexpr int kNumGoals = 5;

inline constexpr std::array<Goal, 5> kAllGoals{
    Goal::helpful_aligned,   Goal::helpful_misaligned, Goal::refusal_aligned,
    Goal::refusal_misaligned, Goal::off_topic,
};

inline std::size_t goal_index(Goal g) { return static_cast<std::size_t>(g); }

/// Short wire identifier: "g1".."g5".
inline std::string_view goal_id(Goal g) {
    static constexpr std::array<std::string_view, 5> ids{"g1", "g2", "g3", "g4", "g5"};
    return ids[goal_index(g)];
}

inline std::string_view goal_name(Goal g) {
    static constexpr std::array<std::string_view, 5> names{
        "Helpful & Aligned", "Helpful & Misaligned", "Refusal (Aligned)",
        "Refusal (Misaligned)", "Off-Topic/Irrelevant"};
    return names[goal_index(g)];
}

/// Parse a wire identifier. Throws UnknownLabelError for anything that is
/// not exactly one of "g1".."g5".
inline Goal parse_goal(std::string_view id) {
    if (id.size() == 2 && id[0] == 'g' && id[1] >= '1' && id[1] <= '5') {
        return static_cast<Goal>(id[1] - '1');
    }
    throw UnknownLabelError("unknown goal label: '" + std::string(id) + "'");
}

/// Maximum attainable entropy over the five goals, ln 5 nats.
inline double max_entropy() { return std::log(5.0); }

/// Probability vector over the five goals. Construction validates the
/// invariants (entries in [0,1], total mass 1 within 1e-9); instances are
/// immutable afterwards.
class GoalDistribution {
public:
    static constexpr double kSumTolerance = 1e-9;

    GoalDistribution() : probs_{1.0, 0.0, 0.0, 0.0, 0.0} {}

    explicit GoalDistribution(const std::array<double, 5>& probs) : probs_(probs) {
        double sum = 0.0;
        for (double p : probs_) {
            if (!(p >= 0.0) || p > 1.0 + kSumTolerance) {
                throw OutOfRangeError("probability outside [0, 1]: " + std::to_string(p));
            }
            sum += p;
        }
        if (std::abs(sum - 1.0) > kSumTolerance) {
            throw OutOfRangeError("probabilities sum to " + std::to_string(sum) + ", expected 1");
        }
    }

    /// Normalize raw non-negative weights into a distribution.
    /// Throws AllZeroMassError when no entry is positive (no labeled mass
    /// means upstream failure, not zero entropy), OutOfRangeError on
    /// negative entries.
    static GoalDistribution normalized(const std::array<double, 5>& raw) {
        double sum = 0.0;
        bool any_positive = false;
        for (double v : raw) {
            if (v > 0.0) any_positive = true;
            sum += v;
        }
        if (!any_positive) throw AllZeroMassError("normalize: no positive mass");
        for (double v : raw) {
            if (v < 0.0) throw OutOfRangeError("normalize: negative weight");
        }
        std::array<double, 5> p{};
        for (std::size_t i = 0; i < 5; ++i) p[i] = raw[i] / sum;
        return GoalDistribution(p);
    }

    /// Empirical distribution counts/k from per-goal counts.
    static GoalDistribution from_counts(const std::array<int, 5>& counts) {
        std::array<double, 5> raw{};
        for (std::size_t i = 0; i < 5; ++i) {
            if (counts[i] < 0) throw OutOfRangeError("negative count");
            raw[i] = static_cast<double>(counts[i]);
        }
        return normalized(raw);
    }

    static GoalDistribution uniform() {
        return GoalDistribution({0.2, 0.2, 0.2, 0.2, 0.2});
    }

    static GoalDistribution delta(Goal g) {
        std::array<double, 5> p{0.0, 0.0, 0.0, 0.0, 0.0};
        p[goal_index(g)] = 1.0;
        return GoalDistribution(p);
    }

    double operator[](Goal g) const { return probs_[goal_index(g)]; }
    double at(std::size_t i) const { return probs_[i]; }
    const std::array<double, 5>& probs() const { return probs_; }

    bool operator==(const GoalDistribution&) const = default;

private:
    std::array<double, 5> probs_;
};

/// Free-function form of GoalDistribution::normalized.
inline GoalDistribution normalize(const std::array<double, 5>& raw) {
    return GoalDistribution::normalized(raw);
}

/// Shannon entropy in nats: -sum p_i ln p_i, skipping p_i = 0 terms
/// exactly. Result lies in [0, ln 5].
inline double entropy(const GoalDistribution& dist) {
    double s = 0.0;
    for (double p : dist.probs()) {
        if (p > 0.0) s -= p * std::log(p);
    }
    return s;
}

/// Entropy with an additive log guard: -sum p_i ln(p_i + guard) over all
/// five terms. This is the arithmetic the streaming monitor's strict mode
/// reproduces bit-for-bit (guard 1e-8); it is slightly negative on a
/// degenerate distribution.
inline double entropy_log_guard(const GoalDistribution& dist, double guard = 1e-8) {
    double s = 0.0;
    for (double p : dist.probs()) {
        s -= p * std::log(p + guard);
    }
    return s;
}

/// Entropy after clipping probabilities into [floor, 1]: the compatibility
/// form of the clip-at-1e-12 convention. Differs from entropy() by at most
/// ~5*floor*|ln floor|.
inline double entropy_clipped(const GoalDistribution& dist, double floor = 1e-12) {
    double s = 0.0;
    for (double p : dist.probs()) {
        const double q = p < floor ? floor : (p > 1.0 ? 1.0 : p);
        s -= q * std::log(q);
    }
    return s;
}

/// KL divergence D(p||q) in nats over terms with p_i > 0. Requires q to
/// cover p's support; throws SupportMismatchError otherwise (no silent
/// smoothing -- see kl_divergence_smoothed).
inline double kl_divergence(const GoalDistribution& p, const GoalDistribution& q) {
    double s = 0.0;
    for (std::size_t i = 0; i < 5; ++i) {
        const double pi = p.at(i);
        if (pi <= 0.0) continue;
        const double qi = q.at(i);
        if (qi <= 0.0) {
            throw SupportMismatchError(
                "kl_divergence: p has mass on " + std::string(goal_id(static_cast<Goal>(i))) +
                " where q is zero");
        }
        s += pi * std::log(pi / qi);
    }
    return s < 0.0 ? 0.0 : s; // guard against -0.0 / rounding at p == q
}

/// KL divergence with q clipped below at q_floor, for callers that prefer
/// a large finite value over a SupportMismatchError.
inline double kl_divergence_smoothed(const GoalDistribution& p, const GoalDistribution& q,
                                     double q_floor = 1e-12) {
    double s = 0.0;
    for (std::size_t i = 0; i < 5; ++i) {
        const double pi = p.at(i);
        if (pi <= 0.0) continue;
        const double qi = q.at(i) < q_floor ? q_floor : q.at(i);
        s += pi * std::log(pi / qi);
    }
    return s < 0.0 ? 0.0 : s;
}

namespace detail {

/// Entropy of the one-parameter family (x, (1-x)/4 x4); strictly
/// decreasing in x on [0.2, 1].
inline double family_entropy(double x) {
    double s = 0.0;
    if (x > 0.0) s -= x * std::log(x);
    const double q = (1.0 - x) / 4.0;
    if (q > 0.0) s -= 4.0 * q * std::log(q);
    return s;
}

inline GoalDistribution family_distribution(double x) {
    const double q = (1.0 - x) / 4.0;
    return GoalDistribution({x, q, q, q, q});
}

} // namespace detail

/// Invert entropy over the symmetric family (x, (1-x)/4 x4): returns the
/// distribution whose entropy equals target_nats within 1e-9, found by
/// bisection on x in [0.2, 1]. Throws OutOfRangeError outside [0, ln 5].
inline GoalDistribution distribution_for_entropy(double target_nats) {
    const double ln5 = max_entropy();
    if (!(target_nats >= 0.0) || target_nats > ln5) {
        throw OutOfRangeError("entropy target " + std::to_string(target_nats) +
                              " outside [0, ln 5]");
    }
    if (target_nats == 0.0) return GoalDistribution::delta(Goal::helpful_aligned);
    if (target_nats >= ln5) return GoalDistribution::uniform();

    double lo = 0.2; // entropy ln 5
    double hi = 1.0; // entropy 0
    for (int iter = 0; iter < 200 && hi - lo > 1e-16; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (detail::family_entropy(mid) > target_nats) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return detail::family_distribution(0.5 * (lo + hi));
}

} // namespace entromon
