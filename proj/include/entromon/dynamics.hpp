#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "entromon/errors.hpp"
#include "entromon/estimation.hpp"
#include "entromon/random.hpp"
#include "entromon/taxonomy.hpp"

namespace entromon {

/// Ordered entropy time series for one model/scenario.
struct Trajectory {
    std::vector<EntropySample> samples;
    std::string model_id;
    std::optional<std::string> scenario_id;

    void validate() const {
        for (std::size_t i = 1; i < samples.size(); ++i) {
            if (samples[i].step <= samples[i - 1].step) {
                throw OutOfRangeError("trajectory steps must be strictly increasing");
            }
        }
    }

    std::vector<double> entropies() const {
        std::vector<double> out;
        out.reserve(samples.size());
        for (const EntropySample& s : samples) out.push_back(s.entropy_nats);
        return out;
    }
};

enum class DriftMethod { finite_difference, ols_slope };

struct RateEstimate {
    double value = 0.0;
    double stderr_ = 0.0;
    int n_used = 0;
};

namespace detail {

struct OlsFit {
    double slope = 0.0;
    double stderr_ = 0.0;
};

inline OlsFit ols_slope_fit(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    double xm = 0.0, ym = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        xm += x[i];
        ym += y[i];
    }
    xm /= static_cast<double>(n);
    ym /= static_cast<double>(n);

    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - xm) * (x[i] - xm);
        sxy += (x[i] - xm) * (y[i] - ym);
    }
    if (sxx <= 0.0) throw InsufficientDataError("degenerate abscissa in OLS fit");

    OlsFit fit;
    fit.slope = sxy / sxx;
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double resid = y[i] - (ym + fit.slope * (x[i] - xm));
        sse += resid * resid;
    }
    const double s2 = sse / static_cast<double>(n - 2);
    fit.stderr_ = std::sqrt(std::max(0.0, s2) / sxx);
    return fit;
}

} // namespace detail

/// Drift rate dS/dt in nats/step over the trailing `window` samples
/// (whole trajectory when absent).
///
/// finite_difference: mean of successive (S_t - S_{t-1}) / (step_t -
/// step_{t-1}); stderr is the standard error of that mean. ols_slope:
/// least-squares slope of S against step with its regression standard
/// error.
inline RateEstimate drift_rate(const Trajectory& traj, DriftMethod method,
                               std::optional<int> window = std::nullopt) {
    traj.validate();
    const std::size_t total = traj.samples.size();
    std::size_t n = total;
    if (window) {
        if (*window < 2) throw OutOfRangeError("drift window must be >= 2");
        n = std::min<std::size_t>(total, static_cast<std::size_t>(*window));
    }
    const std::size_t begin = total - n;

    if (method == DriftMethod::finite_difference) {
        if (n < 2) throw InsufficientDataError("finite_difference needs >= 2 samples");
        std::vector<double> diffs;
        diffs.reserve(n - 1);
        for (std::size_t i = begin + 1; i < total; ++i) {
            const double dt = static_cast<double>(traj.samples[i].step - traj.samples[i - 1].step);
            diffs.push_back((traj.samples[i].entropy_nats - traj.samples[i - 1].entropy_nats) / dt);
        }
        double mean = 0.0;
        for (double d : diffs) mean += d;
        mean /= static_cast<double>(diffs.size());
        double se = 0.0;
        if (diffs.size() >= 2) {
            double var = 0.0;
            for (double d : diffs) var += (d - mean) * (d - mean);
            var /= static_cast<double>(diffs.size() - 1);
            se = std::sqrt(var / static_cast<double>(diffs.size()));
        }
        return {mean, se, static_cast<int>(n)};
    }

    if (n < 3) throw InsufficientDataError("ols_slope needs >= 3 samples");
    std::vector<double> steps;
    std::vector<double> values;
    steps.reserve(n);
    values.reserve(n);
    for (std::size_t i = begin; i < total; ++i) {
        steps.push_back(static_cast<double>(traj.samples[i].step));
        values.push_back(traj.samples[i].entropy_nats);
    }
    const detail::OlsFit fit = detail::ols_slope_fit(steps, values);
    return {fit.slope, fit.stderr_, static_cast<int>(n)};
}

/// Drop everything from the first sample whose entropy has reached the
/// saturation ceiling (ceiling - margin). A trajectory that rides the
/// ln 5 cap contributes no drift information past that point, so rate
/// estimation uses the pre-saturation prefix.
inline Trajectory truncate_at_saturation(const Trajectory& traj, double ceiling = -1.0,
                                         double margin = 0.1) {
    if (ceiling < 0.0) ceiling = max_entropy();
    const double threshold = ceiling - margin;
    Trajectory out;
    out.model_id = traj.model_id;
    out.scenario_id = traj.scenario_id;
    for (const EntropySample& s : traj.samples) {
        if (s.entropy_nats >= threshold) break;
        out.samples.push_back(s);
    }
    if (out.samples.size() < 3) return traj; // nothing usable before the cap
    return out;
}

/// sigma, dS/dt and gamma_eff with 1-sd uncertainties. gamma_eff =
/// sigma - ds_dt holds exactly and gamma_stderr adds the two input
/// standard errors in quadrature (independent trajectories).
struct DriftEstimate {
    double sigma = 0.0;
    double ds_dt = 0.0;
    double gamma_eff = 0.0;
    double sigma_stderr = 0.0;
    double ds_dt_stderr = 0.0;
    double gamma_stderr = 0.0;
};

inline DriftEstimate make_drift_estimate(double sigma, double sigma_stderr, double ds_dt,
                                         double ds_dt_stderr) {
    DriftEstimate est;
    est.sigma = sigma;
    est.ds_dt = ds_dt;
    est.gamma_eff = sigma - ds_dt;
    est.sigma_stderr = sigma_stderr;
    est.ds_dt_stderr = ds_dt_stderr;
    est.gamma_stderr = std::sqrt(sigma_stderr * sigma_stderr + ds_dt_stderr * ds_dt_stderr);
    return est;
}

/// Infer effective alignment work from a baseline trajectory (treated as
/// the gamma ~ 0 reference, so its drift is an effective sigma) and the
/// monitored trajectory: gamma_eff = sigma - dS/dt.
inline DriftEstimate effective_alignment_work(const Trajectory& base, const Trajectory& tuned,
                                              DriftMethod method = DriftMethod::ols_slope,
                                              std::optional<int> window = std::nullopt) {
    const RateEstimate sigma = drift_rate(base, method, window);
    const RateEstimate ds_dt = drift_rate(tuned, method, window);
    return make_drift_estimate(sigma.value, sigma.stderr_, ds_dt.value, ds_dt.stderr_);
}

enum class Stability { robustly_stable, marginal, unstable };

inline std::string_view to_string(Stability s) {
    switch (s) {
        case Stability::robustly_stable: return "robustly_stable";
        case Stability::marginal: return "marginal";
        case Stability::unstable: return "unstable";
    }
    return "unknown";
}

/// Robust-stability trichotomy: robustly_stable when gamma_eff >= sigma +
/// epsilon, unstable when the implied drift sigma - gamma_eff >= epsilon,
/// marginal in the band between.
inline Stability stability_check(double gamma_eff, double sigma, double epsilon) {
    if (!(epsilon > 0.0)) throw OutOfRangeError("stability_check: epsilon must be > 0");
    if (gamma_eff >= sigma + epsilon) return Stability::robustly_stable;
    if (sigma - gamma_eff >= epsilon) return Stability::unstable;
    return Stability::marginal;
}

using Matrix = std::vector<std::vector<double>>;

/// Dominant eigenvalue by power iteration from the normalized all-ones
/// start vector, to relative tolerance rel_tol. Throws NonConvergenceError
/// past max_iter (degenerate/defective input).
inline double power_iteration_max_eigenvalue(const Matrix& m, double rel_tol = 1e-8,
                                             int max_iter = 10000) {
    const std::size_t n = m.size();
    if (n == 0) throw OutOfRangeError("empty matrix");
    for (const auto& row : m) {
        if (row.size() != n) throw OutOfRangeError("matrix is not square");
    }

    std::vector<double> v(n, 1.0 / std::sqrt(static_cast<double>(n)));
    std::vector<double> w(n, 0.0);
    for (int iter = 0; iter < max_iter; ++iter) {
        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += m[i][j] * v[j];
            w[i] = acc;
        }
        double rayleigh = 0.0;
        double norm_sq = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            rayleigh += v[i] * w[i];
            norm_sq += w[i] * w[i];
        }
        const double norm = std::sqrt(norm_sq);
        if (norm == 0.0) return 0.0; // start vector in the null space of a zero map

        // Eigenpair residual ||Av - rv|| relative to |r|; a cycling
        // iterate (equal-magnitude opposite-sign spectrum) never passes.
        double resid_sq = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = w[i] - rayleigh * v[i];
            resid_sq += r * r;
        }
        if (std::sqrt(resid_sq) <= rel_tol * std::max(std::abs(rayleigh), 1e-300)) {
            return rayleigh;
        }
        for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / norm;
    }
    throw NonConvergenceError("power iteration did not converge in 10000 steps");
}

/// Inputs for the Fisher-information drift approximation. Either a
/// symmetric matrix or the dominant eigenvalue directly.
struct FisherInputs {
    double eta = 0.0;
    std::optional<Matrix> fisher_matrix;
    std::optional<double> lambda_max;
    double grad_cov_trace = 0.0;

    void validate() const {
        if (!(eta > 0.0)) throw OutOfRangeError("FisherInputs.eta must be > 0");
        if (grad_cov_trace < 0.0) throw OutOfRangeError("FisherInputs.grad_cov_trace must be >= 0");
        if (!fisher_matrix && !lambda_max) {
            throw OutOfRangeError("FisherInputs needs a matrix or lambda_max");
        }
        if (fisher_matrix) {
            const Matrix& m = *fisher_matrix;
            const std::size_t n = m.size();
            for (const auto& row : m) {
                if (row.size() != n) throw OutOfRangeError("Fisher matrix is not square");
            }
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = i + 1; j < n; ++j) {
                    if (std::abs(m[i][j] - m[j][i]) > 1e-9) {
                        throw OutOfRangeError("Fisher matrix is not symmetric within 1e-9");
                    }
                }
            }
        }
    }
};

/// Predicted entropy production (eta^2 / 2) * lambda_max(F) * tr(Sigma).
inline double fisher_sigma(const FisherInputs& inputs) {
    inputs.validate();
    const double lambda = inputs.lambda_max
        ? *inputs.lambda_max
        : power_iteration_max_eigenvalue(*inputs.fisher_matrix);
    return 0.5 * inputs.eta * inputs.eta * lambda * inputs.grad_cov_trace;
}

/// Nested Monte-Carlo design for splitting measurement variance into its
/// three sources. Outer factor redraws the ground-truth distribution
/// (model), the middle factor redraws the k labels (sampling), and the
/// inner factor redraws the label-noise realization applied to those
/// labels (classifier).
struct VariancePlan {
    std::function<GoalDistribution(Rng&)> draw_ground_truth;
    int k = 100;
    double label_noise = 0.01;
    int n_model = 40;
    int n_sampling = 12;
    int n_classifier = 8;
    std::uint64_t seed = 0x5eedf00dULL;
};

struct VarianceDecomposition {
    double var_sampling = 0.0;
    double var_classifier = 0.0;
    double var_model = 0.0;
    /// (sampling, classifier, model) fractions of total; (1, 0, 0) by
    /// convention when total variance is zero.
    std::array<double, 3> shares{1.0, 0.0, 0.0};
    /// True when a method-of-moments component went negative and was
    /// clamped to zero.
    bool clamped = false;
};

/// Law-of-total-variance decomposition over the nested plan. Components
/// are method-of-moments estimates (within-cell variances with the usual
/// nesting corrections) and are clamped at zero.
inline VarianceDecomposition variance_decomposition(const VariancePlan& plan) {
    if (!plan.draw_ground_truth) throw OutOfRangeError("VariancePlan.draw_ground_truth unset");
    if (plan.k < 1) throw OutOfRangeError("VariancePlan.k must be >= 1");
    if (plan.label_noise < 0.0 || plan.label_noise > 1.0) {
        throw OutOfRangeError("VariancePlan.label_noise outside [0, 1]");
    }
    if (plan.n_model < 2 || plan.n_sampling < 2 || plan.n_classifier < 2) {
        throw InsufficientReplicatesError("every variance factor needs >= 2 replicates");
    }

    const int na = plan.n_model;
    const int nb = plan.n_sampling;
    const int nc = plan.n_classifier;
    Rng rng(plan.seed);

    std::vector<double> group_means(static_cast<std::size_t>(na), 0.0);

    double within_classifier = 0.0; // E[var over classifier replicates]
    double within_sampling = 0.0;   // E[var over sampling-cell means], per group

    for (int a = 0; a < na; ++a) {
        const GoalDistribution truth = plan.draw_ground_truth(rng);
        std::vector<double> means_ab(static_cast<std::size_t>(nb), 0.0);
        for (int b = 0; b < nb; ++b) {
            std::vector<int> labels(static_cast<std::size_t>(plan.k), 0);
            for (int i = 0; i < plan.k; ++i) labels[static_cast<std::size_t>(i)] =
                draw_category(rng, truth.probs());

            std::vector<double> values(static_cast<std::size_t>(nc), 0.0);
            for (int c = 0; c < nc; ++c) {
                std::array<int, 5> counts{0, 0, 0, 0, 0};
                for (int label : labels) {
                    int effective = label;
                    if (plan.label_noise > 0.0 && rng.uniform() < plan.label_noise) {
                        effective = (label + rng.uniform_int(1, 4)) % kNumGoals;
                    }
                    ++counts[static_cast<std::size_t>(effective)];
                }
                values[static_cast<std::size_t>(c)] =
                    entropy(GoalDistribution::from_counts(counts));
            }
            double m = 0.0;
            for (double v : values) m += v;
            m /= nc;
            double var_c = 0.0;
            for (double v : values) var_c += (v - m) * (v - m);
            within_classifier += var_c / (nc - 1);
            means_ab[static_cast<std::size_t>(b)] = m;
        }
        double ma = 0.0;
        for (double m : means_ab) ma += m;
        ma /= nb;
        double var_b = 0.0;
        for (double m : means_ab) var_b += (m - ma) * (m - ma);
        within_sampling += var_b / (nb - 1);
        group_means[static_cast<std::size_t>(a)] = ma;
    }

    within_classifier /= static_cast<double>(na) * nb;
    within_sampling /= na;

    double grand = 0.0;
    for (double m : group_means) grand += m;
    grand /= na;
    double across_model = 0.0;
    for (double m : group_means) across_model += (m - grand) * (m - grand);
    across_model /= (na - 1);

    // Method-of-moments corrections for the nesting.
    const double v_classifier_raw = within_classifier;
    const double v_sampling_raw = within_sampling - within_classifier / nc;
    const double v_model_raw =
        across_model - v_sampling_raw / nb - within_classifier / (static_cast<double>(nb) * nc);

    VarianceDecomposition out;
    out.clamped = v_sampling_raw < 0.0 || v_model_raw < 0.0;
    out.var_classifier = std::max(0.0, v_classifier_raw);
    out.var_sampling = std::max(0.0, v_sampling_raw);
    out.var_model = std::max(0.0, v_model_raw);

    const double total = out.var_sampling + out.var_classifier + out.var_model;
    if (total > 0.0) {
        out.shares = {out.var_sampling / total, out.var_classifier / total,
                      out.var_model / total};
    } else {
        out.shares = {1.0, 0.0, 0.0};
    }
    return out;
}

/// Distribution shift between a baseline and a tuned model:
/// D_KL(p_tuned || p_base).
inline double distribution_shift(const GoalDistribution& base_dist,
                                 const GoalDistribution& tuned_dist) {
    return kl_divergence(tuned_dist, base_dist);
}

} // namespace entromon
