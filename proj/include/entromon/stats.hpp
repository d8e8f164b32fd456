#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "entromon/errors.hpp"

namespace entromon {

namespace detail {

/// Continued fraction for the regularized incomplete beta, evaluated with
/// the modified Lentz algorithm. Converges in a handful of iterations for
/// the (a, b, x) ranges produced by t-distribution tails.
inline double incbeta_cf(double a, double b, double x) {
    constexpr double kTiny = 1e-300;
    constexpr double kRelTol = 1e-12;
    constexpr int kMaxIter = 500;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kRelTol) return h;
    }
    throw NonConvergenceError("incomplete beta continued fraction did not converge");
}

/// Regularized incomplete beta I_x(a, b).
inline double incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) throw OutOfRangeError("incomplete_beta: a, b must be > 0");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * incbeta_cf(a, b, x) / a;
    }
    return 1.0 - front * incbeta_cf(b, a, 1.0 - x) / b;
}

inline double mean_of(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

/// Unbiased sample variance (ddof = 1).
inline double sample_variance(std::span<const double> v) {
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

} // namespace detail

/// Two-sided tail probability of Student's t with `dof` degrees of
/// freedom: P(|T| >= |t|).
inline double student_t_two_sided_p(double t, double dof) {
    if (dof <= 0.0) throw OutOfRangeError("t-distribution needs dof > 0");
    if (std::isinf(t)) return 0.0;
    const double x = dof / (dof + t * t);
    return detail::incomplete_beta(0.5 * dof, 0.5, x);
}

/// Item-by-category annotation counts: rows[i][j] = number of annotators
/// who put item i in category j. Every row sums to n_annotators.
struct AnnotationTable {
    std::vector<std::array<int, 5>> rows;
    int n_annotators = 0;

    void validate() const {
        if (n_annotators < 2) throw OutOfRangeError("AnnotationTable needs >= 2 annotators");
        if (rows.size() < 2) throw InsufficientDataError("fleiss_kappa needs >= 2 items");
        for (const auto& row : rows) {
            int sum = 0;
            for (int c : row) {
                if (c < 0) throw OutOfRangeError("negative annotation count");
                sum += c;
            }
            if (sum != n_annotators) {
                throw OutOfRangeError("annotation row does not sum to n_annotators");
            }
        }
    }
};

/// Fleiss' kappa, chance-corrected multi-annotator agreement.
/// Returns exactly 1 when agreement is perfect even if the chance term
/// degenerates (all mass in one category); imperfect agreement with a
/// degenerate chance term throws DegenerateTableError.
inline double fleiss_kappa(const AnnotationTable& table) {
    table.validate();
    const double n = table.n_annotators;
    const double items = static_cast<double>(table.rows.size());

    double p_bar = 0.0;
    std::array<double, 5> category_mass{};
    for (const auto& row : table.rows) {
        double agree = 0.0;
        for (std::size_t j = 0; j < 5; ++j) {
            agree += static_cast<double>(row[j]) * (row[j] - 1.0);
            category_mass[j] += row[j];
        }
        p_bar += agree / (n * (n - 1.0));
    }
    p_bar /= items;

    double p_e = 0.0;
    for (double mass : category_mass) {
        const double pj = mass / (items * n);
        p_e += pj * pj;
    }

    if (1.0 - p_e <= 0.0) {
        if (p_bar >= 1.0) return 1.0;
        throw DegenerateTableError("chance agreement is 1 with imperfect agreement");
    }
    return (p_bar - p_e) / (1.0 - p_e);
}

struct CorrelationResult {
    double rho = 0.0;
    double p_value = 1.0;
};

/// Sample Pearson correlation with two-sided p-value from the
/// t-distribution transform.
inline CorrelationResult pearson_correlation(std::span<const double> x,
                                             std::span<const double> y) {
    if (x.size() != y.size()) throw OutOfRangeError("pearson: length mismatch");
    const std::size_t n = x.size();
    if (n < 3) throw InsufficientDataError("pearson needs >= 3 points");

    const double mx = detail::mean_of(x);
    const double my = detail::mean_of(y);
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0) throw ZeroVarianceError("pearson: zero variance input");

    double rho = sxy / std::sqrt(sxx * syy);
    if (rho > 1.0) rho = 1.0;
    if (rho < -1.0) rho = -1.0;

    const double dof = static_cast<double>(n - 2);
    const double denom = 1.0 - rho * rho;
    double p = 0.0;
    if (denom > 0.0) {
        const double t = rho * std::sqrt(dof / denom);
        p = student_t_two_sided_p(t, dof);
    }
    return {rho, p};
}

enum class TTestKind { independent, paired };

struct TestResult {
    double statistic = 0.0;
    double p_value = 1.0;
    double dof = 0.0;
    std::optional<double> effect_size_d;
    std::optional<double> corrected_alpha;
};

/// Two-sample t-test. Independent defaults to the Welch (unequal
/// variance) form; set pooled_variance for the classic pooled form.
/// corrected_alpha = 0.05 / corrections is filled in when corrections > 1
/// (Bonferroni). effect_size_d is Cohen's d with pooled SD, absent when
/// the pooled SD is zero.
inline TestResult t_test(std::span<const double> a, std::span<const double> b,
                         TTestKind kind = TTestKind::independent, int corrections = 1,
                         bool pooled_variance = false) {
    const std::size_t na = a.size();
    const std::size_t nb = b.size();

    TestResult result;
    if (corrections > 1) result.corrected_alpha = 0.05 / corrections;

    if (kind == TTestKind::paired) {
        if (na != nb) throw OutOfRangeError("paired t-test needs equal lengths");
        if (na < 2) throw InsufficientDataError("paired t-test needs >= 2 pairs");
        std::vector<double> diffs(na);
        for (std::size_t i = 0; i < na; ++i) diffs[i] = a[i] - b[i];
        const double md = detail::mean_of(diffs);
        const double vd = detail::sample_variance(diffs);
        result.dof = static_cast<double>(na - 1);
        if (vd <= 0.0) {
            result.statistic = md == 0.0 ? 0.0 : std::copysign(
                std::numeric_limits<double>::infinity(), md);
        } else {
            result.statistic = md / std::sqrt(vd / static_cast<double>(na));
        }
    } else {
        if (na < 2 || nb < 2) throw InsufficientDataError("independent t-test needs >= 2 per sample");
        const double ma = detail::mean_of(a);
        const double mb = detail::mean_of(b);
        const double va = detail::sample_variance(a);
        const double vb = detail::sample_variance(b);
        const double dna = static_cast<double>(na);
        const double dnb = static_cast<double>(nb);
        if (pooled_variance) {
            const double sp2 = ((dna - 1.0) * va + (dnb - 1.0) * vb) / (dna + dnb - 2.0);
            result.dof = dna + dnb - 2.0;
            const double denom = std::sqrt(sp2 * (1.0 / dna + 1.0 / dnb));
            result.statistic = denom > 0.0
                ? (ma - mb) / denom
                : (ma == mb ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), ma - mb));
        } else {
            const double sa2n = va / dna;
            const double sb2n = vb / dnb;
            const double denom = std::sqrt(sa2n + sb2n);
            if (denom > 0.0) {
                result.statistic = (ma - mb) / denom;
                result.dof = (sa2n + sb2n) * (sa2n + sb2n) /
                             (sa2n * sa2n / (dna - 1.0) + sb2n * sb2n / (dnb - 1.0));
            } else {
                result.statistic = ma == mb ? 0.0 : std::copysign(
                    std::numeric_limits<double>::infinity(), ma - mb);
                result.dof = dna + dnb - 2.0;
            }
        }
    }

    result.p_value = std::isinf(result.statistic)
        ? 0.0
        : student_t_two_sided_p(result.statistic, result.dof);

    // Cohen's d, pooled-SD form, for any kind.
    if (na >= 2 && nb >= 2) {
        const double va = detail::sample_variance(a);
        const double vb = detail::sample_variance(b);
        const double sp2 = ((na - 1.0) * va + (nb - 1.0) * vb) /
                           (static_cast<double>(na + nb) - 2.0);
        if (sp2 > 0.0) {
            result.effect_size_d = (detail::mean_of(a) - detail::mean_of(b)) / std::sqrt(sp2);
        }
    }
    return result;
}

} // namespace entromon
