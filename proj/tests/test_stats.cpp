#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "entromon/random.hpp"
#include "entromon/stats.hpp"

using namespace entromon;

namespace {

std::vector<std::vector<double>> read_csv(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::vector<std::vector<double>> rows;
    std::string line;
    std::getline(in, line); // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        rows.push_back(std::move(row));
    }
    return rows;
}

// Independent recomputation of Fleiss' kappa straight from the formula,
// organized differently from the library (per-item loop, explicit sums).
double direct_fleiss(const std::vector<std::array<int, 5>>& rows, int n) {
    const double items = static_cast<double>(rows.size());
    double sum_pi = 0.0;
    std::array<double, 5> totals{};
    for (const auto& row : rows) {
        double sq = 0.0;
        for (std::size_t j = 0; j < 5; ++j) {
            sq += static_cast<double>(row[j]) * row[j];
            totals[j] += row[j];
        }
        sum_pi += (sq - n) / (n * (n - 1.0));
    }
    const double p_bar = sum_pi / items;
    double p_e = 0.0;
    for (double t : totals) {
        const double pj = t / (items * n);
        p_e += pj * pj;
    }
    return (p_bar - p_e) / (1.0 - p_e);
}

} // namespace

TEST_CASE("incomplete beta against reference values") {
    // Frozen from an independent implementation (scipy.special.betainc).
    CHECK(detail::incomplete_beta(2.5, 0.5, 0.3) ==
          Catch::Approx(0.018927124071945658).epsilon(1e-10));
    CHECK(detail::incomplete_beta(2.5, 0.5, 0.0) == 0.0);
    CHECK(detail::incomplete_beta(2.5, 0.5, 1.0) == 1.0);
    // Symmetry I_x(a,b) = 1 - I_{1-x}(b,a).
    CHECK(detail::incomplete_beta(3.0, 7.0, 0.42) ==
          Catch::Approx(1.0 - detail::incomplete_beta(7.0, 3.0, 0.58)).epsilon(1e-10));
}

TEST_CASE("student t two-sided p against tabulated quantile") {
    // t = 2.086 is the 97.5% quantile of t(20): two-sided p = 0.05.
    CHECK(student_t_two_sided_p(2.086, 20.0) == Catch::Approx(0.04999635445744019).epsilon(1e-9));
    CHECK(student_t_two_sided_p(0.0, 10.0) == 1.0);
    CHECK(student_t_two_sided_p(-2.086, 20.0) ==
          Catch::Approx(student_t_two_sided_p(2.086, 20.0)).epsilon(1e-12));
}

TEST_CASE("fleiss kappa: perfect agreement is exactly 1") {
    AnnotationTable table;
    table.n_annotators = 4;
    table.rows = {{4, 0, 0, 0, 0}, {0, 4, 0, 0, 0}, {0, 0, 0, 4, 0}};
    CHECK(fleiss_kappa(table) == Catch::Approx(1.0).margin(1e-12));

    // All mass in one category everywhere: chance term degenerates but
    // agreement is perfect; convention says 1.
    AnnotationTable degenerate;
    degenerate.n_annotators = 3;
    degenerate.rows = {{3, 0, 0, 0, 0}, {3, 0, 0, 0, 0}};
    CHECK(fleiss_kappa(degenerate) == 1.0);
}

TEST_CASE("fleiss kappa: worked fixture") {
    const auto csv = read_csv("fixtures/fleiss_worked.csv");
    AnnotationTable table;
    table.n_annotators = 4;
    for (const auto& row : csv) {
        REQUIRE(row.size() == 5);
        std::array<int, 5> counts{};
        for (std::size_t j = 0; j < 5; ++j) counts[j] = static_cast<int>(row[j]);
        table.rows.push_back(counts);
    }
    // Frozen from an independent implementation
    // (statsmodels.stats.inter_rater.fleiss_kappa) and cross-checked by
    // the direct formula below.
    const double expected = 0.4092827004219409;
    CHECK(direct_fleiss(table.rows, table.n_annotators) == Catch::Approx(expected).margin(1e-12));
    CHECK(fleiss_kappa(table) == Catch::Approx(expected).margin(1e-9));
}

TEST_CASE("fleiss kappa: uniform random tables center near zero") {
    Rng rng(101);
    double sum = 0.0;
    const int draws = 1000;
    for (int d = 0; d < draws; ++d) {
        AnnotationTable table;
        table.n_annotators = 3;
        table.rows.assign(10, {0, 0, 0, 0, 0});
        for (auto& row : table.rows) {
            for (int a = 0; a < 3; ++a) ++row[static_cast<std::size_t>(rng.uniform_int(0, 4))];
        }
        sum += fleiss_kappa(table);
    }
    CHECK(std::abs(sum / draws) < 0.25);
}

TEST_CASE("fleiss kappa: invariance under item and category permutation") {
    AnnotationTable table;
    table.n_annotators = 4;
    table.rows = {{2, 1, 1, 0, 0}, {0, 0, 4, 0, 0}, {1, 1, 1, 1, 0}, {0, 3, 0, 0, 1}};
    const double base = fleiss_kappa(table);

    AnnotationTable shuffled_items = table;
    std::swap(shuffled_items.rows[0], shuffled_items.rows[3]);
    std::swap(shuffled_items.rows[1], shuffled_items.rows[2]);
    CHECK(fleiss_kappa(shuffled_items) == Catch::Approx(base).margin(1e-12));

    AnnotationTable shuffled_cats = table;
    for (auto& row : shuffled_cats.rows) {
        std::array<int, 5> rotated{};
        for (std::size_t j = 0; j < 5; ++j) rotated[j] = row[(j + 3) % 5];
        row = rotated;
    }
    CHECK(fleiss_kappa(shuffled_cats) == Catch::Approx(base).margin(1e-12));
}

TEST_CASE("fleiss kappa: input validation") {
    AnnotationTable bad;
    bad.n_annotators = 1;
    bad.rows = {{1, 0, 0, 0, 0}, {1, 0, 0, 0, 0}};
    CHECK_THROWS_AS(fleiss_kappa(bad), OutOfRangeError);

    AnnotationTable one_item;
    one_item.n_annotators = 3;
    one_item.rows = {{3, 0, 0, 0, 0}};
    CHECK_THROWS_AS(fleiss_kappa(one_item), InsufficientDataError);

    AnnotationTable bad_row;
    bad_row.n_annotators = 3;
    bad_row.rows = {{2, 0, 0, 0, 0}, {3, 0, 0, 0, 0}};
    CHECK_THROWS_AS(fleiss_kappa(bad_row), OutOfRangeError);
}

TEST_CASE("pearson: affine data gives exactly +/-1") {
    const std::vector<double> x{1.0, 2.0, 3.0};
    const std::vector<double> y{3.0, 5.0, 7.0}; // y = 2x + 1
    const CorrelationResult up = pearson_correlation(x, y);
    CHECK(up.rho == Catch::Approx(1.0).margin(1e-12));

    const std::vector<double> neg{-1.0, -2.0, -3.0};
    const CorrelationResult down = pearson_correlation(x, neg);
    CHECK(down.rho == Catch::Approx(-1.0).margin(1e-12));

    Rng rng(5);
    for (int i = 0; i < 100; ++i) {
        std::vector<double> xs, ys;
        const double a = (rng.uniform() - 0.5) * 10.0;
        const double b = (rng.uniform() - 0.5) * 4.0;
        if (std::abs(a) < 1e-3) continue;
        for (int j = 0; j < 8; ++j) {
            const double v = rng.uniform() * 100.0 + j; // j breaks exact ties
            xs.push_back(v);
            ys.push_back(a * v + b);
        }
        const CorrelationResult r = pearson_correlation(xs, ys);
        CHECK(r.rho == Catch::Approx(a > 0 ? 1.0 : -1.0).margin(1e-9));
    }
}

TEST_CASE("pearson: ten-point fixture against frozen reference") {
    const auto csv = read_csv("fixtures/pearson_fixture.csv");
    std::vector<double> x, y;
    for (const auto& row : csv) {
        REQUIRE(row.size() == 2);
        x.push_back(row[0]);
        y.push_back(row[1]);
    }
    const CorrelationResult r = pearson_correlation(x, y);
    // Frozen from scipy.stats.pearsonr.
    CHECK(r.rho == Catch::Approx(0.973771585156474).margin(1e-9));
    CHECK(r.p_value == Catch::Approx(2.0060008149149867e-06).epsilon(1e-6));
}

TEST_CASE("pearson: error paths") {
    const std::vector<double> flat{1.0, 1.0, 1.0};
    const std::vector<double> ramp{1.0, 2.0, 3.0};
    CHECK_THROWS_AS(pearson_correlation(flat, ramp), ZeroVarianceError);
    CHECK_THROWS_AS(pearson_correlation(ramp, flat), ZeroVarianceError);

    const std::vector<double> two{1.0, 2.0};
    CHECK_THROWS_AS(pearson_correlation(two, two), InsufficientDataError);
}

TEST_CASE("t-test: identical samples give t = 0, p = 1") {
    const std::vector<double> a{0.3, 0.4, 0.5, 0.6};
    const TestResult welch = t_test(a, a);
    CHECK(welch.statistic == 0.0);
    CHECK(welch.p_value == 1.0);
    const TestResult paired = t_test(a, a, TTestKind::paired);
    CHECK(paired.statistic == 0.0);
    CHECK(paired.p_value == 1.0);
}

TEST_CASE("t-test: fixture against frozen reference values") {
    const std::vector<double> a{0.31, 0.35, 0.29, 0.33, 0.36, 0.30};
    const std::vector<double> b{0.12, 0.10, 0.14, 0.11, 0.13, 0.12};

    // Frozen from scipy.stats.ttest_ind / ttest_rel.
    const TestResult welch = t_test(a, b);
    CHECK(welch.statistic == Catch::Approx(15.85619496975611).epsilon(1e-10));
    CHECK(welch.p_value == Catch::Approx(5.659218954490659e-07).epsilon(1e-6));

    const TestResult pooled = t_test(a, b, TTestKind::independent, 1, true);
    CHECK(pooled.statistic == Catch::Approx(15.856194969756114).epsilon(1e-10));
    CHECK(pooled.p_value == Catch::Approx(2.0485913373372356e-08).epsilon(1e-6));
    CHECK(pooled.dof == 10.0);

    const TestResult paired = t_test(a, b, TTestKind::paired);
    CHECK(paired.statistic == Catch::Approx(13.572321864444532).epsilon(1e-10));
    CHECK(paired.p_value == Catch::Approx(3.891337491122922e-05).epsilon(1e-6));
    CHECK(paired.dof == 5.0);

    // Cohen's d (pooled SD) recomputed directly.
    const double ma = (0.31 + 0.35 + 0.29 + 0.33 + 0.36 + 0.30) / 6.0;
    const double mb = (0.12 + 0.10 + 0.14 + 0.11 + 0.13 + 0.12) / 6.0;
    double va = 0.0, vb = 0.0;
    for (double v : a) va += (v - ma) * (v - ma);
    for (double v : b) vb += (v - mb) * (v - mb);
    const double sp = std::sqrt((va + vb) / 10.0);
    REQUIRE(welch.effect_size_d.has_value());
    CHECK(*welch.effect_size_d == Catch::Approx((ma - mb) / sp).margin(1e-12));
}

TEST_CASE("t-test: Bonferroni correction and argument symmetry") {
    const std::vector<double> a{1.0, 2.0, 3.0, 4.0};
    const std::vector<double> b{2.0, 3.0, 4.0, 6.0};

    const TestResult corrected = t_test(a, b, TTestKind::independent, 4);
    REQUIRE(corrected.corrected_alpha.has_value());
    CHECK(*corrected.corrected_alpha == Catch::Approx(0.0125).margin(1e-15));
    CHECK_FALSE(t_test(a, b).corrected_alpha.has_value());

    const TestResult ab = t_test(a, b);
    const TestResult ba = t_test(b, a);
    CHECK(ab.statistic == Catch::Approx(-ba.statistic).margin(1e-12));
    CHECK(ab.p_value == Catch::Approx(ba.p_value).margin(1e-12));
}

TEST_CASE("t-test: insufficient data") {
    const std::vector<double> one{1.0};
    const std::vector<double> several{1.0, 2.0, 3.0};
    CHECK_THROWS_AS(t_test(one, several), InsufficientDataError);
    CHECK_THROWS_AS(t_test(several, one), InsufficientDataError);
    CHECK_THROWS_AS(t_test(one, one, TTestKind::paired), InsufficientDataError);
    CHECK_THROWS_AS(t_test(several, one, TTestKind::paired), OutOfRangeError);
}
