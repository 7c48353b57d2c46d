#include <doctest.h>

#include <cmath>
#include <random>

#include "test_support.hpp"
#include "tperf/metrics.hpp"
#include "tperf/tilt.hpp"

using namespace tperf;
using testing_support::make_dataset;
using testing_support::random_fixture;

TEST_CASE("tilted_b hand values and fixed points") {
    CHECK(tilted_b(0.5, std::log(2.0)) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
    CHECK(tilted_b(0.5, std::log(2.0), 1, false) == 0.0);
    CHECK(tilted_b(0.5, std::log(2.0), 1, true) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
    for (double g : {-50.0, -1.0, 0.0, 3.0, 50.0}) {
        CHECK(tilted_b(0.0, g) == 0.0);
        CHECK(tilted_b(1.0, g) == 1.0);
    }
    for (double m : {1e-9, 0.1, 0.37, 0.9, 1 - 1e-9}) CHECK(tilted_b(m, 0.0) == m);
    // Closed form e^g m / (1 + m (e^g - 1)) for moderate g.
    for (double m : {0.1, 0.5, 0.8}) {
        for (double g : {-2.0, -0.3, 0.7, 2.5}) {
            const double direct = std::exp(g) * m / (1.0 + m * (std::exp(g) - 1.0));
            CHECK(std::abs(tilted_b(m, g) - direct) < 1e-14);
        }
    }
}

TEST_CASE("tilted_b is strictly increasing in gamma") {
    for (double m : {0.01, 0.2, 0.5, 0.77, 0.99}) {
        double prev = tilted_b(m, -8.0);
        for (double g = -7.9; g <= 8.0; g += 0.1) {
            const double cur = tilted_b(m, g);
            CHECK(cur > prev);
            prev = cur;
        }
    }
}

TEST_CASE("tilted sensitivity examples") {
    // Two target rows with m = 0.5, one above the threshold.
    const auto data = make_dataset({{0, 0, 0.9, 0.0}, {0, 0, 0.1, 0.0}, {1, 1, 0.5, 0.0}});
    const std::vector<double> m{0.5, 0.5, 0.5};
    const auto est = tilted_sensitivity(data, m, std::log(2.0), 0.5, 1);
    CHECK(std::abs(est.value - 0.5) < 1e-12);
    CHECK(est.study == 1);

    const std::vector<double> zeros{0.0, 0.0, 0.5};
    CHECK_THROWS_AS(tilted_sensitivity(data, zeros, 1.0, 0.5), Error);
    try {
        tilted_sensitivity(data, zeros, 1.0, 0.5);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ZeroDenominator);
    }
}

TEST_CASE("gamma = 0 reproduces the outcome-model sensitivity") {
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        const auto f = random_fixture(seed, 8, 8, 2, seed % 2 == 0, seed % 3 == 0);
        for (double c : {0.1, 0.45, 0.7}) {
            for (bool survey : {false, true}) {
                const double base =
                    sensitivity(f.data, f.nv(), c, EstimatorKind::OutcomeModel, survey).value;
                const double tilted = tilted_sensitivity(f.data, f.m, 0.0, c, 1, survey).value;
                CHECK(std::abs(base - tilted) < 1e-12);
            }
        }
    }
}

TEST_CASE("large gamma gives the share of target rows above the threshold") {
    const auto f = random_fixture(11, 20, 6);
    const double c = 0.5;
    double above = 0, n0 = 0;
    for (std::size_t i = 0; i < f.data.size(); ++i) {
        if (!f.data.is_target(i)) continue;
        n0 += 1;
        above += *f.data.score(i) > c ? 1 : 0;
    }
    const double v = tilted_sensitivity(f.data, f.m, 20.0, c).value;
    CHECK(std::abs(v - above / n0) < 1e-6);
}

TEST_CASE("gamma calibration") {
    SUBCASE("single row hand solution") {
        const auto data = make_dataset({{0, 0, 0.5, 0.0}, {1, 1, 0.5, 0.0}});
        const std::vector<double> m{0.5, 0.5};
        const auto cal = calibrate_gamma(data, m, 2.0 / 3.0);
        CHECK(std::abs(cal.gamma - std::log(2.0)) < 1e-8);
        CHECK(std::abs(cal.residual) < 1e-10);
    }
    SUBCASE("the sample mean of m is matched at gamma 0") {
        const auto f = random_fixture(3, 15, 5);
        double mean = 0, n0 = 0;
        for (std::size_t i = 0; i < f.data.size(); ++i) {
            if (!f.data.is_target(i)) continue;
            mean += f.m[i];
            n0 += 1;
        }
        const auto cal = calibrate_gamma(f.data, f.m, mean / n0);
        CHECK(std::abs(cal.gamma) < 1e-8);
    }
    SUBCASE("bracket expands beyond the default") {
        const auto data = make_dataset({{0, 0, 0.5, 0.0}, {1, 1, 0.5, 0.0}});
        const std::vector<double> m{0.5, 0.5};
        const double target = expit(15.0);
        const auto cal = calibrate_gamma(data, m, target);
        // The slope of the tilted mean is about 3e-7 here, so a 1e-10
        // prevalence tolerance pins gamma only to a few 1e-4.
        CHECK(std::abs(cal.gamma - 15.0) < 1e-3);
        CHECK(std::abs(cal.residual) < 1e-10);
        CHECK(cal.bracket_hi >= 15.0);
    }
    SUBCASE("degenerate predictions cannot be tilted") {
        const auto data = make_dataset({{0, 0, 0.5, 0.0}, {0, 0, 0.5, 0.0}, {1, 1, 0.5, 0.0}});
        const std::vector<double> ones{1.0, 1.0, 0.5};
        try {
            calibrate_gamma(data, ones, 0.6);
            FAIL("expected BracketFailure");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::BracketFailure);
            CHECK(std::string(e.what()).find("attainable range") != std::string::npos);
        }
    }
    SUBCASE("spec validation") {
        TiltSpec spec;
        const std::vector<int> studies{1, 2};
        spec.gamma = {{1, 0.0}};
        CHECK_THROWS_AS(spec.check(studies), Error);
        spec.gamma[2] = 0.5;
        CHECK_NOTHROW(spec.check(studies));
        spec.mode = TiltSpec::Mode::Calibrated;
        CHECK_THROWS_AS(spec.check(studies), Error);
        spec.target_prevalence = 0.4;
        CHECK_NOTHROW(spec.check(studies));
    }
}

TEST_CASE("calibration recovers a known tilt") {
    // Outcomes drawn from the tilted density; prevalence realised on the draw.
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double gamma_star = 0.8;
    std::vector<testing_support::Row> rows;
    std::vector<double> m;
    double positives = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const double mi = 0.1 + 0.8 * u(rng);
        rows.push_back({0, 0, u(rng), 0.0});
        m.push_back(mi);
        positives += u(rng) < tilted_b(mi, gamma_star) ? 1 : 0;
    }
    rows.push_back({1, 1, 0.5, 0.0});
    m.push_back(0.5);
    const auto data = make_dataset(rows);
    const auto cal = calibrate_gamma(data, m, positives / n);
    CHECK(std::abs(cal.gamma - gamma_star) < 0.05);
}

TEST_CASE("combining per-study estimates") {
    const std::vector<double> v{0.6, 0.8};
    CHECK(std::abs(combine_estimates(v, std::vector<double>{0.5, 0.5}) - 0.7) < 1e-15);
    const std::vector<double> same{0.3, 0.3, 0.3};
    CHECK(std::abs(combine_estimates(same, std::vector<double>{0.2, 0.5, 0.3}) - 0.3) < 1e-15);
    try {
        combine_estimates(v, std::vector<double>{0.7, 0.7});
        FAIL("expected WeightSumViolation");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::WeightSumViolation);
    }
    // Affine equivariance.
    const std::vector<double> w{0.25, 0.75};
    const std::vector<double> shifted{0.6 + 0.1, 0.8 + 0.1};
    CHECK(std::abs(combine_estimates(shifted, w) - combine_estimates(v, w) - 0.1) < 1e-15);

    const auto iv = inverse_variance_weights(std::vector<double>{1.0, 3.0});
    CHECK(std::abs(iv[0] - 0.75) < 1e-15);
    CHECK(std::abs(iv[1] - 0.25) < 1e-15);
    CHECK_THROWS_AS(inverse_variance_weights(std::vector<double>{1.0, 0.0}), Error);
}

namespace {

// Two studies sharing one outcome mechanism; optionally study 2's outcome
// logit is shifted.
AnalysisDataset two_study_data(std::uint64_t seed, int n, double shift2) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> z(0.0, 1.0);
    DatasetColumns cols;
    cols.covariate_names = {"x1"};
    for (int i = 0; i < n; ++i) {
        DataRow r;
        const double x = z(rng);
        r.x = {x};
        const double pick = u(rng);
        r.source = pick < 0.3 ? 0 : (pick < 0.65 ? 1 : 2);
        const double eta = 0.3 + 0.8 * x + (r.source == 2 ? shift2 : 0.0);
        if (r.source != 0) r.y = u(rng) < expit(eta) ? 1 : 0;
        r.score = expit(x);
        cols.push_back(r);
    }
    return AnalysisDataset(std::move(cols));
}

}  // namespace

TEST_CASE("compatibility diagnostic") {
    SUBCASE("one study is not enough") {
        const auto f = random_fixture(5, 10, 10, 1);
        try {
            tilt_compatibility_diagnostic(f.data, {{1, 0.0}});
            FAIL("expected InsufficientStudies");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::InsufficientStudies);
        }
    }
    SUBCASE("identical per-study models give zero discrepancy") {
        // Study 2 duplicates study 1 row for row.
        DatasetColumns cols;
        cols.covariate_names = {"x1"};
        std::mt19937_64 rng(8);
        std::normal_distribution<double> z(0.0, 1.0);
        for (int i = 0; i < 60; ++i) {
            DataRow r;
            r.x = {z(rng)};
            r.score = 0.5;
            cols.push_back(r);
        }
        for (int i = 0; i < 80; ++i) {
            DataRow r;
            r.x = {z(rng)};
            r.y = (i % 3 == 0) ? 0 : 1;
            r.score = 0.5;
            r.source = 1;
            cols.push_back(r);
            r.source = 2;
            cols.push_back(r);
        }
        const AnalysisDataset data(std::move(cols));
        CompatibilityOptions o;
        o.outcome_basis = BasisSpec::linear(1);
        o.replicates = 0;
        const auto rep = tilt_compatibility_diagnostic(data, {{1, 0.4}, {2, 0.4}}, o);
        CHECK(rep.bin_upper.size() == 5);
        for (double d : rep.discrepancy) CHECK(d < 1e-12);
        std::size_t total = 0;
        for (auto c : rep.bin_counts) total += c;
        CHECK(total == 60);
    }
    SUBCASE("a shifted study is detected; compatible studies mostly are not") {
        CompatibilityOptions o;
        o.outcome_basis = BasisSpec::linear(1);
        o.replicates = 100;
        const auto shifted = tilt_compatibility_diagnostic(two_study_data(1, 4000, 1.0),
                                                           {{1, 0.0}, {2, 0.0}}, o);
        CHECK(shifted.statistic > shifted.critical_value_95);
        CHECK(shifted.p_value < 0.05);
        // Declaring the true tilt reconciles the studies.
        const auto reconciled = tilt_compatibility_diagnostic(two_study_data(1, 4000, 1.0),
                                                              {{1, 0.0}, {2, -1.0}}, o);
        CHECK(reconciled.statistic < shifted.statistic);
        CHECK(reconciled.replicates_used + reconciled.failures == 100);
    }
}
