#include <doctest.h>

#include <cmath>
#include <limits>

#include "tperf/simulation.hpp"

using namespace tperf;

TEST_CASE("replicates are deterministic in the seed") {
    SimulationConfig c;
    c.n = 300;
    const auto a = generate_replicate(c, 5), b = generate_replicate(c, 5), d = generate_replicate(c, 6);
    REQUIRE(a.data.size() == 300);
    bool differs = false;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        CHECK(a.data.source(i) == b.data.source(i));
        CHECK(a.data.x_row(i)[0] == b.data.x_row(i)[0]);
        differs = differs || a.data.x_row(i)[0] != d.data.x_row(i)[0];
    }
    CHECK(differs);
    CHECK(a.withheld_target_y == b.withheld_target_y);
    CHECK(a.withheld_target_y.size() == a.data.n_target());
    for (std::size_t i = 0; i < a.data.size(); ++i) CHECK(a.data.y(i).has_value() == a.data.is_study(i));
}

TEST_CASE("covariates, participation and study shares follow the design") {
    SimulationConfig c;
    c.n = 200000;
    const auto s = generate_replicate(c, 17);
    const auto& d = s.data;
    const double n = static_cast<double>(d.size());
    for (std::size_t a = 0; a < 5; ++a) {
        for (std::size_t b = a; b < 5; ++b) {
            double sum = 0;
            for (std::size_t i = 0; i < d.size(); ++i) sum += d.x_row(i)[a] * d.x_row(i)[b];
            const double expected = std::pow(0.6, static_cast<double>(b - a));
            CHECK(std::abs(sum / n - expected) < 0.02);
        }
    }
    // Shares among participants against the analytic probabilities averaged
    // over the participants' covariates; binomial SE is below 0.002 here.
    double p1 = 0, p2 = 0, n1 = 0, n2 = 0, r = 0, pr = 0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        const auto x = d.x_row(i);
        pr += c.participation_probability(x);
        if (!d.is_study(i)) continue;
        r += 1;
        const double t = x[0] + x[1] + x[2];
        const double beta = std::pow(1.3, t), eta = std::pow(0.8, t);
        p1 += beta / (1 + beta + eta);
        p2 += eta / (1 + beta + eta);
        n1 += d.source(i) == 1 ? 1 : 0;
        n2 += d.source(i) == 2 ? 1 : 0;
    }
    CHECK(std::abs(n1 / r - p1 / r) < 0.01);
    CHECK(std::abs(n2 / r - p2 / r) < 0.01);
    CHECK(std::abs(r / n - pr / n) < 0.01);
}

TEST_CASE("config validation") {
    SimulationConfig c;
    CHECK_NOTHROW(c.check());
    c.rho = 1.0;
    CHECK_THROWS_AS(c.check(), Error);
    c = SimulationConfig{};
    c.outcome_linear = {1.0};
    CHECK_THROWS_AS(c.check(), Error);
    c = SimulationConfig{};
    CHECK(c.evaluated_basis().dimension() == 6);
    c.evaluated_model_correct = true;
    CHECK(c.evaluated_basis().dimension() == 8);
    CHECK(c.participation_basis(true).dimension() == 9);
    CHECK(parse_regime("outcome_wrong") == Regime::OutcomeWrong);
    CHECK(!parse_regime("neither").has_value());
}

TEST_CASE("asymptotic coefficients of the evaluated model") {
    SimulationConfig c;
    c.evaluated_model_correct = true;
    const auto correct = estimate_beta_star(c, 1, 200000);
    // Correct basis order: intercept, x1..x5, x1^2, x2^2.
    const std::vector<double> truth{1.0, 0.5, 0.2, 0.0, 0.0, 0.0, 0.3, 0.3};
    REQUIRE(correct.model.coefficients.size() == truth.size());
    for (std::size_t j = 0; j < truth.size(); ++j) {
        CHECK(std::abs(correct.model.coefficients[j] - truth[j]) < 4.0 * correct.se[j]);
    }
    c.evaluated_model_correct = false;
    const auto a = estimate_beta_star(c, 1, 200000), b = estimate_beta_star(c, 2, 200000);
    bool far = false;
    for (std::size_t j = 0; j < a.model.coefficients.size(); ++j) {
        const double se = std::hypot(a.se[j], b.se[j]);
        CHECK(std::abs(a.model.coefficients[j] - b.model.coefficients[j]) < 3.0 * se);
        if (j < 3) far = far || std::abs(a.model.coefficients[j] - truth[j]) > 5.0 * a.se[j];
    }
    CHECK(far);
}

TEST_CASE("oracle truth on a hand example") {
    // Scores with outcomes: (0.1,0) (0.4,1) (0.4,0) (0.7,1) (0.9,1)
    const OracleTruth o({0.9, 0.4, 0.1, 0.7, 0.4}, {1, 1, 0, 1, 0});
    const auto t = o.at(0.5);
    CHECK(t.sensitivity == doctest::Approx(2.0 / 3.0));
    CHECK(t.specificity == doctest::Approx(1.0));
    CHECK(t.ppv == doctest::Approx(1.0));
    CHECK(t.npv == doctest::Approx(2.0 / 3.0));
    CHECK(o.at(0.4).sensitivity == doctest::Approx(2.0 / 3.0));
    CHECK(o.at(-std::numeric_limits<double>::infinity()).sensitivity == 1.0);
    CHECK(o.at(std::numeric_limits<double>::infinity()).specificity == 1.0);
    // Concordant positive-negative pairs: 0.9 and 0.7 beat both negatives,
    // 0.4 beats 0.1 and ties 0.4: 5 of 6.
    CHECK(o.auc() == doctest::Approx(5.0 / 6.0));
    const double brier = (0.01 + 0.36 + 0.16 + 0.09 + 0.01) / 5.0;
    CHECK(o.brier() == doctest::Approx(brier));
    CHECK(o.prevalence() == doctest::Approx(0.6));
    CHECK(o.value("ppv", 0.5) == doctest::Approx(1.0));
    CHECK(o.mc_se("brier", 0.5) > 0.0);
    CHECK_THROWS_AS(o.value("nope", 0.5), Error);
}

TEST_CASE("oracle behaves sensibly on the design") {
    SimulationConfig c;
    c.n_oracle = 200000;
    const auto beta = estimate_beta_star(c, 3, 100000);
    const auto o = oracle_truth(c, beta.model, 4);
    const auto o2 = oracle_truth(c, beta.model, 5);
    CHECK(std::abs(o.prevalence() - 0.75) < 0.01);
    CHECK(std::abs(o.auc() - o2.auc()) < 3.0 * std::hypot(o.auc_se(), o2.auc_se()));
    CHECK(std::abs(o.brier() - o2.brier()) < 3.0 * std::hypot(o.brier_se(), o2.brier_se()));
    // The true conditional probability ranks at least as well.
    c.evaluated_model_correct = true;
    ScoreModel truth{c.evaluated_basis(), {1.0, 0.5, 0.2, 0.0, 0.0, 0.0, 0.3, 0.3}};
    const auto best = oracle_truth(c, truth, 4);
    CHECK(best.auc() >= o.auc() - 2.0 * o.auc_se());
    const double cstar = oracle_youden_threshold(c, beta.model, 6, 100000);
    CHECK(cstar > 0.0);
    CHECK(cstar < 1.0);
}

TEST_CASE("small bias study runs every regime deterministically") {
    SimulationConfig c;
    c.n = 1000;
    c.replicates = 6;
    c.n_oracle = 50000;
    c.regimes = {Regime::BothCorrect, Regime::OutcomeWrong, Regime::ParticipationWrong,
                 Regime::BothWrong};
    c.threads = 2;
    const auto a = run_bias_study(c);
    c.threads = 1;
    const auto b = run_bias_study(c);
    REQUIRE(a.rows.size() == 4 * 6 * 4);
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        CHECK(a.rows[i].mean == b.rows[i].mean);
        CHECK(a.rows[i].truth == b.rows[i].truth);
        CHECK(a.rows[i].replicates + a.rows[i].failures == 6);
    }
    const auto& src = a.find("sensitivity", EstimatorKind::Source, Regime::BothWrong);
    const auto& src2 = a.find("sensitivity", EstimatorKind::Source, Regime::BothCorrect);
    CHECK(src.mean == src2.mean);  // source estimates ignore the nuisances
    CHECK(a.mean_sizes[0] + a.mean_sizes[1] + a.mean_sizes[2] + a.mean_sizes[3] ==
          doctest::Approx(1000.0));
}
