#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tperf/basis.hpp"
#include "tperf/dataset.hpp"
#include "tperf/metrics.hpp"
#include "tperf/nuisance.hpp"
#include "tperf/score_model.hpp"

namespace tperf {

/// Nuisance specification regimes; "wrong" means linear main effects only.
enum class Regime { BothCorrect, OutcomeWrong, ParticipationWrong, BothWrong };

const char* regime_name(Regime r);
std::optional<Regime> parse_regime(const std::string& s);

/// Performance measures reported by the bias study, in output order.
inline constexpr std::array<const char*, 6> kSimulationMetrics = {
    "sensitivity", "specificity", "ppv", "npv", "brier", "auc"};

struct SimulationConfig {
    std::size_t n = 2000;
    int replicates = 1000;
    std::uint64_t seed = 20240601;
    std::size_t p = 5;
    double rho = 0.6;  // Sigma_ij = rho^|i-j|

    // Participation: expit(intercept + linear . x + square . x^2).
    double selection_intercept = 1.0;
    std::vector<double> selection_linear{0.5, 0.5, 0.3, 0.0, 0.0};
    std::vector<double> selection_square{0.3, 0.3, 0.3, 0.0, 0.0};
    // Study membership among participants: beta = exp(a . x), eta = exp(b . x),
    // p1 = beta / (1 + beta + eta), p2 = eta / (1 + beta + eta), p3 = 1 - p1 - p2.
    std::vector<double> assignment_beta;  // defaults to log(1.3) on x1..x3
    std::vector<double> assignment_eta;   // defaults to log(0.8) on x1..x3
    // Outcome: expit(intercept + linear . x + square . x^2).
    double outcome_intercept = 1.0;
    std::vector<double> outcome_linear{0.5, 0.2, 0.0, 0.0, 0.0};
    std::vector<double> outcome_square{0.3, 0.3, 0.0, 0.0, 0.0};
    // Added to the outcome logit of rows in the given study (exchangeability
    // violations for the tilt analyses). Empty in the standard design.
    std::map<int, double> study_outcome_shift;

    // The evaluated model: linear main effects (misspecified) unless set.
    bool evaluated_model_correct = false;
    std::size_t n_oracle = 2'000'000;
    std::vector<Regime> regimes{Regime::BothCorrect};
    unsigned threads = 1;
    FitOptions fit;
    double max_failure_rate = 0.2;

    SimulationConfig();
    /// Throws Config on inconsistent dimensions or rho outside (0, 1).
    void check() const;

    BasisSpec evaluated_basis() const;
    BasisSpec outcome_basis(bool correct) const;
    BasisSpec participation_basis(bool correct) const;
    double outcome_probability(std::span<const double> x) const;
    double participation_probability(std::span<const double> x) const;
};

/// One simulated sample. Target outcomes are drawn but kept apart from the
/// dataset so no estimator can see them.
struct SimulatedSample {
    AnalysisDataset data;
    std::vector<int> withheld_target_y;  // one per target row, in row order
};

SimulatedSample generate_replicate(const SimulationConfig& config, std::uint64_t seed);

struct BetaStar {
    ScoreModel model;
    std::vector<double> se;  // sandwich standard errors
    std::size_t rows = 0;
};

/// Logistic fit of Y on the evaluated basis over `rows` draws from the
/// participant (R = 1) population.
BetaStar estimate_beta_star(const SimulationConfig& config, std::uint64_t seed,
                            std::optional<std::size_t> rows = std::nullopt);

struct ThresholdTruth {
    double sensitivity, specificity, ppv, npv;
    double sensitivity_se, specificity_se, ppv_se, npv_se;
};

/// Monte Carlo truth for a fixed score model over target-population draws with
/// outcomes. Threshold metrics are available for any c.
class OracleTruth {
public:
    OracleTruth() = default;
    OracleTruth(std::vector<double> scores, std::vector<int> outcomes);

    ThresholdTruth at(double c) const;
    double brier() const { return brier_; }
    double brier_se() const { return brier_se_; }
    double auc() const { return auc_; }
    double auc_se() const { return auc_se_; }
    double prevalence() const { return static_cast<double>(n_pos_) / static_cast<double>(n()); }
    std::size_t n() const { return sorted_h_.size(); }
    /// Value by name from kSimulationMetrics at threshold c.
    double value(const std::string& metric, double c) const;
    double mc_se(const std::string& metric, double c) const;

private:
    std::vector<double> sorted_h_;
    std::vector<std::uint32_t> pos_prefix_;  // outcomes = 1 among the first k sorted rows
    std::size_t n_pos_ = 0;
    double brier_ = 0, brier_se_ = 0, auc_ = 0, auc_se_ = 0;
};

/// Draws `draws` target-population rows (defaults to config.n_oracle).
OracleTruth oracle_truth(const SimulationConfig& config, const ScoreModel& model,
                         std::uint64_t seed, std::optional<std::size_t> draws = std::nullopt);

/// Youden threshold of `model` in the participant population, from the same
/// kind of large draw.
double oracle_youden_threshold(const SimulationConfig& config, const ScoreModel& model,
                               std::uint64_t seed, std::size_t draws);

struct BiasRow {
    std::string metric;
    EstimatorKind estimator;
    Regime regime;
    double mean = 0;      // mean estimate over successful replicates
    double truth = 0;     // mean oracle truth at each replicate's threshold
    double bias = 0;
    double rel_bias = 0;  // bias / truth
    double sd = 0;        // empirical SD of the estimates
    int replicates = 0;
    int failures = 0;
};

struct BiasStudyResult {
    std::vector<BiasRow> rows;
    BetaStar beta_star;
    double mean_threshold = 0.0;
    double oracle_youden = 0.0;
    std::array<double, 4> mean_sizes{};  // target, study 1, 2, 3
    std::map<Regime, int> failed_replicates;
    std::map<std::string, int> failure_reasons;

    const BiasRow& find(const std::string& metric, EstimatorKind est, Regime regime) const;
};

/// Per replicate: simulate, pick the threshold by Youden on study rows with
/// the source estimator, fit both nuisances under each regime, estimate all
/// six measures with every estimator and compare against the oracle truth at
/// that threshold.
BiasStudyResult run_bias_study(const SimulationConfig& config);

/// Estimates for one dataset under one regime, indexed [metric][estimator]
/// in kSimulationMetrics x {om, w, dr, source} order; NaN marks a failed cell.
std::vector<std::array<double, 4>> estimate_all(const AnalysisDataset& scored,
                                                const SimulationConfig& config, Regime regime,
                                                double threshold);

}  // namespace tperf
