#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tperf/dataset.hpp"

namespace tperf {

enum class Metric { Sensitivity, Specificity, Ppv, Npv, Risk };

enum class EstimatorKind {
    OutcomeModel,  // plug-in m(x) averaged over the target sample
    Weighting,     // study rows reweighted by the participation odds w(x)
    DoublyRobust,  // outcome model plus weighted residual augmentation
    Source,        // pooled empirical metric over study rows, unweighted
};

enum class Loss { Brier, Absolute };

const char* metric_name(Metric m);
const char* estimator_name(EstimatorKind e);
const char* loss_name(Loss l);
std::optional<Metric> parse_metric(const std::string& s);
std::optional<EstimatorKind> parse_estimator(const std::string& s);
std::optional<Loss> parse_loss(const std::string& s);

double loss_value(Loss loss, int y, double h);

/// Per-row nuisance predictions aligned with dataset rows. `m` is needed by
/// the outcome-model and doubly-robust estimators, `w` by the weighting and
/// doubly-robust ones; either may be empty otherwise.
struct NuisanceValues {
    std::span<const double> m;
    std::span<const double> w;
};

struct MetricRequest {
    Metric metric = Metric::Sensitivity;
    EstimatorKind estimator = EstimatorKind::OutcomeModel;
    double threshold = 0.5;           // ignored for risk
    std::optional<Loss> loss;         // risk only
    bool use_survey_weights = false;  // target-row survey weights
};

struct EstimateDiagnostics {
    double numerator = 0.0;
    double denominator = 0.0;
    std::size_t rows_used = 0;
    // Augmented (doubly robust) estimators are not range-constrained in
    // finite samples; the raw value is reported and this flag is set.
    bool out_of_range = false;
};

struct PerformanceEstimate {
    MetricRequest request;
    double value = 0.0;
    double n_effective = 0.0;  // Kish effective size of the denominator weights
    EstimateDiagnostics diagnostics;
};

PerformanceEstimate estimate_metric(const AnalysisDataset& data, const NuisanceValues& nuisance,
                                    const MetricRequest& request);

PerformanceEstimate sensitivity(const AnalysisDataset& data, const NuisanceValues& nuisance,
                                double c, EstimatorKind estimator, bool use_survey_weights = false);
PerformanceEstimate specificity(const AnalysisDataset& data, const NuisanceValues& nuisance,
                                double c, EstimatorKind estimator, bool use_survey_weights = false);
PerformanceEstimate ppv(const AnalysisDataset& data, const NuisanceValues& nuisance, double c,
                        EstimatorKind estimator, bool use_survey_weights = false);
PerformanceEstimate npv(const AnalysisDataset& data, const NuisanceValues& nuisance, double c,
                        EstimatorKind estimator, bool use_survey_weights = false);
PerformanceEstimate risk(const AnalysisDataset& data, const NuisanceValues& nuisance, Loss loss,
                         EstimatorKind estimator, bool use_survey_weights = false);

struct YoudenResult {
    double threshold = 0.0;  // may be -inf / +inf (grid sentinels)
    double youden = 0.0;     // sensitivity + specificity - 1
    double sensitivity = 0.0;
    double specificity = 0.0;
    std::size_t candidates = 0;
};

/// Candidate thresholds: -inf, midpoints between consecutive distinct study
/// scores, +inf. Throws DegenerateScores with fewer than two distinct values.
std::vector<double> youden_grid(const AnalysisDataset& data);

/// Maximises the estimator-specific Youden statistic over youden_grid();
/// ties resolve to the smallest threshold.
YoudenResult youden_select(const AnalysisDataset& data, const NuisanceValues& nuisance,
                           EstimatorKind estimator, bool use_survey_weights = false);

struct RocPoint {
    double threshold;
    double sensitivity;
    double specificity;
};

/// Sensitivity/specificity pairs along youden_grid().
std::vector<RocPoint> roc_points(const AnalysisDataset& data, const NuisanceValues& nuisance,
                                 EstimatorKind estimator, bool use_survey_weights = false);

/// Plug-in variance of the doubly robust sensitivity estimator from its
/// estimated influence function (sample variance / n); Pr[S=0] is n0/n.
double if_variance_sensitivity(const AnalysisDataset& data, const NuisanceValues& nuisance,
                               double c, double psi);

}  // namespace tperf
