#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "tperf/basis.hpp"
#include "tperf/dataset.hpp"
#include "tperf/nuisance.hpp"

namespace tperf {

struct TiltSpec {
    enum class Mode { Fixed, Calibrated };
    Mode mode = Mode::Fixed;
    std::map<int, double> gamma;              // fixed mode: one entry per study
    std::optional<double> target_prevalence;  // calibrated mode
    double bracket_lo = -10.0;
    double bracket_hi = 10.0;
    double bracket_limit = 30.0;  // expansion stops at [-limit, limit]
    double tol = 1e-10;           // on the prevalence gap

    /// Throws Config when the mode's required fields are missing.
    void check(std::span<const int> studies) const;
};

/// e^g m / (1 + m (e^g - 1)) times indicator^j, computed as expit(logit m + g)
/// so it is stable for large |g|. m in {0, 1} are fixed points.
double tilted_b(double m, double gamma, int j = 0, bool indicator = true);

struct TiltedEstimate {
    int study = 0;
    double gamma = 0.0;
    double value = 0.0;
    double calibration_residual = 0.0;  // zero in fixed mode
};

/// Sum over target rows of b^1 divided by the sum of b^0. `m_study` holds the
/// per-study outcome model's predictions for every row.
TiltedEstimate tilted_sensitivity(const AnalysisDataset& data, std::span<const double> m_study,
                                  double gamma, double c, int study = 0,
                                  bool use_survey_weights = false);

/// (Weighted) mean over target rows of b^0.
double tilted_prevalence(const AnalysisDataset& data, std::span<const double> m_study,
                         double gamma, bool use_survey_weights = false);

struct GammaCalibration {
    double gamma = 0.0;
    double residual = 0.0;  // tilted prevalence minus target
    int iterations = 0;
    double bracket_lo = 0.0;
    double bracket_hi = 0.0;
};

/// Bisection for the gamma whose tilted prevalence matches `target`. The
/// bracket doubles outwards up to bracket_limit; BracketFailure reports
/// the attainable range otherwise.
GammaCalibration calibrate_gamma(const AnalysisDataset& data, std::span<const double> m_study,
                                 double target, const TiltSpec& spec = {},
                                 bool use_survey_weights = false);

/// Sum of a_k v_k; weights must sum to one within 1e-10.
double combine_estimates(std::span<const double> values, std::span<const double> weights);

/// Weights proportional to 1 / variance, normalised to one. These are not
/// optimal here: the per-study estimates share the target sample.
std::vector<double> inverse_variance_weights(std::span<const double> variances);

/// Per-study outcome model predictions for every row, keyed by study.
std::map<int, std::vector<double>> per_study_predictions(const AnalysisDataset& data,
                                                         const BasisSpec& basis,
                                                         const FitOptions& options = {});

struct CompatibilityOptions {
    int bins = 5;
    int replicates = 200;
    std::uint64_t seed = 1;
    BasisSpec outcome_basis = BasisSpec::intercept_only();
    FitOptions fit;
    bool use_survey_weights = false;
    unsigned threads = 1;
};

struct CompatibilityReport {
    std::vector<double> bin_upper;                  // upper edge of each bin in pooled m
    std::vector<std::size_t> bin_counts;            // target rows per bin
    std::vector<std::map<int, double>> prevalence;  // per bin, per study tilted prevalence
    std::vector<double> discrepancy;                // per bin, max - min over studies
    double statistic = 0.0;                         // max over bins
    double p_value = 1.0;
    double critical_value_95 = 0.0;  // 95th percentile of the bootstrap statistic
    int replicates_used = 0;
    int failures = 0;
};

/// Binned cross-study comparison of tilted prevalences over the target
/// sample. Under compatible tilts every study implies the same outcome
/// distribution in each bin. The bootstrap refits all outcome models per
/// replicate and compares max |d* - d| against max |d|.
CompatibilityReport tilt_compatibility_diagnostic(const AnalysisDataset& data,
                                                  const std::map<int, double>& gamma,
                                                  const CompatibilityOptions& options = {});

}  // namespace tperf
