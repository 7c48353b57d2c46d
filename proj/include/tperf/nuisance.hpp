#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "tperf/basis.hpp"
#include "tperf/dataset.hpp"

namespace tperf {

enum class NuisanceKind {
    Outcome,        // m(x) = Pr[Y=1 | X=x, R=1]
    Participation,  // p(x) = Pr[R=1 | X=x], used through the odds (1-p)/p
};

struct FitOptions {
    double tol = 1e-8;  // relative deviance change
    int max_iter = 100;
    double clip_epsilon = 1e-6;
};

/// Fitted binary regression on a basis expansion. Immutable once returned.
struct NuisanceFit {
    NuisanceKind kind = NuisanceKind::Outcome;
    BasisSpec basis;
    Eigen::VectorXd coefficients;
    bool converged = false;
    bool separated = false;  // monotone likelihood; coefficients are not usable
    double deviance = 0.0;
    int iterations = 0;
    double clip_epsilon = 1e-6;
    std::vector<double> deviance_trace;  // deviance after each accepted step (index 0: start)

    double linear_predictor(std::span<const double> x) const;
    /// Unclipped inverse-logit of the linear predictor.
    double raw_probability(std::span<const double> x) const;
    /// Probability clipped to [eps, 1-eps]; `clipped` set when the bound was hit.
    double probability(std::span<const double> x, bool* clipped = nullptr) const;
};

/// Rows handed to the IRLS solver; x is row-major n * n_covariates.
struct LogisticRows {
    std::span<const double> x;
    std::size_t n_covariates = 0;
    std::span<const int> labels;
    std::span<const double> weights;

    std::size_t size() const { return labels.size(); }
};

/// Weighted logistic regression by IRLS with step-halving. Throws
/// RankDeficient for a collinear design; complete or quasi-complete
/// separation comes back as a fit with `separated` set.
NuisanceFit fit_logistic(NuisanceKind kind, const LogisticRows& rows, const BasisSpec& basis,
                         const FitOptions& options = {});

/// Outcome model on study rows (all of them, or only source == `study`).
NuisanceFit fit_outcome_model(const AnalysisDataset& data, const BasisSpec& basis,
                              const FitOptions& options = {},
                              std::optional<int> study = std::nullopt);

/// Participation model of R on all rows; survey weights enter the likelihood
/// when requested.
NuisanceFit fit_participation_model(const AnalysisDataset& data, const BasisSpec& basis,
                                    const FitOptions& options = {},
                                    bool use_survey_weights = false);

/// Throws Separation when the fit is flagged.
const NuisanceFit& require_usable(const NuisanceFit& fit);

struct ClipStats {
    std::size_t clipped = 0;
    std::size_t evaluated = 0;
};

double predict_m(const NuisanceFit& fit, std::span<const double> x, ClipStats* stats = nullptr);
double predict_w(const NuisanceFit& fit, std::span<const double> x, ClipStats* stats = nullptr);

/// Per-row predictions over a whole dataset.
std::vector<double> predict_m(const NuisanceFit& fit, const AnalysisDataset& data,
                              ClipStats* stats = nullptr);
std::vector<double> predict_w(const NuisanceFit& fit, const AnalysisDataset& data,
                              ClipStats* stats = nullptr);

/// Flags target rows whose raw participation probability falls below the clip
/// threshold.
void add_positivity_diagnostic(ValidationReport& report, const AnalysisDataset& data,
                               const NuisanceFit& participation);

inline double expit(double eta) {
    if (eta >= 0) return 1.0 / (1.0 + std::exp(-eta));
    const double e = std::exp(eta);
    return e / (1.0 + e);
}

inline double logit(double p) { return std::log(p / (1.0 - p)); }

}  // namespace tperf
