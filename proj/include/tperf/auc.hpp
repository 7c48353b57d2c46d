#pragma once

#include <cstddef>

#include "tperf/dataset.hpp"
#include "tperf/metrics.hpp"

namespace tperf {

struct AucOptions {
    bool use_survey_weights = false;
    // Give tied scores half credit. Off by default: the estimators count only
    // strictly concordant pairs.
    bool tie_half_credit = false;
};

/// Per-pair contributions for an ordered pair (i, j) and a kernel value k.
/// dr = w + out - cross.
struct PairKernelTerms {
    double d_out = 0.0;
    double d_w = 0.0;
    double cross = 0.0;
    double d_dr() const { return d_w + d_out - cross; }
};

struct AucEstimate {
    EstimatorKind estimator = EstimatorKind::OutcomeModel;
    double value = 0.0;
    double numerator = 0.0;
    double denominator = 0.0;
    std::size_t contributing_pairs = 0;  // ordered pairs entering the denominator sums
    std::size_t tied_pairs = 0;          // unordered pairs with equal scores in those groups
    bool out_of_range = false;
};

AucEstimate auc_om(const AnalysisDataset& data, std::span<const double> m_hat,
                   const AucOptions& options = {});
AucEstimate auc_w(const AnalysisDataset& data, std::span<const double> w_hat,
                  const AucOptions& options = {});
AucEstimate auc_dr(const AnalysisDataset& data, std::span<const double> m_hat,
                   std::span<const double> w_hat, const AucOptions& options = {});
/// Empirical Mann-Whitney AUC over pooled study rows.
AucEstimate auc_source(const AnalysisDataset& data, const AucOptions& options = {});

AucEstimate auc(const AnalysisDataset& data, const NuisanceValues& nuisance,
                EstimatorKind estimator, const AucOptions& options = {});

/// Pair terms of the ordered pair (i, j) with kernel value `kernel`.
PairKernelTerms pair_terms(const AnalysisDataset& data, const NuisanceValues& nuisance,
                           std::size_t i, std::size_t j, double kernel,
                           bool use_survey_weights = false);

/// O(n^2) enumeration over all ordered pairs; the reference for auc().
AucEstimate auc_all_pairs(const AnalysisDataset& data, const NuisanceValues& nuisance,
                          EstimatorKind estimator, const AucOptions& options = {});

}  // namespace tperf
