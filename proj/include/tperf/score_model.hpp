#pragma once

#include <span>
#include <vector>

#include "tperf/basis.hpp"
#include "tperf/dataset.hpp"

namespace tperf {

/// The prediction model under evaluation: h(x) = expit(basis(x) . beta).
struct ScoreModel {
    BasisSpec basis;
    std::vector<double> coefficients;

    double score(std::span<const double> x) const;
    /// Scores for every row; throws InvalidArgument on a dimension mismatch.
    std::vector<double> score_all(const AnalysisDataset& data) const;
};

}  // namespace tperf
