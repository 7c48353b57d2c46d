#include "tperf/score_model.hpp"

#include "tperf/nuisance.hpp"

namespace tperf {

double ScoreModel::score(std::span<const double> x) const {
    double buf[64];
    std::vector<double> heap;
    std::span<double> row;
    const std::size_t k = basis.dimension();
    if (k <= 64) {
        row = std::span<double>(buf, k);
    } else {
        heap.resize(k);
        row = heap;
    }
    basis.expand(x, row);
    double eta = 0.0;
    for (std::size_t j = 0; j < k; ++j) eta += row[j] * coefficients[j];
    return expit(eta);
}

std::vector<double> ScoreModel::score_all(const AnalysisDataset& data) const {
    if (coefficients.size() != basis.dimension()) {
        throw Error(ErrorCode::InvalidArgument,
                    "model has " + std::to_string(coefficients.size()) + " coefficients for a " +
                        std::to_string(basis.dimension()) + "-column basis");
    }
    if (basis.required_covariates() > data.n_covariates()) {
        throw Error(ErrorCode::InvalidArgument, "model references a covariate outside the data");
    }
    std::vector<double> out(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) out[i] = score(data.x_row(i));
    return out;
}

}  // namespace tperf
