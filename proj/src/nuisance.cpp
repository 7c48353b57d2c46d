#include "tperf/nuisance.hpp"

#include <algorithm>
#include <cmath>

namespace tperf {

namespace {

// log(1 + e^eta) without overflow.
double softplus(double eta) {
    return eta > 0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta));
}

double bernoulli_deviance(const Eigen::VectorXd& eta, std::span<const int> y,
                          std::span<const double> w) {
    double dev = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        dev += w[i] * (softplus(eta[i]) - y[i] * eta[i]);
    }
    return 2.0 * dev;
}

Eigen::MatrixXd build_design(const LogisticRows& rows, const BasisSpec& basis) {
    const std::size_t n = rows.size();
    const std::size_t k = basis.dimension();
    Eigen::MatrixXd design(n, k);
    std::vector<double> buf(k);
    for (std::size_t i = 0; i < n; ++i) {
        basis.expand(rows.x.subspan(i * rows.n_covariates, rows.n_covariates), buf);
        for (std::size_t j = 0; j < k; ++j) design(i, j) = buf[j];
    }
    return design;
}

}  // namespace

double NuisanceFit::linear_predictor(std::span<const double> x) const {
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
    for (std::size_t j = 0; j < k; ++j) eta += row[j] * coefficients[static_cast<Eigen::Index>(j)];
    return eta;
}

double NuisanceFit::raw_probability(std::span<const double> x) const {
    return expit(linear_predictor(x));
}

double NuisanceFit::probability(std::span<const double> x, bool* clipped) const {
    const double p = raw_probability(x);
    const double lo = clip_epsilon, hi = 1.0 - clip_epsilon;
    const double out = std::clamp(p, lo, hi);
    if (clipped) *clipped = (p < lo || p > hi);
    return out;
}

NuisanceFit fit_logistic(NuisanceKind kind, const LogisticRows& rows, const BasisSpec& basis,
                         const FitOptions& options) {
    const std::size_t n = rows.size();
    const std::size_t k = basis.dimension();
    if (rows.weights.size() != n || rows.x.size() != n * rows.n_covariates) {
        throw Error(ErrorCode::InvalidArgument, "logistic rows have inconsistent lengths");
    }
    if (k == 0) throw Error(ErrorCode::InvalidArgument, "empty basis");
    if (basis.required_covariates() > rows.n_covariates) {
        throw Error(ErrorCode::InvalidArgument, "basis references a covariate outside the data");
    }
    if (!(options.clip_epsilon > 0.0 && options.clip_epsilon < 0.5)) {
        throw Error(ErrorCode::InvalidArgument, "clip epsilon must lie in (0, 0.5)");
    }

    NuisanceFit fit;
    fit.kind = kind;
    fit.basis = basis;
    fit.clip_epsilon = options.clip_epsilon;
    fit.coefficients = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k));

    double w_total = 0.0, w_pos = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!(rows.weights[i] > 0.0)) throw Error(ErrorCode::InvalidArgument, "weights must be > 0");
        if (rows.labels[i] != 0 && rows.labels[i] != 1) {
            throw Error(ErrorCode::InvalidArgument, "labels must be 0/1");
        }
        w_total += rows.weights[i];
        w_pos += rows.weights[i] * rows.labels[i];
    }
    if (n == 0) throw Error(ErrorCode::InvalidArgument, "no rows to fit");

    const Eigen::MatrixXd design = build_design(rows, basis);
    {
        Eigen::MatrixXd scaled = design;
        for (std::size_t i = 0; i < n; ++i) scaled.row(i) *= std::sqrt(rows.weights[i]);
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(scaled);
        qr.setThreshold(1e-10);
        if (static_cast<std::size_t>(qr.rank()) < k) {
            throw Error(ErrorCode::RankDeficient,
                        "design matrix has rank " + std::to_string(qr.rank()) + " < " +
                            std::to_string(k) + " columns");
        }
    }

    if (w_pos == 0.0 || w_pos == w_total) {
        fit.separated = true;
        fit.deviance = 0.0;
        return fit;
    }

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k));
    if (basis.include_intercept) beta[0] = logit(w_pos / w_total);
    Eigen::VectorXd eta = design * beta;
    double dev = bernoulli_deviance(eta, rows.labels, rows.weights);
    fit.deviance_trace.push_back(dev);

    Eigen::VectorXd prob(static_cast<Eigen::Index>(n));
    Eigen::VectorXd grad(static_cast<Eigen::Index>(k));
    Eigen::MatrixXd hess(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
    Eigen::MatrixXd weighted(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));

    int iter = 0;
    bool converged = false;
    for (; iter < options.max_iter; ++iter) {
        for (std::size_t i = 0; i < n; ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            prob[ii] = expit(eta[ii]);
            const double var = rows.weights[i] * prob[ii] * (1.0 - prob[ii]);
            weighted.row(ii) = design.row(ii) * var;
        }
        Eigen::VectorXd resid(static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            resid[ii] = rows.weights[i] * (rows.labels[i] - prob[ii]);
        }
        grad.noalias() = design.transpose() * resid;
        hess.noalias() = design.transpose() * weighted;

        Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
        if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
            fit.separated = true;
            break;
        }
        Eigen::VectorXd step = ldlt.solve(grad);
        if (!step.allFinite()) {
            fit.separated = true;
            break;
        }
        if (step.lpNorm<Eigen::Infinity>() > 1e4) {
            fit.separated = true;
            break;
        }

        double t = 1.0;
        double dev_new = dev;
        Eigen::VectorXd beta_new;
        Eigen::VectorXd eta_new;
        bool accepted = false;
        for (int halving = 0; halving < 40; ++halving) {
            beta_new = beta + t * step;
            eta_new = design * beta_new;
            dev_new = bernoulli_deviance(eta_new, rows.labels, rows.weights);
            if (std::isfinite(dev_new) && dev_new <= dev + 1e-10 * (std::abs(dev) + 1.0)) {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) {
            // No descent direction left: we are at the optimum to machine precision.
            converged = true;
            ++iter;
            break;
        }
        beta = beta_new;
        eta = eta_new;
        const double change = std::abs(dev - dev_new);
        dev = dev_new;
        fit.deviance_trace.push_back(dev);
        if (change < options.tol * (std::abs(dev) + 0.1)) {
            converged = true;
            ++iter;
            break;
        }
    }

    fit.coefficients = beta;
    fit.deviance = dev;
    fit.iterations = iter;
    fit.converged = converged && !fit.separated;

    if (!fit.separated) {
        // Fitted probabilities pinned at the clip bounds for every row of one
        // label signals a monotone likelihood.
        const double lo = options.clip_epsilon, hi = 1.0 - options.clip_epsilon;
        bool ones_pinned = true, zeros_pinned = true;
        for (std::size_t i = 0; i < n; ++i) {
            const double p = expit(eta[static_cast<Eigen::Index>(i)]);
            if (rows.labels[i] == 1 && p < hi) ones_pinned = false;
            if (rows.labels[i] == 0 && p > lo) zeros_pinned = false;
        }
        if (ones_pinned || zeros_pinned) {
            fit.separated = true;
            fit.converged = false;
        }
    }
    return fit;
}

NuisanceFit fit_outcome_model(const AnalysisDataset& data, const BasisSpec& basis,
                              const FitOptions& options, std::optional<int> study) {
    const std::size_t p = data.n_covariates();
    std::vector<double> x;
    std::vector<int> labels;
    std::vector<double> weights;
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (!data.is_study(i)) continue;
        if (study && data.source(i) != *study) continue;
        auto xr = data.x_row(i);
        x.insert(x.end(), xr.begin(), xr.end());
        labels.push_back(*data.y(i));
        weights.push_back(1.0);
    }
    if (labels.empty()) {
        throw Error(ErrorCode::InvalidArgument,
                    study ? "no rows for study " + std::to_string(*study) : "no study rows");
    }
    return fit_logistic(NuisanceKind::Outcome, LogisticRows{x, p, labels, weights}, basis,
                        options);
}

NuisanceFit fit_participation_model(const AnalysisDataset& data, const BasisSpec& basis,
                                    const FitOptions& options, bool use_survey_weights) {
    const auto& cols = data.columns();
    std::vector<int> labels = derive_r(data);
    std::vector<double> weights(data.size(), 1.0);
    if (use_survey_weights) weights = cols.weight;
    return fit_logistic(NuisanceKind::Participation,
                        LogisticRows{cols.x, data.n_covariates(), labels, weights}, basis,
                        options);
}

const NuisanceFit& require_usable(const NuisanceFit& fit) {
    if (fit.separated) {
        throw Error(ErrorCode::Separation,
                    fit.kind == NuisanceKind::Outcome ? "outcome model is separated"
                                                      : "participation model is separated");
    }
    return fit;
}

double predict_m(const NuisanceFit& fit, std::span<const double> x, ClipStats* stats) {
    if (fit.kind != NuisanceKind::Outcome) {
        throw Error(ErrorCode::KindMismatch, "predict_m needs an outcome model");
    }
    bool clipped = false;
    const double m = fit.probability(x, &clipped);
    if (stats) {
        ++stats->evaluated;
        stats->clipped += clipped ? 1 : 0;
    }
    return m;
}

double predict_w(const NuisanceFit& fit, std::span<const double> x, ClipStats* stats) {
    if (fit.kind != NuisanceKind::Participation) {
        throw Error(ErrorCode::KindMismatch, "predict_w needs a participation model");
    }
    bool clipped = false;
    const double p = fit.probability(x, &clipped);
    if (stats) {
        ++stats->evaluated;
        stats->clipped += clipped ? 1 : 0;
    }
    return (1.0 - p) / p;
}

std::vector<double> predict_m(const NuisanceFit& fit, const AnalysisDataset& data,
                              ClipStats* stats) {
    std::vector<double> out(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) out[i] = predict_m(fit, data.x_row(i), stats);
    return out;
}

std::vector<double> predict_w(const NuisanceFit& fit, const AnalysisDataset& data,
                              ClipStats* stats) {
    std::vector<double> out(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) out[i] = predict_w(fit, data.x_row(i), stats);
    return out;
}

void add_positivity_diagnostic(ValidationReport& report, const AnalysisDataset& data,
                               const NuisanceFit& participation) {
    if (participation.kind != NuisanceKind::Participation) {
        throw Error(ErrorCode::KindMismatch, "positivity diagnostic needs a participation model");
    }
    report.positivity_threshold = participation.clip_epsilon;
    report.positivity_warnings.clear();
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (data.is_target(i) &&
            participation.raw_probability(data.x_row(i)) < participation.clip_epsilon) {
            report.positivity_warnings.push_back(i);
        }
    }
}

}  // namespace tperf
