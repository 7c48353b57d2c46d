#include "tperf/simulation.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "tperf/auc.hpp"
#include "tperf/inference.hpp"
#include "tperf/rng.hpp"

namespace tperf {

const char* regime_name(Regime r) {
    switch (r) {
        case Regime::BothCorrect: return "both_correct";
        case Regime::OutcomeWrong: return "outcome_wrong";
        case Regime::ParticipationWrong: return "participation_wrong";
        case Regime::BothWrong: return "both_wrong";
    }
    return "?";
}

std::optional<Regime> parse_regime(const std::string& s) {
    if (s == "both_correct") return Regime::BothCorrect;
    if (s == "outcome_wrong") return Regime::OutcomeWrong;
    if (s == "participation_wrong") return Regime::ParticipationWrong;
    if (s == "both_wrong") return Regime::BothWrong;
    return std::nullopt;
}

namespace {

constexpr std::uint64_t kBetaStream = 0x62657461ULL;    // independent of replicate streams
constexpr std::uint64_t kOracleStream = 0x6f7261636cULL;
constexpr std::uint64_t kYoudenStream = 0x796f7564ULL;

bool outcome_correct(Regime r) { return r == Regime::BothCorrect || r == Regime::ParticipationWrong; }
bool participation_correct(Regime r) { return r == Regime::BothCorrect || r == Regime::OutcomeWrong; }

double dot(const std::vector<double>& a, std::span<const double> x) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) s += a[j] * x[j];
    return s;
}

double dot_sq(const std::vector<double>& a, std::span<const double> x) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) s += a[j] * x[j] * x[j];
    return s;
}

BasisSpec squares_where_nonzero(std::size_t p, const std::vector<double>& square) {
    std::vector<std::size_t> idx;
    for (std::size_t j = 0; j < square.size(); ++j) {
        if (square[j] != 0.0) idx.push_back(j);
    }
    return BasisSpec::linear_plus_squares(p, idx);
}

// One draw from the superpopulation: covariates, participation, study and
// outcome.
struct PopulationRow {
    std::vector<double> x;
    bool r = false;
    int s = 0;
    int y = 0;
};

class Population {
public:
    explicit Population(const SimulationConfig& c) : c_(c) {
        Eigen::MatrixXd sigma(c.p, c.p);
        for (std::size_t i = 0; i < c.p; ++i) {
            for (std::size_t j = 0; j < c.p; ++j) {
                sigma(i, j) = std::pow(c.rho, std::abs(static_cast<double>(i) - static_cast<double>(j)));
            }
        }
        chol_ = Eigen::LLT<Eigen::MatrixXd>(sigma).matrixL();
        z_.resize(c.p);
    }

    void draw(std::mt19937_64& rng, PopulationRow& row) {
        row.x.assign(c_.p, 0.0);
        for (std::size_t j = 0; j < c_.p; ++j) z_[j] = normal_(rng);
        for (std::size_t i = 0; i < c_.p; ++i) {
            double v = 0.0;
            for (std::size_t j = 0; j <= i; ++j) v += chol_(i, j) * z_[j];
            row.x[i] = v;
        }
        row.r = unif_(rng) < c_.participation_probability(row.x);
        row.s = 0;
        if (row.r) {
            const double beta = std::exp(dot(c_.assignment_beta, row.x));
            const double eta = std::exp(dot(c_.assignment_eta, row.x));
            const double p1 = beta / (1.0 + beta + eta);
            const double p2 = eta / (1.0 + beta + eta);
            const double u = unif_(rng);
            row.s = u < p1 ? 1 : (u < p1 + p2 ? 2 : 3);
        }
        double eta_y = logit(c_.outcome_probability(row.x));
        if (row.r) {
            const auto shift = c_.study_outcome_shift.find(row.s);
            if (shift != c_.study_outcome_shift.end()) eta_y += shift->second;
        }
        row.y = unif_(rng) < expit(eta_y) ? 1 : 0;
    }

private:
    const SimulationConfig& c_;
    Eigen::MatrixXd chol_;
    std::vector<double> z_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> unif_{0.0, 1.0};
};

}  // namespace

SimulationConfig::SimulationConfig() {
    assignment_beta = {std::log(1.3), std::log(1.3), std::log(1.3), 0.0, 0.0};
    assignment_eta = {std::log(0.8), std::log(0.8), std::log(0.8), 0.0, 0.0};
}

void SimulationConfig::check() const {
    auto need = [&](const std::vector<double>& v, const char* name) {
        if (v.size() != p) {
            throw Error(ErrorCode::Config, std::string("simulation: ") + name + " has " +
                                               std::to_string(v.size()) + " entries, expected " +
                                               std::to_string(p));
        }
    };
    if (p == 0) throw Error(ErrorCode::Config, "simulation: p must be positive");
    need(selection_linear, "selection_linear");
    need(selection_square, "selection_square");
    need(assignment_beta, "assignment_beta");
    need(assignment_eta, "assignment_eta");
    need(outcome_linear, "outcome_linear");
    need(outcome_square, "outcome_square");
    if (!(rho > 0.0 && rho < 1.0)) throw Error(ErrorCode::Config, "simulation: rho must lie in (0, 1)");
    if (n < 2) throw Error(ErrorCode::Config, "simulation: n must be >= 2");
    if (replicates < 1) throw Error(ErrorCode::Config, "simulation: replicates must be >= 1");
    if (n_oracle < 1000) throw Error(ErrorCode::Config, "simulation: n_oracle must be >= 1000");
    if (regimes.empty()) throw Error(ErrorCode::Config, "simulation: no regimes requested");
    for (const auto& [s, shift] : study_outcome_shift) {
        if (s < 1 || s > 3) throw Error(ErrorCode::Config, "simulation: outcome shift for unknown study");
    }
}

BasisSpec SimulationConfig::evaluated_basis() const {
    return evaluated_model_correct ? outcome_basis(true) : BasisSpec::linear(p);
}

BasisSpec SimulationConfig::outcome_basis(bool correct) const {
    return correct ? squares_where_nonzero(p, outcome_square) : BasisSpec::linear(p);
}

BasisSpec SimulationConfig::participation_basis(bool correct) const {
    return correct ? squares_where_nonzero(p, selection_square) : BasisSpec::linear(p);
}

double SimulationConfig::outcome_probability(std::span<const double> x) const {
    return expit(outcome_intercept + dot(outcome_linear, x) + dot_sq(outcome_square, x));
}

double SimulationConfig::participation_probability(std::span<const double> x) const {
    return expit(selection_intercept + dot(selection_linear, x) + dot_sq(selection_square, x));
}

SimulatedSample generate_replicate(const SimulationConfig& config, std::uint64_t seed) {
    config.check();
    std::mt19937_64 rng = seed_stream(seed, 0);
    Population pop(config);
    DatasetColumns cols;
    for (std::size_t j = 0; j < config.p; ++j) cols.covariate_names.push_back("x" + std::to_string(j + 1));
    std::vector<int> withheld;
    PopulationRow row;
    for (std::size_t i = 0; i < config.n; ++i) {
        pop.draw(rng, row);
        DataRow d;
        d.x = row.x;
        d.source = row.s;
        if (row.r) {
            d.y = row.y;
        } else {
            withheld.push_back(row.y);
        }
        cols.push_back(d);
    }
    return {AnalysisDataset(std::move(cols)), std::move(withheld)};
}

BetaStar estimate_beta_star(const SimulationConfig& config, std::uint64_t seed,
                            std::optional<std::size_t> rows) {
    config.check();
    const std::size_t n = rows.value_or(config.n_oracle);
    std::mt19937_64 rng = seed_stream(seed, kBetaStream);
    Population pop(config);
    std::vector<double> x;
    std::vector<int> y;
    x.reserve(n * config.p);
    y.reserve(n);
    PopulationRow row;
    while (y.size() < n) {
        pop.draw(rng, row);
        if (!row.r) continue;
        x.insert(x.end(), row.x.begin(), row.x.end());
        y.push_back(row.y);
    }
    const BasisSpec basis = config.evaluated_basis();
    std::vector<double> w(n, 1.0);
    const NuisanceFit fit =
        fit_logistic(NuisanceKind::Outcome, LogisticRows{x, config.p, y, w}, basis, config.fit);
    require_usable(fit);

    BetaStar out;
    out.rows = n;
    out.model.basis = basis;
    out.model.coefficients.assign(fit.coefficients.data(),
                                  fit.coefficients.data() + fit.coefficients.size());

    // Sandwich covariance A^-1 B A^-1; the evaluated model may be misspecified.
    const auto k = static_cast<Eigen::Index>(basis.dimension());
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(k, k), B = Eigen::MatrixXd::Zero(k, k);
    Eigen::VectorXd v(k);
    std::vector<double> buf(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < n; ++i) {
        std::span<const double> xi(x.data() + i * config.p, config.p);
        basis.expand(xi, buf);
        for (Eigen::Index j = 0; j < k; ++j) v[j] = buf[static_cast<std::size_t>(j)];
        const double pr = expit(v.dot(fit.coefficients));
        A.selfadjointView<Eigen::Lower>().rankUpdate(v, pr * (1.0 - pr));
        const double r = y[i] - pr;
        B.selfadjointView<Eigen::Lower>().rankUpdate(v, r * r);
    }
    A = A.selfadjointView<Eigen::Lower>();
    B = B.selfadjointView<Eigen::Lower>();
    const Eigen::MatrixXd Ainv = A.inverse();
    const Eigen::MatrixXd V = Ainv * B * Ainv;
    for (Eigen::Index j = 0; j < k; ++j) out.se.push_back(std::sqrt(V(j, j)));
    return out;
}

OracleTruth::OracleTruth(std::vector<double> scores, std::vector<int> outcomes) {
    const std::size_t n = scores.size();
    if (n == 0 || outcomes.size() != n) {
        throw Error(ErrorCode::InvalidArgument, "oracle needs aligned, non-empty draws");
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    sorted_h_.resize(n);
    pos_prefix_.assign(n + 1, 0);
    double brier = 0.0, brier_sq = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t i = order[k];
        sorted_h_[k] = scores[i];
        pos_prefix_[k + 1] = pos_prefix_[k] + static_cast<std::uint32_t>(outcomes[i]);
        const double l = (outcomes[i] - scores[i]) * (outcomes[i] - scores[i]);
        brier += l;
        brier_sq += l * l;
    }
    n_pos_ = pos_prefix_[n];
    const double dn = static_cast<double>(n);
    brier_ = brier / dn;
    brier_se_ = std::sqrt(std::max(0.0, brier_sq / dn - brier_ * brier_) / dn);

    // Strict concordance over tie blocks.
    double concordant = 0.0;
    std::size_t k = 0;
    while (k < n) {
        std::size_t end = k;
        while (end < n && sorted_h_[end] == sorted_h_[k]) ++end;
        const double pos_block = pos_prefix_[end] - pos_prefix_[k];
        const double neg_below = static_cast<double>(k) - pos_prefix_[k];
        concordant += pos_block * neg_below;
        k = end;
    }
    const double n1 = static_cast<double>(n_pos_), n0 = dn - n1;
    auc_ = n1 > 0 && n0 > 0 ? concordant / (n1 * n0) : std::numeric_limits<double>::quiet_NaN();
    // Hanley-McNeil standard error.
    const double q1 = auc_ / (2.0 - auc_), q2 = 2.0 * auc_ * auc_ / (1.0 + auc_);
    auc_se_ = std::sqrt((auc_ * (1.0 - auc_) + (n1 - 1.0) * (q1 - auc_ * auc_) +
                         (n0 - 1.0) * (q2 - auc_ * auc_)) /
                        (n1 * n0));
}

ThresholdTruth OracleTruth::at(double c) const {
    const std::size_t n = sorted_h_.size();
    const auto k = static_cast<std::size_t>(
        std::upper_bound(sorted_h_.begin(), sorted_h_.end(), c) - sorted_h_.begin());
    const double pos_above = static_cast<double>(n_pos_) - pos_prefix_[k];
    const double neg_at_most = static_cast<double>(k) - pos_prefix_[k];
    const double n1 = static_cast<double>(n_pos_), n0 = static_cast<double>(n) - n1;
    const double above = static_cast<double>(n - k), at_most = static_cast<double>(k);
    auto ratio = [](double a, double b) {
        return b > 0 ? a / b : std::numeric_limits<double>::quiet_NaN();
    };
    auto se = [](double p, double d) {
        return d > 0 ? std::sqrt(p * (1.0 - p) / d) : std::numeric_limits<double>::quiet_NaN();
    };
    ThresholdTruth t;
    t.sensitivity = ratio(pos_above, n1);
    t.specificity = ratio(neg_at_most, n0);
    t.ppv = ratio(pos_above, above);
    t.npv = ratio(neg_at_most, at_most);
    t.sensitivity_se = se(t.sensitivity, n1);
    t.specificity_se = se(t.specificity, n0);
    t.ppv_se = se(t.ppv, above);
    t.npv_se = se(t.npv, at_most);
    return t;
}

double OracleTruth::value(const std::string& metric, double c) const {
    if (metric == "brier") return brier_;
    if (metric == "auc") return auc_;
    const ThresholdTruth t = at(c);
    if (metric == "sensitivity") return t.sensitivity;
    if (metric == "specificity") return t.specificity;
    if (metric == "ppv") return t.ppv;
    if (metric == "npv") return t.npv;
    throw Error(ErrorCode::InvalidArgument, "unknown metric " + metric);
}

double OracleTruth::mc_se(const std::string& metric, double c) const {
    if (metric == "brier") return brier_se_;
    if (metric == "auc") return auc_se_;
    const ThresholdTruth t = at(c);
    if (metric == "sensitivity") return t.sensitivity_se;
    if (metric == "specificity") return t.specificity_se;
    if (metric == "ppv") return t.ppv_se;
    if (metric == "npv") return t.npv_se;
    throw Error(ErrorCode::InvalidArgument, "unknown metric " + metric);
}

OracleTruth oracle_truth(const SimulationConfig& config, const ScoreModel& model,
                         std::uint64_t seed, std::optional<std::size_t> draws) {
    config.check();
    const std::size_t n = draws.value_or(config.n_oracle);
    std::mt19937_64 rng = seed_stream(seed, kOracleStream);
    Population pop(config);
    std::vector<double> h;
    std::vector<int> y;
    h.reserve(n);
    y.reserve(n);
    PopulationRow row;
    while (h.size() < n) {
        pop.draw(rng, row);
        if (row.r) continue;
        h.push_back(model.score(row.x));
        y.push_back(row.y);
    }
    return OracleTruth(std::move(h), std::move(y));
}

double oracle_youden_threshold(const SimulationConfig& config, const ScoreModel& model,
                               std::uint64_t seed, std::size_t draws) {
    config.check();
    std::mt19937_64 rng = seed_stream(seed, kYoudenStream);
    Population pop(config);
    std::vector<std::pair<double, int>> rows;
    rows.reserve(draws);
    PopulationRow row;
    while (rows.size() < draws) {
        pop.draw(rng, row);
        if (row.r) rows.emplace_back(model.score(row.x), row.y);
    }
    std::sort(rows.begin(), rows.end());
    double n1 = 0;
    for (const auto& r : rows) n1 += r.second;
    const double n0 = static_cast<double>(rows.size()) - n1;
    // Sweep thresholds between distinct scores; rows at or below c are negative.
    double best = -std::numeric_limits<double>::infinity();
    double best_c = -std::numeric_limits<double>::infinity();
    double pos_below = 0, neg_below = 0;
    for (std::size_t k = 0; k < rows.size(); ++k) {
        pos_below += rows[k].second;
        neg_below += 1 - rows[k].second;
        if (k + 1 < rows.size() && rows[k + 1].first == rows[k].first) continue;
        const double j = (n1 - pos_below) / n1 + neg_below / n0 - 1.0;
        if (j > best) {
            best = j;
            best_c = k + 1 < rows.size() ? 0.5 * (rows[k].first + rows[k + 1].first)
                                         : std::numeric_limits<double>::infinity();
        }
    }
    return best_c;
}

const BiasRow& BiasStudyResult::find(const std::string& metric, EstimatorKind est,
                                     Regime regime) const {
    for (const auto& r : rows) {
        if (r.metric == metric && r.estimator == est && r.regime == regime) return r;
    }
    throw Error(ErrorCode::InvalidArgument, "no bias row for " + metric);
}

std::vector<std::array<double, 4>> estimate_all(const AnalysisDataset& scored,
                                                const SimulationConfig& config, Regime regime,
                                                double threshold) {
    const NuisanceFit om =
        fit_outcome_model(scored, config.outcome_basis(outcome_correct(regime)), config.fit);
    require_usable(om);
    const NuisanceFit pm = fit_participation_model(
        scored, config.participation_basis(participation_correct(regime)), config.fit);
    require_usable(pm);
    const std::vector<double> m = predict_m(om, scored);
    const std::vector<double> w = predict_w(pm, scored);
    const NuisanceValues nv{m, w};

    constexpr EstimatorKind kinds[4] = {EstimatorKind::OutcomeModel, EstimatorKind::Weighting,
                                        EstimatorKind::DoublyRobust, EstimatorKind::Source};
    const Metric threshold_metrics[4] = {Metric::Sensitivity, Metric::Specificity, Metric::Ppv,
                                         Metric::Npv};
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<std::array<double, 4>> out(kSimulationMetrics.size());
    auto guarded = [&](auto&& f) {
        try {
            return f();
        } catch (const Error& e) {
            if (e.code() != ErrorCode::ZeroDenominator) throw;
            return nan;
        }
    };
    for (std::size_t e = 0; e < 4; ++e) {
        for (std::size_t k = 0; k < 4; ++k) {
            out[k][e] = guarded([&] {
                MetricRequest req;
                req.metric = threshold_metrics[k];
                req.estimator = kinds[e];
                req.threshold = threshold;
                return estimate_metric(scored, nv, req).value;
            });
        }
        out[4][e] = guarded([&] { return risk(scored, nv, Loss::Brier, kinds[e]).value; });
        out[5][e] = guarded([&] { return auc(scored, nv, kinds[e]).value; });
    }
    return out;
}

BiasStudyResult run_bias_study(const SimulationConfig& config) {
    config.check();
    BiasStudyResult result;
    result.beta_star = estimate_beta_star(config, derive_seed(config.seed, kBetaStream));
    const OracleTruth oracle =
        oracle_truth(config, result.beta_star.model, derive_seed(config.seed, kOracleStream));
    result.oracle_youden = oracle_youden_threshold(
        config, result.beta_star.model, derive_seed(config.seed, kYoudenStream), config.n_oracle);

    const auto R = static_cast<std::size_t>(config.replicates);
    const std::size_t G = config.regimes.size();
    const std::size_t M = kSimulationMetrics.size();
    const double nan = std::numeric_limits<double>::quiet_NaN();

    struct Slot {
        double threshold = 0.0;
        std::array<double, 4> sizes{};
        std::vector<double> truth;                                // [metric]
        std::vector<std::vector<std::array<double, 4>>> values;  // [regime][metric][estimator]
        std::vector<std::string> failure;                         // [regime]
    };
    std::vector<Slot> slots(R);

    parallel_for(R, config.threads, [&](std::size_t r) {
        Slot& slot = slots[r];
        slot.values.assign(G, std::vector<std::array<double, 4>>(M, {nan, nan, nan, nan}));
        slot.failure.assign(G, "");
        const SimulatedSample sample = generate_replicate(config, derive_seed(config.seed, r));
        const AnalysisDataset scored =
            sample.data.with_scores(result.beta_star.model.score_all(sample.data));
        slot.sizes = {static_cast<double>(scored.n_target()),
                      static_cast<double>(scored.n_source(1)),
                      static_cast<double>(scored.n_source(2)),
                      static_cast<double>(scored.n_source(3))};
        try {
            slot.threshold = youden_select(scored, {}, EstimatorKind::Source).threshold;
        } catch (const Error& e) {
            if (error_category(e.code()) != ErrorCategory::Estimation) throw;
            slot.failure.assign(G, error_name(e.code()));
            return;
        }
        slot.truth.resize(M);
        for (std::size_t k = 0; k < M; ++k) slot.truth[k] = oracle.value(kSimulationMetrics[k], slot.threshold);
        for (std::size_t g = 0; g < G; ++g) {
            try {
                slot.values[g] = estimate_all(scored, config, config.regimes[g], slot.threshold);
            } catch (const Error& e) {
                if (error_category(e.code()) != ErrorCategory::Estimation ||
                    e.code() == ErrorCode::InvalidArgument) {
                    throw;
                }
                slot.failure[g] = error_name(e.code());
            }
        }
    });

    double threshold_sum = 0.0;
    std::size_t threshold_count = 0;
    for (const Slot& s : slots) {
        for (std::size_t j = 0; j < 4; ++j) result.mean_sizes[j] += s.sizes[j] / static_cast<double>(R);
        if (!s.truth.empty() && std::isfinite(s.threshold)) {
            threshold_sum += s.threshold;
            ++threshold_count;
        }
    }
    result.mean_threshold = threshold_count ? threshold_sum / static_cast<double>(threshold_count) : nan;

    constexpr EstimatorKind kinds[4] = {EstimatorKind::OutcomeModel, EstimatorKind::Weighting,
                                        EstimatorKind::DoublyRobust, EstimatorKind::Source};
    for (std::size_t g = 0; g < G; ++g) {
        int failed = 0;
        for (const Slot& s : slots) {
            if (s.failure[g].empty()) continue;
            ++failed;
            ++result.failure_reasons[s.failure[g]];
        }
        result.failed_replicates[config.regimes[g]] = failed;
        if (static_cast<double>(failed) > config.max_failure_rate * static_cast<double>(R)) {
            throw Error(ErrorCode::TooManyFailures,
                        std::string(regime_name(config.regimes[g])) + ": " +
                            std::to_string(failed) + " of " + std::to_string(R) +
                            " replicates failed");
        }
        for (std::size_t k = 0; k < M; ++k) {
            for (std::size_t e = 0; e < 4; ++e) {
                BiasRow row;
                row.metric = kSimulationMetrics[k];
                row.estimator = kinds[e];
                row.regime = config.regimes[g];
                double sum = 0, sum_truth = 0;
                std::vector<double> vals;
                for (const Slot& s : slots) {
                    if (!s.failure[g].empty()) continue;
                    const double v = s.values[g][k][e], t = s.truth[k];
                    if (std::isnan(v) || std::isnan(t)) {
                        ++row.failures;
                        continue;
                    }
                    vals.push_back(v);
                    sum += v;
                    sum_truth += t;
                }
                row.failures += failed;
                row.replicates = static_cast<int>(vals.size());
                if (vals.empty()) {
                    row.mean = row.truth = row.bias = row.rel_bias = row.sd = nan;
                } else {
                    const double cnt = static_cast<double>(vals.size());
                    row.mean = sum / cnt;
                    row.truth = sum_truth / cnt;
                    row.bias = row.mean - row.truth;
                    row.rel_bias = row.bias / row.truth;
                    double ss = 0;
                    for (double v : vals) ss += (v - row.mean) * (v - row.mean);
                    row.sd = vals.size() > 1 ? std::sqrt(ss / (cnt - 1.0)) : 0.0;
                }
                result.rows.push_back(row);
            }
        }
    }
    return result;
}

}  // namespace tperf
