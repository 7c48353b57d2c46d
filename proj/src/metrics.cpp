#include "tperf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "tperf/summation.hpp"

namespace tperf {

const char* metric_name(Metric m) {
    switch (m) {
        case Metric::Sensitivity: return "sensitivity";
        case Metric::Specificity: return "specificity";
        case Metric::Ppv: return "ppv";
        case Metric::Npv: return "npv";
        case Metric::Risk: return "risk";
    }
    return "?";
}

const char* estimator_name(EstimatorKind e) {
    switch (e) {
        case EstimatorKind::OutcomeModel: return "om";
        case EstimatorKind::Weighting: return "w";
        case EstimatorKind::DoublyRobust: return "dr";
        case EstimatorKind::Source: return "source";
    }
    return "?";
}

const char* loss_name(Loss l) { return l == Loss::Brier ? "brier" : "absolute"; }

std::optional<Metric> parse_metric(const std::string& s) {
    if (s == "sensitivity" || s == "sens") return Metric::Sensitivity;
    if (s == "specificity" || s == "spec") return Metric::Specificity;
    if (s == "ppv") return Metric::Ppv;
    if (s == "npv") return Metric::Npv;
    if (s == "risk") return Metric::Risk;
    return std::nullopt;
}

std::optional<EstimatorKind> parse_estimator(const std::string& s) {
    if (s == "om") return EstimatorKind::OutcomeModel;
    if (s == "w") return EstimatorKind::Weighting;
    if (s == "dr") return EstimatorKind::DoublyRobust;
    if (s == "source") return EstimatorKind::Source;
    return std::nullopt;
}

std::optional<Loss> parse_loss(const std::string& s) {
    if (s == "brier") return Loss::Brier;
    if (s == "absolute") return Loss::Absolute;
    return std::nullopt;
}

double loss_value(Loss loss, int y, double h) {
    const double d = static_cast<double>(y) - h;
    return loss == Loss::Brier ? d * d : std::abs(d);
}

namespace {

void require_nuisance(const AnalysisDataset& data, const NuisanceValues& nv,
                      EstimatorKind estimator) {
    const bool need_m = estimator == EstimatorKind::OutcomeModel ||
                        estimator == EstimatorKind::DoublyRobust;
    const bool need_w = estimator == EstimatorKind::Weighting ||
                        estimator == EstimatorKind::DoublyRobust;
    if (need_m && nv.m.size() != data.size()) {
        throw Error(ErrorCode::InvalidArgument, "outcome-model predictions missing or misaligned");
    }
    if (need_w && nv.w.size() != data.size()) {
        throw Error(ErrorCode::InvalidArgument, "participation odds missing or misaligned");
    }
}

// Kish effective sample size.
class EffectiveSize {
public:
    void add(double w) {
        sum_ += w;
        sum_sq_ += w * w;
    }
    double value() const { return sum_sq_.value() > 0 ? sum_.value() * sum_.value() / sum_sq_.value() : 0; }

private:
    CompensatedSum sum_;
    CompensatedSum sum_sq_;
};

PerformanceEstimate finish(const MetricRequest& request, double num, double den,
                           std::size_t rows, double n_eff, double upper) {
    if (!(den > 0.0)) {
        throw Error(ErrorCode::ZeroDenominator,
                    std::string(metric_name(request.metric)) + "/" +
                        estimator_name(request.estimator) + ": denominator is " +
                        std::to_string(den));
    }
    PerformanceEstimate out;
    out.request = request;
    out.value = num / den;
    out.n_effective = n_eff;
    out.diagnostics = {num, den, rows, out.value < 0.0 || out.value > upper};
    return out;
}

// The four classification metrics share one shape. For a row, `flag` is the
// classification indicator (h > c, or h <= c), `event` the matching outcome
// indicator and `q` the modelled probability of that outcome.
struct ClassificationShape {
    bool positive_class;  // sensitivity / ppv use h > c and y = 1
    bool conditions_on_outcome;  // sensitivity / specificity (vs predictive values)
};

ClassificationShape shape_of(Metric metric) {
    switch (metric) {
        case Metric::Sensitivity: return {true, true};
        case Metric::Specificity: return {false, true};
        case Metric::Ppv: return {true, false};
        case Metric::Npv: return {false, false};
        case Metric::Risk: break;
    }
    throw Error(ErrorCode::InvalidArgument, "risk is not a classification metric");
}

PerformanceEstimate classification_estimate(const AnalysisDataset& data,
                                            const NuisanceValues& nv,
                                            const MetricRequest& request) {
    require_nuisance(data, nv, request.estimator);
    const ClassificationShape shape = shape_of(request.metric);
    const double c = request.threshold;
    const EstimatorKind est = request.estimator;

    CompensatedSum num, den;
    EffectiveSize ess;
    std::size_t rows = 0;

    for (std::size_t i = 0; i < data.size(); ++i) {
        const bool target = data.is_target(i);
        const bool needs_row = target ? (est == EstimatorKind::OutcomeModel ||
                                         est == EstimatorKind::DoublyRobust)
                                      : est != EstimatorKind::OutcomeModel;
        if (!needs_row) continue;

        const double h = data.score_or_throw(i);
        const bool flag = shape.positive_class ? (h > c) : (h <= c);
        const double f = flag ? 1.0 : 0.0;

        if (target) {
            const double omega = request.use_survey_weights ? data.weight(i) : 1.0;
            const double m = nv.m[i];
            const double q = shape.positive_class ? m : 1.0 - m;
            num += omega * f * q;
            if (shape.conditions_on_outcome) {
                den += omega * q;
                ess.add(omega * q);
            } else {
                den += omega * f;
                ess.add(omega * f);
            }
            ++rows;
            continue;
        }

        const int y = *data.y(i);
        const double e = (shape.positive_class ? (y == 1) : (y == 0)) ? 1.0 : 0.0;
        switch (est) {
            case EstimatorKind::Source: {
                num += f * e;
                const double d = shape.conditions_on_outcome ? e : f;
                den += d;
                ess.add(d);
                break;
            }
            case EstimatorKind::Weighting: {
                const double w = nv.w[i];
                num += w * f * e;
                // Predictive values divide by the weighted mass classified
                // into the class, not by the weighted outcome mass.
                const double d = shape.conditions_on_outcome ? w * e : w * f;
                den += d;
                ess.add(d);
                break;
            }
            case EstimatorKind::DoublyRobust: {
                const double w = nv.w[i];
                const double q = shape.positive_class ? nv.m[i] : 1.0 - nv.m[i];
                num += w * f * (e - q);
                if (shape.conditions_on_outcome) den += w * (e - q);
                break;
            }
            case EstimatorKind::OutcomeModel:
                break;
        }
        ++rows;
    }

    return finish(request, num.value(), den.value(), rows, ess.value(), 1.0);
}

PerformanceEstimate risk_estimate(const AnalysisDataset& data, const NuisanceValues& nv,
                                  const MetricRequest& request) {
    if (!request.loss) {
        throw Error(ErrorCode::InvalidArgument, "risk needs a loss function");
    }
    require_nuisance(data, nv, request.estimator);
    const Loss loss = *request.loss;
    const EstimatorKind est = request.estimator;

    CompensatedSum num, den;
    EffectiveSize ess;
    std::size_t rows = 0;
    double max_loss = 0.0;

    for (std::size_t i = 0; i < data.size(); ++i) {
        const bool target = data.is_target(i);
        if (est == EstimatorKind::Source) {
            if (target) continue;
            const double h = data.score_or_throw(i);
            const double l = loss_value(loss, *data.y(i), h);
            max_loss = std::max({max_loss, loss_value(loss, 0, h), loss_value(loss, 1, h)});
            num += l;
            den += 1.0;
            ess.add(1.0);
            ++rows;
            continue;
        }
        const double h = data.score_or_throw(i);
        max_loss = std::max({max_loss, loss_value(loss, 0, h), loss_value(loss, 1, h)});
        if (target) {
            // Every target row counts in the normalising (weighted) size n0.
            const double omega = request.use_survey_weights ? data.weight(i) : 1.0;
            den += omega;
            ess.add(omega);
            if (est != EstimatorKind::Weighting) {
                const double m = nv.m[i];
                const double expected = m * loss_value(loss, 1, h) + (1.0 - m) * loss_value(loss, 0, h);
                num += omega * expected;
            }
            ++rows;
        } else if (est != EstimatorKind::OutcomeModel) {
            const double l = loss_value(loss, *data.y(i), h);
            double contribution = l;
            if (est == EstimatorKind::DoublyRobust) {
                const double m = nv.m[i];
                contribution -= m * loss_value(loss, 1, h) + (1.0 - m) * loss_value(loss, 0, h);
            }
            num += nv.w[i] * contribution;
            ++rows;
        }
    }
    return finish(request, num.value(), den.value(), rows, ess.value(),
                  max_loss > 0 ? max_loss : std::numeric_limits<double>::infinity());
}

}  // namespace

PerformanceEstimate estimate_metric(const AnalysisDataset& data, const NuisanceValues& nuisance,
                                    const MetricRequest& request) {
    if (request.metric == Metric::Risk) return risk_estimate(data, nuisance, request);
    if (std::isnan(request.threshold)) {
        throw Error(ErrorCode::InvalidArgument, "threshold is NaN");
    }
    return classification_estimate(data, nuisance, request);
}

PerformanceEstimate sensitivity(const AnalysisDataset& data, const NuisanceValues& nuisance,
                                double c, EstimatorKind estimator, bool use_survey_weights) {
    return estimate_metric(data, nuisance,
                           {Metric::Sensitivity, estimator, c, std::nullopt, use_survey_weights});
}

PerformanceEstimate specificity(const AnalysisDataset& data, const NuisanceValues& nuisance,
                                double c, EstimatorKind estimator, bool use_survey_weights) {
    return estimate_metric(data, nuisance,
                           {Metric::Specificity, estimator, c, std::nullopt, use_survey_weights});
}

PerformanceEstimate ppv(const AnalysisDataset& data, const NuisanceValues& nuisance, double c,
                        EstimatorKind estimator, bool use_survey_weights) {
    return estimate_metric(data, nuisance,
                           {Metric::Ppv, estimator, c, std::nullopt, use_survey_weights});
}

PerformanceEstimate npv(const AnalysisDataset& data, const NuisanceValues& nuisance, double c,
                        EstimatorKind estimator, bool use_survey_weights) {
    return estimate_metric(data, nuisance,
                           {Metric::Npv, estimator, c, std::nullopt, use_survey_weights});
}

PerformanceEstimate risk(const AnalysisDataset& data, const NuisanceValues& nuisance, Loss loss,
                         EstimatorKind estimator, bool use_survey_weights) {
    return estimate_metric(data, nuisance,
                           {Metric::Risk, estimator, 0.0, loss, use_survey_weights});
}

// ---------------------------------------------------------------------------
// Youden threshold selection

std::vector<double> youden_grid(const AnalysisDataset& data) {
    std::vector<double> scores;
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (data.is_study(i)) scores.push_back(data.score_or_throw(i));
    }
    std::sort(scores.begin(), scores.end());
    scores.erase(std::unique(scores.begin(), scores.end()), scores.end());
    if (scores.size() < 2) {
        throw Error(ErrorCode::DegenerateScores, "fewer than two distinct study-row scores");
    }
    std::vector<double> grid;
    grid.reserve(scores.size() + 1);
    grid.push_back(-std::numeric_limits<double>::infinity());
    for (std::size_t k = 0; k + 1 < scores.size(); ++k) {
        grid.push_back(0.5 * (scores[k] + scores[k + 1]));
    }
    grid.push_back(std::numeric_limits<double>::infinity());
    return grid;
}

namespace {

// Sensitivity(c) = A_above(c) / Da and specificity(c) = B_atmost(c) / Db,
// where the per-row contributions a_i, b_i and the constants Da, Db depend on
// the estimator. Sorting by score turns every grid point into a prefix sum.
struct SweepTables {
    std::vector<double> sorted_scores;
    std::vector<double> prefix_a;  // prefix_a[k] = sum of a over the first k sorted rows
    std::vector<double> prefix_b;
    double total_a = 0.0;
    double den_a = 0.0;
    double den_b = 0.0;
};

SweepTables build_sweep(const AnalysisDataset& data, const NuisanceValues& nv,
                        EstimatorKind est, bool use_survey_weights) {
    require_nuisance(data, nv, est);
    struct Entry {
        double h, a, b;
    };
    std::vector<Entry> entries;
    CompensatedSum den_a, den_b;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const bool target = data.is_target(i);
        double a = 0, b = 0, da = 0, db = 0;
        if (target) {
            if (est != EstimatorKind::OutcomeModel && est != EstimatorKind::DoublyRobust) continue;
            const double omega = use_survey_weights ? data.weight(i) : 1.0;
            a = da = omega * nv.m[i];
            b = db = omega * (1.0 - nv.m[i]);
        } else {
            if (est == EstimatorKind::OutcomeModel) continue;
            const int y = *data.y(i);
            const double e1 = y == 1 ? 1.0 : 0.0, e0 = 1.0 - e1;
            switch (est) {
                case EstimatorKind::Source:
                    a = da = e1;
                    b = db = e0;
                    break;
                case EstimatorKind::Weighting:
                    a = da = nv.w[i] * e1;
                    b = db = nv.w[i] * e0;
                    break;
                case EstimatorKind::DoublyRobust:
                    a = da = nv.w[i] * (e1 - nv.m[i]);
                    b = db = nv.w[i] * (e0 - (1.0 - nv.m[i]));
                    break;
                case EstimatorKind::OutcomeModel:
                    break;
            }
        }
        den_a += da;
        den_b += db;
        entries.push_back({data.score_or_throw(i), a, b});
    }
    std::stable_sort(entries.begin(), entries.end(),
                     [](const Entry& l, const Entry& r) { return l.h < r.h; });
    SweepTables t;
    t.sorted_scores.reserve(entries.size());
    t.prefix_a.assign(entries.size() + 1, 0.0);
    t.prefix_b.assign(entries.size() + 1, 0.0);
    CompensatedSum pa, pb;
    for (std::size_t k = 0; k < entries.size(); ++k) {
        t.sorted_scores.push_back(entries[k].h);
        pa += entries[k].a;
        pb += entries[k].b;
        t.prefix_a[k + 1] = pa.value();
        t.prefix_b[k + 1] = pb.value();
    }
    t.total_a = pa.value();
    t.den_a = den_a.value();
    t.den_b = den_b.value();
    if (!(t.den_a > 0.0)) throw Error(ErrorCode::ZeroDenominator, "sensitivity denominator <= 0");
    if (!(t.den_b > 0.0)) throw Error(ErrorCode::ZeroDenominator, "specificity denominator <= 0");
    return t;
}

RocPoint sweep_at(const SweepTables& t, double c) {
    const auto k = static_cast<std::size_t>(
        std::upper_bound(t.sorted_scores.begin(), t.sorted_scores.end(), c) -
        t.sorted_scores.begin());
    const double above = t.total_a - t.prefix_a[k];
    const double at_most = t.prefix_b[k];
    return {c, above / t.den_a, at_most / t.den_b};
}

}  // namespace

YoudenResult youden_select(const AnalysisDataset& data, const NuisanceValues& nuisance,
                           EstimatorKind estimator, bool use_survey_weights) {
    const std::vector<double> grid = youden_grid(data);
    const SweepTables tables = build_sweep(data, nuisance, estimator, use_survey_weights);
    YoudenResult best;
    best.youden = -std::numeric_limits<double>::infinity();
    best.candidates = grid.size();
    for (double c : grid) {
        const RocPoint pt = sweep_at(tables, c);
        const double j = pt.sensitivity + pt.specificity - 1.0;
        if (j > best.youden) {
            best.youden = j;
            best.threshold = c;
        }
    }
    best.sensitivity =
        sensitivity(data, nuisance, best.threshold, estimator, use_survey_weights).value;
    best.specificity =
        specificity(data, nuisance, best.threshold, estimator, use_survey_weights).value;
    return best;
}

std::vector<RocPoint> roc_points(const AnalysisDataset& data, const NuisanceValues& nuisance,
                                 EstimatorKind estimator, bool use_survey_weights) {
    const std::vector<double> grid = youden_grid(data);
    const SweepTables tables = build_sweep(data, nuisance, estimator, use_survey_weights);
    std::vector<RocPoint> out;
    out.reserve(grid.size());
    for (double c : grid) out.push_back(sweep_at(tables, c));
    return out;
}

// ---------------------------------------------------------------------------

double if_variance_sensitivity(const AnalysisDataset& data, const NuisanceValues& nv, double c,
                               double psi) {
    require_nuisance(data, nv, EstimatorKind::DoublyRobust);
    const double n = static_cast<double>(data.size());
    const double p0 = static_cast<double>(data.n_target()) / n;

    CompensatedSum alpha;
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (data.is_target(i)) {
            alpha += nv.m[i];
        } else {
            alpha += nv.w[i] * ((*data.y(i) == 1 ? 1.0 : 0.0) - nv.m[i]);
        }
    }
    const double alpha0 = alpha.value() / static_cast<double>(data.n_target());
    if (!(alpha0 > 0.0)) {
        throw Error(ErrorCode::ZeroDenominator, "estimated Pr[Y=1 | S=0] is not positive");
    }

    std::vector<double> phi(data.size());
    CompensatedSum mean;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const double pos = data.score_or_throw(i) > c ? 1.0 : 0.0;
        double inner;
        if (data.is_target(i)) {
            inner = nv.m[i] / p0;
        } else {
            inner = nv.w[i] * ((*data.y(i) == 1 ? 1.0 : 0.0) - nv.m[i]) / p0;
        }
        phi[i] = (pos - psi) * inner / alpha0;
        mean += phi[i];
    }
    const double mu = mean.value() / n;
    CompensatedSum ss;
    for (double v : phi) ss += (v - mu) * (v - mu);
    if (data.size() < 2) return 0.0;
    return ss.value() / (n - 1.0) / n;
}

}  // namespace tperf
