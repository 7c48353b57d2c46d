#include "tperf/tilt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "tperf/inference.hpp"
#include "tperf/rng.hpp"
#include "tperf/summation.hpp"

namespace tperf {

void TiltSpec::check(std::span<const int> studies) const {
    if (mode == Mode::Fixed) {
        for (int s : studies) {
            if (!gamma.count(s)) {
                throw Error(ErrorCode::Config, "tilt: no gamma for study " + std::to_string(s));
            }
        }
    } else {
        if (!target_prevalence) throw Error(ErrorCode::Config, "tilt: target_prevalence missing");
        if (!(*target_prevalence > 0.0 && *target_prevalence < 1.0)) {
            throw Error(ErrorCode::Config, "tilt: target_prevalence must lie in (0, 1)");
        }
    }
    if (!(bracket_lo < bracket_hi)) throw Error(ErrorCode::Config, "tilt: empty bracket");
    if (!(tol > 0.0)) throw Error(ErrorCode::Config, "tilt: tol must be positive");
}

double tilted_b(double m, double gamma, int j, bool indicator) {
    if (j == 1 && !indicator) return 0.0;
    if (m <= 0.0) return 0.0;
    if (m >= 1.0) return 1.0;
    if (gamma == 0.0) return m;
    return expit(logit(m) + gamma);
}

namespace {

void require_aligned(const AnalysisDataset& data, std::span<const double> m) {
    if (m.size() != data.size()) {
        throw Error(ErrorCode::InvalidArgument, "per-study predictions missing or misaligned");
    }
}

}  // namespace

TiltedEstimate tilted_sensitivity(const AnalysisDataset& data, std::span<const double> m_study,
                                  double gamma, double c, int study, bool use_survey_weights) {
    require_aligned(data, m_study);
    CompensatedSum num, den;
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (!data.is_target(i)) continue;
        const double omega = use_survey_weights ? data.weight(i) : 1.0;
        const bool pos = data.score_or_throw(i) > c;
        num += omega * tilted_b(m_study[i], gamma, 1, pos);
        den += omega * tilted_b(m_study[i], gamma, 0);
    }
    if (!(den.value() > 0.0)) {
        throw Error(ErrorCode::ZeroDenominator,
                    "tilted sensitivity for study " + std::to_string(study) +
                        ": tilted prevalence over target rows is zero");
    }
    return {study, gamma, num.value() / den.value(), 0.0};
}

double tilted_prevalence(const AnalysisDataset& data, std::span<const double> m_study,
                         double gamma, bool use_survey_weights) {
    require_aligned(data, m_study);
    CompensatedSum num, den;
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (!data.is_target(i)) continue;
        const double omega = use_survey_weights ? data.weight(i) : 1.0;
        num += omega * tilted_b(m_study[i], gamma, 0);
        den += omega;
    }
    return num.value() / den.value();
}

GammaCalibration calibrate_gamma(const AnalysisDataset& data, std::span<const double> m_study,
                                 double target, const TiltSpec& spec, bool use_survey_weights) {
    require_aligned(data, m_study);
    if (!(target > 0.0 && target < 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "target prevalence must lie in (0, 1)");
    }
    auto gap = [&](double g) {
        return tilted_prevalence(data, m_study, g, use_survey_weights) - target;
    };

    double lo = spec.bracket_lo, hi = spec.bracket_hi;
    double f_lo = gap(lo), f_hi = gap(hi);
    while (f_lo > 0.0 || f_hi < 0.0) {
        if ((f_lo > 0.0 && lo <= -spec.bracket_limit) || (f_hi < 0.0 && hi >= spec.bracket_limit)) {
            throw Error(ErrorCode::BracketFailure,
                        "prevalence " + std::to_string(target) + " outside attainable range [" +
                            std::to_string(f_lo + target) + ", " + std::to_string(f_hi + target) +
                            "] for gamma in [" + std::to_string(lo) + ", " + std::to_string(hi) +
                            "]");
        }
        if (f_lo > 0.0) {
            lo = std::max(-spec.bracket_limit, 2.0 * lo);
            f_lo = gap(lo);
        }
        if (f_hi < 0.0) {
            hi = std::min(spec.bracket_limit, 2.0 * hi);
            f_hi = gap(hi);
        }
    }

    GammaCalibration out;
    out.bracket_lo = lo;
    out.bracket_hi = hi;
    if (std::abs(f_lo) < spec.tol) {
        out.gamma = lo;
        out.residual = f_lo;
        return out;
    }
    if (std::abs(f_hi) < spec.tol) {
        out.gamma = hi;
        out.residual = f_hi;
        return out;
    }
    // The tilted mean is increasing in gamma.
    for (int it = 0; it < 400; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double f = gap(mid);
        out.iterations = it + 1;
        out.gamma = mid;
        out.residual = f;
        if (std::abs(f) < spec.tol || mid == lo || mid == hi) break;
        if (f < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if (!(std::abs(out.residual) < spec.tol)) {
        throw Error(ErrorCode::BracketFailure, "bisection stalled with residual " +
                                                   std::to_string(out.residual));
    }
    return out;
}

double combine_estimates(std::span<const double> values, std::span<const double> weights) {
    if (values.size() != weights.size() || values.empty()) {
        throw Error(ErrorCode::InvalidArgument, "values and weights must be non-empty and aligned");
    }
    CompensatedSum total, out;
    for (std::size_t k = 0; k < values.size(); ++k) {
        total += weights[k];
        out += weights[k] * values[k];
    }
    if (std::abs(total.value() - 1.0) > 1e-10) {
        throw Error(ErrorCode::WeightSumViolation,
                    "combination weights sum to " + std::to_string(total.value()));
    }
    return out.value();
}

std::vector<double> inverse_variance_weights(std::span<const double> variances) {
    std::vector<double> w;
    w.reserve(variances.size());
    double total = 0.0;
    for (double v : variances) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw Error(ErrorCode::InvalidArgument, "variances must be positive and finite");
        }
        w.push_back(1.0 / v);
        total += 1.0 / v;
    }
    for (double& x : w) x /= total;
    return w;
}

std::map<int, std::vector<double>> per_study_predictions(const AnalysisDataset& data,
                                                         const BasisSpec& basis,
                                                         const FitOptions& options) {
    std::set<int> studies;
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (data.is_study(i)) studies.insert(data.source(i));
    }
    std::map<int, std::vector<double>> out;
    for (int s : studies) {
        const NuisanceFit fit = fit_outcome_model(data, basis, options, s);
        require_usable(fit);
        out[s] = predict_m(fit, data);
    }
    return out;
}

namespace {

struct BinnedPrevalence {
    std::vector<double> upper;
    std::vector<std::size_t> counts;
    std::vector<std::map<int, double>> prevalence;
    std::vector<double> discrepancy;
};

BinnedPrevalence binned_prevalence(const AnalysisDataset& data,
                                   const std::map<int, double>& gamma,
                                   const CompatibilityOptions& o) {
    const NuisanceFit pooled = fit_outcome_model(data, o.outcome_basis, o.fit);
    require_usable(pooled);
    const std::vector<double> m = predict_m(pooled, data);
    const auto per_study = per_study_predictions(data, o.outcome_basis, o.fit);
    for (const auto& [s, g] : gamma) {
        if (!per_study.count(s)) {
            throw Error(ErrorCode::InvalidArgument, "gamma given for absent study " +
                                                        std::to_string(s));
        }
    }

    std::vector<double> target_m;
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (data.is_target(i)) target_m.push_back(m[i]);
    }
    std::sort(target_m.begin(), target_m.end());
    const auto bins = static_cast<std::size_t>(o.bins);
    BinnedPrevalence out;
    for (std::size_t k = 1; k < bins; ++k) {
        out.upper.push_back(quantile_type7(target_m, static_cast<double>(k) / o.bins));
    }
    out.upper.push_back(std::numeric_limits<double>::infinity());
    out.counts.assign(bins, 0);

    std::vector<std::map<int, CompensatedSum>> num(bins);
    std::vector<CompensatedSum> den(bins);
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (!data.is_target(i)) continue;
        const auto bin = static_cast<std::size_t>(
            std::lower_bound(out.upper.begin(), out.upper.end(), m[i]) - out.upper.begin());
        const double omega = o.use_survey_weights ? data.weight(i) : 1.0;
        ++out.counts[bin];
        den[bin] += omega;
        for (const auto& [s, pred] : per_study) {
            const auto g = gamma.find(s);
            num[bin][s] += omega * tilted_b(pred[i], g == gamma.end() ? 0.0 : g->second, 0);
        }
    }
    out.prevalence.resize(bins);
    out.discrepancy.assign(bins, 0.0);
    for (std::size_t b = 0; b < bins; ++b) {
        if (out.counts[b] == 0) continue;
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (const auto& [s, sum] : num[b]) {
            const double p = sum.value() / den[b].value();
            out.prevalence[b][s] = p;
            lo = std::min(lo, p);
            hi = std::max(hi, p);
        }
        out.discrepancy[b] = hi - lo;
    }
    return out;
}

}  // namespace

CompatibilityReport tilt_compatibility_diagnostic(const AnalysisDataset& data,
                                                  const std::map<int, double>& gamma,
                                                  const CompatibilityOptions& options) {
    if (data.n_studies() < 2) {
        throw Error(ErrorCode::InsufficientStudies,
                    "compatibility diagnostic needs at least two studies, have " +
                        std::to_string(data.n_studies()));
    }
    if (options.bins < 1) throw Error(ErrorCode::InvalidArgument, "bins must be >= 1");

    const BinnedPrevalence base = binned_prevalence(data, gamma, options);
    CompatibilityReport report;
    report.bin_upper = base.upper;
    report.bin_counts = base.counts;
    report.prevalence = base.prevalence;
    report.discrepancy = base.discrepancy;
    report.statistic = *std::max_element(base.discrepancy.begin(), base.discrepancy.end());
    if (options.replicates <= 0) return report;

    const auto B = static_cast<std::size_t>(options.replicates);
    std::vector<double> centred(B, std::numeric_limits<double>::quiet_NaN());
    parallel_for(B, options.threads, [&](std::size_t b) {
        std::mt19937_64 rng = seed_stream(options.seed, b);
        const auto rows = resample_rows(data, BootstrapKind::Iid, true, rng);
        try {
            const BinnedPrevalence rep = binned_prevalence(data.select(rows), gamma, options);
            double t = 0.0;
            for (std::size_t k = 0; k < rep.discrepancy.size(); ++k) {
                t = std::max(t, std::abs(rep.discrepancy[k] - base.discrepancy[k]));
            }
            centred[b] = t;
        } catch (const Error& e) {
            if (error_category(e.code()) != ErrorCategory::Estimation ||
                e.code() == ErrorCode::InvalidArgument) {
                throw;
            }
        }
    });

    std::vector<double> ok;
    int exceed = 0;
    for (double t : centred) {
        if (std::isnan(t)) {
            ++report.failures;
            continue;
        }
        ok.push_back(t);
        if (t >= report.statistic) ++exceed;
    }
    report.replicates_used = static_cast<int>(ok.size());
    if (!ok.empty()) {
        report.p_value = static_cast<double>(exceed) / static_cast<double>(ok.size());
        std::sort(ok.begin(), ok.end());
        report.critical_value_95 = quantile_type7(ok, 0.95);
    }
    return report;
}

}  // namespace tperf
