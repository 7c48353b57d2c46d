#pragma once

// Shared fixtures and deliberately naive reference implementations. The
// references follow the estimator definitions term by term (double loops, no
// sorting, no shared code with the library) so they can serve as oracles.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "tperf/dataset.hpp"
#include "tperf/metrics.hpp"

namespace testing_support {

struct Row {
    int s;
    int y;  // ignored on target rows
    double h;
    double x;
    double weight = 1.0;
};

inline tperf::AnalysisDataset make_dataset(const std::vector<Row>& rows) {
    tperf::DatasetColumns cols;
    cols.covariate_names = {"x1"};
    for (const auto& r : rows) {
        tperf::DataRow d;
        d.x = {r.x};
        d.source = r.s;
        if (r.s != 0) d.y = r.y;
        d.weight = r.weight;
        d.score = r.h;
        cols.push_back(d);
    }
    return tperf::AnalysisDataset(std::move(cols));
}

struct Fixture {
    tperf::AnalysisDataset data;
    std::vector<double> m;
    std::vector<double> w;
    tperf::NuisanceValues nv() const { return {m, w}; }
};

/// Random small dataset with arbitrary nuisance values; every group has at
/// least two rows of each outcome.
inline Fixture random_fixture(std::uint64_t seed, int n_target, int n_study, int n_studies = 2,
                              bool ties = false, bool survey = false) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Row> rows;
    auto score = [&] { return ties ? std::floor(u(rng) * 5.0) / 5.0 : u(rng); };
    // The first two rows of each group straddle every threshold in
    // [0.1, 0.8), so each classification denominator is non-empty there.
    auto pinned = [&](int i) { return i % 2 == 0 ? 0.8 : 0.0; };
    for (int i = 0; i < n_target; ++i) {
        const double h = i < 2 ? pinned(i) : score();
        rows.push_back({0, 0, h, u(rng), survey ? 0.5 + 2.0 * u(rng) : 1.0});
    }
    for (int i = 0; i < n_study; ++i) {
        const int y = i < 2 ? 1 : (i < 4 ? 0 : (u(rng) < 0.6 ? 1 : 0));
        const double h = i < 4 ? pinned(i) : score();
        rows.push_back({1 + i % n_studies, y, h, u(rng), 1.0});
    }
    Fixture f{make_dataset(rows), {}, {}};
    // Study-row predictions lean towards the observed outcome, as a fitted
    // model's would; this keeps augmented denominators mostly positive.
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const double noise = u(rng);
        f.m.push_back(rows[i].s == 0 ? 0.05 + 0.9 * noise
                                     : 0.2 + 0.6 * rows[i].y + 0.3 * (noise - 0.5));
        f.w.push_back(0.2 + 3.0 * u(rng));
    }
    return f;
}

/// Runs `f` and `g`; both must either agree to `tol` or both raise the same
/// error code.
template <class F, class G>
bool same_result(F&& f, G&& g, double tol = 1e-12) {
    double a = 0, b = 0;
    int ea = -1, eb = -1;
    try {
        a = f();
    } catch (const tperf::Error& e) {
        ea = static_cast<int>(e.code());
    }
    try {
        b = g();
    } catch (const tperf::Error& e) {
        eb = static_cast<int>(e.code());
    }
    if (ea != eb) return false;
    if (ea >= 0) return true;
    return std::abs(a - b) <= tol * std::max(1.0, std::abs(b));
}

// ---- reference metric estimators ----------------------------------------

struct Ratio {
    double num = 0.0;
    double den = 0.0;
    double value() const { return num / den; }
};

// Every threshold metric, estimator and weighting mode, written out
// formula by formula.
inline Ratio ref_metric_ratio(const Fixture& f, tperf::Metric metric, tperf::EstimatorKind est,
                              double c, bool survey, tperf::Loss loss = tperf::Loss::Brier) {
    using tperf::EstimatorKind;
    using tperf::Metric;
    const auto& d = f.data;
    const bool positive = metric == Metric::Sensitivity || metric == Metric::Ppv;
    double num = 0, den = 0;
    if (metric == Metric::Risk) {
        auto L = [&](double y, double h) {
            return loss == tperf::Loss::Brier ? (y - h) * (y - h) : std::abs(y - h);
        };
        double n0 = 0, n1 = 0;
        for (std::size_t i = 0; i < d.size(); ++i) {
            const double h = *d.score(i);
            const double el = f.m[i] * L(1, h) + (1 - f.m[i]) * L(0, h);
            if (d.source(i) == 0) {
                const double om = survey ? d.weight(i) : 1.0;
                n0 += om;
                if (est == EstimatorKind::OutcomeModel || est == EstimatorKind::DoublyRobust)
                    num += om * el;
            } else {
                const double l = L(*d.y(i), h);
                n1 += 1;
                if (est == EstimatorKind::Weighting) num += f.w[i] * l;
                if (est == EstimatorKind::DoublyRobust) num += f.w[i] * (l - el);
                if (est == EstimatorKind::Source) num += l;
            }
        }
        return {num, est == EstimatorKind::Source ? n1 : n0};
    }
    const bool by_outcome = metric == Metric::Sensitivity || metric == Metric::Specificity;
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double h = *d.score(i);
        const double cls = positive ? (h > c ? 1.0 : 0.0) : (h <= c ? 1.0 : 0.0);
        if (d.source(i) == 0) {
            if (est != EstimatorKind::OutcomeModel && est != EstimatorKind::DoublyRobust) continue;
            const double om = survey ? d.weight(i) : 1.0;
            const double q = positive ? f.m[i] : 1 - f.m[i];
            num += om * cls * q;
            den += by_outcome ? om * q : om * cls;
        } else {
            const double ev = positive ? (*d.y(i) == 1) : (*d.y(i) == 0);
            const double q = positive ? f.m[i] : 1 - f.m[i];
            switch (est) {
                case EstimatorKind::OutcomeModel: break;
                case EstimatorKind::Source:
                    num += cls * ev;
                    den += by_outcome ? ev : cls;
                    break;
                case EstimatorKind::Weighting:
                    num += f.w[i] * cls * ev;
                    den += by_outcome ? f.w[i] * ev : f.w[i] * cls;
                    break;
                case EstimatorKind::DoublyRobust:
                    num += f.w[i] * cls * (ev - q);
                    if (by_outcome) den += f.w[i] * (ev - q);
                    break;
            }
        }
    }
    return {num, den};
}

inline double ref_metric(const Fixture& f, tperf::Metric metric, tperf::EstimatorKind est,
                         double c, bool survey, tperf::Loss loss = tperf::Loss::Brier) {
    return ref_metric_ratio(f, metric, est, c, survey, loss).value();
}

// ---- reference AUC estimators (all ordered pairs) -----------------------

inline Ratio ref_auc_ratio(const Fixture& f, tperf::EstimatorKind est, bool survey = false,
                           bool half_ties = false) {
    using tperf::EstimatorKind;
    double num = 0, den = 0;
    const auto& d = f.data;
    for (std::size_t i = 0; i < d.size(); ++i) {
        for (std::size_t j = 0; j < d.size(); ++j) {
            if (i == j) continue;
            const double hi = *d.score(i), hj = *d.score(j);
            const double k = hi > hj ? 1.0 : (half_ties && hi == hj ? 0.5 : 0.0);
            const bool t0 = d.source(i) == 0 && d.source(j) == 0;
            const bool t1 = d.source(i) != 0 && d.source(j) != 0;
            const double oi = survey ? d.weight(i) : 1.0, oj = survey ? d.weight(j) : 1.0;
            double out = 0, wt = 0, cross = 0;
            if (t0) out = f.m[i] * (1 - f.m[j]) * oi * oj;
            if (t1) {
                const double wi = est == EstimatorKind::Source ? 1.0 : f.w[i];
                const double wj = est == EstimatorKind::Source ? 1.0 : f.w[j];
                wt = (*d.y(i) == 1 && *d.y(j) == 0) ? wi * wj : 0.0;
                cross = wi * wj * f.m[i] * (1 - f.m[j]);
            }
            double term = 0;
            switch (est) {
                case EstimatorKind::OutcomeModel: term = out; break;
                case EstimatorKind::Weighting:
                case EstimatorKind::Source: term = wt; break;
                case EstimatorKind::DoublyRobust: term = wt + out - cross; break;
            }
            num += term * k;
            den += term;
        }
    }
    return {num, den};
}

inline double ref_auc(const Fixture& f, tperf::EstimatorKind est, bool survey = false,
                      bool half_ties = false) {
    return ref_auc_ratio(f, est, survey, half_ties).value();
}

}  // namespace testing_support
