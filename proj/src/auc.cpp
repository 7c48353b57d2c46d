#include "tperf/auc.hpp"

#include <algorithm>
#include <vector>

#include "tperf/summation.hpp"

namespace tperf {

namespace {

// One group of rows entering a sum over ordered pairs i != j of a_i * b_j.
struct PairEntry {
    double h, a, b;
};

struct PairSums {
    double concordant = 0.0;  // sum over h_i > h_j
    double tied = 0.0;        // sum over h_i == h_j, i != j
    double total = 0.0;       // sum over i != j
    std::size_t pairs = 0;
    std::size_t tied_pairs = 0;
};

// Sorted prefix sums: O(n log n) for all three pair sums.
PairSums pair_sums(std::vector<PairEntry> entries) {
    std::sort(entries.begin(), entries.end(),
              [](const PairEntry& l, const PairEntry& r) { return l.h < r.h; });
    PairSums out;
    CompensatedSum conc, tied, sum_a, sum_b, diag;
    CompensatedSum b_below;
    std::size_t k = 0;
    while (k < entries.size()) {
        std::size_t end = k;
        CompensatedSum block_a, block_b, block_diag;
        while (end < entries.size() && entries[end].h == entries[k].h) {
            block_a += entries[end].a;
            block_b += entries[end].b;
            block_diag += entries[end].a * entries[end].b;
            ++end;
        }
        conc += block_a.value() * b_below.value();
        tied += block_a.value() * block_b.value() - block_diag.value();
        b_below += block_b.value();
        sum_a += block_a.value();
        sum_b += block_b.value();
        diag += block_diag.value();
        const std::size_t size = end - k;
        out.tied_pairs += size * (size - 1) / 2;
        k = end;
    }
    out.concordant = conc.value();
    out.tied = tied.value();
    out.total = sum_a.value() * sum_b.value() - diag.value();
    out.pairs = entries.size() * (entries.size() > 0 ? entries.size() - 1 : 0);
    return out;
}

void require_lengths(const AnalysisDataset& data, std::span<const double> v, const char* what) {
    if (v.size() != data.size()) {
        throw Error(ErrorCode::InvalidArgument, std::string(what) + " missing or misaligned");
    }
}

double target_weight(const AnalysisDataset& data, std::size_t i, const AucOptions& o) {
    return o.use_survey_weights ? data.weight(i) : 1.0;
}

PairSums outcome_sums(const AnalysisDataset& data, std::span<const double> m,
                      const AucOptions& o) {
    std::vector<PairEntry> e;
    e.reserve(data.n_target());
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (!data.is_target(i)) continue;
        const double om = target_weight(data, i, o);
        e.push_back({data.score_or_throw(i), om * m[i], om * (1.0 - m[i])});
    }
    return pair_sums(std::move(e));
}

PairSums weighted_sums(const AnalysisDataset& data, std::span<const double> w) {
    std::vector<PairEntry> e;
    e.reserve(data.n_study());
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (!data.is_study(i)) continue;
        const double wi = w.empty() ? 1.0 : w[i];
        const bool case_row = *data.y(i) == 1;
        e.push_back({data.score_or_throw(i), case_row ? wi : 0.0, case_row ? 0.0 : wi});
    }
    return pair_sums(std::move(e));
}

PairSums cross_sums(const AnalysisDataset& data, std::span<const double> m,
                    std::span<const double> w) {
    std::vector<PairEntry> e;
    e.reserve(data.n_study());
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (!data.is_study(i)) continue;
        e.push_back({data.score_or_throw(i), w[i] * m[i], w[i] * (1.0 - m[i])});
    }
    return pair_sums(std::move(e));
}

AucEstimate finish(EstimatorKind kind, double num, double den, std::size_t pairs,
                   std::size_t tied_pairs) {
    if (!(den > 0.0)) {
        throw Error(ErrorCode::ZeroDenominator,
                    std::string("auc/") + estimator_name(kind) + ": denominator is " +
                        std::to_string(den));
    }
    AucEstimate out;
    out.estimator = kind;
    out.numerator = num;
    out.denominator = den;
    out.value = num / den;
    out.contributing_pairs = pairs;
    out.tied_pairs = tied_pairs;
    out.out_of_range = out.value < 0.0 || out.value > 1.0;
    return out;
}

double credited(const PairSums& s, const AucOptions& o) {
    return s.concordant + (o.tie_half_credit ? 0.5 * s.tied : 0.0);
}

}  // namespace

AucEstimate auc_om(const AnalysisDataset& data, std::span<const double> m_hat,
                   const AucOptions& options) {
    require_lengths(data, m_hat, "outcome-model predictions");
    const PairSums s = outcome_sums(data, m_hat, options);
    return finish(EstimatorKind::OutcomeModel, credited(s, options), s.total, s.pairs,
                  s.tied_pairs);
}

AucEstimate auc_w(const AnalysisDataset& data, std::span<const double> w_hat,
                  const AucOptions& options) {
    require_lengths(data, w_hat, "participation odds");
    const PairSums s = weighted_sums(data, w_hat);
    return finish(EstimatorKind::Weighting, credited(s, options), s.total, s.pairs,
                  s.tied_pairs);
}

AucEstimate auc_dr(const AnalysisDataset& data, std::span<const double> m_hat,
                   std::span<const double> w_hat, const AucOptions& options) {
    require_lengths(data, m_hat, "outcome-model predictions");
    require_lengths(data, w_hat, "participation odds");
    const PairSums out = outcome_sums(data, m_hat, options);
    const PairSums w = weighted_sums(data, w_hat);
    const PairSums cross = cross_sums(data, m_hat, w_hat);
    const double num = credited(w, options) + credited(out, options) - credited(cross, options);
    const double den = w.total + out.total - cross.total;
    return finish(EstimatorKind::DoublyRobust, num, den, out.pairs + w.pairs,
                  out.tied_pairs + w.tied_pairs);
}

AucEstimate auc_source(const AnalysisDataset& data, const AucOptions& options) {
    const PairSums s = weighted_sums(data, {});
    return finish(EstimatorKind::Source, credited(s, options), s.total, s.pairs, s.tied_pairs);
}

AucEstimate auc(const AnalysisDataset& data, const NuisanceValues& nuisance,
                EstimatorKind estimator, const AucOptions& options) {
    switch (estimator) {
        case EstimatorKind::OutcomeModel: return auc_om(data, nuisance.m, options);
        case EstimatorKind::Weighting: return auc_w(data, nuisance.w, options);
        case EstimatorKind::DoublyRobust: return auc_dr(data, nuisance.m, nuisance.w, options);
        case EstimatorKind::Source: return auc_source(data, options);
    }
    throw Error(ErrorCode::InvalidArgument, "unknown estimator");
}

PairKernelTerms pair_terms(const AnalysisDataset& data, const NuisanceValues& nv, std::size_t i,
                           std::size_t j, double kernel, bool use_survey_weights) {
    PairKernelTerms t;
    if (i == j) return t;
    const bool ti = data.is_target(i), tj = data.is_target(j);
    if (ti && tj && !nv.m.empty()) {
        const double oi = use_survey_weights ? data.weight(i) : 1.0;
        const double oj = use_survey_weights ? data.weight(j) : 1.0;
        t.d_out = nv.m[i] * (1.0 - nv.m[j]) * oi * oj * kernel;
    }
    if (!ti && !tj) {
        const double wi = nv.w.empty() ? 1.0 : nv.w[i];
        const double wj = nv.w.empty() ? 1.0 : nv.w[j];
        if (*data.y(i) == 1 && *data.y(j) == 0) t.d_w = wi * wj * kernel;
        if (!nv.m.empty()) t.cross = wi * wj * nv.m[i] * (1.0 - nv.m[j]) * kernel;
    }
    return t;
}

AucEstimate auc_all_pairs(const AnalysisDataset& data, const NuisanceValues& nuisance,
                          EstimatorKind estimator, const AucOptions& options) {
    NuisanceValues nv = nuisance;
    if (estimator == EstimatorKind::Source) nv = {};
    if (estimator == EstimatorKind::OutcomeModel) nv.w = {};
    if (estimator == EstimatorKind::Weighting) nv.m = {};
    if (estimator != EstimatorKind::Source && estimator != EstimatorKind::Weighting) {
        require_lengths(data, nv.m, "outcome-model predictions");
    }
    if (estimator == EstimatorKind::Weighting || estimator == EstimatorKind::DoublyRobust) {
        require_lengths(data, nv.w, "participation odds");
    }

    auto pick = [&](const PairKernelTerms& t) {
        switch (estimator) {
            case EstimatorKind::OutcomeModel: return t.d_out;
            case EstimatorKind::Weighting:
            case EstimatorKind::Source: return t.d_w;
            case EstimatorKind::DoublyRobust: return t.d_dr();
        }
        return 0.0;
    };
    const bool uses_target = estimator == EstimatorKind::OutcomeModel ||
                             estimator == EstimatorKind::DoublyRobust;
    const bool uses_study = estimator != EstimatorKind::OutcomeModel;

    CompensatedSum num, den;
    std::size_t pairs = 0, ties = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const bool ti = data.is_target(i);
        if (ti ? !uses_target : !uses_study) continue;
        const double hi = data.score_or_throw(i);
        for (std::size_t j = 0; j < data.size(); ++j) {
            if (i == j || data.is_target(j) != ti) continue;
            const double hj = data.score_or_throw(j);
            ++pairs;
            if (hi == hj && i < j) ++ties;
            double k = hi > hj ? 1.0 : 0.0;
            if (options.tie_half_credit && hi == hj) k = 0.5;
            num += pick(pair_terms(data, nv, i, j, k, options.use_survey_weights));
            den += pick(pair_terms(data, nv, i, j, 1.0, options.use_survey_weights));
        }
    }
    return finish(estimator, num.value(), den.value(), pairs, ties);
}

}  // namespace tperf
