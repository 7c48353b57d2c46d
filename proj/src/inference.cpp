#include "tperf/inference.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <thread>
#include <unordered_map>

#include "tperf/rng.hpp"

namespace tperf {

const char* bootstrap_kind_name(BootstrapKind k) {
    return k == BootstrapKind::Iid ? "iid" : "stratified_two_stage";
}

std::optional<BootstrapKind> parse_bootstrap_kind(const std::string& s) {
    if (s == "iid") return BootstrapKind::Iid;
    if (s == "stratified_two_stage") return BootstrapKind::StratifiedTwoStage;
    return std::nullopt;
}

void BootstrapPlan::check() const {
    if (replicates < 2) throw Error(ErrorCode::InvalidArgument, "bootstrap needs B >= 2");
    if (!(ci_level > 0.0 && ci_level < 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "ci_level must lie in (0, 1)");
    }
    if (!(max_failure_rate >= 0.0 && max_failure_rate < 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "max_failure_rate must lie in [0, 1)");
    }
}

namespace {

std::size_t draw(std::mt19937_64& rng, std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

void append_iid(const std::vector<std::size_t>& pool, std::mt19937_64& rng,
                std::vector<std::size_t>& out) {
    for (std::size_t k = 0; k < pool.size(); ++k) out.push_back(pool[draw(rng, pool.size())]);
}

// Target rows grouped as PSU -> SSU -> rows, in order of first appearance.
struct Design {
    std::vector<std::vector<std::vector<std::size_t>>> psus;
};

Design target_design(const AnalysisDataset& data) {
    Design d;
    std::unordered_map<std::string, std::size_t> psu_index;
    std::vector<std::unordered_map<std::string, std::size_t>> ssu_index;
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (!data.is_target(i)) continue;
        const auto& psu = data.psu(i);
        if (!psu) {
            throw Error(ErrorCode::MissingPsuLabels,
                        "two-stage bootstrap needs a psu label on target row " + std::to_string(i));
        }
        auto [it, fresh] = psu_index.emplace(*psu, d.psus.size());
        if (fresh) {
            d.psus.emplace_back();
            ssu_index.emplace_back();
        }
        auto& units = d.psus[it->second];
        const auto& ssu = data.ssu(i);
        if (!ssu) {
            units.push_back({i});  // unlabelled rows are their own secondary units
            continue;
        }
        auto [jt, fresh_ssu] = ssu_index[it->second].emplace(*ssu, units.size());
        if (fresh_ssu) units.emplace_back();
        units[jt->second].push_back(i);
    }
    return d;
}

}  // namespace

std::vector<std::size_t> resample_rows(const AnalysisDataset& data, BootstrapKind kind,
                                       bool stratify_studies, std::mt19937_64& rng) {
    std::vector<std::size_t> out;
    out.reserve(data.size());
    if (kind == BootstrapKind::Iid) {
        std::vector<std::size_t> target;
        for (std::size_t i = 0; i < data.size(); ++i) {
            if (data.is_target(i)) target.push_back(i);
        }
        append_iid(target, rng, out);
    } else {
        const Design design = target_design(data);
        for (std::size_t k = 0; k < design.psus.size(); ++k) {
            const auto& units = design.psus[draw(rng, design.psus.size())];
            for (std::size_t u = 0; u < units.size(); ++u) {
                const auto& rows = units[draw(rng, units.size())];
                out.insert(out.end(), rows.begin(), rows.end());
            }
        }
    }
    if (stratify_studies) {
        std::map<int, std::vector<std::size_t>> by_source;
        for (std::size_t i = 0; i < data.size(); ++i) {
            if (data.is_study(i)) by_source[data.source(i)].push_back(i);
        }
        for (const auto& [s, rows] : by_source) append_iid(rows, rng, out);
    } else {
        std::vector<std::size_t> study;
        for (std::size_t i = 0; i < data.size(); ++i) {
            if (data.is_study(i)) study.push_back(i);
        }
        append_iid(study, rng, out);
    }
    return out;
}

double quantile_type7(std::span<const double> sorted, double p) {
    if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
    const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

IntervalEstimate summarize_replicates(double point, std::span<const double> values,
                                      double ci_level) {
    IntervalEstimate out;
    out.point = point;
    std::vector<double> ok;
    ok.reserve(values.size());
    for (double v : values) {
        if (std::isnan(v)) {
            ++out.failed;
        } else {
            ok.push_back(v);
        }
    }
    out.replicates_used = static_cast<int>(ok.size());
    if (ok.empty()) {
        out.se = out.lo = out.hi = std::numeric_limits<double>::quiet_NaN();
        return out;
    }
    // Shifted by the first value so identical replicates give exactly zero.
    const double shift = ok.front();
    double mean = 0.0;
    for (double v : ok) mean += v - shift;
    mean /= static_cast<double>(ok.size());
    double ss = 0.0;
    for (double v : ok) ss += (v - shift - mean) * (v - shift - mean);
    out.se = ok.size() > 1 ? std::sqrt(ss / static_cast<double>(ok.size() - 1)) : 0.0;
    std::sort(ok.begin(), ok.end());
    const double alpha = 1.0 - ci_level;
    out.lo = quantile_type7(ok, alpha / 2.0);
    out.hi = quantile_type7(ok, 1.0 - alpha / 2.0);
    return out;
}

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const unsigned t = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
    if (t <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(t);
        for (unsigned k = 0; k < t; ++k) pool.emplace_back(worker);
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

namespace {

bool is_replicate_failure(ErrorCode code) {
    return error_category(code) == ErrorCategory::Estimation && code != ErrorCode::InvalidArgument &&
           code != ErrorCode::KindMismatch;
}

}  // namespace

BootstrapResult bootstrap(const AnalysisDataset& data, const BootstrapPlan& plan,
                          const Analysis& analysis) {
    plan.check();
    if (plan.kind == BootstrapKind::StratifiedTwoStage) (void)target_design(data);

    std::vector<std::size_t> identity(data.size());
    for (std::size_t i = 0; i < identity.size(); ++i) identity[i] = i;
    const std::vector<double> point = analysis({data, identity, plan.refit_nuisances, -1});
    const std::size_t k = point.size();

    const auto B = static_cast<std::size_t>(plan.replicates);
    std::vector<std::vector<double>> values(B);
    std::vector<std::string> failure(B);

    parallel_for(B, plan.threads, [&](std::size_t b) {
        std::mt19937_64 rng = seed_stream(plan.seed, b);
        const std::vector<std::size_t> rows =
            resample_rows(data, plan.kind, plan.stratify_studies, rng);
        try {
            const AnalysisDataset sample = data.select(rows);
            std::vector<double> v =
                analysis({sample, rows, plan.refit_nuisances, static_cast<int>(b)});
            if (v.size() != k) {
                throw Error(ErrorCode::InvalidArgument, "analysis returned a different arity");
            }
            values[b] = std::move(v);
        } catch (const Error& e) {
            if (!is_replicate_failure(e.code())) throw;
            failure[b] = error_name(e.code());
            values[b].assign(k, std::numeric_limits<double>::quiet_NaN());
        }
    });

    BootstrapResult out;
    for (const auto& f : failure) {
        if (f.empty()) continue;
        ++out.failed_replicates;
        ++out.failure_reasons[f];
    }
    const double rate = static_cast<double>(out.failed_replicates) / static_cast<double>(B);
    if (rate > plan.max_failure_rate) {
        std::string reasons;
        for (const auto& [name, count] : out.failure_reasons) {
            reasons += (reasons.empty() ? "" : ", ") + name + " x" + std::to_string(count);
        }
        throw Error(ErrorCode::TooManyFailures, std::to_string(out.failed_replicates) + " of " +
                                                    std::to_string(B) +
                                                    " replicates failed (" + reasons + ")");
    }
    std::vector<double> column(B);
    for (std::size_t j = 0; j < k; ++j) {
        for (std::size_t b = 0; b < B; ++b) column[b] = values[b][j];
        out.intervals.push_back(summarize_replicates(point[j], column, plan.ci_level));
    }
    out.replicate_values = std::move(values);
    return out;
}

}  // namespace tperf
