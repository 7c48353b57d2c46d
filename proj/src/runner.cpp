#include "tperf/runner.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "tperf/auc.hpp"
#include "tperf/nuisance.hpp"
#include "tperf/score_model.hpp"
#include "tperf/tilt.hpp"

namespace tperf {

using json = nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// JSON has no infinities; thresholds at the grid sentinels are spelled out.
json number(double v) {
    if (std::isnan(v)) return nullptr;
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

std::string cell_text(double v, double se) {
    if (std::isnan(v)) return "NA";
    char buf[64];
    if (std::isnan(se)) {
        std::snprintf(buf, sizeof buf, "%.4f (NA)", v);
    } else {
        std::snprintf(buf, sizeof buf, "%.4f (%.4f)", v, se);
    }
    return buf;
}

std::string csv_number(double v) {
    if (std::isnan(v)) return "NA";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

bool uses_m(EstimatorKind e) {
    return e == EstimatorKind::OutcomeModel || e == EstimatorKind::DoublyRobust;
}
bool uses_w(EstimatorKind e) {
    return e == EstimatorKind::Weighting || e == EstimatorKind::DoublyRobust;
}

json fit_json(const NuisanceFit& fit, const std::vector<std::string>& names, const ClipStats& clip) {
    json coefs = json::object();
    const auto labels = fit.basis.labels(names);
    for (std::size_t j = 0; j < labels.size(); ++j) {
        coefs[labels[j]] = number(fit.coefficients[static_cast<Eigen::Index>(j)]);
    }
    return {{"converged", fit.converged},
            {"separated", fit.separated},
            {"iterations", fit.iterations},
            {"deviance", number(fit.deviance)},
            {"coefficients", coefs},
            {"clipped", clip.clipped},
            {"evaluated", clip.evaluated}};
}

// Everything an analysis needs once the data are loaded and scored.
struct Prepared {
    AnalysisDataset data;
    std::vector<std::string> names;
    BasisSpec outcome_basis;
    BasisSpec participation_basis;
    BasisSpec study_basis;
};

Prepared prepare(const RunConfig& c) {
    AnalysisDataset raw = load_csv(c.data_path);
    const auto names = raw.covariate_names();
    std::optional<AnalysisDataset> scored;
    if (c.model.use_score_column) {
        if (!raw.has_scores()) {
            // Points at the first row without a score.
            for (std::size_t i = 0; i < raw.size(); ++i) (void)raw.score_or_throw(i);
        }
        scored.emplace(std::move(raw));
    } else {
        ScoreModel model{c.model.basis.resolve(names, "model.basis"), c.model.coefficients};
        if (model.coefficients.size() != model.basis.dimension()) {
            throw Error(ErrorCode::Config,
                        "'model.coefficients': " + std::to_string(model.coefficients.size()) +
                            " values for a basis with " + std::to_string(model.basis.dimension()) +
                            " columns");
        }
        scored.emplace(raw.with_scores(model.score_all(raw)));
    }
    return {std::move(*scored), names, c.outcome_basis.resolve(names, "nuisance.outcome"),
            c.participation_basis.resolve(names, "nuisance.participation"),
            c.tilt.study_basis.resolve(names, "tilt.study_basis")};
}

struct Nuisances {
    std::optional<NuisanceFit> outcome, participation;
    std::vector<double> m, w;
    ClipStats m_clip, w_clip;
    NuisanceValues values() const { return {m, w}; }
};

Nuisances fit_nuisances(const AnalysisDataset& data, const Prepared& p, const RunConfig& c,
                        bool need_m, bool need_w) {
    Nuisances n;
    if (need_m) {
        n.outcome = fit_outcome_model(data, p.outcome_basis, c.fit);
        require_usable(*n.outcome);
        n.m = predict_m(*n.outcome, data, &n.m_clip);
    }
    if (need_w) {
        n.participation = fit_participation_model(data, p.participation_basis, c.fit,
                                                  c.use_survey_weights);
        require_usable(*n.participation);
        n.w = predict_w(*n.participation, data, &n.w_clip);
    }
    return n;
}

// Original-sample predictions carried into a resample without refitting.
Nuisances remap(const Nuisances& base, std::span<const std::size_t> rows) {
    Nuisances n;
    for (std::size_t r : rows) {
        if (!base.m.empty()) n.m.push_back(base.m[r]);
        if (!base.w.empty()) n.w.push_back(base.w[r]);
    }
    return n;
}

double select_threshold(const AnalysisDataset& data, const Nuisances& n, const RunConfig& c) {
    if (c.threshold.kind == ThresholdRule::Kind::Fixed) return c.threshold.value;
    return youden_select(data, n.values(), c.threshold.youden_estimator, c.use_survey_weights)
        .threshold;
}

struct Cell {
    double value = kNaN;
    double n_effective = kNaN;
    bool out_of_range = false;
    std::string error_code;
    std::string error_message;
};

bool is_cell_failure(const Error& e) {
    return error_category(e.code()) == ErrorCategory::Estimation &&
           e.code() != ErrorCode::InvalidArgument && e.code() != ErrorCode::KindMismatch;
}

Cell compute_cell(const AnalysisDataset& data, const NuisanceValues& nv, const MetricSpec& m,
                  EstimatorKind e, double c, const RunConfig& cfg) {
    Cell cell;
    try {
        if (m.kind == MetricSpec::Kind::Auc) {
            const AucEstimate a =
                auc(data, nv, e, {cfg.use_survey_weights, cfg.auc_tie_half_credit});
            cell.value = a.value;
            cell.out_of_range = a.out_of_range;
        } else {
            MetricRequest req;
            req.estimator = e;
            req.use_survey_weights = cfg.use_survey_weights;
            if (m.kind == MetricSpec::Kind::Risk) {
                req.metric = Metric::Risk;
                req.loss = m.loss;
            } else {
                req.metric = m.metric;
                req.threshold = c;
            }
            const PerformanceEstimate p = estimate_metric(data, nv, req);
            cell.value = p.value;
            cell.n_effective = p.n_effective;
            cell.out_of_range = p.diagnostics.out_of_range;
        }
    } catch (const Error& err) {
        if (!is_cell_failure(err)) throw;
        cell.error_code = error_name(err.code());
        cell.error_message = err.what();
    }
    return cell;
}

std::vector<Cell> compute_cells(const AnalysisDataset& data, const NuisanceValues& nv, double c,
                                const RunConfig& cfg) {
    std::vector<Cell> out;
    for (const auto& m : cfg.metrics) {
        for (EstimatorKind e : cfg.estimators) out.push_back(compute_cell(data, nv, m, e, c, cfg));
    }
    return out;
}

json bootstrap_json(const BootstrapResult& r, const RunConfig& c) {
    return {{"kind", bootstrap_kind_name(c.bootstrap.kind)},
            {"replicates", c.bootstrap.replicates},
            {"ci_level", c.bootstrap.ci_level},
            {"refit_nuisances", c.bootstrap.refit_nuisances},
            {"stratify_studies", c.bootstrap.stratify_studies},
            {"failed_replicates", r.failed_replicates},
            {"failure_reasons", r.failure_reasons}};
}

json sample_json(const AnalysisDataset& d) {
    json per_source = json::object();
    for (int s = 0; s <= d.n_studies(); ++s) per_source[std::to_string(s)] = d.n_source(s);
    return {{"rows", d.size()}, {"target_rows", d.n_target()}, {"rows_per_source", per_source}};
}

struct Provenance {
    json clip = json::object();
    int failed_replicates = 0;
    std::map<std::string, int> failure_reasons;
    std::size_t positivity_warnings = 0;
};

std::string provenance_document(const LoadedConfig& loaded, const Provenance& p) {
    json doc = {{"config_hash", loaded.hash},
                {"seed", loaded.config.seed},
                {"version", kVersion},
                {"command", command_name(loaded.config.command)},
                {"clip_counts", p.clip},
                {"failed_replicates", p.failed_replicates},
                {"failure_reasons", p.failure_reasons},
                {"positivity_warnings", p.positivity_warnings},
                {"config", json::parse(loaded.canonical)}};
    return doc.dump(2) + "\n";
}

RunOutputs run_evaluate(const LoadedConfig& loaded) {
    const RunConfig& c = loaded.config;
    const Prepared p = prepare(c);
    const AnalysisDataset& data = p.data;

    bool need_m = false, need_w = false;
    for (EstimatorKind e : c.estimators) {
        need_m = need_m || uses_m(e);
        need_w = need_w || uses_w(e);
    }
    if (c.threshold.kind == ThresholdRule::Kind::Youden) {
        need_m = need_m || uses_m(c.threshold.youden_estimator);
        need_w = need_w || uses_w(c.threshold.youden_estimator);
    }
    // The influence function is the unweighted one; it does not describe a
    // survey-weighted estimate.
    const bool want_if = c.influence_function_se && !c.use_survey_weights;

    const Nuisances base = fit_nuisances(data, p, c, need_m, need_w);
    const double threshold = select_threshold(data, base, c);
    const std::vector<Cell> cells = compute_cells(data, base.values(), threshold, c);

    ValidationReport report = validate(data.columns());
    if (base.participation) add_positivity_diagnostic(report, data, *base.participation);

    // The threshold stays at its full-sample value inside every replicate:
    // intervals are conditional on the selected cut-point.
    std::optional<BootstrapResult> boot;
    if (c.bootstrap.replicates >= 2) {
        boot = bootstrap(data, c.bootstrap, [&](const ReplicateContext& ctx) {
            const Nuisances n = ctx.refit ? fit_nuisances(ctx.data, p, c, need_m, need_w)
                                          : remap(base, ctx.rows);
            std::vector<double> v;
            for (const Cell& cell : compute_cells(ctx.data, n.values(), threshold, c)) {
                v.push_back(cell.value);
            }
            return v;
        });
    }

    json estimates = json::array();
    std::map<std::pair<std::string, EstimatorKind>, std::string> table;
    std::size_t k = 0;
    for (const auto& m : c.metrics) {
        for (EstimatorKind e : c.estimators) {
            const Cell& cell = cells[k];
            json row = {{"metric", m.name()}, {"estimator", estimator_name(e)}};
            double se = kNaN;
            if (!cell.error_code.empty()) {
                row["error"] = {{"code", cell.error_code}, {"message", cell.error_message}};
                table[{m.name(), e}] = "error:" + cell.error_code;
            } else {
                row["value"] = number(cell.value);
                row["n_effective"] = number(cell.n_effective);
                row["out_of_range"] = cell.out_of_range;
                if (boot) {
                    const IntervalEstimate& iv = boot->intervals[k];
                    se = iv.se;
                    row["se"] = number(iv.se);
                    row["ci"] = {number(iv.lo), number(iv.hi)};
                    row["replicates_used"] = iv.replicates_used;
                    row["replicates_failed"] = iv.failed;
                }
                if (want_if && e == EstimatorKind::DoublyRobust &&
                    m.kind == MetricSpec::Kind::Threshold && m.metric == Metric::Sensitivity) {
                    row["if_se"] = number(std::sqrt(
                        if_variance_sensitivity(data, base.values(), threshold, cell.value)));
                }
                table[{m.name(), e}] = cell_text(cell.value, se);
            }
            estimates.push_back(row);
            ++k;
        }
    }

    json nuisance = json::object();
    Provenance prov;
    if (base.outcome) {
        nuisance["outcome"] = fit_json(*base.outcome, p.names, base.m_clip);
        prov.clip["outcome"] = {{"clipped", base.m_clip.clipped}, {"evaluated", base.m_clip.evaluated}};
    }
    if (base.participation) {
        nuisance["participation"] = fit_json(*base.participation, p.names, base.w_clip);
        prov.clip["participation"] = {{"clipped", base.w_clip.clipped},
                                      {"evaluated", base.w_clip.evaluated}};
    }
    prov.positivity_warnings = report.positivity_warnings.size();

    json threshold_json = {{"value", number(threshold)}};
    if (c.threshold.kind == ThresholdRule::Kind::Fixed) {
        threshold_json["rule"] = "fixed";
    } else {
        threshold_json["rule"] = "youden";
        threshold_json["estimator"] = estimator_name(c.threshold.youden_estimator);
    }

    json doc = {{"command", "evaluate"},
                {"config_hash", loaded.hash},
                {"threshold", threshold_json},
                {"survey_weights", c.use_survey_weights},
                {"sample", sample_json(data)},
                {"nuisance", nuisance},
                {"positivity_warnings", report.positivity_warnings.size()},
                {"estimates", estimates}};
    if (boot) {
        doc["bootstrap"] = bootstrap_json(*boot, c);
        prov.failed_replicates = boot->failed_replicates;
        prov.failure_reasons = boot->failure_reasons;
    }

    std::ostringstream csv;
    csv << "# config_hash=" << loaded.hash << "\n";
    csv << "metric";
    for (EstimatorKind e : c.estimators) csv << ',' << estimator_name(e);
    csv << '\n';
    for (const auto& m : c.metrics) {
        csv << m.name();
        for (EstimatorKind e : c.estimators) csv << ',' << table[{m.name(), e}];
        csv << '\n';
    }
    return {doc.dump(2) + "\n", csv.str(), provenance_document(loaded, prov)};
}

RunOutputs run_simulate(const LoadedConfig& loaded) {
    const RunConfig& c = loaded.config;
    const BiasStudyResult r = run_bias_study(c.simulation);
    json rows = json::array();
    std::ostringstream csv;
    csv << "# config_hash=" << loaded.hash << "\n";
    csv << "metric,estimator,regime,mean,truth,bias,rel_bias,sd,replicates,failures\n";
    for (const BiasRow& b : r.rows) {
        rows.push_back({{"metric", b.metric},
                        {"estimator", estimator_name(b.estimator)},
                        {"regime", regime_name(b.regime)},
                        {"mean", number(b.mean)},
                        {"truth", number(b.truth)},
                        {"bias", number(b.bias)},
                        {"rel_bias", number(b.rel_bias)},
                        {"sd", number(b.sd)},
                        {"replicates", b.replicates},
                        {"failures", b.failures}});
        csv << b.metric << ',' << estimator_name(b.estimator) << ',' << regime_name(b.regime) << ','
            << csv_number(b.mean) << ',' << csv_number(b.truth) << ',' << csv_number(b.bias) << ','
            << csv_number(b.rel_bias) << ',' << csv_number(b.sd) << ',' << b.replicates << ','
            << b.failures << '\n';
    }
    json failed = json::object();
    Provenance prov;
    for (const auto& [g, n] : r.failed_replicates) {
        failed[regime_name(g)] = n;
        prov.failed_replicates += n;
    }
    prov.failure_reasons = r.failure_reasons;
    std::vector<double> beta = r.beta_star.model.coefficients;
    const SimulationConfig& s = c.simulation;
    json doc = {{"command", "simulate"},
                {"config_hash", loaded.hash},
                {"n", s.n},
                {"replicates", s.replicates},
                {"evaluated_model", s.evaluated_model_correct ? "correct" : "misspecified"},
                {"beta_star", beta},
                {"beta_star_se", r.beta_star.se},
                {"mean_threshold", number(r.mean_threshold)},
                {"oracle_youden_threshold", number(r.oracle_youden)},
                {"mean_sizes",
                 {{"target", r.mean_sizes[0]},
                  {"study_1", r.mean_sizes[1]},
                  {"study_2", r.mean_sizes[2]},
                  {"study_3", r.mean_sizes[3]}}},
                {"failed_replicates", failed},
                {"failure_reasons", r.failure_reasons},
                {"rows", rows}};
    return {doc.dump(2) + "\n", csv.str(), provenance_document(loaded, prov)};
}

struct Calibrated {
    json doc;
    std::vector<std::string> csv_rows;
    Provenance prov;
};

// Per-study gamma calibration, tilted sensitivities and their combination.
Calibrated calibrate_all(const Prepared& p, const RunConfig& c, double threshold,
                         const std::map<int, std::vector<double>>& per_study) {
    const AnalysisDataset& data = p.data;
    TiltSpec spec;
    spec.mode = TiltSpec::Mode::Calibrated;
    spec.target_prevalence = c.tilt.target_prevalence;
    spec.bracket_lo = c.tilt.bracket_lo;
    spec.bracket_hi = c.tilt.bracket_hi;
    spec.bracket_limit = c.tilt.bracket_limit;
    spec.tol = c.tilt.tol;
    const double target = *c.tilt.target_prevalence;

    std::vector<int> studies;
    for (const auto& [s, m] : per_study) studies.push_back(s);

    auto estimate = [&](const AnalysisDataset& d, const std::map<int, std::vector<double>>& preds) {
        std::vector<double> values, gammas;
        for (int s : studies) {
            const auto& m = preds.at(s);
            const GammaCalibration g = calibrate_gamma(d, m, target, spec, c.use_survey_weights);
            gammas.push_back(g.gamma);
            values.push_back(
                tilted_sensitivity(d, m, g.gamma, threshold, s, c.use_survey_weights).value);
        }
        return std::pair{values, gammas};
    };
    const auto [values, gammas] = estimate(data, per_study);

    std::optional<BootstrapResult> boot;
    if (c.bootstrap.replicates >= 2) {
        boot = bootstrap(data, c.bootstrap, [&](const ReplicateContext& ctx) {
            std::map<int, std::vector<double>> preds;
            if (ctx.refit) {
                preds = per_study_predictions(ctx.data, p.study_basis, c.fit);
                for (int s : studies) {
                    if (!preds.count(s)) throw Error(ErrorCode::InsufficientStudies, "study lost");
                }
            } else {
                for (int s : studies) {
                    auto& v = preds[s];
                    for (std::size_t r : ctx.rows) v.push_back(per_study.at(s)[r]);
                }
            }
            return estimate(ctx.data, preds).first;
        });
    }

    std::vector<double> weights;
    std::string rule = c.tilt.combine;
    if (rule == "explicit") {
        weights = c.tilt.combine_weights;
        if (weights.size() != studies.size()) {
            throw Error(ErrorCode::Config, "'tilt.combine': " + std::to_string(weights.size()) +
                                               " weights for " + std::to_string(studies.size()) +
                                               " studies");
        }
    } else if (rule == "inverse_variance" && boot) {
        std::vector<double> var;
        for (const auto& iv : boot->intervals) var.push_back(iv.se * iv.se);
        weights = inverse_variance_weights(var);
    } else {
        rule = rule == "inverse_variance" ? "equal (no bootstrap for variances)" : "equal";
        weights.assign(studies.size(), 1.0 / static_cast<double>(studies.size()));
    }
    const double combined = combine_estimates(values, weights);
    double combined_se = kNaN;
    if (boot) {
        std::vector<double> reps;
        for (const auto& v : boot->replicate_values) {
            bool ok = true;
            for (double x : v) ok = ok && !std::isnan(x);
            reps.push_back(ok ? combine_estimates(v, weights) : kNaN);
        }
        combined_se = summarize_replicates(combined, reps, c.bootstrap.ci_level).se;
    }

    Calibrated out;
    json per = json::array();
    for (std::size_t k = 0; k < studies.size(); ++k) {
        json row = {{"study", studies[k]},
                    {"gamma_hat", number(gammas[k])},
                    {"sensitivity", number(values[k])},
                    {"weight", weights[k]}};
        if (boot) {
            row["se"] = number(boot->intervals[k].se);
            row["ci"] = {number(boot->intervals[k].lo), number(boot->intervals[k].hi)};
        }
        per.push_back(row);
        out.csv_rows.push_back(std::to_string(studies[k]) + "," + csv_number(gammas[k]) + "," +
                               csv_number(values[k]) + ",calibrated");
    }
    out.csv_rows.push_back("combined,," + csv_number(combined) + ",combined");
    out.doc = {{"target_prevalence", target},
               {"studies", per},
               {"combine_rule", rule},
               {"combined", {{"sensitivity", number(combined)}, {"se", number(combined_se)}}}};
    if (boot) {
        out.doc["bootstrap"] = bootstrap_json(*boot, c);
        out.prov.failed_replicates = boot->failed_replicates;
        out.prov.failure_reasons = boot->failure_reasons;
    }
    return out;
}

RunOutputs run_tilt(const LoadedConfig& loaded) {
    const RunConfig& c = loaded.config;
    const Prepared p = prepare(c);
    const AnalysisDataset& data = p.data;

    double threshold = c.threshold.value;
    if (c.threshold.kind == ThresholdRule::Kind::Youden) {
        const EstimatorKind e = c.threshold.youden_estimator;
        threshold = select_threshold(data, fit_nuisances(data, p, c, uses_m(e), uses_w(e)), c);
    }
    const auto per_study = per_study_predictions(data, p.study_basis, c.fit);

    std::ostringstream csv;
    csv << "# config_hash=" << loaded.hash << "\n";
    csv << "study,gamma,sensitivity,kind\n";
    json doc = {{"command", command_name(c.command)},
                {"config_hash", loaded.hash},
                {"threshold", number(threshold)},
                {"sample", sample_json(data)}};
    Provenance prov;

    if (c.command == Command::TiltScan) {
        json scan = json::array();
        for (const auto& [s, m] : per_study) {
            for (double g : c.tilt.gamma_grid) {
                json row = {{"study", s}, {"gamma", g}};
                try {
                    const double v =
                        tilted_sensitivity(data, m, g, threshold, s, c.use_survey_weights).value;
                    row["sensitivity"] = number(v);
                    csv << s << ',' << csv_number(g) << ',' << csv_number(v) << ",grid\n";
                } catch (const Error& e) {
                    if (!is_cell_failure(e)) throw;
                    row["error"] = {{"code", error_name(e.code())}, {"message", e.what()}};
                    csv << s << ',' << csv_number(g) << ",NA,grid\n";
                }
                scan.push_back(row);
            }
        }
        doc["scan"] = scan;
        if (c.tilt.diagnostic_replicates > 0 && data.n_studies() >= 2) {
            std::map<int, double> gamma;
            for (const auto& [s, m] : per_study) {
                gamma[s] = c.tilt.gamma.count(s) ? c.tilt.gamma.at(s) : 0.0;
            }
            CompatibilityOptions o;
            o.bins = c.tilt.diagnostic_bins;
            o.replicates = c.tilt.diagnostic_replicates;
            o.seed = c.seed;
            o.outcome_basis = p.study_basis;
            o.fit = c.fit;
            o.use_survey_weights = c.use_survey_weights;
            o.threads = c.threads;
            const CompatibilityReport r = tilt_compatibility_diagnostic(data, gamma, o);
            json bins = json::array();
            for (std::size_t b = 0; b < r.discrepancy.size(); ++b) {
                json prev = json::object();
                for (const auto& [s, v] : r.prevalence[b]) prev[std::to_string(s)] = number(v);
                bins.push_back({{"upper", number(r.bin_upper[b])},
                                {"rows", r.bin_counts[b]},
                                {"prevalence", prev},
                                {"discrepancy", number(r.discrepancy[b])}});
            }
            json g = json::object();
            for (const auto& [s, v] : gamma) g[std::to_string(s)] = v;
            doc["compatibility"] = {{"gamma", g},
                                    {"bins", bins},
                                    {"statistic", number(r.statistic)},
                                    {"p_value", number(r.p_value)},
                                    {"critical_value_95", number(r.critical_value_95)},
                                    {"replicates_used", r.replicates_used},
                                    {"failures", r.failures}};
        }
    }
    if (c.tilt.target_prevalence) {
        Calibrated cal = calibrate_all(p, c, threshold, per_study);
        for (const auto& line : cal.csv_rows) csv << line << '\n';
        doc["calibration"] = cal.doc;
        prov = cal.prov;
    }
    return {doc.dump(2) + "\n", csv.str(), provenance_document(loaded, prov)};
}

}  // namespace

RunOutputs run_command(const LoadedConfig& loaded) {
    switch (loaded.config.command) {
        case Command::Evaluate: return run_evaluate(loaded);
        case Command::Simulate: return run_simulate(loaded);
        case Command::TiltScan:
        case Command::Calibrate: return run_tilt(loaded);
    }
    throw Error(ErrorCode::InvalidArgument, "unknown command");
}

void write_outputs(const RunOutputs& outputs, const std::string& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::Config, "cannot create output directory '" + dir + "'");
    auto put = [&](const char* name, const std::string& text) {
        const fs::path path = fs::path(dir) / name;
        std::ofstream out(path, std::ios::binary);
        out << text;
        if (!out) throw Error(ErrorCode::Config, "cannot write '" + path.string() + "'");
    };
    put("results.json", outputs.results_json);
    put("results.csv", outputs.results_csv);
    put("provenance.json", outputs.provenance_json);
}

}  // namespace tperf
