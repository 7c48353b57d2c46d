#include <doctest.h>

#include <cmath>
#include <json.hpp>

#include "tperf/config.hpp"
#include "tperf/nuisance.hpp"
#include "tperf/runner.hpp"
#include "tperf/tilt.hpp"

using namespace tperf;
using json = nlohmann::json;

namespace {

const std::string kData = TPERF_TEST_DATA_DIR;

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::InvalidArgument;
}

std::string message_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.what();
    }
    return "";
}

LoadedConfig toy(const std::string& extra = "") {
    std::string text = R"({"threshold": {"fixed": 0.5}, "estimators": ["om", "w", "source"],
        "nuisance": {"outcome": "intercept", "participation": "intercept"}})";
    if (!extra.empty()) text = text.substr(0, text.size() - 1) + ", " + extra + "}";
    ConfigOverrides ov;
    ov.data_path = kData + "/toy.csv";
    return parse_config(text, Command::Evaluate, ov);
}

double estimate(const json& doc, const std::string& metric, const std::string& est) {
    for (const auto& row : doc["estimates"]) {
        if (row["metric"] == metric && row["estimator"] == est) return row["value"].get<double>();
    }
    FAIL("missing cell " << metric << "/" << est);
    return 0.0;
}

}  // namespace

TEST_CASE("config parsing") {
    SUBCASE("defaults") {
        const auto c = parse_config("{}", Command::Simulate).config;
        CHECK(c.metrics.size() == 6);
        CHECK(c.estimators.size() == 4);
        CHECK(c.threshold.kind == ThresholdRule::Kind::Youden);
        CHECK(c.threshold.youden_estimator == EstimatorKind::Source);
        CHECK(c.bootstrap.replicates == 0);
        CHECK(c.simulation.n == 2000);
    }
    SUBCASE("schema errors are config errors with the path") {
        CHECK(code_of([] { parse_config(R"({"bogus": 1})", Command::Simulate); }) == ErrorCode::Config);
        CHECK(message_of([] { parse_config(R"({"bootstrap": {"replicate": 5}})", Command::Simulate); })
                  .find("bootstrap.replicate") != std::string::npos);
        CHECK(message_of([] { parse_config("{\n\"a\": \n", Command::Simulate); }).find("line") !=
              std::string::npos);
        CHECK(code_of([] {
                  parse_config(R"({"threshold": {"fixed": 0.5, "youden": "om"}})", Command::Simulate);
              }) == ErrorCode::Config);
        CHECK(code_of([] { parse_config(R"({"threshold": {}})", Command::Simulate); }) ==
              ErrorCode::Config);
        CHECK(code_of([] { parse_config(R"({"metrics": ["f1"]})", Command::Simulate); }) ==
              ErrorCode::Config);
        CHECK(code_of([] { parse_config(R"({"estimators": ["ipw"]})", Command::Simulate); }) ==
              ErrorCode::Config);
        CHECK(code_of([] { parse_config("{}", Command::Evaluate); }) == ErrorCode::Config);
        CHECK(code_of([] {
                  parse_config(R"({"command": "simulate"})", Command::Evaluate, {kData, {}, {}, {}});
              }) == ErrorCode::Config);
        CHECK(code_of([] { parse_config(R"({"simulation": {"rho": 1.5}})", Command::Simulate); }) ==
              ErrorCode::Config);
        CHECK(code_of([] { parse_config(R"({"tilt": {}})", Command::Calibrate, {kData, {}, {}, {}}); }) ==
              ErrorCode::Config);
    }
    SUBCASE("basis terms resolve by name") {
        const auto c = parse_config(
            R"({"nuisance": {"outcome": {"preset": "none", "terms": ["b", "a^2", "a*b", "b^3"]}}})",
            Command::Simulate);
        const BasisSpec b = c.config.outcome_basis.resolve({"a", "b"}, "nuisance.outcome");
        CHECK(b.dimension() == 5);
        const std::vector<double> x{2.0, 3.0};
        std::vector<double> row(5);
        b.expand(x, row);
        CHECK(row == std::vector<double>{1.0, 3.0, 4.0, 6.0, 27.0});
        const std::string msg = message_of([&] { c.config.outcome_basis.resolve({"a"}, "nuisance.outcome"); });
        CHECK(msg.find("'b'") != std::string::npos);
        CHECK(msg.find("nuisance.outcome") != std::string::npos);
    }
    SUBCASE("overrides win and threads do not enter the hash") {
        ConfigOverrides ov;
        ov.seed = 99;
        ov.threads = 3;
        const auto a = parse_config(R"({"seed": 5})", Command::Simulate, ov);
        CHECK(a.config.seed == 99);
        CHECK(a.config.threads == 3);
        CHECK(a.config.simulation.seed == 99);
        ov.threads = 1;
        ov.out_dir = "elsewhere";
        const auto b = parse_config(R"({"seed": 5})", Command::Simulate, ov);
        CHECK(a.hash == b.hash);
        ov.seed = 100;
        CHECK(parse_config(R"({"seed": 5})", Command::Simulate, ov).hash != a.hash);
    }
    CHECK(fnv1a_hex("") == "cbf29ce484222325");
    CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
}

TEST_CASE("evaluate on the toy dataset matches hand values") {
    // Intercept-only nuisances: m = 2/3 everywhere, w = 1 everywhere.
    const RunOutputs out = run_command(toy());
    const json doc = json::parse(out.results_json);
    CHECK(std::abs(estimate(doc, "sensitivity", "om") - 2.0 / 3.0) < 1e-12);
    CHECK(std::abs(estimate(doc, "sensitivity", "w") - 0.5) < 1e-12);
    CHECK(std::abs(estimate(doc, "sensitivity", "source") - 0.5) < 1e-12);
    CHECK(std::abs(estimate(doc, "specificity", "om") - 1.0 / 3.0) < 1e-12);
    CHECK(std::abs(estimate(doc, "specificity", "w") - 0.0) < 1e-12);
    CHECK(std::abs(estimate(doc, "ppv", "om") - 2.0 / 3.0) < 1e-12);
    CHECK(std::abs(estimate(doc, "ppv", "w") - 0.5) < 1e-12);
    CHECK(std::abs(estimate(doc, "npv", "om") - 1.0 / 3.0) < 1e-12);

    // Same numbers as calling the estimators directly.
    const AnalysisDataset data = load_csv(kData + "/toy.csv");
    const auto om = fit_outcome_model(data, BasisSpec::intercept_only());
    const auto pm = fit_participation_model(data, BasisSpec::intercept_only());
    const auto m = predict_m(om, data), w = predict_w(pm, data);
    for (auto [e, name] : {std::pair{EstimatorKind::OutcomeModel, "om"},
                           std::pair{EstimatorKind::Weighting, "w"},
                           std::pair{EstimatorKind::Source, "source"}}) {
        CHECK(estimate(doc, "brier", name) == risk(data, {m, w}, Loss::Brier, e).value);
    }

    const std::string csv = out.results_csv;
    CHECK(csv.rfind("# config_hash=", 0) == 0);
    CHECK(csv.find("metric,om,w,source\n") != std::string::npos);
    CHECK(csv.find("sensitivity,0.6667 (NA),0.5000 (NA),0.5000 (NA)") != std::string::npos);

    const json prov = json::parse(out.provenance_json);
    CHECK(prov["config_hash"] == doc["config_hash"]);
    CHECK(prov["version"] == kVersion);
    CHECK(prov["clip_counts"]["outcome"]["evaluated"] == 6);
}

TEST_CASE("missing covariates and scores are reported") {
    const std::string msg = message_of([] {
        ConfigOverrides ov;
        ov.data_path = kData + "/toy.csv";
        run_command(parse_config(R"({"nuisance": {"outcome": {"preset": "linear", "terms": ["x7^2"]}}})",
                                 Command::Evaluate, ov));
    });
    CHECK(msg.find("x7") != std::string::npos);
    CHECK(code_of([] {
              ConfigOverrides ov;
              ov.data_path = kData + "/toy.csv";
              run_command(parse_config(R"({"model": {"basis": "linear", "coefficients": [1]}})",
                                       Command::Evaluate, ov));
          }) == ErrorCode::Config);
    CHECK(code_of([] {
              ConfigOverrides ov;
              ov.data_path = kData + "/missing.csv";
              run_command(parse_config("{}", Command::Evaluate, ov));
          }) == ErrorCode::Csv);
}

TEST_CASE("a model given by coefficients replaces the score column") {
    ConfigOverrides ov;
    ov.data_path = kData + "/toy.csv";
    const auto loaded = parse_config(
        R"({"model": {"basis": "linear", "coefficients": [0.0, 1.0]}, "threshold": {"fixed": 0.5},
            "estimators": ["source"], "metrics": ["sensitivity"]})",
        Command::Evaluate, ov);
    const json doc = json::parse(run_command(loaded).results_json);
    // Study y = 1 rows have x1 = 0.2 and 0.4: expit of both exceeds 0.5.
    CHECK(estimate(doc, "sensitivity", "source") == 1.0);
}

TEST_CASE("runs are reproducible and independent of the thread count") {
    ConfigOverrides ov;
    ov.data_path = kData + "/two_study.csv";
    const std::string text = R"({"threshold": {"youden": "dr"}, "survey_weights": true,
        "bootstrap": {"kind": "stratified_two_stage", "replicates": 40}})";
    ov.threads = 1;
    const RunOutputs a = run_command(parse_config(text, Command::Evaluate, ov));
    const RunOutputs b = run_command(parse_config(text, Command::Evaluate, ov));
    ov.threads = 3;
    const RunOutputs c = run_command(parse_config(text, Command::Evaluate, ov));
    CHECK(a.results_json == b.results_json);
    CHECK(a.results_csv == b.results_csv);
    CHECK(a.provenance_json == b.provenance_json);
    CHECK(a.results_json == c.results_json);
    CHECK(a.results_csv == c.results_csv);
    const json doc = json::parse(a.results_json);
    for (const auto& row : doc["estimates"]) {
        if (row.contains("ci")) CHECK(row["ci"][0].get<double>() <= row["ci"][1].get<double>());
    }
    // Survey-weighted runs carry no influence-function SE.
    for (const auto& row : doc["estimates"]) CHECK(!row.contains("if_se"));

    ov.threads = 1;
    const json plain = json::parse(
        run_command(parse_config(R"({"threshold": {"fixed": 0.6}})", Command::Evaluate, ov)).results_json);
    bool has_if = false;
    for (const auto& row : plain["estimates"]) {
        if (row.contains("if_se")) {
            has_if = true;
            CHECK(row["estimator"] == "dr");
            CHECK(row["metric"] == "sensitivity");
            CHECK(row["if_se"].get<double>() > 0.0);
        }
    }
    CHECK(has_if);
}

TEST_CASE("tilt scan") {
    ConfigOverrides ov;
    ov.data_path = kData + "/two_study.csv";
    std::vector<double> grid;
    for (int k = -20; k <= 20; ++k) grid.push_back(0.1 * k);
    json cfg = {{"threshold", {{"fixed", 0.55}}}, {"tilt", {{"gamma_grid", grid}}}};
    const json doc = json::parse(run_command(parse_config(cfg.dump(), Command::TiltScan, ov)).results_json);

    const AnalysisDataset data = load_csv(kData + "/two_study.csv");
    const auto per_study = per_study_predictions(data, BasisSpec::linear(2));
    std::map<int, std::vector<double>> by_study;
    for (const auto& row : doc["scan"]) {
        by_study[row["study"].get<int>()].push_back(row["sensitivity"].get<double>());
    }
    REQUIRE(by_study.size() == 2);
    for (const auto& [s, values] : by_study) {
        REQUIRE(values.size() == grid.size());
        // Gamma 0 is the untilted per-study outcome-model estimate.
        CHECK(std::abs(values[20] - tilted_sensitivity(data, per_study.at(s), 0.0, 0.55).value) < 1e-12);
        // The derivative in gamma is a difference of two terms in [0, 1].
        for (std::size_t k = 1; k < values.size(); ++k) {
            CHECK(std::abs(values[k] - values[k - 1]) <= 0.1 + 1e-12);
        }
    }
}

TEST_CASE("calibrated tilts") {
    ConfigOverrides ov;
    ov.data_path = kData + "/two_study.csv";
    const AnalysisDataset data = load_csv(kData + "/two_study.csv");
    const auto per_study = per_study_predictions(data, BasisSpec::linear(2));
    const double prevalence = tilted_prevalence(data, per_study.at(1), 0.0);
    json cfg = {{"threshold", {{"fixed", 0.5}}},
                {"tilt", {{"target_prevalence", prevalence}, {"combine", "equal"}}}};
    const json doc =
        json::parse(run_command(parse_config(cfg.dump(), Command::Calibrate, ov)).results_json);
    const auto& studies = doc["calibration"]["studies"];
    REQUIRE(studies.size() == 2);
    CHECK(std::abs(studies[0]["gamma_hat"].get<double>()) < 1e-6);
    const double combined = doc["calibration"]["combined"]["sensitivity"].get<double>();
    const double mean = 0.5 * (studies[0]["sensitivity"].get<double>() +
                               studies[1]["sensitivity"].get<double>());
    CHECK(std::abs(combined - mean) < 1e-15);

    cfg["tilt"]["combine"] = json::array({0.7, 0.7});
    CHECK(code_of([&] { run_command(parse_config(cfg.dump(), Command::Calibrate, ov)); }) ==
          ErrorCode::WeightSumViolation);
}

TEST_CASE("simulate smoke run emits every regime") {
    const auto loaded = parse_config(
        R"({"simulation": {"n": 2000, "replicates": 10, "n_oracle": 100000, "regimes": "all"}})",
        Command::Simulate);
    const RunOutputs out = run_command(loaded);
    const json doc = json::parse(out.results_json);
    CHECK(doc["rows"].size() == 6 * 4 * 4);
    for (const char* g : {"both_correct", "outcome_wrong", "participation_wrong", "both_wrong"}) {
        CHECK(out.results_csv.find(std::string(",") + g + ",") != std::string::npos);
    }
    CHECK(run_command(loaded).results_json == out.results_json);
}
