#include "tperf/config.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include <json.hpp>

namespace tperf {

using json = nlohmann::json;

const char* command_name(Command c) {
    switch (c) {
        case Command::Evaluate: return "evaluate";
        case Command::Simulate: return "simulate";
        case Command::TiltScan: return "tilt-scan";
        case Command::Calibrate: return "calibrate";
    }
    return "?";
}

std::optional<Command> parse_command(const std::string& s) {
    for (Command c : {Command::Evaluate, Command::Simulate, Command::TiltScan, Command::Calibrate}) {
        if (s == command_name(c)) return c;
    }
    return std::nullopt;
}

std::string MetricSpec::name() const {
    switch (kind) {
        case Kind::Threshold: return metric_name(metric);
        case Kind::Risk: return loss_name(loss);
        case Kind::Auc: return "auc";
    }
    return "?";
}

std::optional<MetricSpec> MetricSpec::parse(const std::string& s) {
    MetricSpec m;
    if (s == "auc") {
        m.kind = Kind::Auc;
        return m;
    }
    if (auto loss = parse_loss(s)) {
        m.kind = Kind::Risk;
        m.loss = *loss;
        return m;
    }
    if (auto metric = parse_metric(s); metric && *metric != Metric::Risk) {
        m.metric = *metric;
        return m;
    }
    return std::nullopt;
}

BasisSpec BasisRequest::resolve(const std::vector<std::string>& covariates,
                                const std::string& where) const {
    auto index = [&](const std::string& name) {
        const auto it = std::find(covariates.begin(), covariates.end(), name);
        if (it == covariates.end()) {
            throw Error(ErrorCode::Config,
                        where + ": column '" + name + "' is not a covariate in the data");
        }
        return static_cast<std::size_t>(it - covariates.begin());
    };
    BasisSpec out;
    if (preset == Preset::Linear) out = BasisSpec::linear(covariates.size());
    out.include_intercept = include_intercept;
    for (const Term& t : terms) {
        std::vector<std::size_t> vars;
        for (const auto& v : t.vars) vars.push_back(index(v));
        out.add(t.transform, vars, t.degree);
    }
    if (out.dimension() == 0) throw Error(ErrorCode::Config, where + ": basis has no columns");
    return out;
}

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw Error(ErrorCode::Config, "'" + path + "': " + what);
}

// Object reader that rejects keys nobody asked for.
class Obj {
public:
    Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) fail(path_, "expected an object");
    }
    ~Obj() = default;

    const json* get(const std::string& key) {
        seen_.insert(key);
        const auto it = j_.find(key);
        return it == j_.end() || it->is_null() ? nullptr : &*it;
    }
    std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    bool boolean(const std::string& key, bool def) {
        const json* v = get(key);
        if (!v) return def;
        if (!v->is_boolean()) fail(at(key), "expected true or false");
        return v->get<bool>();
    }
    double number(const std::string& key, double def) {
        const json* v = get(key);
        if (!v) return def;
        if (!v->is_number()) fail(at(key), "expected a number");
        return v->get<double>();
    }
    std::int64_t integer(const std::string& key, std::int64_t def, std::int64_t lo) {
        const json* v = get(key);
        if (!v) return def;
        if (!v->is_number_integer()) fail(at(key), "expected an integer");
        const auto x = v->get<std::int64_t>();
        if (x < lo) fail(at(key), "must be >= " + std::to_string(lo));
        return x;
    }
    std::string string(const std::string& key, const std::string& def) {
        const json* v = get(key);
        if (!v) return def;
        if (!v->is_string()) fail(at(key), "expected a string");
        return v->get<std::string>();
    }
    std::vector<double> numbers(const std::string& key, const std::vector<double>& def) {
        const json* v = get(key);
        if (!v) return def;
        if (!v->is_array()) fail(at(key), "expected an array of numbers");
        std::vector<double> out;
        for (const auto& e : *v) {
            if (!e.is_number()) fail(at(key), "expected an array of numbers");
            out.push_back(e.get<double>());
        }
        return out;
    }
    std::vector<std::string> strings(const std::string& key) {
        const json* v = get(key);
        if (!v) return {};
        if (!v->is_array()) fail(at(key), "expected an array of strings");
        std::vector<std::string> out;
        for (const auto& e : *v) {
            if (!e.is_string()) fail(at(key), "expected an array of strings");
            out.push_back(e.get<std::string>());
        }
        return out;
    }
    std::map<int, double> study_map(const std::string& key) {
        const json* v = get(key);
        std::map<int, double> out;
        if (!v) return out;
        if (!v->is_object()) fail(at(key), "expected an object keyed by study label");
        for (const auto& [k, val] : v->items()) {
            int s = 0;
            try {
                std::size_t used = 0;
                s = std::stoi(k, &used);
                if (used != k.size()) throw std::invalid_argument(k);
            } catch (const std::exception&) {
                fail(at(key), "key '" + k + "' is not a study label");
            }
            if (s < 1) fail(at(key), "study labels are >= 1");
            if (!val.is_number()) fail(at(key) + "." + k, "expected a number");
            out[s] = val.get<double>();
        }
        return out;
    }
    void finish() const {
        for (const auto& [k, v] : j_.items()) {
            if (!seen_.count(k)) fail(at(k), "unknown key");
        }
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

BasisRequest::Term parse_term(const std::string& s, const std::string& path) {
    BasisRequest::Term t;
    if (s.empty()) fail(path, "empty term");
    if (const auto star = s.find('*'); star != std::string::npos) {
        t.transform = Transform::Interaction;
        std::size_t from = 0;
        while (true) {
            const auto next = s.find('*', from);
            t.vars.push_back(s.substr(from, next - from));
            if (next == std::string::npos) break;
            from = next + 1;
        }
        for (const auto& v : t.vars) {
            if (v.empty()) fail(path, "malformed interaction '" + s + "'");
        }
        return t;
    }
    if (const auto caret = s.find('^'); caret != std::string::npos) {
        const std::string base = s.substr(0, caret), exp = s.substr(caret + 1);
        int degree = 0;
        try {
            std::size_t used = 0;
            degree = std::stoi(exp, &used);
            if (used != exp.size()) throw std::invalid_argument(exp);
        } catch (const std::exception&) {
            fail(path, "malformed power '" + s + "'");
        }
        if (base.empty() || degree < 1) fail(path, "malformed power '" + s + "'");
        t.vars = {base};
        if (degree == 2) {
            t.transform = Transform::Square;
        } else if (degree == 1) {
            t.transform = Transform::Identity;
        } else {
            t.transform = Transform::Power;
            t.degree = degree;
        }
        return t;
    }
    t.vars = {s};
    return t;
}

BasisRequest parse_basis(const json* j, const std::string& path, BasisRequest def) {
    if (!j) return def;
    auto preset = [&](const std::string& s, const std::string& p) {
        if (s == "linear") return BasisRequest::Preset::Linear;
        if (s == "intercept") return BasisRequest::Preset::Intercept;
        if (s == "none") return BasisRequest::Preset::None;
        fail(p, "unknown basis preset '" + s + "' (linear, intercept, none)");
    };
    BasisRequest out;
    if (j->is_string()) {
        out.preset = preset(j->get<std::string>(), path);
        return out;
    }
    Obj o(*j, path);
    out.preset = preset(o.string("preset", "none"), o.at("preset"));
    out.include_intercept = o.boolean("intercept", true);
    const auto terms = o.strings("terms");
    for (std::size_t k = 0; k < terms.size(); ++k) {
        out.terms.push_back(parse_term(terms[k], o.at("terms") + "[" + std::to_string(k) + "]"));
    }
    o.finish();
    return out;
}

EstimatorKind estimator_or_fail(const std::string& s, const std::string& path) {
    if (auto e = parse_estimator(s)) return *e;
    fail(path, "unknown estimator '" + s + "' (om, w, dr, source)");
}

void parse_simulation(const json* j, SimulationConfig& c) {
    if (!j) return;
    Obj o(*j, "simulation");
    c.n = static_cast<std::size_t>(o.integer("n", static_cast<std::int64_t>(c.n), 2));
    c.replicates = static_cast<int>(o.integer("replicates", c.replicates, 1));
    c.rho = o.number("rho", c.rho);
    c.selection_intercept = o.number("selection_intercept", c.selection_intercept);
    c.selection_linear = o.numbers("selection_linear", c.selection_linear);
    c.selection_square = o.numbers("selection_square", c.selection_square);
    c.assignment_beta = o.numbers("assignment_beta", c.assignment_beta);
    c.assignment_eta = o.numbers("assignment_eta", c.assignment_eta);
    c.outcome_intercept = o.number("outcome_intercept", c.outcome_intercept);
    c.outcome_linear = o.numbers("outcome_linear", c.outcome_linear);
    c.outcome_square = o.numbers("outcome_square", c.outcome_square);
    c.study_outcome_shift = o.study_map("study_outcome_shift");
    c.p = c.outcome_linear.size();
    const auto model = o.string("evaluated_model", "misspecified");
    if (model == "correct") {
        c.evaluated_model_correct = true;
    } else if (model != "misspecified") {
        fail(o.at("evaluated_model"), "expected 'correct' or 'misspecified'");
    }
    c.n_oracle = static_cast<std::size_t>(
        o.integer("n_oracle", static_cast<std::int64_t>(c.n_oracle), 1000));
    c.max_failure_rate = o.number("max_failure_rate", c.max_failure_rate);
    if (const json* r = o.get("regimes")) {
        c.regimes.clear();
        if (r->is_string() && r->get<std::string>() == "all") {
            c.regimes = {Regime::BothCorrect, Regime::OutcomeWrong, Regime::ParticipationWrong,
                         Regime::BothWrong};
        } else {
            const auto names = o.strings("regimes");
            for (const auto& s : names) {
                const auto g = parse_regime(s);
                if (!g) fail(o.at("regimes"), "unknown regime '" + s + "'");
                c.regimes.push_back(*g);
            }
        }
    }
    o.finish();
    try {
        c.check();
    } catch (const Error& e) {
        fail("simulation", e.what());
    }
}

}  // namespace

LoadedConfig parse_config(const std::string& text, Command command,
                          const ConfigOverrides& overrides) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::Config, std::string("malformed JSON: ") + e.what());
    }
    if (!root.is_object()) throw Error(ErrorCode::Config, "config must be a JSON object");

    if (const auto it = root.find("command"); it != root.end()) {
        if (!it->is_string() || parse_command(it->get<std::string>()) != command) {
            fail("command", "config is for '" + it->dump() + "' but '" + command_name(command) +
                                "' was requested");
        }
    }
    root["command"] = command_name(command);
    if (overrides.data_path) root["data"] = *overrides.data_path;
    if (overrides.out_dir) root["out"] = *overrides.out_dir;
    if (overrides.seed) root["seed"] = *overrides.seed;
    if (overrides.threads) root["threads"] = *overrides.threads;

    LoadedConfig loaded;
    RunConfig& c = loaded.config;
    c.command = command;
    Obj o(root, "");
    o.get("command");
    c.data_path = o.string("data", "");
    if (const json* s = o.get("seed")) {
        if (!s->is_number_unsigned() && !(s->is_number_integer() && s->get<std::int64_t>() >= 0)) {
            fail("seed", "expected a non-negative integer");
        }
        c.seed = s->get<std::uint64_t>();
    }
    c.threads = static_cast<unsigned>(o.integer("threads", 1, 1));
    c.out_dir = o.string("out", ".");

    if (const json* m = o.get("model")) {
        Obj mo(*m, "model");
        const json* basis = mo.get("basis");
        c.model.use_score_column = mo.boolean("score_column", basis == nullptr);
        if (c.model.use_score_column && basis) {
            fail("model", "give either score_column or basis and coefficients, not both");
        }
        if (!c.model.use_score_column) {
            if (!basis) fail("model.basis", "required unless score_column is true");
            c.model.basis = parse_basis(basis, "model.basis", {});
            c.model.coefficients = mo.numbers("coefficients", {});
            if (c.model.coefficients.empty()) fail("model.coefficients", "required with a basis");
        }
        mo.finish();
    }

    if (const json* t = o.get("threshold")) {
        Obj to(*t, "threshold");
        const json* fixed = to.get("fixed");
        const json* youden = to.get("youden");
        if ((fixed == nullptr) == (youden == nullptr)) {
            fail("threshold", "exactly one of 'fixed' or 'youden' is required");
        }
        if (fixed) {
            if (!fixed->is_number()) fail("threshold.fixed", "expected a number");
            c.threshold.kind = ThresholdRule::Kind::Fixed;
            c.threshold.value = fixed->get<double>();
        } else {
            if (!youden->is_string()) fail("threshold.youden", "expected an estimator name");
            c.threshold.kind = ThresholdRule::Kind::Youden;
            c.threshold.youden_estimator =
                estimator_or_fail(youden->get<std::string>(), "threshold.youden");
        }
        to.finish();
    }

    auto metric_names = o.strings("metrics");
    if (metric_names.empty()) metric_names = {"sensitivity", "specificity", "ppv", "npv", "brier", "auc"};
    for (const auto& s : metric_names) {
        const auto m = MetricSpec::parse(s);
        if (!m) fail("metrics", "unknown metric '" + s + "'");
        c.metrics.push_back(*m);
    }
    auto estimator_names = o.strings("estimators");
    if (estimator_names.empty()) estimator_names = {"om", "w", "dr", "source"};
    for (const auto& s : estimator_names) c.estimators.push_back(estimator_or_fail(s, "estimators"));

    c.use_survey_weights = o.boolean("survey_weights", false);
    c.auc_tie_half_credit = o.boolean("auc_tie_half_credit", false);
    c.influence_function_se = o.boolean("influence_function_se", true);

    if (const json* n = o.get("nuisance")) {
        Obj no(*n, "nuisance");
        c.outcome_basis = parse_basis(no.get("outcome"), "nuisance.outcome", c.outcome_basis);
        c.participation_basis =
            parse_basis(no.get("participation"), "nuisance.participation", c.participation_basis);
        c.fit.clip_epsilon = no.number("clip_epsilon", c.fit.clip_epsilon);
        c.fit.tol = no.number("tol", c.fit.tol);
        c.fit.max_iter = static_cast<int>(no.integer("max_iter", c.fit.max_iter, 1));
        if (!(c.fit.clip_epsilon > 0.0 && c.fit.clip_epsilon < 0.5)) {
            fail("nuisance.clip_epsilon", "must lie in (0, 0.5)");
        }
        if (!(c.fit.tol > 0.0)) fail("nuisance.tol", "must be positive");
        no.finish();
    }

    c.bootstrap.replicates = 0;
    if (const json* b = o.get("bootstrap")) {
        Obj bo(*b, "bootstrap");
        const auto kind = bo.string("kind", "iid");
        const auto k = parse_bootstrap_kind(kind);
        if (!k) fail("bootstrap.kind", "unknown kind '" + kind + "' (iid, stratified_two_stage)");
        c.bootstrap.kind = *k;
        c.bootstrap.replicates = static_cast<int>(bo.integer("replicates", 200, 0));
        c.bootstrap.ci_level = bo.number("ci_level", 0.95);
        c.bootstrap.refit_nuisances = bo.boolean("refit", true);
        c.bootstrap.stratify_studies = bo.boolean("stratify_studies", false);
        c.bootstrap.max_failure_rate = bo.number("max_failure_rate", 0.2);
        bo.finish();
        if (c.bootstrap.replicates == 1) fail("bootstrap.replicates", "use 0 (off) or >= 2");
        if (c.bootstrap.replicates > 0) {
            try {
                c.bootstrap.check();
            } catch (const Error& e) {
                fail("bootstrap", e.what());
            }
        }
    }
    c.bootstrap.seed = c.seed;
    c.bootstrap.threads = c.threads;

    if (const json* t = o.get("tilt")) {
        Obj to(*t, "tilt");
        TiltConfig& tc = c.tilt;
        tc.study_basis = parse_basis(to.get("study_basis"), "tilt.study_basis", tc.study_basis);
        tc.gamma_grid = to.numbers("gamma_grid", tc.gamma_grid);
        if (tc.gamma_grid.empty()) fail("tilt.gamma_grid", "must not be empty");
        tc.gamma = to.study_map("gamma");
        if (const json* p = to.get("target_prevalence")) {
            if (!p->is_number()) fail("tilt.target_prevalence", "expected a number");
            tc.target_prevalence = p->get<double>();
            if (!(*tc.target_prevalence > 0.0 && *tc.target_prevalence < 1.0)) {
                fail("tilt.target_prevalence", "must lie in (0, 1)");
            }
        }
        if (const json* w = to.get("combine")) {
            if (w->is_string()) {
                tc.combine = w->get<std::string>();
                if (tc.combine != "equal" && tc.combine != "inverse_variance") {
                    fail("tilt.combine", "expected 'equal', 'inverse_variance' or a weight list");
                }
            } else {
                tc.combine = "explicit";
                tc.combine_weights = to.numbers("combine", {});
            }
        }
        const auto bracket = to.numbers("bracket", {tc.bracket_lo, tc.bracket_hi});
        if (bracket.size() != 2 || !(bracket[0] < bracket[1])) {
            fail("tilt.bracket", "expected [lo, hi] with lo < hi");
        }
        tc.bracket_lo = bracket[0];
        tc.bracket_hi = bracket[1];
        tc.bracket_limit = to.number("bracket_limit", tc.bracket_limit);
        tc.tol = to.number("tol", tc.tol);
        if (const json* d = to.get("diagnostic")) {
            Obj d_o(*d, "tilt.diagnostic");
            tc.diagnostic_bins = static_cast<int>(d_o.integer("bins", tc.diagnostic_bins, 1));
            tc.diagnostic_replicates =
                static_cast<int>(d_o.integer("replicates", tc.diagnostic_replicates, 0));
            d_o.finish();
        }
        to.finish();
    }
    if (command == Command::Calibrate && !c.tilt.target_prevalence) {
        fail("tilt.target_prevalence", "required by calibrate");
    }

    parse_simulation(o.get("simulation"), c.simulation);
    c.simulation.seed = c.seed;
    c.simulation.threads = c.threads;
    c.simulation.fit = c.fit;
    o.get("out");
    o.finish();

    if (command != Command::Simulate && c.data_path.empty()) {
        fail("data", "a data file is required (config key or --data)");
    }

    loaded.canonical = root.dump();
    json hashed = root;
    hashed.erase("threads");
    hashed.erase("out");
    loaded.hash = fnv1a_hex(hashed.dump());
    return loaded;
}

}  // namespace tperf
