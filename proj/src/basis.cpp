#include "tperf/basis.hpp"

#include <algorithm>
#include <cmath>

#include "tperf/error.hpp"

namespace tperf {

double BasisTerm::evaluate(std::span<const double> x) const {
    switch (transform) {
        case Transform::Identity:
            return x[vars.at(0)];
        case Transform::Square: {
            const double v = x[vars.at(0)];
            return v * v;
        }
        case Transform::Interaction: {
            double prod = 1.0;
            for (std::size_t j : vars) prod *= x[j];
            return prod;
        }
        case Transform::Power:
            return std::pow(x[vars.at(0)], degree);
    }
    return 0.0;
}

std::string BasisTerm::label(const std::vector<std::string>& names) const {
    auto name = [&](std::size_t j) {
        return j < names.size() ? names[j] : "x" + std::to_string(j + 1);
    };
    switch (transform) {
        case Transform::Identity:
            return name(vars.at(0));
        case Transform::Square:
            return name(vars.at(0)) + "^2";
        case Transform::Interaction: {
            std::string out;
            for (std::size_t k = 0; k < vars.size(); ++k) {
                if (k) out += ":";
                out += name(vars[k]);
            }
            return out;
        }
        case Transform::Power:
            return name(vars.at(0)) + "^" + std::to_string(degree);
    }
    return "?";
}

void BasisSpec::expand(std::span<const double> x, std::span<double> out) const {
    std::size_t k = 0;
    if (include_intercept) out[k++] = 1.0;
    for (const auto& term : terms) out[k++] = term.evaluate(x);
}

std::vector<std::string> BasisSpec::labels(const std::vector<std::string>& names) const {
    std::vector<std::string> out;
    if (include_intercept) out.emplace_back("(intercept)");
    for (const auto& term : terms) out.push_back(term.label(names));
    return out;
}

std::size_t BasisSpec::required_covariates() const {
    std::size_t need = 0;
    for (const auto& term : terms) {
        for (std::size_t j : term.vars) need = std::max(need, j + 1);
    }
    return need;
}

BasisSpec BasisSpec::intercept_only() { return BasisSpec{}; }

BasisSpec BasisSpec::linear(std::size_t p) {
    BasisSpec spec;
    for (std::size_t j = 0; j < p; ++j) spec.add(Transform::Identity, {j});
    return spec;
}

BasisSpec BasisSpec::linear_plus_squares(std::size_t p, const std::vector<std::size_t>& squared) {
    BasisSpec spec = linear(p);
    for (std::size_t j : squared) spec.add(Transform::Square, {j});
    return spec;
}

BasisSpec& BasisSpec::add(Transform t, std::vector<std::size_t> vars, int degree) {
    if (vars.empty()) throw Error(ErrorCode::InvalidArgument, "basis term needs a covariate");
    if ((t == Transform::Identity || t == Transform::Square || t == Transform::Power) &&
        vars.size() != 1) {
        throw Error(ErrorCode::InvalidArgument, "transform takes exactly one covariate");
    }
    if (t == Transform::Power && degree < 1) {
        throw Error(ErrorCode::InvalidArgument, "polynomial degree must be >= 1");
    }
    terms.push_back(BasisTerm{t, std::move(vars), degree});
    return *this;
}

}  // namespace tperf
