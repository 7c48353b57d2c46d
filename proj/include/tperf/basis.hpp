#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace tperf {

enum class Transform { Identity, Square, Interaction, Power };

/// One column of a design matrix, built from one or more covariates.
struct BasisTerm {
    Transform transform = Transform::Identity;
    std::vector<std::size_t> vars;  // covariate indices; Interaction uses all of them
    int degree = 1;                 // Power only

    double evaluate(std::span<const double> x) const;
    std::string label(const std::vector<std::string>& names) const;
};

/// Ordered list of transforms of x plus an optional intercept column.
struct BasisSpec {
    std::vector<BasisTerm> terms;
    bool include_intercept = true;

    std::size_t dimension() const { return terms.size() + (include_intercept ? 1 : 0); }
    /// Writes the basis-expanded row into `out` (length dimension()).
    void expand(std::span<const double> x, std::span<double> out) const;
    std::vector<std::string> labels(const std::vector<std::string>& names) const;
    /// Largest covariate index referenced plus one.
    std::size_t required_covariates() const;

    static BasisSpec intercept_only();
    /// Intercept plus identity terms for covariates [0, p).
    static BasisSpec linear(std::size_t p);
    /// Linear terms for [0, p) plus squares of the listed covariates.
    static BasisSpec linear_plus_squares(std::size_t p, const std::vector<std::size_t>& squared);

    BasisSpec& add(Transform t, std::vector<std::size_t> vars, int degree = 1);
};

}  // namespace tperf
