#pragma once

#include <Eigen/Dense>

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "splitinf/core.hpp"
#include "splitinf/rng.hpp"

namespace splitinf {

struct SelectorSpec {
    std::string method = "lasso";  // "topk", "stepwise", "lasso", or a registered name
    Index k = 5;
    Index lasso_grid = 100;
    double lasso_span = 1e-3;  // smallest lambda as a fraction of lambda_max
    Index folds = 10;

    void validate() const;
};

/// Parses "key=value" lines or a JSON object with the same keys.
SelectorSpec parse_selector_spec(const std::string& text);
std::string to_json(const SelectorSpec& spec);

/// What a base selector returns: the chosen covariates, in order of entry or
/// importance, and the coefficients used for prediction.
struct Support {
    IndexList selected;
    Eigen::VectorXd coefficients;
    std::vector<std::string> warnings;
};

struct LeaveOut {
    IndexList selected;
    Eigen::VectorXd coefficients;
};

struct SelectedModel {
    IndexList selected;
    Eigen::VectorXd coefficients;
    std::map<Index, LeaveOut> leaveout;
    Index k_max = 0;
    std::vector<std::string> warnings;

    [[nodiscard]] Index size() const noexcept { return static_cast<Index>(selected.size()); }
    [[nodiscard]] Eigen::VectorXd predict(const Eigen::MatrixXd& x) const;
    [[nodiscard]] Eigen::VectorXd predict_without(Index covariate, const Eigen::MatrixXd& x) const;
    // Throws unless every leave-out is present and excludes its covariate.
    void check_invariants() const;
};

using SelectorFn = std::function<Support(const Dataset&, Index k, const SelectorSpec&, SeededRng)>;

/// Adds or replaces a selector available through SelectorSpec::method.
void register_selector(const std::string& name, SelectorFn fn);
bool has_selector(const std::string& name);

/// Runs the base selector, then re-runs it once per selected covariate with
/// that column removed to fill the leave-out refits.
SelectedModel select_model(const Dataset& data, const SelectorSpec& spec, SeededRng rng);

SelectedModel select_topk(const Dataset& data, Index k);
SelectedModel select_stepwise(const Dataset& data, Index k);
SelectedModel select_lasso_cv(const Dataset& data, const SelectorSpec& spec, SeededRng rng);

// Base selectors without leave-out refits.
Support topk_support(const Dataset& data, Index k);
Support stepwise_support(const Dataset& data, Index k);
Support lasso_cv_support(const Dataset& data, const SelectorSpec& spec, SeededRng rng);

/// Lasso on columns scaled to unit root-mean-square (no centering, no
/// intercept): minimizes (1/2n)||y - X b||^2 + lambda ||b||_1 in the scaled
/// coordinates. Coefficients are returned on the original scale.
struct LassoFit {
    Eigen::VectorXd coefficients;  // original scale
    Eigen::VectorXd scaled;        // scaled coordinates
    Index sweeps = 0;
};

double lasso_lambda_max(const Dataset& data);
std::vector<LassoFit> lasso_path(const Dataset& data, const std::vector<double>& lambdas);
LassoFit lasso_fit(const Dataset& data, double lambda);
/// Largest violation of the subgradient conditions in scaled coordinates.
double lasso_kkt_violation(const Dataset& data, const LassoFit& fit, double lambda);

} // namespace splitinf
