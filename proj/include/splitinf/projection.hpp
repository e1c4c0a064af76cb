#pragma once

#include <Eigen/Dense>

#include <span>

#include "splitinf/confidence.hpp"
#include "splitinf/core.hpp"
#include "splitinf/parallel.hpp"
#include "splitinf/rng.hpp"

namespace splitinf {

/// Stacked moment vector [vech(Sigma_S); alpha_S] of length k(k+1)/2 + k.
struct PsiVector {
    Index k = 0;
    Eigen::VectorXd values;

    static Index length_for(Index k) noexcept { return (k * k + 3 * k) / 2; }
    static PsiVector from_moments(const Eigen::MatrixXd& sigma, const Eigen::VectorXd& alpha);

    [[nodiscard]] Eigen::MatrixXd sigma() const;
    [[nodiscard]] Eigen::VectorXd alpha() const { return values.tail(k); }
};

/// Columns `s` of x as a dense n x |s| matrix.
Eigen::MatrixXd gather_columns(const Eigen::MatrixXd& x, std::span<const Index> s);

PsiVector psi_hat(const Dataset& data, std::span<const Index> s);

/// Moments of a reweighted sample: sum_i w_i W_i / sum_i w_i. Bootstrap
/// replicates pass resampling multiplicities here instead of copying rows.
PsiVector psi_weighted(const Eigen::MatrixXd& xs, const Eigen::VectorXd& y,
                       const Eigen::VectorXd& weights);

/// n x b matrix whose row i is W_i = (vech(X_i X_i^T), Y_i X_i).
Eigen::MatrixXd moment_rows(const Dataset& data, std::span<const Index> s);

/// True when the Sigma block passes min_eig > 1e-12 * max_eig.
bool well_conditioned(const Eigen::MatrixXd& sigma);

/// beta = Sigma^{-1} alpha by Cholesky. Throws SingularMatrixError when the
/// Sigma block fails the conditioning test.
Eigen::VectorXd g(const PsiVector& psi);

Eigen::VectorXd ols(const Dataset& data, std::span<const Index> s);

/// k x b gradient of g. Row j is e_j^T [-(alpha^T (x) I)(Omega (x) Omega), Omega]
/// with the vec columns of each symmetric pair (a, b), a != b, summed into the
/// single vech column that represents both.
Eigen::MatrixXd jacobian_g(const PsiVector& psi);

struct PluginCovariance {
    Eigen::MatrixXd gamma;     // k x k, G V G^T symmetrized
    Eigen::MatrixXd jacobian;  // k x b
    Eigen::MatrixXd v_hat;     // b x b empirical covariance of the W_i
};

PluginCovariance plugin_covariance(const Dataset& data, std::span<const Index> s);

/// L-infinity ball of radius t/sqrt(n), t the (1 - alpha) Monte-Carlo quantile
/// of ||cov^{1/2} Q||_inf.
ConfidenceRectangle ci_normal_cube(const Eigen::VectorXd& center, const Eigen::MatrixXd& cov,
                                   Index n, double alpha, std::int64_t mc_draws,
                                   const SeededRng& rng, Exec exec = Exec::parallel);
ConfidenceRectangle ci_normal_cube(const Eigen::VectorXd& beta_hat, const PluginCovariance& cov,
                                   Index n, double alpha, std::int64_t mc_draws,
                                   const SeededRng& rng, Exec exec = Exec::parallel);

/// center(j) +- z_{alpha/(2k)} sqrt(cov(j,j)/n). Negative diagonal entries
/// are clipped to zero and counted in `clipped` when provided.
ConfidenceRectangle ci_normal_bonferroni(const Eigen::VectorXd& center, const Eigen::MatrixXd& cov,
                                         Index n, double alpha, Index* clipped = nullptr);
ConfidenceRectangle ci_normal_bonferroni(const Eigen::VectorXd& beta_hat,
                                         const PluginCovariance& cov, Index n, double alpha,
                                         Index* clipped = nullptr);

} // namespace splitinf
