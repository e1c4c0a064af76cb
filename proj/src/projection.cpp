#include "splitinf/projection.hpp"

#include <cmath>

#include "splitinf/error.hpp"
#include "splitinf/stats.hpp"

namespace splitinf {

namespace {

void check_subset(Index d, std::span<const Index> s) {
    if (s.empty()) throw InvalidArgument("projection: empty index set");
    for (Index j : s)
        if (j < 0 || j >= d) throw InvalidArgument("projection: covariate index out of range");
}

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Index i = 0; i < a.rows(); ++i)
        for (Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

} // namespace

PsiVector PsiVector::from_moments(const Eigen::MatrixXd& sigma, const Eigen::VectorXd& alpha) {
    const Index k = alpha.size();
    if (sigma.rows() != k || sigma.cols() != k) throw InvalidArgument("psi: moment shapes disagree");
    PsiVector psi;
    psi.k = k;
    psi.values.resize(length_for(k));
    psi.values.head(triangular(k)) = vech_lower(sigma);
    psi.values.tail(k) = alpha;
    return psi;
}

Eigen::MatrixXd PsiVector::sigma() const { return unvech(values.head(triangular(k))).dense(); }

Eigen::MatrixXd gather_columns(const Eigen::MatrixXd& x, std::span<const Index> s) {
    Eigen::MatrixXd out(x.rows(), static_cast<Index>(s.size()));
    for (Index c = 0; c < out.cols(); ++c) out.col(c) = x.col(s[static_cast<std::size_t>(c)]);
    return out;
}

PsiVector psi_hat(const Dataset& data, std::span<const Index> s) {
    check_subset(data.cols(), s);
    if (data.rows() < 1) throw InvalidArgument("psi_hat: empty dataset");
    const Eigen::MatrixXd xs = gather_columns(data.x(), s);
    const double inv_n = 1.0 / static_cast<double>(data.rows());
    const Eigen::MatrixXd sigma = (xs.transpose() * xs) * inv_n;
    const Eigen::VectorXd alpha = (xs.transpose() * data.y()) * inv_n;
    return PsiVector::from_moments(sigma, alpha);
}

PsiVector psi_weighted(const Eigen::MatrixXd& xs, const Eigen::VectorXd& y,
                       const Eigen::VectorXd& weights) {
    const double total = weights.sum();
    if (!(total > 0.0)) throw InvalidArgument("psi_weighted: weights sum to zero");
    const Eigen::MatrixXd wx = weights.asDiagonal() * xs;
    const Eigen::MatrixXd sigma = (xs.transpose() * wx) / total;
    const Eigen::VectorXd alpha = (wx.transpose() * y) / total;
    return PsiVector::from_moments(sigma, alpha);
}

Eigen::MatrixXd moment_rows(const Dataset& data, std::span<const Index> s) {
    check_subset(data.cols(), s);
    const Eigen::MatrixXd xs = gather_columns(data.x(), s);
    const Index k = xs.cols();
    Eigen::MatrixXd w(data.rows(), PsiVector::length_for(k));
    for (Index i = 0; i < data.rows(); ++i) {
        Index p = 0;
        for (Index b = 0; b < k; ++b)
            for (Index a = b; a < k; ++a) w(i, p++) = xs(i, a) * xs(i, b);
        for (Index a = 0; a < k; ++a) w(i, p++) = data.y()(i) * xs(i, a);
    }
    return w;
}

bool well_conditioned(const Eigen::MatrixXd& sigma) {
    if (!sigma.allFinite()) return false;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sigma, Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success) return false;
    const double hi = eig.eigenvalues().maxCoeff();
    const double lo = eig.eigenvalues().minCoeff();
    return hi > 0.0 && lo > 1e-12 * hi;
}

Eigen::VectorXd g(const PsiVector& psi) {
    const Eigen::MatrixXd sigma = psi.sigma();
    if (!well_conditioned(sigma)) throw SingularMatrixError();
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success) throw SingularMatrixError();
    return llt.solve(psi.alpha());
}

Eigen::VectorXd ols(const Dataset& data, std::span<const Index> s) {
    // Fewer rows than covariates means a rank-deficient moment matrix.
    if (data.rows() < static_cast<Index>(s.size())) throw SingularMatrixError();
    return g(psi_hat(data, s));
}

Eigen::MatrixXd jacobian_g(const PsiVector& psi) {
    const Index k = psi.k;
    const Eigen::MatrixXd sigma = psi.sigma();
    if (!well_conditioned(sigma)) throw SingularMatrixError();
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success) throw SingularMatrixError();
    const Eigen::MatrixXd omega = llt.solve(Eigen::MatrixXd::Identity(k, k));
    const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(k, k);

    // Gradient with respect to vec(Sigma), every entry treated as free.
    const Eigen::MatrixXd vec_part =
        -kron(psi.alpha().transpose(), identity) * kron(omega, omega);

    Eigen::MatrixXd jac(k, PsiVector::length_for(k));
    Index p = 0;
    for (Index b = 0; b < k; ++b) {
        for (Index a = b; a < k; ++a, ++p) {
            jac.col(p) = vec_part.col(a + b * k);
            if (a != b) jac.col(p) += vec_part.col(b + a * k);
        }
    }
    jac.rightCols(k) = omega;
    return jac;
}

PluginCovariance plugin_covariance(const Dataset& data, std::span<const Index> s) {
    const Eigen::MatrixXd w = moment_rows(data, s);
    const Eigen::RowVectorXd mean = w.colwise().mean();
    const Eigen::MatrixXd centered = w.rowwise() - mean;
    PluginCovariance out;
    out.v_hat = (centered.transpose() * centered) / static_cast<double>(data.rows());
    PsiVector psi;
    psi.k = static_cast<Index>(s.size());
    psi.values = mean.transpose();
    out.jacobian = jacobian_g(psi);
    const Eigen::MatrixXd gamma = out.jacobian * out.v_hat * out.jacobian.transpose();
    out.gamma = 0.5 * (gamma + gamma.transpose());
    return out;
}

ConfidenceRectangle ci_normal_cube(const Eigen::VectorXd& center, const Eigen::MatrixXd& cov,
                                   Index n, double alpha, std::int64_t mc_draws,
                                   const SeededRng& rng, Exec exec) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("alpha must lie in (0, 1)");
    if (mc_draws < 1000) throw InvalidArgument("ci_normal_cube: need at least 1000 draws");
    if (n < 1) throw InvalidArgument("ci_normal_cube: n must be positive");
    const double t = upper_quantile(gaussian_sup_norms(cov, mc_draws, rng, exec), alpha);
    const Eigen::VectorXd radius =
        Eigen::VectorXd::Constant(center.size(), t / std::sqrt(static_cast<double>(n)));
    return ConfidenceRectangle::around(center, radius, 1.0 - alpha, Method::normal_cube);
}

ConfidenceRectangle ci_normal_cube(const Eigen::VectorXd& beta_hat, const PluginCovariance& cov,
                                   Index n, double alpha, std::int64_t mc_draws,
                                   const SeededRng& rng, Exec exec) {
    return ci_normal_cube(beta_hat, cov.gamma, n, alpha, mc_draws, rng, exec);
}

ConfidenceRectangle ci_normal_bonferroni(const Eigen::VectorXd& center, const Eigen::MatrixXd& cov,
                                         Index n, double alpha, Index* clipped) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("alpha must lie in (0, 1)");
    if (n < 1) throw InvalidArgument("ci_normal_bonferroni: n must be positive");
    const Index k = center.size();
    const double z = normal_upper_quantile(alpha / (2.0 * static_cast<double>(k)));
    Eigen::VectorXd radius(k);
    Index negative = 0;
    for (Index j = 0; j < k; ++j) {
        double var = cov(j, j);
        if (var < 0.0) {
            var = 0.0;
            ++negative;
        }
        radius(j) = z * std::sqrt(var / static_cast<double>(n));
    }
    if (clipped) *clipped = negative;
    return ConfidenceRectangle::around(center, radius, 1.0 - alpha, Method::normal_bonferroni);
}

ConfidenceRectangle ci_normal_bonferroni(const Eigen::VectorXd& beta_hat,
                                         const PluginCovariance& cov, Index n, double alpha,
                                         Index* clipped) {
    return ci_normal_bonferroni(beta_hat, cov.gamma, n, alpha, clipped);
}

} // namespace splitinf
