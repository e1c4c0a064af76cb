#pragma once

#include <Eigen/Dense>

#include <optional>
#include <utility>

#include "splitinf/bootstrap.hpp"
#include "splitinf/confidence.hpp"
#include "splitinf/core.hpp"
#include "splitinf/parallel.hpp"
#include "splitinf/rng.hpp"
#include "splitinf/selection.hpp"

namespace splitinf {

struct LocoConfig {
    double epsilon = 0.05;       // half-width of the uniform noise
    std::optional<double> tau;   // hard-threshold level; empty disables truncation
    bool include_noise = true;
    SeededRng rng{};
    Exec exec = Exec::parallel;

    void validate() const;
    /// Defaults used for intervals: epsilon 0.05, tau = 10 max|Y| over the
    /// selection half, noise on.
    static LocoConfig defaults_for(const Dataset& first_half, SeededRng rng);
    /// No truncation, no noise.
    static LocoConfig plain();
};

/// t_tau(x): x when |x| <= tau, otherwise sign(x) tau.
inline double hard_threshold(double x, double tau) noexcept {
    return x > tau ? tau : (x < -tau ? -tau : x);
}

struct DeltaMatrix {
    Eigen::MatrixXd values;  // n x k, entry (i, j) = delta_i(j)
    Eigen::MatrixXd noise;   // xi_i(j) ~ U(-1, 1); persisted for triplet resampling
    bool truncated = false;
    bool noise_applied = false;
    double epsilon = 0.0;
    double tau = 0.0;
};

/// delta_i(j) = |Y_i - t(leave-out prediction)| - |Y_i - t(full prediction)| + eps xi_i(j).
/// Row i draws its noise from cfg.rng.child(i).
DeltaMatrix delta_matrix(const SelectedModel& model, const Dataset& data2, const LocoConfig& cfg);

Eigen::VectorXd loco_estimate(const DeltaMatrix& deltas);

/// (1/n) sum (delta_i - gamma_hat)(delta_i - gamma_hat)^T
Eigen::MatrixXd loco_covariance(const DeltaMatrix& deltas);

struct LocoIntervals {
    Eigen::VectorXd estimate;
    ConfidenceRectangle cube;
    ConfidenceRectangle rect;
};

LocoIntervals loco_ci_normal(const DeltaMatrix& deltas, double alpha, std::int64_t mc_draws,
                             const SeededRng& rng, Exec exec = Exec::parallel);

struct LocoBootIntervals {
    Eigen::VectorXd estimate;
    ConfidenceRectangle cube;
    ConfidenceRectangle rect;
    BootstrapDraws draws;
};

/// Resamples whole rows of (X, Y, xi) with the noise held at its realized
/// values; replicate statistic sqrt(n)(gamma* - gamma_hat).
LocoBootIntervals loco_ci_boot(const DeltaMatrix& deltas, const BootstrapConfig& bcfg);
LocoBootIntervals loco_ci_boot(const SelectedModel& model, const Dataset& data2,
                               const LocoConfig& cfg, const BootstrapConfig& bcfg);

/// 1-based order-statistic ranks (l, u) for the median interval, clamped to
/// [1, n]. Throws SampleTooSmallError when l > u.
std::pair<Index, Index> median_ranks(Index n, Index k, double alpha);

struct MedianIntervals {
    Eigen::VectorXd estimate;  // sample medians
    ConfidenceRectangle ci;
    Index lower_rank = 0;
    Index upper_rank = 0;
};

MedianIntervals median_loco_ci(const DeltaMatrix& plain_deltas, double alpha);
/// Uses untruncated, noiseless deltas.
MedianIntervals median_loco_ci(const SelectedModel& model, const Dataset& data2, double alpha);

struct PredictionInterval {
    double estimate = 0.0;
    double sd = 0.0;
    ConfidenceRectangle ci;
};

/// rho_hat +- z_{alpha/2} s / sqrt(n) with A_i = |Y_i - prediction|, or the
/// truncated-plus-noise variant when `robust` is given.
PredictionInterval prediction_ci(const SelectedModel& model, const Dataset& data2, double alpha,
                                 const std::optional<LocoConfig>& robust = std::nullopt);

/// The A_i used by prediction_ci.
Eigen::VectorXd prediction_errors(const SelectedModel& model, const Dataset& data2,
                                  const std::optional<LocoConfig>& robust);

} // namespace splitinf
