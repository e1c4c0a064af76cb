#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

#include "splitinf/parallel.hpp"
#include "splitinf/rng.hpp"

namespace splitinf {

// Standard normal quantile (Wichura's AS 241 rational approximation,
// relative accuracy about 1e-16 over (0, 1)).
double normal_quantile(double p);
double normal_cdf(double z);
// z such that P(Z > z) = tail.
inline double normal_upper_quantile(double tail) { return -normal_quantile(tail); }

/// 1-based rank ceil(prob * count) clamped to [1, count]. Products within
/// 1e-9 of an integer are treated as that integer, so 0.95 * 2000 is 1900.
std::size_t ceil_rank(double prob, std::size_t count);

/// rank-th smallest value (1-based). Takes the values by copy.
double order_statistic(std::vector<double> values, std::size_t rank);

// Smallest t with empirical P(stat <= t) >= 1 - alpha.
double upper_quantile(std::vector<double> values, double alpha);

/// Symmetric square root with negative eigenvalues clipped to zero.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& cov);

/// sup-norms ||cov^{1/2} Q||_inf of `draws` standard Gaussian vectors Q.
/// Draws are generated in fixed chunks of kGaussianChunk, chunk c using
/// rng.child(c), so the result does not depend on the thread count.
inline constexpr std::int64_t kGaussianChunk = 2048;
std::vector<double> gaussian_sup_norms(const Eigen::MatrixXd& cov, std::int64_t draws,
                                       const SeededRng& rng, Exec exec);

} // namespace splitinf
