#pragma once

#include <Eigen/Dense>

#include <iosfwd>
#include <string>
#include <vector>

#include "splitinf/core.hpp"
#include "splitinf/parallel.hpp"
#include "splitinf/rng.hpp"

namespace splitinf {

/// 2n i.i.d. rows of a D-dimensional vector with known mean beta.
struct ManyMeansSample {
    Eigen::MatrixXd y;
    Eigen::VectorXd beta;
};

/// Rows drawn from N(beta, I_D).
ManyMeansSample gaussian_many_means(const Eigen::VectorXd& beta, Index rows, SeededRng rng);

enum class ManyMeansMethod { split, uniform };

struct ManyMeansResult {
    Index selected = 0;
    double estimate = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    ManyMeansMethod method = ManyMeansMethod::split;
    double target = 0.0;  // beta(selected)
    double theta = 0.0;   // max_j beta(j)

    [[nodiscard]] bool covers() const noexcept { return lower <= target && target <= upper; }
    [[nodiscard]] double width() const noexcept { return upper - lower; }
};

/// Lowest index attaining the maximum.
Index argmax_lowest(const Eigen::VectorXd& v);

/// Select on rows [0, n), estimate and build the z-interval on rows [n, 2n).
ManyMeansResult mm_split(const ManyMeansSample& sample, double alpha);

/// Select and estimate on all 2n rows; half-width t / sqrt(2n) with t the
/// bootstrap (1 - alpha) quantile of sup_s sqrt(2n)|mean*(s) - mean(s)|.
ManyMeansResult mm_uniform(const ManyMeansSample& sample, double alpha, Index replicates,
                           const SeededRng& rng, Exec exec = Exec::parallel);

struct RiskRow {
    double gap = 0.0;
    double risk_split = 0.0;
    double risk_nonsplit = 0.0;
    double mc_se = 0.0;  // standard error of risk_split - risk_nonsplit
    double se_split = 0.0;
    double se_nonsplit = 0.0;
    Index reps = 0;
};

/// Monte-Carlo risk E[(Ybar(J) - theta)^2] of the split and non-split
/// estimators with beta = (a, 0, ..., 0) and N(beta, I) rows. Each
/// replication draws the two half-sample mean vectors, which are sufficient
/// for both estimators; replication r uses rng.child(r) at every gap.
std::vector<RiskRow> mm_risk_experiment(Index dim, Index n, const std::vector<double>& gaps,
                                        Index reps, const SeededRng& rng,
                                        Exec exec = Exec::parallel);

/// gap,risk_split,risk_nonsplit,mc_se,reps
void write_risk_csv(std::ostream& out, const std::vector<RiskRow>& rows,
                    const std::vector<std::string>& comments = {});

struct ManyMeansCoverageRow {
    double gap = 0.0;
    ManyMeansMethod method = ManyMeansMethod::split;
    Index reps = 0;
    double coverage = 0.0;
    double mean_width = 0.0;
    double mc_se = 0.0;
};

/// Coverage of beta(J) and mean width for both interval constructions.
std::vector<ManyMeansCoverageRow> mm_coverage_experiment(Index dim, Index n,
                                                         const std::vector<double>& gaps,
                                                         Index reps, double alpha,
                                                         Index boot_reps, const SeededRng& rng,
                                                         Exec exec = Exec::parallel);

void write_mm_coverage_csv(std::ostream& out, const std::vector<ManyMeansCoverageRow>& rows,
                           const std::vector<std::string>& comments = {});

} // namespace splitinf
