#pragma once

#include <Eigen/Dense>

#include <functional>
#include <iosfwd>
#include <span>
#include <string>

#include "splitinf/confidence.hpp"
#include "splitinf/core.hpp"
#include "splitinf/parallel.hpp"
#include "splitinf/rng.hpp"

namespace splitinf {

struct BootstrapConfig {
    Index replicates = 2000;
    double alpha = 0.05;
    Index min_distinct = 1;
    Index max_redraws = 100;
    SeededRng rng{};
    Exec exec = Exec::parallel;

    void validate() const;
};

/// Replicate statistics, one row per successful replicate.
struct BootstrapDraws {
    Eigen::MatrixXd stats;
    Index failures = 0;  // redraws triggered across all replicates
};

struct Resample {
    IndexList rows;
    Eigen::VectorXd counts;  // multiplicity of each original row
    Index redraws = 0;
};

/// n draws with replacement from 0..n-1, redrawn while fewer than
/// min_distinct distinct rows appear. Throws DegenerateBootstrapError once
/// max_redraws redraws are exhausted.
Resample draw_resample(Index n, SeededRng& rng, Index min_distinct, Index max_redraws);

Dataset pairs_resample(const Dataset& data, SeededRng rng, Index min_distinct, Index max_redraws);

/// Maps resampling multiplicities to a replicate statistic. Throwing
/// SingularMatrixError marks the resample degenerate and triggers a redraw.
using ReplicateStatistic = std::function<Eigen::VectorXd(const Eigen::VectorXd& counts)>;

/// Runs cfg.replicates replicates; replicate b draws from cfg.rng.child(b).
/// Exec::serial is the reference path; Exec::parallel fills the same rows.
BootstrapDraws run_bootstrap(Index n, Index dim, const BootstrapConfig& cfg,
                             const ReplicateStatistic& statistic);

struct BootstrapRadii {
    double cube = 0.0;     // order statistic ceil((1-alpha)B) of row sup-norms
    Eigen::VectorXd rect;  // order statistic ceil((1-alpha/k)B) of |column j|
};

BootstrapRadii bootstrap_radii(const Eigen::MatrixXd& stats, double alpha);

struct BootIntervals {
    Eigen::VectorXd estimate;
    ConfidenceRectangle cube;
    ConfidenceRectangle rect;
    BootstrapDraws draws;
};

/// Boot-Split rectangles for the projection parameter on data2 restricted to
/// s; replicate statistic sqrt(n)(beta* - beta_hat).
BootIntervals boot_ci_beta(const Dataset& data2, std::span<const Index> s,
                           const BootstrapConfig& cfg);

struct ImageBootstrap {
    Eigen::VectorXd estimate;
    ConfidenceRectangle ci;
    double cube_radius = 0.0;  // t* / sqrt(n) in psi coordinates
    Index sampled = 0;
    Index accepted = 0;
};

/// Bootstraps an L-infinity cube for psi, samples it uniformly (rejecting
/// draws with a non-PD Sigma block) and reports per-coordinate [min, max] of g
/// over the accepted draws together with g(psi_hat).
ImageBootstrap image_boot_ci(const Dataset& data2, std::span<const Index> s,
                             const BootstrapConfig& cfg, Index n_samples);

/// Writes "label,replicate,coordinate,value" rows.
void write_replicates_csv(std::ostream& out, const BootstrapDraws& draws, const std::string& label,
                          bool header = true);

} // namespace splitinf
