#include "splitinf/loco.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "splitinf/error.hpp"
#include "splitinf/projection.hpp"
#include "splitinf/stats.hpp"

namespace splitinf {

void LocoConfig::validate() const {
    if (!(epsilon >= 0.0)) throw InvalidArgument("loco: epsilon must be non-negative");
    if (tau && !(*tau > 0.0)) throw InvalidArgument("loco: tau must be positive");
}

LocoConfig LocoConfig::defaults_for(const Dataset& first_half, SeededRng rng) {
    LocoConfig cfg;
    cfg.epsilon = 0.05;
    const double a = first_half.rows() > 0 ? first_half.y().cwiseAbs().maxCoeff() : 0.0;
    if (a > 0.0) cfg.tau = 10.0 * a;
    cfg.include_noise = true;
    cfg.rng = rng;
    return cfg;
}

LocoConfig LocoConfig::plain() {
    LocoConfig cfg;
    cfg.epsilon = 0.0;
    cfg.tau.reset();
    cfg.include_noise = false;
    return cfg;
}

DeltaMatrix delta_matrix(const SelectedModel& model, const Dataset& data2, const LocoConfig& cfg) {
    cfg.validate();
    const Index n = data2.rows();
    const Index k = model.size();
    if (n < 1) throw InvalidArgument("loco: empty inference half");
    DeltaMatrix out;
    out.truncated = cfg.tau.has_value();
    out.tau = cfg.tau.value_or(0.0);
    out.noise_applied = cfg.include_noise && cfg.epsilon > 0.0;
    out.epsilon = out.noise_applied ? cfg.epsilon : 0.0;

    const auto clip = [&](double v) { return out.truncated ? hard_threshold(v, out.tau) : v; };
    const Eigen::VectorXd full = model.predict(data2.x());
    Eigen::MatrixXd leave(n, k);
    for (Index c = 0; c < k; ++c)
        leave.col(c) = model.predict_without(model.selected[static_cast<std::size_t>(c)], data2.x());

    out.values.resize(n, k);
    out.noise = Eigen::MatrixXd::Zero(n, k);
    for_each_index(cfg.exec, n, [&](std::int64_t i) {
        const double y = data2.y()(i);
        const double base = std::fabs(y - clip(full(i)));
        SeededRng rng = cfg.rng.child(static_cast<std::uint64_t>(i));
        std::uniform_real_distribution<double> unif(-1.0, 1.0);
        for (Index c = 0; c < k; ++c) {
            double v = std::fabs(y - clip(leave(i, c))) - base;
            if (out.noise_applied) {
                out.noise(i, c) = unif(rng);
                v += out.epsilon * out.noise(i, c);
            }
            out.values(i, c) = v;
        }
    });

    if (out.truncated) {
        const double a = data2.y().cwiseAbs().maxCoeff();
        const double bound = 2.0 * (a + out.tau) + out.epsilon;
        if (out.values.cwiseAbs().maxCoeff() > bound * (1.0 + 1e-12))
            throw Error("loco: delta exceeds the truncation bound");
    }
    return out;
}

Eigen::VectorXd loco_estimate(const DeltaMatrix& deltas) {
    if (deltas.values.rows() < 1) throw InvalidArgument("loco: empty delta matrix");
    return deltas.values.colwise().mean().transpose();
}

Eigen::MatrixXd loco_covariance(const DeltaMatrix& deltas) {
    const Eigen::RowVectorXd mean = deltas.values.colwise().mean();
    const Eigen::MatrixXd centered = deltas.values.rowwise() - mean;
    const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(deltas.values.rows());
    return 0.5 * (cov + cov.transpose());
}

LocoIntervals loco_ci_normal(const DeltaMatrix& deltas, double alpha, std::int64_t mc_draws,
                             const SeededRng& rng, Exec exec) {
    const Index n = deltas.values.rows();
    if (n < 2) throw InvalidArgument("loco: need at least two rows");
    const Eigen::VectorXd gamma = loco_estimate(deltas);
    const Eigen::MatrixXd cov = loco_covariance(deltas);
    auto cube = ci_normal_cube(gamma, cov, n, alpha, mc_draws, rng, exec);
    auto rect = ci_normal_bonferroni(gamma, cov, n, alpha);
    return LocoIntervals{gamma, std::move(cube), std::move(rect)};
}

LocoBootIntervals loco_ci_boot(const DeltaMatrix& deltas, const BootstrapConfig& bcfg) {
    const Index n = deltas.values.rows();
    const Index k = deltas.values.cols();
    const Eigen::VectorXd gamma = loco_estimate(deltas);
    const double root_n = std::sqrt(static_cast<double>(n));
    BootstrapDraws draws = run_bootstrap(n, k, bcfg, [&](const Eigen::VectorXd& counts) {
        const Eigen::VectorXd resampled = deltas.values.transpose() * counts / counts.sum();
        return Eigen::VectorXd(root_n * (resampled - gamma));
    });
    const BootstrapRadii radii = bootstrap_radii(draws.stats, bcfg.alpha);
    const double level = 1.0 - bcfg.alpha;
    auto cube = ConfidenceRectangle::around(gamma, Eigen::VectorXd::Constant(k, radii.cube / root_n),
                                            level, Method::boot_cube);
    auto rect = ConfidenceRectangle::around(gamma, radii.rect / root_n, level, Method::boot_rect);
    return LocoBootIntervals{gamma, std::move(cube), std::move(rect), std::move(draws)};
}

LocoBootIntervals loco_ci_boot(const SelectedModel& model, const Dataset& data2,
                               const LocoConfig& cfg, const BootstrapConfig& bcfg) {
    return loco_ci_boot(delta_matrix(model, data2, cfg), bcfg);
}

std::pair<Index, Index> median_ranks(Index n, Index k, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("alpha must lie in (0, 1)");
    if (n < 1 || k < 1) throw InvalidArgument("median interval: need n >= 1 and k >= 1");
    const double half = static_cast<double>(n) / 2.0;
    const double radical = std::sqrt(half * std::log(2.0 * static_cast<double>(k) / alpha));
    auto l = static_cast<Index>(std::ceil(half - radical));
    auto u = static_cast<Index>(std::floor(half + radical));
    l = std::max<Index>(l, 1);
    u = std::min<Index>(u, n);
    if (l > u) throw SampleTooSmallError();
    return {l, u};
}

MedianIntervals median_loco_ci(const DeltaMatrix& plain_deltas, double alpha) {
    const Index n = plain_deltas.values.rows();
    const Index k = plain_deltas.values.cols();
    const auto [l, u] = median_ranks(n, k, alpha);
    Eigen::VectorXd lower(k), upper(k), median(k);
    std::vector<double> column(static_cast<std::size_t>(n));
    for (Index j = 0; j < k; ++j) {
        for (Index i = 0; i < n; ++i) column[static_cast<std::size_t>(i)] = plain_deltas.values(i, j);
        std::sort(column.begin(), column.end());
        lower(j) = column[static_cast<std::size_t>(l - 1)];
        upper(j) = column[static_cast<std::size_t>(u - 1)];
        const auto mid = static_cast<std::size_t>(n / 2);
        median(j) = n % 2 == 1 ? column[mid] : 0.5 * (column[mid - 1] + column[mid]);
    }
    return MedianIntervals{median, ConfidenceRectangle(lower, upper, 1.0 - alpha, Method::median_order), l, u};
}

MedianIntervals median_loco_ci(const SelectedModel& model, const Dataset& data2, double alpha) {
    LocoConfig plain = LocoConfig::plain();
    plain.exec = Exec::serial;
    return median_loco_ci(delta_matrix(model, data2, plain), alpha);
}

Eigen::VectorXd prediction_errors(const SelectedModel& model, const Dataset& data2,
                                  const std::optional<LocoConfig>& robust) {
    const Eigen::VectorXd pred = model.predict(data2.x());
    const Index n = data2.rows();
    Eigen::VectorXd a(n);
    if (!robust) {
        a = (data2.y() - pred).cwiseAbs();
        return a;
    }
    robust->validate();
    const bool noisy = robust->include_noise && robust->epsilon > 0.0;
    for (Index i = 0; i < n; ++i) {
        const double p = robust->tau ? hard_threshold(pred(i), *robust->tau) : pred(i);
        a(i) = std::fabs(data2.y()(i) - p);
        if (noisy) {
            SeededRng rng = robust->rng.child(static_cast<std::uint64_t>(i));
            std::uniform_real_distribution<double> unif(-1.0, 1.0);
            a(i) += robust->epsilon * unif(rng);
        }
    }
    return a;
}

PredictionInterval prediction_ci(const SelectedModel& model, const Dataset& data2, double alpha,
                                 const std::optional<LocoConfig>& robust) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("alpha must lie in (0, 1)");
    const Index n = data2.rows();
    if (n < 2) throw InvalidArgument("prediction interval: need at least two rows");
    const Eigen::VectorXd a = prediction_errors(model, data2, robust);
    const double rho = a.mean();
    const double sd = std::sqrt((a.array() - rho).square().mean());
    const double half = normal_upper_quantile(alpha / 2.0) * sd / std::sqrt(static_cast<double>(n));
    Eigen::VectorXd center(1), radius(1);
    center << rho;
    radius << half;
    return PredictionInterval{rho, sd,
                              ConfidenceRectangle::around(center, radius, 1.0 - alpha, Method::prediction)};
}

} // namespace splitinf
