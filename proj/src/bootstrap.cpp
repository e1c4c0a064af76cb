#include "splitinf/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "splitinf/csv_io.hpp"
#include "splitinf/error.hpp"
#include "splitinf/projection.hpp"
#include "splitinf/stats.hpp"

namespace splitinf {

namespace {

Index bounded(SeededRng& rng, Index n) {
    const auto bound = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = SeededRng::max() - SeededRng::max() % bound;
    std::uint64_t draw = rng();
    while (draw >= limit) draw = rng();
    return static_cast<Index>(draw % bound);
}

// Stream family for the image-bootstrap cube sampler, disjoint from the
// replicate indices.
constexpr std::uint64_t kCubeStreams = 0x494d414745ULL;

} // namespace

void BootstrapConfig::validate() const {
    if (replicates < 100) throw InvalidArgument("bootstrap: need at least 100 replicates");
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("alpha must lie in (0, 1)");
    if (min_distinct < 1) throw InvalidArgument("bootstrap: min_distinct must be at least 1");
    if (max_redraws < 0) throw InvalidArgument("bootstrap: max_redraws must be non-negative");
}

Resample draw_resample(Index n, SeededRng& rng, Index min_distinct, Index max_redraws) {
    if (n < 1) throw InvalidArgument("bootstrap: empty dataset");
    Resample out;
    out.rows.resize(static_cast<std::size_t>(n));
    for (Index attempt = 0;; ++attempt) {
        out.counts = Eigen::VectorXd::Zero(n);
        Index distinct = 0;
        for (auto& r : out.rows) {
            r = bounded(rng, n);
            if (out.counts(r)++ == 0.0) ++distinct;
        }
        if (distinct >= std::min(min_distinct, n)) break;
        if (attempt >= max_redraws) throw DegenerateBootstrapError();
        ++out.redraws;
    }
    return out;
}

Dataset pairs_resample(const Dataset& data, SeededRng rng, Index min_distinct, Index max_redraws) {
    const Resample r = draw_resample(data.rows(), rng, min_distinct, max_redraws);
    return data.select_rows(r.rows);
}

BootstrapDraws run_bootstrap(Index n, Index dim, const BootstrapConfig& cfg,
                             const ReplicateStatistic& statistic) {
    cfg.validate();
    BootstrapDraws out;
    out.stats.resize(cfg.replicates, dim);
    std::vector<Index> redraws(static_cast<std::size_t>(cfg.replicates), 0);
    for_each_index(cfg.exec, cfg.replicates, [&](std::int64_t b) {
        SeededRng rng = cfg.rng.child(static_cast<std::uint64_t>(b));
        Index used = 0;
        while (true) {
            const Index budget = cfg.max_redraws - used;
            Resample r = draw_resample(n, rng, cfg.min_distinct, budget);
            used += r.redraws;
            try {
                const Eigen::VectorXd stat = statistic(r.counts);
                if (stat.size() != dim) throw Error("bootstrap: statistic has the wrong dimension");
                out.stats.row(b) = stat.transpose();
                break;
            } catch (const SingularMatrixError&) {
                if (used >= cfg.max_redraws) throw DegenerateBootstrapError();
                ++used;
            }
        }
        redraws[static_cast<std::size_t>(b)] = used;
    });
    for (Index r : redraws) out.failures += r;
    return out;
}

BootstrapRadii bootstrap_radii(const Eigen::MatrixXd& stats, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("alpha must lie in (0, 1)");
    const auto count = static_cast<std::size_t>(stats.rows());
    const Index k = stats.cols();
    BootstrapRadii out;
    std::vector<double> sup(count);
    for (std::size_t b = 0; b < count; ++b)
        sup[b] = stats.row(static_cast<Index>(b)).cwiseAbs().maxCoeff();
    out.cube = order_statistic(std::move(sup), ceil_rank(1.0 - alpha, count));
    out.rect.resize(k);
    const std::size_t rank = ceil_rank(1.0 - alpha / static_cast<double>(k), count);
    std::vector<double> column(count);
    for (Index j = 0; j < k; ++j) {
        for (std::size_t b = 0; b < count; ++b) column[b] = std::fabs(stats(static_cast<Index>(b), j));
        out.rect(j) = order_statistic(column, rank);
    }
    return out;
}

BootIntervals boot_ci_beta(const Dataset& data2, std::span<const Index> s, const BootstrapConfig& cfg) {
    const Index n = data2.rows();
    const Index k = static_cast<Index>(s.size());
    const Eigen::VectorXd beta_hat = ols(data2, s);
    const Eigen::MatrixXd xs = gather_columns(data2.x(), s);
    const double root_n = std::sqrt(static_cast<double>(n));

    BootstrapConfig local = cfg;
    local.min_distinct = std::max(cfg.min_distinct, k);
    BootstrapDraws draws = run_bootstrap(n, k, local, [&](const Eigen::VectorXd& counts) {
        return Eigen::VectorXd(root_n * (g(psi_weighted(xs, data2.y(), counts)) - beta_hat));
    });
    const BootstrapRadii radii = bootstrap_radii(draws.stats, cfg.alpha);
    const double level = 1.0 - cfg.alpha;
    auto cube = ConfidenceRectangle::around(beta_hat, Eigen::VectorXd::Constant(k, radii.cube / root_n),
                                            level, Method::boot_cube);
    auto rect = ConfidenceRectangle::around(beta_hat, radii.rect / root_n, level, Method::boot_rect);
    return BootIntervals{beta_hat, std::move(cube), std::move(rect), std::move(draws)};
}

ImageBootstrap image_boot_ci(const Dataset& data2, std::span<const Index> s,
                             const BootstrapConfig& cfg, Index n_samples) {
    if (n_samples < 1000) throw InvalidArgument("image bootstrap: need at least 1000 samples");
    const Index n = data2.rows();
    const Index k = static_cast<Index>(s.size());
    const PsiVector center = psi_hat(data2, s);
    const Eigen::VectorXd beta_hat = g(center);
    const Eigen::MatrixXd xs = gather_columns(data2.x(), s);
    const double root_n = std::sqrt(static_cast<double>(n));
    const Index b = center.values.size();

    BootstrapConfig local = cfg;
    local.min_distinct = std::max(cfg.min_distinct, k);
    const BootstrapDraws draws = run_bootstrap(n, b, local, [&](const Eigen::VectorXd& counts) {
        return Eigen::VectorXd(root_n * (psi_weighted(xs, data2.y(), counts).values - center.values));
    });
    const double radius = bootstrap_radii(draws.stats, cfg.alpha).cube / root_n;

    const std::int64_t chunks = (n_samples + kGaussianChunk - 1) / kGaussianChunk;
    std::vector<Eigen::VectorXd> lo(static_cast<std::size_t>(chunks)), hi(static_cast<std::size_t>(chunks));
    std::vector<Index> accepted(static_cast<std::size_t>(chunks), 0);
    const SeededRng cube_rng = cfg.rng.child(kCubeStreams);
    for_each_index(cfg.exec, chunks, [&](std::int64_t c) {
        SeededRng rng = cube_rng.child(static_cast<std::uint64_t>(c));
        auto& l = lo[static_cast<std::size_t>(c)];
        auto& h = hi[static_cast<std::size_t>(c)];
        l = Eigen::VectorXd::Constant(k, std::numeric_limits<double>::infinity());
        h = Eigen::VectorXd::Constant(k, -std::numeric_limits<double>::infinity());
        const std::int64_t begin = c * kGaussianChunk;
        const std::int64_t end = std::min<std::int64_t>(n_samples, begin + kGaussianChunk);
        PsiVector psi;
        psi.k = k;
        psi.values.resize(b);
        for (std::int64_t i = begin; i < end; ++i) {
            for (Index p = 0; p < b; ++p)
                psi.values(p) = center.values(p) + radius * (2.0 * rng.uniform01() - 1.0);
            Eigen::VectorXd beta;
            try {
                beta = g(psi);
            } catch (const SingularMatrixError&) {
                continue;
            }
            l = l.cwiseMin(beta);
            h = h.cwiseMax(beta);
            ++accepted[static_cast<std::size_t>(c)];
        }
    });
    Index total_accepted = 0;
    Eigen::VectorXd lower = beta_hat, upper = beta_hat;
    for (std::size_t c = 0; c < lo.size(); ++c) {
        total_accepted += accepted[c];
        lower = lower.cwiseMin(lo[c]);
        upper = upper.cwiseMax(hi[c]);
    }
    if (static_cast<double>(total_accepted) < 0.01 * static_cast<double>(n_samples)) {
        throw ImageBootstrapError();
    }
    return ImageBootstrap{beta_hat,
                          ConfidenceRectangle(lower, upper, 1.0 - cfg.alpha, Method::image_boot),
                          radius, n_samples, total_accepted};
}

void write_replicates_csv(std::ostream& out, const BootstrapDraws& draws, const std::string& label,
                          bool header) {
    if (header) out << "statistic,replicate,coordinate,value\n";
    for (Index b = 0; b < draws.stats.rows(); ++b)
        for (Index j = 0; j < draws.stats.cols(); ++j)
            out << label << ',' << b << ',' << j << ',' << format_double(draws.stats(b, j)) << '\n';
}

} // namespace splitinf
