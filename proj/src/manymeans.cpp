#include "splitinf/manymeans.hpp"

#include <cmath>
#include <ostream>
#include <random>

#include "splitinf/bootstrap.hpp"
#include "splitinf/csv_io.hpp"
#include "splitinf/error.hpp"
#include "splitinf/stats.hpp"

namespace splitinf {

namespace {

void check_sample(const ManyMeansSample& s) {
    if (s.y.cols() < 1) throw InvalidArgument("many means: need at least one coordinate");
    if (s.y.rows() < 4 || s.y.rows() % 2 != 0) throw InvalidArgument("many means: need an even number (>= 4) of rows");
    if (s.beta.size() != s.y.cols()) throw InvalidArgument("many means: beta length differs from D");
}

} // namespace

ManyMeansSample gaussian_many_means(const Eigen::VectorXd& beta, Index rows, SeededRng rng) {
    std::normal_distribution<double> normal;
    ManyMeansSample s;
    s.beta = beta;
    s.y.resize(rows, beta.size());
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < beta.size(); ++j) s.y(i, j) = beta(j) + normal(rng);
    return s;
}

Index argmax_lowest(const Eigen::VectorXd& v) {
    Index best = 0;
    for (Index j = 1; j < v.size(); ++j)
        if (v(j) > v(best)) best = j;
    return best;
}

ManyMeansResult mm_split(const ManyMeansSample& sample, double alpha) {
    check_sample(sample);
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("alpha must lie in (0, 1)");
    const Index n = sample.y.rows() / 2;
    const Eigen::VectorXd first = sample.y.topRows(n).colwise().mean().transpose();
    ManyMeansResult r;
    r.method = ManyMeansMethod::split;
    r.selected = argmax_lowest(first);
    const Eigen::VectorXd col = sample.y.bottomRows(n).col(r.selected);
    r.estimate = col.mean();
    const double s = std::sqrt((col.array() - r.estimate).square().mean());
    const double half = s * normal_upper_quantile(alpha / 2.0) / std::sqrt(static_cast<double>(n));
    r.lower = r.estimate - half;
    r.upper = r.estimate + half;
    r.target = sample.beta(r.selected);
    r.theta = sample.beta.maxCoeff();
    return r;
}

ManyMeansResult mm_uniform(const ManyMeansSample& sample, double alpha, Index replicates,
                           const SeededRng& rng, Exec exec) {
    check_sample(sample);
    const Index rows = sample.y.rows();
    const Eigen::VectorXd means = sample.y.colwise().mean().transpose();
    const double root = std::sqrt(static_cast<double>(rows));
    BootstrapConfig cfg;
    cfg.replicates = replicates;
    cfg.alpha = alpha;
    cfg.rng = rng;
    cfg.exec = exec;
    const BootstrapDraws draws = run_bootstrap(rows, 1, cfg, [&](const Eigen::VectorXd& counts) {
        const Eigen::VectorXd star = sample.y.transpose() * counts / static_cast<double>(rows);
        Eigen::VectorXd stat(1);
        stat << root * (star - means).cwiseAbs().maxCoeff();
        return stat;
    });
    const double t = bootstrap_radii(draws.stats, alpha).cube;
    ManyMeansResult r;
    r.method = ManyMeansMethod::uniform;
    r.selected = argmax_lowest(means);
    r.estimate = means(r.selected);
    r.lower = r.estimate - t / root;
    r.upper = r.estimate + t / root;
    r.target = sample.beta(r.selected);
    r.theta = sample.beta.maxCoeff();
    return r;
}

std::vector<RiskRow> mm_risk_experiment(Index dim, Index n, const std::vector<double>& gaps,
                                        Index reps, const SeededRng& rng, Exec exec) {
    if (dim < 1 || n < 1 || reps < 2) throw InvalidArgument("risk experiment: need D >= 1, n >= 1, reps >= 2");
    for (double a : gaps)
        if (!(a >= 0.0)) throw InvalidArgument("risk experiment: gaps must be non-negative");
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    std::vector<RiskRow> rows;
    for (double a : gaps) {
        std::vector<double> loss_split(static_cast<std::size_t>(reps));
        std::vector<double> loss_full(static_cast<std::size_t>(reps));
        for_each_index(exec, reps, [&](std::int64_t r) {
            SeededRng local = rng.child(static_cast<std::uint64_t>(r));
            std::normal_distribution<double> normal;
            Eigen::VectorXd first(dim), second(dim);
            for (Index j = 0; j < dim; ++j) first(j) = (j == 0 ? a : 0.0) + scale * normal(local);
            for (Index j = 0; j < dim; ++j) second(j) = (j == 0 ? a : 0.0) + scale * normal(local);
            const double split_est = second(argmax_lowest(first));
            const Eigen::VectorXd full = 0.5 * (first + second);
            const double full_est = full(argmax_lowest(full));
            loss_split[static_cast<std::size_t>(r)] = (split_est - a) * (split_est - a);
            loss_full[static_cast<std::size_t>(r)] = (full_est - a) * (full_est - a);
        });
        const auto m = static_cast<double>(reps);
        double ss = 0, sf = 0;
        for (Index r = 0; r < reps; ++r) {
            ss += loss_split[static_cast<std::size_t>(r)];
            sf += loss_full[static_cast<std::size_t>(r)];
        }
        const double ms = ss / m, mf = sf / m;
        double vs = 0, vf = 0, vd = 0;
        for (Index r = 0; r < reps; ++r) {
            const double ls = loss_split[static_cast<std::size_t>(r)];
            const double lf = loss_full[static_cast<std::size_t>(r)];
            vs += (ls - ms) * (ls - ms);
            vf += (lf - mf) * (lf - mf);
            vd += (ls - lf - (ms - mf)) * (ls - lf - (ms - mf));
        }
        RiskRow row;
        row.gap = a;
        row.risk_split = ms;
        row.risk_nonsplit = mf;
        row.se_split = std::sqrt(vs / (m - 1.0) / m);
        row.se_nonsplit = std::sqrt(vf / (m - 1.0) / m);
        row.mc_se = std::sqrt(vd / (m - 1.0) / m);
        row.reps = reps;
        rows.push_back(row);
    }
    return rows;
}

void write_risk_csv(std::ostream& out, const std::vector<RiskRow>& rows,
                    const std::vector<std::string>& comments) {
    for (const auto& c : comments) out << "# " << c << '\n';
    out << "gap,risk_split,risk_nonsplit,mc_se,reps\n";
    for (const auto& r : rows) {
        out << format_double(r.gap) << ',' << format_double(r.risk_split) << ','
            << format_double(r.risk_nonsplit) << ',' << format_double(r.mc_se) << ',' << r.reps << '\n';
    }
}

std::vector<ManyMeansCoverageRow> mm_coverage_experiment(Index dim, Index n,
                                                         const std::vector<double>& gaps,
                                                         Index reps, double alpha,
                                                         Index boot_reps, const SeededRng& rng,
                                                         Exec exec) {
    if (reps < 2) throw InvalidArgument("many-means coverage: need at least two replications");
    std::vector<ManyMeansCoverageRow> rows;
    for (std::size_t g = 0; g < gaps.size(); ++g) {
        Eigen::VectorXd beta = Eigen::VectorXd::Zero(dim);
        beta(0) = gaps[g];
        std::vector<ManyMeansResult> split(static_cast<std::size_t>(reps)), uniform(static_cast<std::size_t>(reps));
        for_each_index(exec, reps, [&](std::int64_t r) {
            const SeededRng local = rng.child(g).child(static_cast<std::uint64_t>(r));
            const ManyMeansSample sample = gaussian_many_means(beta, 2 * n, local.child(0));
            split[static_cast<std::size_t>(r)] = mm_split(sample, alpha);
            uniform[static_cast<std::size_t>(r)] = mm_uniform(sample, alpha, boot_reps, local.child(1), Exec::serial);
        });
        for (const auto* results : {&split, &uniform}) {
            ManyMeansCoverageRow row;
            row.gap = gaps[g];
            row.method = results->front().method;
            row.reps = reps;
            double hits = 0, width = 0;
            for (const auto& r : *results) {
                hits += r.covers() ? 1.0 : 0.0;
                width += r.width();
            }
            row.coverage = hits / static_cast<double>(reps);
            row.mean_width = width / static_cast<double>(reps);
            row.mc_se = std::sqrt(row.coverage * (1.0 - row.coverage) / static_cast<double>(reps));
            rows.push_back(row);
        }
    }
    return rows;
}

void write_mm_coverage_csv(std::ostream& out, const std::vector<ManyMeansCoverageRow>& rows,
                           const std::vector<std::string>& comments) {
    for (const auto& c : comments) out << "# " << c << '\n';
    out << "gap,method,reps,coverage,mean_width,mc_se\n";
    for (const auto& r : rows) {
        out << format_double(r.gap) << ',' << (r.method == ManyMeansMethod::split ? "split" : "uniform")
            << ',' << r.reps << ',' << format_double(r.coverage) << ',' << format_double(r.mean_width)
            << ',' << format_double(r.mc_se) << '\n';
    }
}

} // namespace splitinf
