#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "oracles.hpp"
#include "splitinf/error.hpp"
#include "splitinf/loco.hpp"
#include "splitinf/selection.hpp"
#include "splitinf/stats.hpp"

using namespace splitinf;

namespace {

SelectedModel one_covariate(double coef, Index leave_col, double leave_coef) {
    SelectedModel m;
    m.selected = {0};
    m.coefficients = Eigen::VectorXd::Constant(1, coef);
    m.leaveout[0] = LeaveOut{{leave_col}, Eigen::VectorXd::Constant(1, leave_coef)};
    m.k_max = 1;
    return m;
}

struct Fixture {
    Dataset first;
    Dataset second;
    SelectedModel model;
};

Fixture fitted(std::uint64_t seed, Index n = 200, Index d = 8, Index k = 3) {
    std::mt19937_64 gen(seed);
    const Eigen::MatrixXd x = oracle::random_matrix(2 * n, d, gen);
    const Eigen::VectorXd y = 1.5 * x.col(0) - x.col(1) + 0.5 * x.col(2) + oracle::random_matrix(2 * n, 1, gen).col(0);
    const Dataset all(x, y);
    IndexList a, b;
    for (Index i = 0; i < n; ++i) a.push_back(i);
    for (Index i = n; i < 2 * n; ++i) b.push_back(i);
    const Dataset first = all.select_rows(a);
    return {first, all.select_rows(b), select_topk(first, k)};
}

} // namespace

TEST_SUITE("loco") {
    TEST_CASE("config validation") {
        LocoConfig c;
        c.epsilon = -1;
        CHECK_THROWS_AS(c.validate(), InvalidArgument);
        c.epsilon = 0.1;
        c.tau = 0.0;
        CHECK_THROWS_AS(c.validate(), InvalidArgument);
        c.tau = 1.0;
        CHECK_NOTHROW(c.validate());
        CHECK(hard_threshold(5.0, 2.0) == 2.0);
        CHECK(hard_threshold(-5.0, 2.0) == -2.0);
        CHECK(hard_threshold(1.5, 2.0) == 1.5);
    }

    TEST_CASE("identical predictions give a zero column") {
        std::mt19937_64 gen(1);
        Eigen::MatrixXd x = oracle::random_matrix(20, 2, gen);
        x.col(1) = x.col(0);
        const DeltaMatrix dm = delta_matrix(one_covariate(2.0, 1, 2.0), Dataset(x, oracle::random_matrix(20, 1, gen).col(0)),
                                           LocoConfig::plain());
        CHECK(dm.values.cwiseAbs().maxCoeff() == 0.0);
        CHECK_FALSE(dm.noise_applied);
        CHECK_FALSE(dm.truncated);
    }

    TEST_CASE("hand arithmetic on one row") {
        Eigen::MatrixXd x(1, 2);
        x << 1.0, 1.0;
        const DeltaMatrix dm = delta_matrix(one_covariate(3.0, 1, 1.0), Dataset(x, Eigen::VectorXd::Constant(1, 3.0)),
                                           LocoConfig::plain());
        CHECK(dm.values(0, 0) == 2.0);
    }

    TEST_CASE("truncation applies to predictions") {
        Eigen::MatrixXd x(1, 2);
        x << 1.0, 1.0;
        LocoConfig c = LocoConfig::plain();
        c.tau = 2.0;
        // full prediction 3 is clipped to 2, leave-out prediction 1 is kept
        const DeltaMatrix dm = delta_matrix(one_covariate(3.0, 1, 1.0), Dataset(x, Eigen::VectorXd::Constant(1, 3.0)), c);
        CHECK(dm.values(0, 0) == 1.0);
        CHECK(dm.truncated);
    }

    TEST_CASE("noise is reproducible and bounded by epsilon") {
        const Fixture f = fitted(2);
        LocoConfig c = LocoConfig::defaults_for(f.first, SeededRng(5));
        const DeltaMatrix a = delta_matrix(f.model, f.second, c);
        const DeltaMatrix b = delta_matrix(f.model, f.second, c);
        CHECK(a.values == b.values);
        CHECK(a.noise_applied);
        c.rng = SeededRng(6);
        const DeltaMatrix other = delta_matrix(f.model, f.second, c);
        CHECK(other.values != a.values);
        LocoConfig quiet = c;
        quiet.epsilon = 0.0;
        quiet.include_noise = false;
        const DeltaMatrix base = delta_matrix(f.model, f.second, quiet);
        CHECK((a.values - base.values).cwiseAbs().maxCoeff() <= c.epsilon);
        CHECK((other.values - base.values).cwiseAbs().maxCoeff() <= c.epsilon);
        CHECK((a.values - base.values - c.epsilon * a.noise).cwiseAbs().maxCoeff() < 1e-12);
    }

    TEST_CASE("serial and parallel delta matrices agree") {
        const Fixture f = fitted(3);
        LocoConfig c = LocoConfig::defaults_for(f.first, SeededRng(1));
        c.exec = Exec::serial;
        const DeltaMatrix a = delta_matrix(f.model, f.second, c);
        c.exec = Exec::parallel;
        const DeltaMatrix b = delta_matrix(f.model, f.second, c);
        CHECK(a.values == b.values);
    }

    TEST_CASE("missing leave-out is an error") {
        SelectedModel m = one_covariate(1.0, 1, 1.0);
        m.leaveout.clear();
        CHECK_THROWS(delta_matrix(m, Dataset(Eigen::MatrixXd::Ones(3, 2), Eigen::VectorXd::Ones(3)), LocoConfig::plain()));
    }

    TEST_CASE("delta bound with truncation and noise") {
        for (std::uint64_t s = 0; s < 10; ++s) {
            const Fixture f = fitted(10 + s);
            LocoConfig c = LocoConfig::defaults_for(f.first, SeededRng(s));
            c.tau = 0.5;
            const DeltaMatrix dm = delta_matrix(f.model, f.second, c);
            const double a = f.second.y().cwiseAbs().maxCoeff();
            CHECK(dm.values.cwiseAbs().maxCoeff() <= 2.0 * (a + 0.5) + c.epsilon);
        }
    }

    TEST_CASE("estimate is the column mean") {
        DeltaMatrix dm;
        dm.values = Eigen::MatrixXd::Zero(5, 2);
        CHECK(loco_estimate(dm) == Eigen::VectorXd::Zero(2));
        dm.values.col(1).setConstant(1.25);
        CHECK(loco_estimate(dm)(1) == 1.25);
        std::mt19937_64 gen(4);
        dm.values = oracle::random_matrix(10, 3, gen);
        const Eigen::VectorXd est = loco_estimate(dm);
        for (Index j = 0; j < 3; ++j) {
            double s = 0.0;
            for (Index i = 0; i < 10; ++i) s += dm.values(i, j);
            const double mean = s / 10.0;
            double corr = 0.0;
            for (Index i = 0; i < 10; ++i) corr += dm.values(i, j) - mean;
            CHECK(std::abs(est(j) - (mean + corr / 10.0)) < 1e-14);
        }
    }

    TEST_CASE("covariance is PSD and positive definite with noise") {
        for (std::uint64_t s = 0; s < 100; ++s) {
            const Fixture f = fitted(1000 + s, 60, 6, 3);
            const DeltaMatrix dm = delta_matrix(f.model, f.second, LocoConfig::defaults_for(f.first, SeededRng(s)));
            const Eigen::MatrixXd cov = loco_covariance(dm);
            REQUIRE(cov == cov.transpose());
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
            REQUIRE(es.eigenvalues().minCoeff() > 0.0);
        }
    }

    TEST_CASE("normal intervals: equal diagonal matches the max-|Z| quantile") {
        // independent columns with equal variance: the cube radius is the
        // (1-alpha) quantile of the max of k independent |N(0, s2)|
        std::mt19937_64 gen(5);
        DeltaMatrix dm;
        dm.values = oracle::random_matrix(4000, 3, gen);
        dm.values.col(0) = dm.values.col(0);
        const Eigen::MatrixXd cov = loco_covariance(dm);
        const double n = 4000.0;
        const LocoIntervals li = loco_ci_normal(dm, 0.05, 200000, SeededRng(1));
        // oracle on the realized covariance diagonal's average
        const double s = std::sqrt(cov.diagonal().mean());
        const double t = s * normal_upper_quantile((1.0 - std::pow(0.95, 1.0 / 3.0)) / 2.0) / std::sqrt(n);
        CHECK(li.cube.widths()(0) / 2.0 == doctest::Approx(t).epsilon(0.03));
        for (Index j = 0; j < 3; ++j)
            CHECK(li.rect.widths()(j) / 2.0 == doctest::Approx(normal_upper_quantile(0.05 / 6.0) * std::sqrt(cov(j, j) / n)).epsilon(1e-12));
    }

    TEST_CASE("normal intervals: constant columns and k=1 reduction") {
        DeltaMatrix dm;
        dm.values = Eigen::MatrixXd::Constant(10, 2, 0.3);
        const LocoIntervals z = loco_ci_normal(dm, 0.1, 1000, SeededRng(1));
        CHECK(z.cube.widths().maxCoeff() == 0.0);
        CHECK(z.rect.widths().maxCoeff() == 0.0);
        std::mt19937_64 gen(6);
        dm.values = oracle::random_matrix(50, 1, gen);
        const LocoIntervals one = loco_ci_normal(dm, 0.05, 1000, SeededRng(1));
        const double mean = dm.values.mean();
        const double sd = std::sqrt((dm.values.array() - mean).square().mean());
        CHECK(one.rect.lower()(0) == doctest::Approx(mean - 1.959963984540054 * sd / std::sqrt(50.0)).epsilon(1e-12));
        CHECK(one.rect.upper()(0) == doctest::Approx(mean + 1.959963984540054 * sd / std::sqrt(50.0)).epsilon(1e-12));
    }

    TEST_CASE("bootstrap: duplicated triplet gives zero width") {
        DeltaMatrix dm;
        dm.values = Eigen::MatrixXd::Constant(8, 2, 0.7);
        dm.noise = Eigen::MatrixXd::Zero(8, 2);
        BootstrapConfig b;
        b.replicates = 200;
        const LocoBootIntervals li = loco_ci_boot(dm, b);
        CHECK(li.cube.widths().maxCoeff() == 0.0);
        CHECK(li.rect.widths().maxCoeff() == 0.0);
    }

    TEST_CASE("bootstrap: n=4 enumeration oracle") {
        DeltaMatrix dm;
        dm.values.resize(4, 1);
        dm.values << 0.3, -0.1, 0.9, 0.25;
        dm.noise = Eigen::MatrixXd::Zero(4, 1);
        const double mean = dm.values.mean();
        std::vector<double> exact = oracle::enumerate_resamples(4, [&](const std::vector<int>& idx) {
            double s = 0.0;
            for (int i : idx) s += dm.values(i, 0);
            return std::abs(2.0 * (s / 4.0 - mean));
        });
        BootstrapConfig b;
        b.replicates = 100000;
        b.rng = SeededRng(3);
        const LocoBootIntervals li = loco_ci_boot(dm, b);
        std::vector<double> boot;
        for (Index r = 0; r < li.draws.stats.rows(); ++r) boot.push_back(std::abs(li.draws.stats(r, 0)));
        CHECK(oracle::ks_distance(boot, exact) < 0.01);
        const double q = oracle::sorted_quantile(exact, 0.95);
        std::vector<double> atoms = exact;
        std::sort(atoms.begin(), atoms.end());
        atoms.erase(std::unique(atoms.begin(), atoms.end(), [](double a, double c) { return std::abs(a - c) < 1e-12; }), atoms.end());
        const auto pos = std::lower_bound(atoms.begin(), atoms.end(), q - 1e-12) - atoms.begin();
        const double lo = atoms[static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, pos - 1))];
        const double hi = atoms[static_cast<std::size_t>(std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(atoms.size()) - 1, pos + 1))];
        const double radius = (li.cube.upper()(0) - li.estimate(0)) * 2.0;
        CHECK(radius >= lo - 1e-9);
        CHECK(radius <= hi + 1e-9);
    }

    TEST_CASE("bootstrap intervals contain the estimate and reuse the noise") {
        const Fixture f = fitted(7);
        const LocoConfig c = LocoConfig::defaults_for(f.first, SeededRng(2));
        BootstrapConfig b;
        b.replicates = 500;
        const LocoBootIntervals li = loco_ci_boot(f.model, f.second, c, b);
        CHECK(li.cube.contains(li.estimate));
        CHECK(li.rect.contains(li.estimate));
        const DeltaMatrix dm = delta_matrix(f.model, f.second, c);
        CHECK(li.estimate == loco_estimate(dm));
        CHECK(loco_ci_boot(dm, b).draws.stats == li.draws.stats);
    }

    TEST_CASE("median ranks") {
        const auto [l, u] = median_ranks(100, 5, 0.05);
        CHECK(l == 34);
        CHECK(u == 66);
        CHECK(std::sqrt(50.0 * std::log(200.0)) == doctest::Approx(16.276).epsilon(1e-4));
        for (Index n : {1, 2, 3, 5, 10, 51, 400}) {
            const auto [a, b] = median_ranks(n, 3, 0.1);
            CHECK(a >= 1);
            CHECK(b <= n);
            CHECK(static_cast<double>(a) <= n / 2.0 + 0.5);
            CHECK(static_cast<double>(b) >= n / 2.0);
        }
        // tiny samples: the radical exceeds n/2 and both ends clamp
        const auto [a2, b2] = median_ranks(2, 1, 0.5);
        CHECK(a2 == 1);
        CHECK(b2 == 2);
    }

    TEST_CASE("median interval extracts order statistics") {
        DeltaMatrix dm;
        dm.values.resize(100, 1);
        for (Index i = 0; i < 100; ++i) dm.values(99 - i, 0) = static_cast<double>(i + 1);
        MedianIntervals mi = median_loco_ci(dm, 0.05 / 5.0 * 1.0);
        // k=1 at alpha=0.01 uses ln(200) just like k=5 at 0.05
        CHECK(mi.lower_rank == 34);
        CHECK(mi.ci.lower()(0) == 34.0);
        CHECK(mi.ci.upper()(0) == 66.0);
        CHECK(mi.estimate(0) == 50.5);
    }

    TEST_CASE("median interval endpoints are observed values") {
        const Fixture f = fitted(8, 101);
        const MedianIntervals mi = median_loco_ci(f.model, f.second, 0.1);
        const DeltaMatrix dm = delta_matrix(f.model, f.second, LocoConfig::plain());
        for (Index j = 0; j < dm.values.cols(); ++j) {
            const auto col = dm.values.col(j);
            CHECK(std::find(col.begin(), col.end(), mi.ci.lower()(j)) != col.end());
            CHECK(std::find(col.begin(), col.end(), mi.ci.upper()(j)) != col.end());
        }
        CHECK(mi.lower_rank <= 50);
        CHECK(mi.upper_rank >= 51);
    }

    TEST_CASE("permuting inference rows changes nothing with noise off") {
        const Fixture f = fitted(9);
        IndexList rev;
        for (Index i = f.second.rows() - 1; i >= 0; --i) rev.push_back(i);
        const Dataset flipped = f.second.select_rows(rev);
        const LocoConfig c = LocoConfig::plain();
        const DeltaMatrix a = delta_matrix(f.model, f.second, c), b = delta_matrix(f.model, flipped, c);
        CHECK((loco_estimate(a) - loco_estimate(b)).cwiseAbs().maxCoeff() < 1e-14);
        const LocoIntervals na = loco_ci_normal(a, 0.05, 2000, SeededRng(1)), nb = loco_ci_normal(b, 0.05, 2000, SeededRng(1));
        CHECK((na.rect.upper() - nb.rect.upper()).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((na.cube.upper() - nb.cube.upper()).cwiseAbs().maxCoeff() < 1e-12);
        const MedianIntervals ma = median_loco_ci(f.model, f.second, 0.05), mb = median_loco_ci(f.model, flipped, 0.05);
        CHECK(ma.ci.lower() == mb.ci.lower());
        CHECK(ma.ci.upper() == mb.ci.upper());
    }

    TEST_CASE("prediction interval") {
        Eigen::MatrixXd x(5, 1);
        x << 1, 2, 3, 4, 5;
        SelectedModel m = one_covariate(2.0, 0, 0.0);
        const PredictionInterval perfect = prediction_ci(m, Dataset(x, 2.0 * x.col(0)), 0.05);
        CHECK(perfect.ci.lower()(0) == 0.0);
        CHECK(perfect.ci.upper()(0) == 0.0);
        const PredictionInterval c = prediction_ci(m, Dataset(x, 2.0 * x.col(0) + Eigen::VectorXd::Constant(5, 0.75)), 0.05);
        CHECK(c.ci.lower()(0) == doctest::Approx(0.75));
        CHECK(c.ci.upper()(0) == doctest::Approx(0.75));

        std::mt19937_64 gen(10);
        const Index n = 10000;
        const Eigen::MatrixXd xs = oracle::random_matrix(n, 1, gen);
        const Eigen::VectorXd y = 2.0 * xs.col(0) + oracle::random_matrix(n, 1, gen).col(0);
        const PredictionInterval pi = prediction_ci(m, Dataset(xs, y), 0.05);
        CHECK(std::abs(pi.estimate - std::sqrt(2.0 / M_PI)) < 3.0 * pi.sd / std::sqrt(static_cast<double>(n)));
        CHECK(pi.ci.contains(0, pi.estimate));

        LocoConfig robust = LocoConfig::defaults_for(Dataset(xs, y), SeededRng(1));
        const PredictionInterval pr = prediction_ci(m, Dataset(xs, y), 0.05, robust);
        CHECK(std::abs(pr.estimate - pi.estimate) < robust.epsilon);
    }
}
