#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "splitinf/error.hpp"
#include "splitinf/manymeans.hpp"
#include "splitinf/stats.hpp"

using namespace splitinf;

namespace {

Eigen::VectorXd spike(Index d, double a) {
    Eigen::VectorXd b = Eigen::VectorXd::Zero(d);
    b(0) = a;
    return b;
}

double median(std::vector<double> v) {
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2), v.end());
    return v[v.size() / 2];
}

} // namespace

TEST_SUITE("manymeans") {
    TEST_CASE("D=1 split is the one-sample z-interval on the second half") {
        const ManyMeansSample s = gaussian_many_means(Eigen::VectorXd::Constant(1, 0.3), 40, SeededRng(1));
        const ManyMeansResult r = mm_split(s, 0.05);
        CHECK(r.selected == 0);
        const Eigen::VectorXd half = s.y.bottomRows(20).col(0);
        const double m = half.mean();
        const double sd = std::sqrt((half.array() - m).square().sum() / 20.0);
        CHECK(r.estimate == doctest::Approx(m));
        CHECK(r.upper - r.estimate == doctest::Approx(1.959963984540054 * sd / std::sqrt(20.0)));
    }

    TEST_CASE("constant second half gives a zero-width interval") {
        ManyMeansSample s = gaussian_many_means(Eigen::VectorXd::Zero(3), 10, SeededRng(2));
        s.y.topRows(5).col(2).setConstant(100.0);
        s.y.bottomRows(5).col(2).setConstant(4.0);
        const ManyMeansResult r = mm_split(s, 0.05);
        CHECK(r.selected == 2);
        CHECK(r.lower == 4.0);
        CHECK(r.upper == 4.0);
    }

    TEST_CASE("a large gap is selected almost always") {
        int hits = 0;
        for (std::uint64_t seed = 0; seed < 300; ++seed)
            hits += mm_split(gaussian_many_means(spike(100, 5.0), 100, SeededRng(seed)), 0.05).selected == 0;
        CHECK(hits > 0.99 * 300);
    }

    TEST_CASE("argmax is scale invariant with ties to the lowest index") {
        std::mt19937_64 gen(3);
        std::normal_distribution<double> n;
        Eigen::VectorXd v(50);
        for (auto& e : v) e = n(gen);
        const Index j = argmax_lowest(v);
        CHECK(argmax_lowest(3.7 * v) == j);
        CHECK(argmax_lowest(1e-6 * v) == j);
        Eigen::VectorXd t(4);
        t << 1, 3, 3, 2;
        CHECK(argmax_lowest(t) == 1);
    }

    TEST_CASE("uniform interval with D=1 is close to the z-interval") {
        const ManyMeansSample s = gaussian_many_means(Eigen::VectorXd::Zero(1), 1000, SeededRng(4));
        const ManyMeansResult r = mm_uniform(s, 0.05, 4000, SeededRng(5));
        const double m = s.y.col(0).mean();
        const double sd = std::sqrt((s.y.col(0).array() - m).square().mean());
        const double z_half = 1.959963984540054 * sd / std::sqrt(1000.0);
        CHECK(std::abs(r.width() / 2.0 - z_half) < 0.1 * z_half);
        CHECK(r.lower <= r.estimate);
        CHECK(r.estimate <= r.upper);
    }

    TEST_CASE("uniform width grows with D") {
        std::vector<double> small, large;
        for (std::uint64_t seed = 0; seed < 100; ++seed) {
            small.push_back(mm_uniform(gaussian_many_means(Eigen::VectorXd::Zero(10), 100, SeededRng(seed)), 0.05, 200,
                                       SeededRng(seed + 1000)).width());
            large.push_back(mm_uniform(gaussian_many_means(Eigen::VectorXd::Zero(1000), 100, SeededRng(seed)), 0.05, 200,
                                       SeededRng(seed + 1000)).width());
        }
        CHECK(median(large) > median(small));
    }

    TEST_CASE("uniform is deterministic across thread counts") {
        const ManyMeansSample s = gaussian_many_means(spike(30, 0.5), 60, SeededRng(6));
        const ManyMeansResult a = mm_uniform(s, 0.1, 300, SeededRng(7), Exec::serial);
        const ManyMeansResult b = mm_uniform(s, 0.1, 300, SeededRng(7), Exec::parallel);
        CHECK(a.lower == b.lower);
        CHECK(a.upper == b.upper);
    }

    TEST_CASE("split coverage of the random target") {
        int hits = 0;
        const int reps = 500;
        for (int r = 0; r < reps; ++r)
            hits += mm_split(gaussian_many_means(spike(100, 0.2), 400, SeededRng(100 + static_cast<std::uint64_t>(r))), 0.05).covers();
        const double cov = static_cast<double>(hits) / reps;
        CHECK(cov >= 0.95 - 3.0 * std::sqrt(0.95 * 0.05 / reps));
    }

    TEST_CASE("risk at a=0 agrees with a full-data Monte-Carlo oracle") {
        // The oracle simulates all 2n rows and forms both estimators from
        // them directly; the experiment uses sufficient statistics.
        const Index d = 20, n = 10;
        const Index reps = 100000;
        std::mt19937_64 gen(8);
        std::normal_distribution<double> z;
        double ss = 0, sf = 0, ss2 = 0, sf2 = 0;
        Eigen::MatrixXd y(2 * n, d);
        for (Index r = 0; r < reps; ++r) {
            for (Index i = 0; i < 2 * n; ++i)
                for (Index j = 0; j < d; ++j) y(i, j) = z(gen);
            const Eigen::VectorXd first = y.topRows(n).colwise().mean().transpose();
            const Eigen::VectorXd second = y.bottomRows(n).colwise().mean().transpose();
            const Eigen::VectorXd all = y.colwise().mean().transpose();
            Index js = 0, jf = 0;
            first.maxCoeff(&js);
            all.maxCoeff(&jf);
            const double ls = second(js) * second(js), lf = all(jf) * all(jf);
            ss += ls;
            sf += lf;
            ss2 += ls * ls;
            sf2 += lf * lf;
        }
        const auto m = static_cast<double>(reps);
        const double os = ss / m, of = sf / m;
        const double ose = std::sqrt((ss2 / m - os * os) / m), ofe = std::sqrt((sf2 / m - of * of) / m);
        const auto rows = mm_risk_experiment(d, n, {0.0}, 100000, SeededRng(9));
        CHECK(std::abs(rows[0].risk_split - os) < 3.0 * std::hypot(ose, rows[0].se_split));
        CHECK(std::abs(rows[0].risk_nonsplit - of) < 3.0 * std::hypot(ofe, rows[0].se_nonsplit));
        // selection on independent data leaves an unbiased mean: risk 1/n
        CHECK(std::abs(rows[0].risk_split - 1.0 / n) < 3.0 * rows[0].se_split);
    }

    TEST_CASE("risk at a=10 approaches the variance of a mean") {
        const auto rows = mm_risk_experiment(1000, 50, {10.0}, 10000, SeededRng(10));
        CHECK(std::abs(rows[0].risk_split - 1.0 / 50) < 3.0 * rows[0].se_split);
        CHECK(std::abs(rows[0].risk_nonsplit - 1.0 / 100) < 3.0 * rows[0].se_nonsplit);
        CHECK(rows[0].risk_split >= rows[0].risk_nonsplit - 3.0 * rows[0].mc_se);
    }

    TEST_CASE("risk experiment is deterministic and emits one row per gap") {
        std::vector<double> gaps;
        for (int i = 0; i <= 12; ++i) gaps.push_back(0.25 * i);
        const auto a = mm_risk_experiment(50, 20, gaps, 200, SeededRng(11), Exec::serial);
        const auto b = mm_risk_experiment(50, 20, gaps, 200, SeededRng(11), Exec::parallel);
        REQUIRE(a.size() == 13);
        std::ostringstream oa, ob;
        write_risk_csv(oa, a);
        write_risk_csv(ob, b);
        CHECK(oa.str() == ob.str());
        CHECK(oa.str().rfind("gap,risk_split,risk_nonsplit,mc_se,reps\n", 0) == 0);
        CHECK_THROWS_AS(mm_risk_experiment(5, 5, {-1.0}, 10, SeededRng(1)), InvalidArgument);
    }

    TEST_CASE("coverage comparison runs both constructions") {
        const auto rows = mm_coverage_experiment(20, 30, {0.0, 1.0}, 40, 0.1, 200, SeededRng(12));
        REQUIRE(rows.size() == 4);
        CHECK(rows[0].method == ManyMeansMethod::split);
        CHECK(rows[1].method == ManyMeansMethod::uniform);
        for (const auto& r : rows) {
            CHECK(r.coverage >= 0.0);
            CHECK(r.coverage <= 1.0);
            CHECK(r.mean_width > 0.0);
        }
    }

    TEST_CASE("sample validation") {
        ManyMeansSample s;
        s.y = Eigen::MatrixXd::Zero(3, 2);
        s.beta = Eigen::VectorXd::Zero(2);
        CHECK_THROWS_AS(mm_split(s, 0.05), InvalidArgument);
    }
}
