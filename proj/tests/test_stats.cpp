#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "splitinf/stats.hpp"

using namespace splitinf;

TEST_SUITE("stats") {
    TEST_CASE("normal quantile inverts the erfc-based CDF") {
        for (double p = 1e-12; p < 1.0; p = p < 0.01 ? p * 3.0 : p + 0.0137) {
            const double z = normal_quantile(p);
            CHECK(oracle::phi(z) == doctest::Approx(p).epsilon(1e-9));
        }
    }

    TEST_CASE("tabulated upper quantiles") {
        CHECK(normal_upper_quantile(0.025) == doctest::Approx(1.959963984540054).epsilon(1e-12));
        CHECK(normal_upper_quantile(0.005) == doctest::Approx(2.5758293035489).epsilon(1e-10));
        CHECK(std::abs(normal_upper_quantile(0.005) - 2.5758) < 1e-4);
        CHECK(normal_quantile(0.5) == 0.0);
        CHECK(std::isinf(normal_quantile(0.0)));
        CHECK(normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-12));
    }

    TEST_CASE("order-statistic conventions") {
        CHECK(ceil_rank(0.95, 100) == 95);
        CHECK(ceil_rank(0.951, 100) == 96);
        CHECK(ceil_rank(0.0, 10) == 1);
        CHECK(ceil_rank(1.0, 10) == 10);
        // 0.7 * 10 is 7.000000000000001 in binary; the epsilon keeps rank 7
        CHECK(ceil_rank(0.7, 10) == 7);
        const std::vector<double> v{5, 1, 4, 2, 3};
        CHECK(order_statistic(v, 1) == 1);
        CHECK(order_statistic(v, 5) == 5);
        CHECK(upper_quantile(v, 0.2) == 4);
        CHECK(upper_quantile(v, 0.5) == 3);
    }

    TEST_CASE("psd square root clips negative eigenvalues") {
        Eigen::MatrixXd c(2, 2);
        c << 1, 2, 2, 1;  // eigenvalues 3, -1
        const Eigen::MatrixXd r = psd_sqrt(c);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(r * r);
        CHECK(es.eigenvalues().minCoeff() > -1e-12);
        CHECK(es.eigenvalues().maxCoeff() == doctest::Approx(3.0));
        std::mt19937_64 gen(2);
        const Eigen::MatrixXd s = oracle::random_spd(5, gen);
        const Eigen::MatrixXd rs = psd_sqrt(s);
        CHECK((rs * rs - s).cwiseAbs().maxCoeff() < 1e-12);
    }

    TEST_CASE("max of Gaussians: identity k=1 gives 1.96") {
        const auto norms = gaussian_sup_norms(Eigen::MatrixXd::Identity(1, 1), 100000, SeededRng(3), Exec::parallel);
        CHECK(std::abs(upper_quantile(norms, 0.05) - 1.959964) < 0.02);
    }

    TEST_CASE("max of Gaussians: equal diagonal matches the analytic max-|Z| quantile") {
        // P(max_j |Z_j| <= t) = (2 Phi(t) - 1)^k, so t = z_{(1 - (1-alpha)^{1/k})/2}.
        const int k = 4;
        const double s2 = 2.5;
        const auto norms = gaussian_sup_norms(s2 * Eigen::MatrixXd::Identity(k, k), 200000, SeededRng(9), Exec::parallel);
        const double exact = std::sqrt(s2) * normal_upper_quantile((1.0 - std::pow(0.95, 1.0 / k)) / 2.0);
        CHECK(upper_quantile(norms, 0.05) == doctest::Approx(exact).epsilon(0.01));
    }

    TEST_CASE("sup-norm draws are thread-count independent") {
        Eigen::MatrixXd c = Eigen::MatrixXd::Identity(3, 3);
        c(0, 1) = c(1, 0) = 0.4;
        const auto a = gaussian_sup_norms(c, 5000, SeededRng(1), Exec::serial);
        const auto b = gaussian_sup_norms(c, 5000, SeededRng(1), Exec::parallel);
        CHECK(a == b);
    }
}
