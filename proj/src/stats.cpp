#include "splitinf/stats.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "splitinf/error.hpp"

namespace splitinf {

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        if (p == 0.0) return -INFINITY;
        if (p == 1.0) return INFINITY;
        throw InvalidArgument("normal_quantile: probability outside [0, 1]");
    }
    const double q = p - 0.5;
    if (std::fabs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        return q *
               (((((((r * 2509.0809287301226727 + 33430.575583588128105) * r +
                     67265.770927008700853) * r + 45921.953931549871457) * r +
                   13731.693765509461125) * r + 1971.5909503065514427) * r +
                 133.14166789178437745) * r + 3.387132872796366608) /
               (((((((r * 5226.495278852545925 + 28729.085735721942674) * r +
                     39307.89580009271061) * r + 21213.794301586595867) * r +
                   5394.1960214247511077) * r + 687.1870074920579083) * r +
                 42.313330701600911252) * r + 1.0);
    }
    double r = q < 0.0 ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double value;
    if (r <= 5.0) {
        r -= 1.6;
        value = (((((((r * 7.7454501427834140764e-4 + 0.0227238449892691845833) * r +
                      0.24178072517745061177) * r + 1.27045825245236838258) * r +
                    3.64784832476320460504) * r + 5.7694972214606914055) * r +
                  4.6303378461565452959) * r + 1.42343711074968357734) /
                (((((((r * 1.05075007164441684324e-9 + 5.475938084995344946e-4) * r +
                      0.0151986665636164571966) * r + 0.14810397642748007459) * r +
                    0.68976733498510000455) * r + 1.6763848301838038494) * r +
                  2.05319162663775882187) * r + 1.0);
    } else {
        r -= 5.0;
        value = (((((((r * 2.01033439929228813265e-7 + 2.71155556874348757815e-5) * r +
                      0.0012426609473880784386) * r + 0.026532189526576123093) * r +
                    0.29656057182850489123) * r + 1.7848265399172913358) * r +
                  5.4637849111641143699) * r + 6.6579046435011037772) /
                (((((((r * 2.04426310338993978564e-15 + 1.4215117583164458887e-7) * r +
                      1.8463183175100546818e-5) * r + 7.868691311456132591e-4) * r +
                    0.0148753612908506148525) * r + 0.13692988092273580531) * r +
                  0.59983220655588793769) * r + 1.0);
    }
    return q < 0.0 ? -value : value;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

std::size_t ceil_rank(double prob, std::size_t count) {
    if (count == 0) throw InvalidArgument("ceil_rank: empty sample");
    const double x = prob * static_cast<double>(count);
    double r = std::ceil(x - 1e-9);
    r = std::clamp(r, 1.0, static_cast<double>(count));
    return static_cast<std::size_t>(r);
}

double order_statistic(std::vector<double> values, std::size_t rank) {
    if (rank < 1 || rank > values.size()) throw InvalidArgument("order_statistic: rank out of range");
    auto nth = values.begin() + static_cast<std::ptrdiff_t>(rank - 1);
    std::nth_element(values.begin(), nth, values.end());
    return *nth;
}

double upper_quantile(std::vector<double> values, double alpha) {
    const std::size_t rank = ceil_rank(1.0 - alpha, values.size());
    return order_statistic(std::move(values), rank);
}

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& cov) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    if (eig.info() != Eigen::Success) throw Error("psd_sqrt: eigendecomposition failed");
    const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
}

std::vector<double> gaussian_sup_norms(const Eigen::MatrixXd& cov, std::int64_t draws,
                                       const SeededRng& rng, Exec exec) {
    if (draws < 1) throw InvalidArgument("gaussian_sup_norms: need at least one draw");
    const Eigen::MatrixXd root = psd_sqrt(cov);
    const Eigen::Index k = root.rows();
    std::vector<double> out(static_cast<std::size_t>(draws));
    const std::int64_t chunks = (draws + kGaussianChunk - 1) / kGaussianChunk;
    for_each_index(exec, chunks, [&](std::int64_t c) {
        SeededRng local = rng.child(static_cast<std::uint64_t>(c));
        std::normal_distribution<double> normal;
        Eigen::VectorXd q(k);
        const std::int64_t begin = c * kGaussianChunk;
        const std::int64_t end = std::min(draws, begin + kGaussianChunk);
        for (std::int64_t i = begin; i < end; ++i) {
            for (Eigen::Index j = 0; j < k; ++j) q(j) = normal(local);
            out[static_cast<std::size_t>(i)] = (root * q).cwiseAbs().maxCoeff();
        }
    });
    return out;
}

} // namespace splitinf
