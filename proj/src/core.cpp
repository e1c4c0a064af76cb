#include "splitinf/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "splitinf/error.hpp"

namespace splitinf {

Dataset::Dataset(Eigen::MatrixXd x, Eigen::VectorXd y) : x_(std::move(x)), y_(std::move(y)) {
    if (x_.rows() != y_.size()) {
        throw InvalidArgument("dataset: covariate rows (" + std::to_string(x_.rows()) +
                              ") differ from response length (" +
                              std::to_string(y_.size()) + ")");
    }
    if (!x_.allFinite() || !y_.allFinite()) {
        throw InvalidArgument("dataset: non-finite value in input");
    }
}

Dataset Dataset::select_rows(std::span<const Index> rows) const {
    Eigen::MatrixXd x(static_cast<Index>(rows.size()), x_.cols());
    Eigen::VectorXd y(static_cast<Index>(rows.size()));
    for (Index i = 0; i < static_cast<Index>(rows.size()); ++i) {
        const Index r = rows[static_cast<std::size_t>(i)];
        if (r < 0 || r >= x_.rows()) throw InvalidArgument("dataset: row index out of range");
        x.row(i) = x_.row(r);
        y(i) = y_(r);
    }
    return Dataset(std::move(x), std::move(y));
}

Dataset Dataset::without_column(Index column) const {
    if (column < 0 || column >= x_.cols()) throw InvalidArgument("dataset: column out of range");
    Eigen::MatrixXd x(x_.rows(), x_.cols() - 1);
    x.leftCols(column) = x_.leftCols(column);
    x.rightCols(x_.cols() - column - 1) = x_.rightCols(x_.cols() - column - 1);
    return Dataset(std::move(x), y_);
}

Dataset Dataset::centered() const {
    if (rows() == 0) return *this;
    Eigen::MatrixXd x = x_.rowwise() - x_.colwise().mean();
    Eigen::VectorXd y = y_.array() - y_.mean();
    return Dataset(std::move(x), std::move(y));
}

IndexList random_permutation(Index n, SeededRng& rng) {
    IndexList order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    for (Index i = n - 1; i > 0; --i) {
        const auto bound = static_cast<std::uint64_t>(i + 1);
        const std::uint64_t limit = SeededRng::max() - SeededRng::max() % bound;
        std::uint64_t draw = rng();
        while (draw >= limit) draw = rng();
        std::swap(order[static_cast<std::size_t>(i)],
                  order[static_cast<std::size_t>(draw % bound)]);
    }
    return order;
}

DataSplit split(const Dataset& data, SeededRng rng) {
    const Index n = data.rows();
    if (n < 2) throw InvalidArgument("insufficient data to split");
    const IndexList order = random_permutation(n, rng);
    const auto first_size = static_cast<std::size_t>((n + 1) / 2);
    IndexList first(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(first_size));
    IndexList second(order.begin() + static_cast<std::ptrdiff_t>(first_size), order.end());
    std::sort(first.begin(), first.end());
    std::sort(second.begin(), second.end());
    Dataset a = data.select_rows(first);
    Dataset b = data.select_rows(second);
    return DataSplit{std::move(a), std::move(b), std::move(first), std::move(second)};
}

SymmetricMatrix::SymmetricMatrix(Index dim) : dim_(dim), packed_(Eigen::VectorXd::Zero(triangular(dim))) {
    if (dim < 1) throw InvalidArgument("symmetric matrix: dimension must be positive");
}

SymmetricMatrix SymmetricMatrix::from_dense(const Eigen::MatrixXd& m) {
    if (m.rows() != m.cols()) throw InvalidArgument("symmetric matrix: not square");
    if (m != m.transpose()) throw InvalidArgument("symmetric matrix: input not symmetric");
    return unvech(vech_lower(m));
}

Index SymmetricMatrix::offset(Index i, Index j) const noexcept {
    if (i < j) std::swap(i, j);
    // Column j starts after columns 0..j-1 of lengths dim, dim-1, ...
    return j * dim_ - j * (j - 1) / 2 + (i - j);
}

double SymmetricMatrix::operator()(Index i, Index j) const { return packed_(offset(i, j)); }

void SymmetricMatrix::set(Index i, Index j, double value) { packed_(offset(i, j)) = value; }

Eigen::MatrixXd SymmetricMatrix::dense() const {
    Eigen::MatrixXd m(dim_, dim_);
    Index p = 0;
    for (Index j = 0; j < dim_; ++j) {
        for (Index i = j; i < dim_; ++i, ++p) {
            m(i, j) = packed_(p);
            m(j, i) = packed_(p);
        }
    }
    return m;
}

Eigen::VectorXd vech(const SymmetricMatrix& m) { return m.packed(); }

Eigen::VectorXd vech_lower(const Eigen::MatrixXd& m) {
    const Index k = m.rows();
    Eigen::VectorXd v(triangular(k));
    Index p = 0;
    for (Index j = 0; j < k; ++j)
        for (Index i = j; i < k; ++i) v(p++) = m(i, j);
    return v;
}

Index triangular_root(Index length) noexcept {
    if (length < 1) return -1;
    const auto k = static_cast<Index>(std::llround((std::sqrt(8.0 * static_cast<double>(length) + 1.0) - 1.0) / 2.0));
    return triangular(k) == length ? k : -1;
}

SymmetricMatrix unvech(const Eigen::VectorXd& v) {
    const Index k = triangular_root(v.size());
    if (k < 0) {
        throw InvalidArgument("unvech: length " + std::to_string(v.size()) +
                              " is not a triangular number");
    }
    SymmetricMatrix m(k);
    m.packed_ = v;
    return m;
}

} // namespace splitinf
