#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

#include "splitinf/rng.hpp"

namespace splitinf {

using Index = Eigen::Index;
using IndexList = std::vector<Index>;

/// Covariates x (n x d) and responses y (length n). Immutable once built;
/// construction rejects mismatched shapes and non-finite entries.
class Dataset {
public:
    Dataset(Eigen::MatrixXd x, Eigen::VectorXd y);

    [[nodiscard]] const Eigen::MatrixXd& x() const noexcept { return x_; }
    [[nodiscard]] const Eigen::VectorXd& y() const noexcept { return y_; }
    [[nodiscard]] Index rows() const noexcept { return x_.rows(); }
    [[nodiscard]] Index cols() const noexcept { return x_.cols(); }

    [[nodiscard]] Dataset select_rows(std::span<const Index> rows) const;
    [[nodiscard]] Dataset without_column(Index column) const;
    // Subtracts column means from x and the mean from y.
    [[nodiscard]] Dataset centered() const;

private:
    Eigen::MatrixXd x_;
    Eigen::VectorXd y_;
};

struct DataSplit {
    Dataset first;
    Dataset second;
    IndexList first_indices;
    IndexList second_indices;
};

/// Uniformly random permutation of 0..n-1 (Fisher-Yates with rejection
/// sampling, so the sequence depends only on the generator).
IndexList random_permutation(Index n, SeededRng& rng);

/// Uniform random halving. The first half receives the extra row when the
/// row count is odd; each half keeps parent row order.
DataSplit split(const Dataset& data, SeededRng rng);

/// Symmetric k x k matrix stored once as its half-vectorization.
class SymmetricMatrix {
public:
    explicit SymmetricMatrix(Index dim);
    // Reads the lower triangle of `m`; throws unless m is exactly symmetric.
    static SymmetricMatrix from_dense(const Eigen::MatrixXd& m);

    [[nodiscard]] Index dim() const noexcept { return dim_; }
    [[nodiscard]] double operator()(Index i, Index j) const;
    void set(Index i, Index j, double value);
    [[nodiscard]] Eigen::MatrixXd dense() const;
    [[nodiscard]] const Eigen::VectorXd& packed() const noexcept { return packed_; }

private:
    friend SymmetricMatrix unvech(const Eigen::VectorXd& v);
    [[nodiscard]] Index offset(Index i, Index j) const noexcept;

    Index dim_;
    Eigen::VectorXd packed_;
};

// Column-major lower triangle: (m11, m21, ..., mk1, m22, ..., mkk).
Eigen::VectorXd vech(const SymmetricMatrix& m);
// Same ordering, reading the lower triangle of a dense matrix.
Eigen::VectorXd vech_lower(const Eigen::MatrixXd& m);
SymmetricMatrix unvech(const Eigen::VectorXd& v);

constexpr Index triangular(Index k) noexcept { return k * (k + 1) / 2; }
// k with k(k+1)/2 == length, or -1 when length is not triangular.
Index triangular_root(Index length) noexcept;

} // namespace splitinf
