#pragma once

#include <utility>

#include <Eigen/Core>

#include "ptnn/tensor.hpp"

namespace ptnn {

/// Thin SVD factors M = u * diag(singular_values) * v^T.
///
/// Invariants (checked after every factorization):
///   - singular_values nonincreasing, all >= 0
///   - max|u^T u - I| <= 1e-10, max|v^T v - I| <= 1e-10
///   - ||M - u diag(s) v^T||_F <= 1e-10 * max(1, ||M||_F) for the full factorization
struct SvdResult {
    Matrix u;                         // m x k, orthonormal columns
    Eigen::VectorXd singular_values;  // k, nonincreasing
    Matrix v;                         // n x k, orthonormal columns

    Index rank() const { return singular_values.size(); }
};

/// Full (thin) SVD with k = min(rows, cols). Throws ConvergenceFailure when
/// the backend cannot meet the SvdResult tolerances, NonFiniteData on NaN/Inf
/// input, BadDimensions on empty matrices.
SvdResult full_svd(const Matrix& m);

/// sigma-truncation: the minimal rank r >= 1 such that the discarded tail
/// energy sqrt(sum_{i>r} s_i^2) is <= sigma, plus the factors cut to r
/// columns. r = 1 is the floor even when sigma exceeds the whole spectrum.
std::pair<SvdResult, Index> truncate(const SvdResult& res, double sigma);

}  // namespace ptnn
