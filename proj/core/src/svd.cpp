#include "ptnn/svd.hpp"

#include <cmath>
#include <string>

#include <Eigen/SVD>

namespace ptnn {

namespace {

constexpr double kOrthTol = 1e-10;
constexpr double kReconstructTol = 1e-10;

// Divide-and-conquer is only worthwhile above Eigen's own crossover; Jacobi
// is the more accurate choice for small blocks.
constexpr Index kJacobiMaxDim = 16;

void check_contract(const Matrix& m, const SvdResult& res) {
    const Index k = res.rank();
    const double orth_u = (res.u.transpose() * res.u - Matrix::Identity(k, k)).cwiseAbs().maxCoeff();
    const double orth_v = (res.v.transpose() * res.v - Matrix::Identity(k, k)).cwiseAbs().maxCoeff();
    const double residual =
        (m - res.u * res.singular_values.asDiagonal() * res.v.transpose()).norm();
    const double bound = kReconstructTol * std::max(1.0, m.norm());
    if (orth_u > kOrthTol || orth_v > kOrthTol || residual > bound) {
        throw ConvergenceFailure("SVD backend missed contract tolerances (orth_u=" +
                                 std::to_string(orth_u) + ", orth_v=" + std::to_string(orth_v) +
                                 ", residual=" + std::to_string(residual) + ")");
    }
    for (Index i = 0; i + 1 < k; ++i) {
        if (res.singular_values[i] < res.singular_values[i + 1]) {
            throw ConvergenceFailure("SVD backend returned unsorted singular values");
        }
    }
    if (k > 0 && res.singular_values[k - 1] < 0.0) {
        throw ConvergenceFailure("SVD backend returned a negative singular value");
    }
}

}  // namespace

SvdResult full_svd(const Matrix& m) {
    if (m.rows() < 1 || m.cols() < 1) {
        throw BadDimensions("full_svd needs both matrix dimensions >= 1");
    }
    if (!m.allFinite()) {
        throw NonFiniteData("full_svd input contains NaN or Inf");
    }

    SvdResult res;
    if (std::min(m.rows(), m.cols()) <= kJacobiMaxDim) {
        Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
        if (svd.info() != Eigen::Success) {
            throw ConvergenceFailure("Jacobi SVD did not converge");
        }
        res = SvdResult{svd.matrixU(), svd.singularValues(), svd.matrixV()};
    } else {
        Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
        if (svd.info() != Eigen::Success) {
            throw ConvergenceFailure("BDC SVD did not converge");
        }
        res = SvdResult{svd.matrixU(), svd.singularValues(), svd.matrixV()};
    }
    check_contract(m, res);
    return res;
}

std::pair<SvdResult, Index> truncate(const SvdResult& res, double sigma) {
    if (sigma < 0.0 || !std::isfinite(sigma)) {
        throw BadDimensions("truncation threshold sigma must be finite and >= 0");
    }
    const Index k = res.rank();
    if (k < 1) {
        throw BadDimensions("truncate needs at least one singular value");
    }

    // tail[r] = sum_{i >= r} s_i^2, accumulated from the smallest values up.
    std::vector<double> tail(static_cast<std::size_t>(k) + 1, 0.0);
    for (Index i = k - 1; i >= 0; --i) {
        tail[static_cast<std::size_t>(i)] =
            tail[static_cast<std::size_t>(i) + 1] + res.singular_values[i] * res.singular_values[i];
    }

    Index rank = k;
    for (Index r = 1; r <= k; ++r) {
        if (std::sqrt(tail[static_cast<std::size_t>(r)]) <= sigma) {
            rank = r;
            break;
        }
    }

    SvdResult cut;
    cut.u = res.u.leftCols(rank);
    cut.singular_values = res.singular_values.head(rank);
    cut.v = res.v.leftCols(rank);
    return {std::move(cut), rank};
}

}  // namespace ptnn
