#pragma once

#include "ptnn/tensor.hpp"

namespace ptnn {

/// Volume-preserving factorization of a 2-D weight matrix into a d-way shape.
///
/// Invariants: product(tensor_shape) == original_rows * original_cols,
/// every extent >= 2, length(tensor_shape) >= 2.
struct ShapePlan {
    Index original_rows = 0;
    Index original_cols = 0;
    Shape tensor_shape;

    Index volume() const { return original_rows * original_cols; }
    Index order() const { return static_cast<Index>(tensor_shape.size()); }
};

/// Balanced factorization of rows*cols into d_target extents.
///
/// Rule: take the prime factorization of rows*cols and assign each prime,
/// largest first, to the bucket with the currently smallest product
/// (lowest index on ties). Empty buckets are dropped, so fewer than d_target
/// extents come back when the volume has fewer prime factors. The final
/// shape is sorted ascending. Deterministic for fixed inputs.
///
/// Throws UnfactorableVolume when no factorization with >= 2 extents exists
/// (prime volume, or volume 1); callers then keep the layer dense.
ShapePlan plan_shape(Index rows, Index cols, Index d_target);

/// Row-major reshape of the matrix into plan.tensor_shape; data unchanged.
DenseTensor fold(const Matrix& m, const ShapePlan& plan);

/// Inverse of fold: back to the (original_rows x original_cols) matrix.
Matrix unfold(const DenseTensor& t, const ShapePlan& plan);

}  // namespace ptnn
