#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "ptnn/errors.hpp"

namespace ptnn {

using Index = std::int64_t;
using Shape = std::vector<Index>;

/// All matrices in this library are row-major to match DenseTensor layout,
/// so Eigen::Map over tensor data is always valid without copies.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Dense d-way tensor of 64-bit reals, row-major (last index fastest).
///
/// Values are immutable after construction; all operations below are pure
/// functions returning new tensors, safe to call concurrently.
///
/// Invariants enforced at construction:
///   - d >= 1 and every extent >= 1
///   - product(shape) == data length
///   - every scalar finite
class DenseTensor {
public:
    DenseTensor(Shape shape, std::vector<double> data);

    static DenseTensor zeros(Shape shape);

    const Shape& shape() const { return shape_; }
    Index ndim() const { return static_cast<Index>(shape_.size()); }
    Index volume() const { return static_cast<Index>(data_.size()); }
    const std::vector<double>& data() const { return data_; }

    /// Bitwise equality of shape and payload (distinguishes -0.0 from 0.0).
    bool operator==(const DenseTensor& other) const;

private:
    Shape shape_;
    std::vector<double> data_;
};

/// Product of extents; throws BadDimensions on empty or non-positive extents.
Index shape_volume(const Shape& shape);

/// Reinterpret the same row-major data under a new shape. The data sequence
/// is reused bitwise unchanged. Throws VolumeMismatch if products differ.
DenseTensor reshape(const DenseTensor& t, Shape new_shape);

/// sqrt of the sum of squared elements.
double frobenius_norm(const DenseTensor& t);

/// First-mode matricization: the (n_1 x volume/n_1) row-major matrix holding
/// the same data. Throws RankTooLow for d < 2.
Matrix matricize_first(const DenseTensor& t);

}  // namespace ptnn
