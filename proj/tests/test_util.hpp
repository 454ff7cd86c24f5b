#pragma once

#include <vector>

#include "ptnn/rng.hpp"
#include "ptnn/tensor.hpp"

namespace ptnn::test {

inline DenseTensor random_tensor(Shape shape, SplitMix64& rng) {
    std::vector<double> data(static_cast<std::size_t>(shape_volume(shape)));
    for (double& x : data) x = rng.next_symmetric();
    return DenseTensor(std::move(shape), std::move(data));
}

inline Matrix random_matrix(Index rows, Index cols, SplitMix64& rng) {
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        for (Index j = 0; j < cols; ++j) m(i, j) = rng.next_symmetric();
    }
    return m;
}

inline double relative_error(const DenseTensor& a, const DenseTensor& b) {
    double diff = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i) {
        const double d = a.data()[i] - b.data()[i];
        diff += d * d;
    }
    const double norm = frobenius_norm(a);
    return norm > 0.0 ? std::sqrt(diff) / norm : std::sqrt(diff);
}

}  // namespace ptnn::test
