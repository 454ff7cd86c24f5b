#include "ptnn/shaping.hpp"

#include <algorithm>
#include <string>
#include <vector>

namespace ptnn {

namespace {

// Prime factors of n in nonincreasing order, by trial division.
std::vector<Index> prime_factors_descending(Index n) {
    std::vector<Index> factors;
    for (Index p = 2; p * p <= n; ++p) {
        while (n % p == 0) {
            factors.push_back(p);
            n /= p;
        }
    }
    if (n > 1) factors.push_back(n);
    std::sort(factors.begin(), factors.end(), std::greater<>());
    return factors;
}

}  // namespace

ShapePlan plan_shape(Index rows, Index cols, Index d_target) {
    if (rows < 1 || cols < 1) {
        throw BadDimensions("plan_shape needs positive matrix dimensions");
    }
    if (d_target < 2) {
        throw BadDimensions("plan_shape needs d_target >= 2");
    }
    const Index volume = rows * cols;
    if (volume < 2) {
        throw UnfactorableVolume("volume 1 admits no extents >= 2");
    }

    const std::vector<Index> factors = prime_factors_descending(volume);
    if (factors.size() < 2) {
        throw UnfactorableVolume("volume " + std::to_string(volume) +
                                 " is prime; layer stays dense");
    }

    std::vector<Index> buckets(static_cast<std::size_t>(d_target), 1);
    for (Index f : factors) {
        auto smallest = std::min_element(buckets.begin(), buckets.end());
        *smallest *= f;
    }

    Shape shape;
    for (Index b : buckets) {
        if (b > 1) shape.push_back(b);
    }
    std::sort(shape.begin(), shape.end());

    return ShapePlan{rows, cols, std::move(shape)};
}

DenseTensor fold(const Matrix& m, const ShapePlan& plan) {
    if (m.rows() != plan.original_rows || m.cols() != plan.original_cols) {
        throw ShapeMismatch("fold: matrix is " + std::to_string(m.rows()) + "x" +
                            std::to_string(m.cols()) + ", plan expects " +
                            std::to_string(plan.original_rows) + "x" +
                            std::to_string(plan.original_cols));
    }
    std::vector<double> data(m.data(), m.data() + m.size());
    return DenseTensor(plan.tensor_shape, std::move(data));
}

Matrix unfold(const DenseTensor& t, const ShapePlan& plan) {
    if (t.shape() != plan.tensor_shape) {
        throw ShapeMismatch("unfold: tensor shape does not match the plan");
    }
    return Eigen::Map<const Matrix>(t.data().data(), plan.original_rows, plan.original_cols);
}

}  // namespace ptnn
