#include "ptnn/tensor.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

namespace ptnn {

namespace {

std::string shape_to_string(const Shape& shape) {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i > 0) os << ",";
        os << shape[i];
    }
    os << ")";
    return os.str();
}

}  // namespace

Index shape_volume(const Shape& shape) {
    if (shape.empty()) {
        throw BadDimensions("tensor shape must have at least one mode");
    }
    Index volume = 1;
    for (Index extent : shape) {
        if (extent < 1) {
            throw BadDimensions("tensor extents must be >= 1, got shape " +
                                shape_to_string(shape));
        }
        volume *= extent;
    }
    return volume;
}

DenseTensor::DenseTensor(Shape shape, std::vector<double> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
    const Index volume = shape_volume(shape_);
    if (volume != static_cast<Index>(data_.size())) {
        throw VolumeMismatch("shape " + shape_to_string(shape_) + " holds " +
                             std::to_string(volume) + " scalars, got " +
                             std::to_string(data_.size()));
    }
    for (double x : data_) {
        if (!std::isfinite(x)) {
            throw NonFiniteData("tensor data contains NaN or Inf");
        }
    }
}

DenseTensor DenseTensor::zeros(Shape shape) {
    const Index volume = shape_volume(shape);
    return DenseTensor(std::move(shape), std::vector<double>(static_cast<std::size_t>(volume), 0.0));
}

bool DenseTensor::operator==(const DenseTensor& other) const {
    return shape_ == other.shape_ &&
           std::memcmp(data_.data(), other.data_.data(), data_.size() * sizeof(double)) == 0;
}

DenseTensor reshape(const DenseTensor& t, Shape new_shape) {
    if (shape_volume(new_shape) != t.volume()) {
        throw VolumeMismatch("reshape from " + shape_to_string(t.shape()) + " to " +
                             shape_to_string(new_shape) + " changes volume");
    }
    return DenseTensor(std::move(new_shape), t.data());
}

double frobenius_norm(const DenseTensor& t) {
    double sum = 0.0;
    for (double x : t.data()) sum += x * x;
    return std::sqrt(sum);
}

Matrix matricize_first(const DenseTensor& t) {
    if (t.ndim() < 2) {
        throw RankTooLow("matricize_first needs d >= 2, got d = " + std::to_string(t.ndim()));
    }
    const Index rows = t.shape()[0];
    const Index cols = t.volume() / rows;
    return Eigen::Map<const Matrix>(t.data().data(), rows, cols);
}

}  // namespace ptnn
