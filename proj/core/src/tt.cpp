#include "ptnn/tt.hpp"

#include <cmath>
#include <string>

#include "ptnn/svd.hpp"

namespace ptnn {

void validate(const TTCores& tt) {
    const Index d = tt.order();
    if (d < 1) {
        throw BadDimensions("TTCores needs at least one core");
    }
    if (static_cast<Index>(tt.cores.size()) != d ||
        static_cast<Index>(tt.ranks.size()) != d + 1) {
        throw BadDimensions("TTCores core/rank chain lengths disagree");
    }
    if (tt.ranks.front() != 1 || tt.ranks.back() != 1) {
        throw BadDimensions("TT boundary ranks must both be 1");
    }
    for (Index j = 0; j < d; ++j) {
        const Shape expected{tt.ranks[j], tt.mode_sizes[j], tt.ranks[j + 1]};
        if (tt.cores[static_cast<std::size_t>(j)].shape() != expected) {
            throw ShapeMismatch("core " + std::to_string(j) +
                                " shape does not match the rank chain");
        }
    }
    // Matricization rank cap: r_j <= min(prod(n_1..n_j), prod(n_{j+1}..n_d)).
    Index left = 1;
    std::vector<Index> right(static_cast<std::size_t>(d) + 1, 1);
    for (Index j = d - 1; j >= 0; --j) {
        right[static_cast<std::size_t>(j)] =
            right[static_cast<std::size_t>(j) + 1] * tt.mode_sizes[j];
    }
    for (Index j = 1; j < d; ++j) {
        left *= tt.mode_sizes[j - 1];
        const Index cap = std::min(left, right[static_cast<std::size_t>(j)]);
        if (tt.ranks[j] > cap || tt.ranks[j] < 1) {
            throw BadDimensions("rank r_" + std::to_string(j) + " = " +
                                std::to_string(tt.ranks[j]) + " outside [1, " +
                                std::to_string(cap) + "]");
        }
    }
}

TTCores tt_svd(const DenseTensor& y, double epsilon, SigmaRule rule) {
    if (y.ndim() < 2) {
        throw RankTooLow("tt_svd needs a tensor with d >= 2 modes");
    }
    if (epsilon < 0.0 || !std::isfinite(epsilon)) {
        throw BadDimensions("tt_svd needs a finite epsilon >= 0");
    }

    const Index d = y.ndim();
    const Shape& modes = y.shape();
    const double norm = frobenius_norm(y);
    const double denom =
        rule == SigmaRule::Paper ? static_cast<double>(d - 1) : std::sqrt(static_cast<double>(d - 1));
    const double sigma = epsilon / denom * norm;

    TTCores tt;
    tt.mode_sizes = modes;
    tt.ranks.assign(static_cast<std::size_t>(d) + 1, 1);
    tt.epsilon_used = epsilon;
    tt.cores.reserve(static_cast<std::size_t>(d));

    // Carry starts as the first-mode matricization (n_1 x volume/n_1); each
    // sweep step re-reads it row-major as (r_{j-1} n_j x rest).
    Matrix carry = matricize_first(y);

    for (Index j = 1; j <= d - 1; ++j) {
        const Index rows = tt.ranks[static_cast<std::size_t>(j - 1)] * modes[j - 1];
        const Index cols = carry.size() / rows;
        const Matrix w = Eigen::Map<const Matrix>(carry.data(), rows, cols);

        auto [cut, rank] = truncate(full_svd(w), sigma);
        tt.ranks[static_cast<std::size_t>(j)] = rank;

        const Matrix u = cut.u;  // rows x rank, row-major
        tt.cores.emplace_back(Shape{tt.ranks[static_cast<std::size_t>(j - 1)], modes[j - 1], rank},
                              std::vector<double>(u.data(), u.data() + u.size()));

        carry = cut.singular_values.asDiagonal() * cut.v.transpose();
    }

    // Remaining carry is (r_{d-1} x n_d); the last core just adds rank r_d = 1.
    tt.cores.emplace_back(Shape{tt.ranks[static_cast<std::size_t>(d - 1)], modes[d - 1], 1},
                          std::vector<double>(carry.data(), carry.data() + carry.size()));

    validate(tt);
    return tt;
}

DenseTensor tt_reconstruct(const TTCores& tt) {
    validate(tt);
    const Index d = tt.order();

    // Chain of matrix products. The running carry is
    // (n_1 ... n_j x r_j) row-major, so reinterpreting it as
    // (n_1 ... n_j n_{j+1}-grouped rows is a pure relabeling.
    const DenseTensor& first = tt.cores.front();
    Matrix carry = Eigen::Map<const Matrix>(first.data().data(), tt.mode_sizes[0], tt.ranks[1]);
    for (Index j = 1; j < d; ++j) {
        const DenseTensor& core = tt.cores[static_cast<std::size_t>(j)];
        const Eigen::Map<const Matrix> right(core.data().data(), tt.ranks[static_cast<std::size_t>(j)],
                                             tt.mode_sizes[static_cast<std::size_t>(j)] *
                                                 tt.ranks[static_cast<std::size_t>(j) + 1]);
        Matrix next = carry * right;
        carry = Eigen::Map<const Matrix>(next.data(), next.rows() * tt.mode_sizes[static_cast<std::size_t>(j)],
                                         tt.ranks[static_cast<std::size_t>(j) + 1]);
    }

    return DenseTensor(tt.mode_sizes, std::vector<double>(carry.data(), carry.data() + carry.size()));
}

Index tt_param_count(const TTCores& tt) {
    validate(tt);
    Index count = 0;
    for (const DenseTensor& core : tt.cores) count += core.volume();
    return count;
}

}  // namespace ptnn
