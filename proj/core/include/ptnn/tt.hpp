#pragma once

#include <vector>

#include "ptnn/tensor.hpp"

namespace ptnn {

/// Scaling of the per-step SVD truncation threshold derived from the global
/// relative error bound epsilon. Paper keeps the stricter epsilon/(d-1);
/// Standard is the canonical epsilon/sqrt(d-1). Both satisfy the epsilon
/// relative-error guarantee.
enum class SigmaRule { Paper, Standard };

/// Tensor-train representation: d cores, core j shaped
/// (ranks[j], mode_sizes[j], ranks[j+1]) with ranks[0] == ranks[d] == 1.
struct TTCores {
    std::vector<DenseTensor> cores;
    std::vector<Index> ranks;       // length d+1
    std::vector<Index> mode_sizes;  // length d
    double epsilon_used = 0.0;

    Index order() const { return static_cast<Index>(mode_sizes.size()); }
};

/// Enforces the TTCores invariants: boundary ranks 1, core shapes matching
/// the rank chain, and each rank within the matricization cap
/// min(prod(modes[0..j]), prod(modes[j..d])). Throws on violation.
void validate(const TTCores& tt);

/// TT-SVD: sweeps d-1 sigma-truncated SVDs over reshaped carry matrices with
/// sigma derived from epsilon and ||y||_F per the chosen rule. Guarantees
/// ||y - tt_reconstruct(result)||_F <= epsilon * ||y||_F.
TTCores tt_svd(const DenseTensor& y, double epsilon, SigmaRule rule = SigmaRule::Paper);

/// Contracts the core chain back to a dense tensor:
/// W[i_1..i_d] = sum over (l_0..l_d) of G_1[l_0,i_1,l_1] ... G_d[l_{d-1},i_d,l_d].
DenseTensor tt_reconstruct(const TTCores& tt);

/// Scalars stored across all cores: sum_j r_{j-1} * n_j * r_j.
Index tt_param_count(const TTCores& tt);

}  // namespace ptnn
