#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "ptnn/tt.hpp"

namespace ptnn {

enum class GateDecision { Compressed, Skipped, Unfactorable };

std::string_view to_string(GateDecision decision);

/// Per-layer compression accounting. Parameter counts are exact integers;
/// space_saving == 1 - compressed/original and compression_ratio ==
/// original/compressed are derived from them, never from byte sizes.
/// gate_decision == Skipped or Unfactorable implies compressed_params ==
/// original_params (the layer stays dense).
struct LayerMetrics {
    std::string layer_name;
    Index original_params = 0;
    Index compressed_params = 0;
    double space_saving = 0.0;
    double compression_ratio = 1.0;
    Index max_rank = 1;
    double relative_error = 0.0;
    GateDecision gate_decision = GateDecision::Skipped;
};

struct ModelMetrics {
    std::vector<LayerMetrics> layers;
    Index total_params = 0;
    Index params_in_compressed_layers = 0;
    // sum over compressed layers of space_saving_i * original_params_i,
    // divided by total_params.
    double model_memory_fraction_saved = 0.0;
    // 1 - (compressed params / original params) over all traced layers.
    double aggregate_space_saving = 0.0;
};

LayerMetrics layer_metrics(std::string name, Index original_params, const TTCores& cores,
                           double relative_error);

/// Metrics for a layer left dense (skipped by the gate or unfactorable).
LayerMetrics uncompressed_layer_metrics(std::string name, Index original_params,
                                        GateDecision decision);

/// Aggregates per-layer metrics. Throws InconsistentTotals when the layer
/// parameter sum exceeds total_params.
ModelMetrics model_metrics(std::vector<LayerMetrics> layers, Index total_params);

/// max rank plus the flop count of applying the core chain to a vector,
/// 2 * sum_j r_{j-1} n_j r_j (the O(d n r^2) estimate).
struct ComplexityEstimate {
    Index max_rank = 1;
    Index matvec_flops = 0;
};

ComplexityEstimate complexity_estimate(const TTCores& cores);

}  // namespace ptnn
