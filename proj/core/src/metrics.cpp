#include "ptnn/metrics.hpp"

#include <algorithm>

namespace ptnn {

std::string_view to_string(GateDecision decision) {
    switch (decision) {
        case GateDecision::Compressed: return "compressed";
        case GateDecision::Skipped: return "skipped";
        case GateDecision::Unfactorable: return "unfactorable";
    }
    return "unknown";
}

LayerMetrics layer_metrics(std::string name, Index original_params, const TTCores& cores,
                           double relative_error) {
    if (original_params < 1) {
        throw BadDimensions("layer_metrics needs original_params >= 1");
    }
    LayerMetrics m;
    m.layer_name = std::move(name);
    m.original_params = original_params;
    m.compressed_params = tt_param_count(cores);
    m.space_saving =
        1.0 - static_cast<double>(m.compressed_params) / static_cast<double>(m.original_params);
    m.compression_ratio =
        static_cast<double>(m.original_params) / static_cast<double>(m.compressed_params);
    m.max_rank = *std::max_element(cores.ranks.begin(), cores.ranks.end());
    m.relative_error = relative_error;
    m.gate_decision = GateDecision::Compressed;
    return m;
}

LayerMetrics uncompressed_layer_metrics(std::string name, Index original_params,
                                        GateDecision decision) {
    if (original_params < 1) {
        throw BadDimensions("layer_metrics needs original_params >= 1");
    }
    LayerMetrics m;
    m.layer_name = std::move(name);
    m.original_params = original_params;
    m.compressed_params = original_params;
    m.space_saving = 0.0;
    m.compression_ratio = 1.0;
    m.max_rank = 1;
    m.relative_error = 0.0;
    m.gate_decision = decision;
    return m;
}

ModelMetrics model_metrics(std::vector<LayerMetrics> layers, Index total_params) {
    if (total_params < 1) {
        throw BadDimensions("model_metrics needs total_params >= 1");
    }
    Index layer_sum = 0;
    Index compressed_sum = 0;
    Index params_in_compressed = 0;
    Index saved = 0;
    for (const LayerMetrics& m : layers) {
        layer_sum += m.original_params;
        compressed_sum += m.compressed_params;
        if (m.gate_decision == GateDecision::Compressed) {
            params_in_compressed += m.original_params;
            saved += m.original_params - m.compressed_params;
        }
    }
    if (layer_sum > total_params) {
        throw InconsistentTotals("layer parameter sum " + std::to_string(layer_sum) +
                                 " exceeds model total " + std::to_string(total_params));
    }

    ModelMetrics mm;
    mm.layers = std::move(layers);
    mm.total_params = total_params;
    mm.params_in_compressed_layers = params_in_compressed;
    mm.model_memory_fraction_saved = static_cast<double>(saved) / static_cast<double>(total_params);
    mm.aggregate_space_saving =
        layer_sum == 0 ? 0.0
                       : 1.0 - static_cast<double>(compressed_sum) / static_cast<double>(layer_sum);
    return mm;
}

ComplexityEstimate complexity_estimate(const TTCores& cores) {
    ComplexityEstimate est;
    est.max_rank = *std::max_element(cores.ranks.begin(), cores.ranks.end());
    est.matvec_flops = 2 * tt_param_count(cores);
    return est;
}

}  // namespace ptnn
