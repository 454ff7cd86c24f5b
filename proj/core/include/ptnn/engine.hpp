#pragma once

#include <string>
#include <vector>

#include "ptnn/metrics.hpp"
#include "ptnn/model_store.hpp"

namespace ptnn {

/// Knobs for the iterative accuracy-gated compression loop. Defaults are the
/// reference configuration: epsilon 0.5, a 5-percentage-point absolute
/// accuracy budget, and 4-way shape plans.
struct GateConfig {
    double epsilon = 0.5;
    double accuracy_drop_tolerance = 0.05;
    Index d_target = 4;
    std::vector<std::string> layer_order;  // empty: bundle order
    bool skip_inflating_layers = true;
    SigmaRule sigma_rule = SigmaRule::Paper;
};

/// Deterministic evaluation capability: the same bundle must always map to
/// the same accuracy, and evaluation of distinct bundles must be safe from
/// concurrent callers.
class AccuracyOracle {
public:
    virtual ~AccuracyOracle() = default;
    virtual double evaluate(const ModelBundle& bundle) const = 0;
};

/// Oracle backed by the toy forward pass over a fixed evaluation set.
class ToyOracle final : public AccuracyOracle {
public:
    explicit ToyOracle(ToyDataset data) : data_(std::move(data)) {}

    double evaluate(const ModelBundle& bundle) const override {
        return ptnn::evaluate(bundle, data_);
    }

    const ToyDataset& dataset() const { return data_; }

private:
    ToyDataset data_;
};

/// One gate decision. post_accuracy is the model state after the decision
/// (skipped layers restore it to pre_accuracy); trial_accuracy is what the
/// oracle measured with the layer compressed, when it was consulted.
struct LayerRecord {
    std::string layer;
    double pre_accuracy = 0.0;
    double post_accuracy = 0.0;
    double trial_accuracy = 0.0;
    GateDecision decision = GateDecision::Skipped;
    LayerMetrics metrics;
    std::vector<Index> ranks;  // full chain when a decomposition was kept
};

struct CompressionTrace {
    double original_accuracy = 0.0;
    double final_accuracy = 0.0;
    std::vector<LayerRecord> records;
};

struct CheckpointEntry {
    std::string layer;
    TTCores cores;
    ShapePlan plan;
};

struct CompressionResult {
    ModelBundle bundle;  // dense weights, compressed layers reconstructed
    std::vector<CheckpointEntry> checkpoints;  // TT form of the accepted layers
    CompressionTrace trace;
};

/// Iterative model tensorization: walk the layers in order, fold each weight
/// matrix to its shape plan, decompose at config.epsilon, reconstruct the
/// dense weight back into the bundle, and keep the layer only while the
/// cumulative accuracy stays within accuracy_drop_tolerance of the original.
/// Rejected layers are restored bitwise. Unfactorable layers stay dense.
CompressionResult run(const ModelBundle& bundle, const AccuracyOracle& oracle,
                      const GateConfig& config);

/// Individual-layer study: compress only the named layer from the pristine
/// bundle, measure, and restore. The caller's bundle is never modified.
CompressionTrace compress_single_layer(const ModelBundle& bundle, const std::string& layer,
                                       const GateConfig& config, const AccuracyOracle& oracle);

}  // namespace ptnn
