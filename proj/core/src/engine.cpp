#include "ptnn/engine.hpp"

#include <cmath>
#include <utility>

namespace ptnn {

namespace {

double checked_evaluate(const AccuracyOracle& oracle, const ModelBundle& bundle) {
    double accuracy = 0.0;
    try {
        accuracy = oracle.evaluate(bundle);
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        throw OracleFailure(std::string("accuracy oracle threw: ") + e.what());
    }
    if (!std::isfinite(accuracy) || accuracy < 0.0 || accuracy > 1.0) {
        throw OracleFailure("accuracy oracle returned a value outside [0, 1]");
    }
    return accuracy;
}

struct LayerAttempt {
    bool factorable = false;
    TTCores cores;
    ShapePlan plan;
    DenseTensor reconstructed = DenseTensor::zeros({1});
    double relative_error = 0.0;
};

// Fold -> TT-SVD -> reconstruct for one weight tensor. Weights of any order
// are planned through their first-mode matricization; the reconstruction
// keeps the tensor's original shape.
LayerAttempt attempt_layer(const DenseTensor& weight, const GateConfig& config) {
    const Index rows = weight.shape()[0];
    const Index cols = weight.volume() / rows;

    LayerAttempt attempt;
    try {
        attempt.plan = plan_shape(rows, cols, config.d_target);
    } catch (const UnfactorableVolume&) {
        return attempt;
    }
    attempt.factorable = true;

    const Matrix matrix = Eigen::Map<const Matrix>(weight.data().data(), rows, cols);
    attempt.cores = tt_svd(fold(matrix, attempt.plan), config.epsilon, config.sigma_rule);
    const Matrix back = unfold(tt_reconstruct(attempt.cores), attempt.plan);
    attempt.reconstructed =
        DenseTensor(weight.shape(), std::vector<double>(back.data(), back.data() + back.size()));

    double diff = 0.0;
    for (std::size_t i = 0; i < weight.data().size(); ++i) {
        const double delta = weight.data()[i] - attempt.reconstructed.data()[i];
        diff += delta * delta;
    }
    const double norm = frobenius_norm(weight);
    attempt.relative_error = norm > 0.0 ? std::sqrt(diff) / norm : 0.0;
    return attempt;
}

std::vector<std::string> resolve_order(const ModelBundle& bundle, const GateConfig& config) {
    const std::vector<std::string> order =
        config.layer_order.empty() ? bundle.names() : config.layer_order;
    for (const std::string& name : order) {
        if (!bundle.has_tensor(name)) {
            throw BadDimensions("layer order names unknown tensor '" + name + "'");
        }
    }
    return order;
}

}  // namespace

CompressionResult run(const ModelBundle& bundle, const AccuracyOracle& oracle,
                      const GateConfig& config) {
    CompressionResult result;
    result.bundle = bundle;

    const std::vector<std::string> order = resolve_order(bundle, config);
    const double original_accuracy = checked_evaluate(oracle, result.bundle);
    result.trace.original_accuracy = original_accuracy;
    const double floor = original_accuracy - config.accuracy_drop_tolerance;

    double running_accuracy = original_accuracy;
    for (const std::string& name : order) {
        const DenseTensor original = result.bundle.tensor(name);
        LayerRecord record;
        record.layer = name;
        record.pre_accuracy = running_accuracy;

        const LayerAttempt attempt = attempt_layer(original, config);
        if (!attempt.factorable) {
            record.decision = GateDecision::Unfactorable;
            record.post_accuracy = running_accuracy;
            record.trial_accuracy = running_accuracy;
            record.metrics =
                uncompressed_layer_metrics(name, original.volume(), GateDecision::Unfactorable);
            result.trace.records.push_back(std::move(record));
            continue;
        }

        const Index compressed_params = tt_param_count(attempt.cores);
        if (config.skip_inflating_layers && compressed_params > original.volume()) {
            record.decision = GateDecision::Skipped;
            record.post_accuracy = running_accuracy;
            record.trial_accuracy = running_accuracy;
            record.metrics =
                uncompressed_layer_metrics(name, original.volume(), GateDecision::Skipped);
            result.trace.records.push_back(std::move(record));
            continue;
        }

        result.bundle.set_tensor(name, attempt.reconstructed);
        const double trial = checked_evaluate(oracle, result.bundle);
        record.trial_accuracy = trial;

        if (trial >= floor) {
            record.decision = GateDecision::Compressed;
            record.post_accuracy = trial;
            record.metrics =
                layer_metrics(name, original.volume(), attempt.cores, attempt.relative_error);
            record.ranks = attempt.cores.ranks;
            result.checkpoints.push_back(CheckpointEntry{name, attempt.cores, attempt.plan});
            running_accuracy = trial;
        } else {
            result.bundle.set_tensor(name, original);
            record.decision = GateDecision::Skipped;
            record.post_accuracy = running_accuracy;
            record.metrics =
                uncompressed_layer_metrics(name, original.volume(), GateDecision::Skipped);
        }
        result.trace.records.push_back(std::move(record));
    }

    result.trace.final_accuracy = running_accuracy;
    return result;
}

CompressionTrace compress_single_layer(const ModelBundle& bundle, const std::string& layer,
                                       const GateConfig& config, const AccuracyOracle& oracle) {
    if (!bundle.has_tensor(layer)) {
        throw BadDimensions("bundle has no tensor named '" + layer + "'");
    }

    ModelBundle working = bundle;
    const DenseTensor original = working.tensor(layer);

    CompressionTrace trace;
    trace.original_accuracy = checked_evaluate(oracle, working);
    const double floor = trace.original_accuracy - config.accuracy_drop_tolerance;

    LayerRecord record;
    record.layer = layer;
    record.pre_accuracy = trace.original_accuracy;

    const LayerAttempt attempt = attempt_layer(original, config);
    if (!attempt.factorable) {
        record.decision = GateDecision::Unfactorable;
        record.post_accuracy = trace.original_accuracy;
        record.trial_accuracy = trace.original_accuracy;
        record.metrics =
            uncompressed_layer_metrics(layer, original.volume(), GateDecision::Unfactorable);
    } else {
        working.set_tensor(layer, attempt.reconstructed);
        const double trial = checked_evaluate(oracle, working);
        working.set_tensor(layer, original);  // always restore; study only measures

        record.trial_accuracy = trial;
        if (trial >= floor) {
            record.decision = GateDecision::Compressed;
            record.post_accuracy = trial;
            record.metrics =
                layer_metrics(layer, original.volume(), attempt.cores, attempt.relative_error);
            record.ranks = attempt.cores.ranks;
        } else {
            record.decision = GateDecision::Skipped;
            record.post_accuracy = trace.original_accuracy;
            record.metrics =
                uncompressed_layer_metrics(layer, original.volume(), GateDecision::Skipped);
        }
    }

    trace.final_accuracy = record.post_accuracy;
    trace.records.push_back(std::move(record));
    return trace;
}

}  // namespace ptnn
