#include <algorithm>

#include <doctest.h>

#include "ptnn/engine.hpp"
#include "test_util.hpp"

using namespace ptnn;

namespace {

ModelBundle plain_bundle(std::initializer_list<std::pair<std::string, Shape>> layers,
                         SplitMix64& rng) {
    ModelBundle bundle;
    for (const auto& [name, shape] : layers) {
        bundle.add_tensor(name, test::random_tensor(shape, rng));
    }
    return bundle;
}

// Deterministic oracle for gate arithmetic: a pure function of the bundle
// that reports `modified` whenever the watched layer differs from the
// snapshot taken at construction.
class WatchOracle final : public AccuracyOracle {
public:
    WatchOracle(const ModelBundle& bundle, std::string layer, double pristine, double modified)
            : snapshot_(bundle.tensor(layer)),
              layer_(std::move(layer)),
              pristine_(pristine),
              modified_(modified) {}

    double evaluate(const ModelBundle& bundle) const override {
        return bundle.tensor(layer_) == snapshot_ ? pristine_ : modified_;
    }

private:
    DenseTensor snapshot_;
    std::string layer_;
    double pristine_;
    double modified_;
};

class ConstantOracle final : public AccuracyOracle {
public:
    explicit ConstantOracle(double value) : value_(value) {}
    double evaluate(const ModelBundle&) const override { return value_; }

private:
    double value_;
};

ToyGenOptions small_toy() {
    return ToyGenOptions{.vocab = 64, .seq_len = 4, .samples = 500};
}

}  // namespace

TEST_SUITE_BEGIN("engine");

TEST_CASE("gate arithmetic accepts inside and rejects outside the budget") {
    SplitMix64 rng(109);
    const ModelBundle bundle = plain_bundle({{"w", {8, 8}}}, rng);
    GateConfig config;
    config.epsilon = 0.5;
    config.accuracy_drop_tolerance = 0.05;
    // Small random layers usually inflate; the subject here is gate logic.
    config.skip_inflating_layers = false;

    SUBCASE("0.84 < 0.90 - 0.05: rejected and restored") {
        const WatchOracle oracle(bundle, "w", 0.90, 0.84);
        const CompressionResult result = run(bundle, oracle, config);
        REQUIRE(result.trace.records.size() == 1);
        const LayerRecord& record = result.trace.records[0];
        CHECK(record.decision == GateDecision::Skipped);
        CHECK(record.trial_accuracy == 0.84);
        CHECK(record.post_accuracy == record.pre_accuracy);
        CHECK(result.trace.final_accuracy == 0.90);
        CHECK(result.bundle.tensor("w") == bundle.tensor("w"));
        CHECK(result.checkpoints.empty());
        CHECK(record.metrics.compressed_params == record.metrics.original_params);
    }

    SUBCASE("0.87 >= 0.90 - 0.05: accepted") {
        const WatchOracle oracle(bundle, "w", 0.90, 0.87);
        const CompressionResult result = run(bundle, oracle, config);
        REQUIRE(result.trace.records.size() == 1);
        const LayerRecord& record = result.trace.records[0];
        CHECK(record.decision == GateDecision::Compressed);
        CHECK(record.post_accuracy == 0.87);
        CHECK(result.trace.final_accuracy == 0.87);
        REQUIRE(result.checkpoints.size() == 1);
        CHECK(result.checkpoints[0].layer == "w");
        CHECK_FALSE(result.bundle.tensor("w") == bundle.tensor("w"));
    }

    SUBCASE("boundary exactly at the floor is accepted") {
        const WatchOracle oracle(bundle, "w", 0.90, 0.85);
        const CompressionResult result = run(bundle, oracle, config);
        CHECK(result.trace.records[0].decision == GateDecision::Compressed);
    }
}

TEST_CASE("prime-volume layers are recorded unfactorable and kept dense") {
    SplitMix64 rng(113);
    const ModelBundle bundle = plain_bundle({{"odd", {13, 1}}, {"w", {8, 8}}}, rng);
    const ConstantOracle oracle(1.0);
    GateConfig config;
    config.skip_inflating_layers = false;
    const CompressionResult result = run(bundle, oracle, config);
    REQUIRE(result.trace.records.size() == 2);
    CHECK(result.trace.records[0].decision == GateDecision::Unfactorable);
    CHECK(result.bundle.tensor("odd") == bundle.tensor("odd"));
    CHECK(result.trace.records[1].decision == GateDecision::Compressed);
}

TEST_CASE("inflating layers are skipped before the oracle sees them") {
    SplitMix64 rng(127);
    // 2x2 at full rank stores 8 > 4 scalars: always inflates.
    const ModelBundle bundle = plain_bundle({{"tiny", {2, 2}}}, rng);

    GateConfig config;
    config.epsilon = 0.0;
    config.d_target = 2;

    const CompressionResult on = run(bundle, ConstantOracle(1.0), config);
    CHECK(on.trace.records[0].decision == GateDecision::Skipped);
    CHECK(on.bundle.tensor("tiny") == bundle.tensor("tiny"));

    config.skip_inflating_layers = false;
    const CompressionResult off = run(bundle, ConstantOracle(1.0), config);
    CHECK(off.trace.records[0].decision == GateDecision::Compressed);
    CHECK(off.trace.records[0].metrics.space_saving < 0.0);
}

TEST_CASE("planted low-rank toy bundle compresses losslessly end to end") {
    auto opts = small_toy();
    opts.noise_amplitude = 0.0;
    auto [bundle, data] = generate_toy_bundle(42, 4, 16, 4, opts);
    const ToyOracle oracle(data);

    GateConfig config;
    config.epsilon = 1e-10;
    const CompressionResult result = run(bundle, oracle, config);

    CHECK(result.trace.original_accuracy == 1.0);
    CHECK(result.trace.final_accuracy == 1.0);
    for (const LayerRecord& record : result.trace.records) {
        CHECK(record.decision == GateDecision::Compressed);
        CHECK(record.metrics.relative_error <= 1e-8);
    }
    // Planted rank-2 structure: every kept rank stays tiny.
    for (const CheckpointEntry& entry : result.checkpoints) {
        for (Index r : entry.cores.ranks) CHECK(r <= 2);
    }
}

TEST_CASE("gate soundness and rollback fidelity on the noisy toy bundle") {
    auto [bundle, data] = generate_toy_bundle(42, 4, 64, 10, ToyGenOptions{});
    const ToyOracle oracle(data);

    GateConfig config;  // reference defaults: epsilon 0.5, tolerance 0.05
    const CompressionResult result = run(bundle, oracle, config);

    CHECK(result.trace.original_accuracy == 1.0);
    CHECK(result.trace.final_accuracy >= 0.95);
    for (const LayerRecord& record : result.trace.records) {
        if (record.decision != GateDecision::Compressed) {
            CHECK(result.bundle.tensor(record.layer) == bundle.tensor(record.layer));
        }
    }

    // Checkpoint parameter count never exceeds the dense count.
    Index dense = 0, stored = 0;
    for (const LayerRecord& record : result.trace.records) {
        dense += record.metrics.original_params;
        stored += record.metrics.compressed_params;
    }
    CHECK(stored <= dense);
}

TEST_CASE("runs are deterministic") {
    auto [bundle, data] = generate_toy_bundle(7, 4, 16, 4, small_toy());
    const ToyOracle oracle(data);
    const CompressionResult a = run(bundle, oracle, GateConfig{});
    const CompressionResult b = run(bundle, oracle, GateConfig{});
    CHECK(a.bundle == b.bundle);
    REQUIRE(a.trace.records.size() == b.trace.records.size());
    for (std::size_t i = 0; i < a.trace.records.size(); ++i) {
        CHECK(a.trace.records[i].decision == b.trace.records[i].decision);
        CHECK(a.trace.records[i].post_accuracy == b.trace.records[i].post_accuracy);
        CHECK(a.trace.records[i].metrics.compressed_params ==
              b.trace.records[i].metrics.compressed_params);
    }
}

TEST_CASE("explicit layer order restricts and reorders the sweep") {
    auto [bundle, data] = generate_toy_bundle(9, 4, 16, 4, small_toy());
    const ToyOracle oracle(data);
    GateConfig config;
    config.layer_order = {"dense1", "embedding"};
    const CompressionResult result = run(bundle, oracle, config);
    REQUIRE(result.trace.records.size() == 2);
    CHECK(result.trace.records[0].layer == "dense1");
    CHECK(result.trace.records[1].layer == "embedding");
    CHECK(result.bundle.tensor("head") == bundle.tensor("head"));

    config.layer_order = {"missing"};
    CHECK_THROWS_AS(run(bundle, oracle, config), BadDimensions);
}

TEST_CASE("oracle failures propagate as OracleFailure") {
    SplitMix64 rng(131);
    const ModelBundle bundle = plain_bundle({{"w", {8, 8}}}, rng);

    class Throwing final : public AccuracyOracle {
        double evaluate(const ModelBundle&) const override {
            throw std::runtime_error("backend down");
        }
    };
    CHECK_THROWS_AS(run(bundle, Throwing{}, GateConfig{}), OracleFailure);

    CHECK_THROWS_AS(run(bundle, ConstantOracle(1.5), GateConfig{}), OracleFailure);
}

TEST_CASE("single-layer study restores the bundle and measures the drop") {
    auto opts = small_toy();
    opts.noise_amplitude = 0.0;
    auto [bundle, data] = generate_toy_bundle(15, 4, 16, 4, opts);
    const ModelBundle before = bundle;
    const ToyOracle oracle(data);

    GateConfig config;
    config.epsilon = 1e-10;

    SUBCASE("lossless layer: accuracy change 0") {
        const CompressionTrace trace = compress_single_layer(bundle, "dense0", config, oracle);
        REQUIRE(trace.records.size() == 1);
        CHECK(trace.records[0].trial_accuracy == 1.0);
        CHECK(trace.records[0].decision == GateDecision::Compressed);
        CHECK(bundle == before);
    }

    SUBCASE("per-layer results are order independent") {
        std::vector<std::string> names = bundle.names();
        std::vector<double> forward, backward;
        for (const std::string& name : names) {
            forward.push_back(
                compress_single_layer(bundle, name, config, oracle).records[0].trial_accuracy);
        }
        std::reverse(names.begin(), names.end());
        for (const std::string& name : names) {
            backward.push_back(
                compress_single_layer(bundle, name, config, oracle).records[0].trial_accuracy);
        }
        std::reverse(backward.begin(), backward.end());
        CHECK(forward == backward);
        CHECK(bundle == before);
    }

    SUBCASE("unknown layers are rejected") {
        CHECK_THROWS_AS(compress_single_layer(bundle, "nope", config, oracle), BadDimensions);
    }
}

TEST_SUITE_END();
