#include <cmath>
#include <string>

#include "ptnn/model_store.hpp"
#include "ptnn/rng.hpp"

namespace ptnn {

namespace {

using ConstMap = Eigen::Map<const Matrix>;

ConstMap weight_matrix(const ModelBundle& bundle, const std::string& name, Index rows,
                       Index cols) {
    const DenseTensor& t = bundle.tensor(name);
    if (t.ndim() != 2 || t.shape()[0] != rows || t.shape()[1] != cols) {
        throw ShapeMismatch("layer '" + name + "' is not the expected " + std::to_string(rows) +
                            "x" + std::to_string(cols) + " matrix");
    }
    return ConstMap(t.data().data(), rows, cols);
}

// Low-TT-rank base plus small dense noise, everything drawn from the shared
// generator in a fixed order so the bundle is a pure function of the seed.
DenseTensor plant_weight(SplitMix64& rng, Index rows, Index cols, const ToyGenOptions& opts) {
    ShapePlan plan;
    try {
        plan = plan_shape(rows, cols, opts.d_target);
    } catch (const UnfactorableVolume&) {
        throw BadDimensions("toy layer " + std::to_string(rows) + "x" + std::to_string(cols) +
                            " has prime volume; pick factorable dimensions");
    }

    const Index d = plan.order();
    TTCores tt;
    tt.mode_sizes = plan.tensor_shape;
    tt.ranks.assign(static_cast<std::size_t>(d) + 1, 1);
    tt.epsilon_used = 0.0;

    // Interior ranks: the plant rank clipped to the matricization cap.
    Index left = 1;
    std::vector<Index> right(static_cast<std::size_t>(d) + 1, 1);
    for (Index j = d - 1; j >= 0; --j) {
        right[static_cast<std::size_t>(j)] =
            right[static_cast<std::size_t>(j) + 1] * plan.tensor_shape[j];
    }
    for (Index j = 1; j < d; ++j) {
        left *= plan.tensor_shape[j - 1];
        tt.ranks[static_cast<std::size_t>(j)] =
            std::min(opts.plant_rank, std::min(left, right[static_cast<std::size_t>(j)]));
    }

    for (Index j = 0; j < d; ++j) {
        const Index volume =
            tt.ranks[static_cast<std::size_t>(j)] * plan.tensor_shape[j] * tt.ranks[static_cast<std::size_t>(j) + 1];
        std::vector<double> data(static_cast<std::size_t>(volume));
        for (double& x : data) x = rng.next_symmetric();
        tt.cores.emplace_back(
            Shape{tt.ranks[static_cast<std::size_t>(j)], plan.tensor_shape[j],
                  tt.ranks[static_cast<std::size_t>(j) + 1]},
            std::move(data));
    }

    const DenseTensor base_tensor = tt_reconstruct(tt);
    std::vector<double> data = base_tensor.data();
    const double norm = frobenius_norm(base_tensor);
    const double rms = norm > 0.0 ? norm / std::sqrt(static_cast<double>(data.size())) : 1.0;
    for (double& x : data) x += opts.noise_amplitude * rms * rng.next_symmetric();

    return DenseTensor(Shape{rows, cols}, std::move(data));
}

std::vector<Index> predict(const ModelBundle& bundle, const ToyDataset& data) {
    if (!bundle.architecture) {
        throw ShapeMismatch("bundle carries no toy architecture descriptor");
    }
    const ToyArchitecture& arch = *bundle.architecture;
    if (data.seq_len != arch.seq_len || data.n_classes != arch.classes) {
        throw ShapeMismatch("dataset geometry does not match the bundle architecture");
    }
    const Index samples = data.samples();

    const ConstMap embedding = weight_matrix(bundle, arch.layer_names.front(), arch.vocab, arch.width);

    // Mean-pool the embedded tokens per sample.
    Matrix h(samples, arch.width);
    for (Index s = 0; s < samples; ++s) {
        Eigen::RowVectorXd pooled = Eigen::RowVectorXd::Zero(arch.width);
        for (Index t = 0; t < data.seq_len; ++t) {
            const Index token = data.tokens[static_cast<std::size_t>(s * data.seq_len + t)];
            if (token < 0 || token >= arch.vocab) {
                throw ShapeMismatch("token id " + std::to_string(token) + " outside the vocabulary");
            }
            pooled += embedding.row(token);
        }
        h.row(s) = pooled / static_cast<double>(data.seq_len);
    }

    for (std::size_t i = 1; i + 1 < arch.layer_names.size(); ++i) {
        const ConstMap w = weight_matrix(bundle, arch.layer_names[i], arch.width, arch.width);
        h = (h * w).cwiseMax(0.0);
    }

    const ConstMap head = weight_matrix(bundle, arch.layer_names.back(), arch.width, arch.classes);
    const Matrix logits = h * head;

    std::vector<Index> out(static_cast<std::size_t>(samples));
    for (Index s = 0; s < samples; ++s) {
        Index best = 0;
        for (Index c = 1; c < arch.classes; ++c) {
            // Strictly-greater keeps the lowest class index on ties.
            if (logits(s, c) > logits(s, best)) best = c;
        }
        out[static_cast<std::size_t>(s)] = best;
    }
    return out;
}

ToyDataset make_inputs(std::uint64_t seed, Index samples, Index seq_len, Index vocab,
                       Index n_classes) {
    ToyDataset data;
    data.seed = seed;
    data.seq_len = seq_len;
    data.n_classes = n_classes;
    data.tokens.resize(static_cast<std::size_t>(samples * seq_len));
    SplitMix64 rng(seed + 1);
    for (Index& token : data.tokens) {
        token = static_cast<Index>(rng.next_below(static_cast<std::uint64_t>(vocab)));
    }
    return data;
}

}  // namespace

std::pair<ModelBundle, ToyDataset> generate_toy_bundle(std::uint64_t seed, Index n_layers,
                                                       Index width, Index n_classes,
                                                       const ToyGenOptions& opts) {
    if (n_layers < 3) throw BadDimensions("toy model needs n_layers >= 3");
    if (width < 2 || n_classes < 2 || opts.vocab < 2) {
        throw BadDimensions("toy model needs width, classes, and vocab all >= 2");
    }
    if (opts.seq_len < 1 || opts.samples < 1 || opts.plant_rank < 1) {
        throw BadDimensions("toy model needs positive seq_len, samples, and plant_rank");
    }
    if (opts.noise_amplitude < 0.0) {
        throw BadDimensions("noise amplitude must be >= 0");
    }

    ToyArchitecture arch;
    arch.vocab = opts.vocab;
    arch.width = width;
    arch.classes = n_classes;
    arch.seq_len = opts.seq_len;
    arch.layer_names.push_back("embedding");
    for (Index i = 0; i < n_layers - 2; ++i) {
        arch.layer_names.push_back("dense" + std::to_string(i));
    }
    arch.layer_names.push_back("head");

    ModelBundle bundle;
    SplitMix64 rng(seed);
    bundle.add_tensor("embedding", plant_weight(rng, opts.vocab, width, opts));
    for (Index i = 0; i < n_layers - 2; ++i) {
        bundle.add_tensor("dense" + std::to_string(i), plant_weight(rng, width, width, opts));
    }
    bundle.add_tensor("head", plant_weight(rng, width, n_classes, opts));
    bundle.architecture = arch;
    bundle.dataset = DatasetRef{seed, opts.samples, n_classes};

    ToyDataset data = make_inputs(seed, opts.samples, opts.seq_len, opts.vocab, n_classes);
    data.labels = predict(bundle, data);
    return {std::move(bundle), std::move(data)};
}

ToyDataset make_toy_dataset(const ModelBundle& bundle) {
    if (!bundle.architecture || !bundle.dataset) {
        throw ShapeMismatch("bundle carries no toy architecture/dataset descriptor");
    }
    const ToyArchitecture& arch = *bundle.architecture;
    const DatasetRef& ref = *bundle.dataset;
    ToyDataset data = make_inputs(ref.seed, ref.samples, arch.seq_len, arch.vocab, ref.classes);
    data.labels = predict(bundle, data);
    return data;
}

double evaluate(const ModelBundle& bundle, const ToyDataset& data) {
    if (data.samples() == 0) {
        throw ShapeMismatch("evaluation set is empty");
    }
    if (static_cast<Index>(data.labels.size()) != data.samples()) {
        throw ShapeMismatch("dataset label count does not match the sample count");
    }
    const std::vector<Index> predictions = predict(bundle, data);
    Index hits = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        if (predictions[i] == data.labels[i]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(data.samples());
}

}  // namespace ptnn
