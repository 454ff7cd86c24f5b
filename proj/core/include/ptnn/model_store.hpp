#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ptnn/shaping.hpp"
#include "ptnn/tensor.hpp"
#include "ptnn/tt.hpp"

namespace ptnn {

/// Layer sequence of the toy classifier: one embedding lookup table
/// (vocab x width), n_layers - 2 bias-free dense+ReLU blocks (width x width),
/// and a final linear head (width x classes). Inputs are token sequences;
/// the forward pass mean-pools the embedded tokens before the dense stack.
struct ToyArchitecture {
    Index vocab = 256;
    Index width = 64;
    Index classes = 10;
    Index seq_len = 8;
    std::vector<std::string> layer_names;

    bool operator==(const ToyArchitecture&) const = default;
};

/// Recipe for regenerating the evaluation set: inputs come from
/// SplitMix64(seed + 1), labels from the frozen teacher weights.
struct DatasetRef {
    std::uint64_t seed = 0;
    Index samples = 2000;
    Index classes = 10;

    bool operator==(const DatasetRef&) const = default;
};

/// Ordered, uniquely named weight tensors plus the optional toy-model
/// descriptor. Tensor order is stable and defines the default compression
/// order.
class ModelBundle {
public:
    void add_tensor(std::string name, DenseTensor t);
    void set_tensor(const std::string& name, DenseTensor t);
    bool has_tensor(const std::string& name) const;
    const DenseTensor& tensor(const std::string& name) const;

    std::vector<std::string> names() const;
    std::size_t size() const { return tensors_.size(); }
    Index total_params() const;

    const std::vector<std::pair<std::string, DenseTensor>>& entries() const { return tensors_; }

    bool operator==(const ModelBundle&) const = default;

    std::optional<ToyArchitecture> architecture;
    std::optional<DatasetRef> dataset;

private:
    std::vector<std::pair<std::string, DenseTensor>> tensors_;
};

/// Fixed evaluation set: token sequences and teacher labels.
struct ToyDataset {
    std::uint64_t seed = 0;
    Index seq_len = 0;
    Index n_classes = 0;
    std::vector<Index> tokens;  // samples x seq_len, row-major
    std::vector<Index> labels;  // samples

    Index samples() const {
        return seq_len == 0 ? 0 : static_cast<Index>(tokens.size()) / seq_len;
    }
};

struct ToyGenOptions {
    Index vocab = 256;
    Index seq_len = 8;
    Index samples = 2000;
    Index plant_rank = 2;       // TT-rank of the planted weight base
    double noise_amplitude = 0.02;  // dense perturbation relative to base RMS
    Index d_target = 4;         // shape plan order used for planting
};

/// Deterministic teacher-student construction. Teacher weights are planted
/// low-TT-rank bases plus small dense noise, all drawn from SplitMix64(seed);
/// inputs come from SplitMix64(seed + 1) and labels are the teacher's argmax
/// predictions. The bundle's weights equal the teacher's, so the fresh
/// bundle scores accuracy 1.0 by construction.
std::pair<ModelBundle, ToyDataset> generate_toy_bundle(std::uint64_t seed, Index n_layers,
                                                       Index width, Index n_classes,
                                                       const ToyGenOptions& opts = {});

/// Rebuilds the evaluation set from the bundle's dataset descriptor, using
/// the bundle's current weights as the teacher. Matches the set produced by
/// generate_toy_bundle only while the bundle is pristine.
ToyDataset make_toy_dataset(const ModelBundle& bundle);

/// Deterministic forward pass over the whole set; returns the fraction of
/// argmax matches. Argmax ties break to the lowest class index.
double evaluate(const ModelBundle& bundle, const ToyDataset& data);

/// Bundle container file ("PTWT"): magic, u32 version, u32 tensor count,
/// per tensor (u32 name length + UTF-8 name, u8 dtype: 0=f32 1=f64,
/// u32 mode count, u64 extents, raw row-major little-endian data), then a
/// u32-length-prefixed UTF-8 JSON descriptor. Round trips are bit-exact.
void save_bundle(const ModelBundle& bundle, const std::filesystem::path& path);
ModelBundle load_bundle(const std::filesystem::path& path);

/// TT checkpoint file ("PTTT"): u32 version, f64 epsilon_used, u32 d,
/// u64 mode_sizes[d], u64 ranks[d+1], u64 plan rows/cols, then the cores in
/// order as raw little-endian f64 row-major data.
struct TTCheckpoint {
    TTCores cores;
    ShapePlan plan;
};

void save_tt_checkpoint(const TTCores& cores, const ShapePlan& plan,
                        const std::filesystem::path& path);
TTCheckpoint load_tt_checkpoint(const std::filesystem::path& path);

}  // namespace ptnn
