#include "ptnn/model_store.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

namespace ptnn {

void ModelBundle::add_tensor(std::string name, DenseTensor t) {
    if (has_tensor(name)) {
        throw BadDimensions("bundle already contains a tensor named '" + name + "'");
    }
    tensors_.emplace_back(std::move(name), std::move(t));
}

void ModelBundle::set_tensor(const std::string& name, DenseTensor t) {
    for (auto& [key, value] : tensors_) {
        if (key == name) {
            value = std::move(t);
            return;
        }
    }
    throw BadDimensions("bundle has no tensor named '" + name + "'");
}

bool ModelBundle::has_tensor(const std::string& name) const {
    for (const auto& [key, value] : tensors_) {
        if (key == name) return true;
    }
    return false;
}

const DenseTensor& ModelBundle::tensor(const std::string& name) const {
    for (const auto& [key, value] : tensors_) {
        if (key == name) return value;
    }
    throw BadDimensions("bundle has no tensor named '" + name + "'");
}

std::vector<std::string> ModelBundle::names() const {
    std::vector<std::string> out;
    out.reserve(tensors_.size());
    for (const auto& [key, value] : tensors_) out.push_back(key);
    return out;
}

Index ModelBundle::total_params() const {
    Index total = 0;
    for (const auto& [key, value] : tensors_) total += value.volume();
    return total;
}

namespace {

using nlohmann::json;

constexpr std::uint32_t kBundleVersion = 1;
constexpr std::uint32_t kCheckpointVersion = 1;
constexpr char kBundleMagic[4] = {'P', 'T', 'W', 'T'};
constexpr char kCheckpointMagic[4] = {'P', 'T', 'T', 'T'};

// All multi-byte fields are little-endian, written byte by byte so the
// format is identical on any host.
void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

// Cursor over an in-memory file image; every read is bounds-checked so a
// truncated file surfaces as CorruptLength before any value escapes.
class Reader {
public:
    explicit Reader(std::string bytes) : bytes_(std::move(bytes)) {}

    std::uint8_t u8() {
        need(1);
        return static_cast<std::uint8_t>(bytes_[pos_++]);
    }

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(bytes_[pos_ + i])) << (8 * i);
        }
        pos_ += 4;
        return v;
    }

    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) {
            v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(bytes_[pos_ + i])) << (8 * i);
        }
        pos_ += 8;
        return v;
    }

    double f64() { return std::bit_cast<double>(u64()); }

    float f32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(bytes_[pos_ + i])) << (8 * i);
        }
        pos_ += 4;
        return std::bit_cast<float>(v);
    }

    std::string str(std::size_t n) {
        need(n);
        std::string s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }

    void expect_magic(const char (&magic)[4], const char* what) {
        if (bytes_.size() < 4 || std::memcmp(bytes_.data(), magic, 4) != 0) {
            throw BadMagic(std::string("not a ") + what + " file (bad magic bytes)");
        }
        pos_ = 4;
    }

    bool exhausted() const { return pos_ == bytes_.size(); }

private:
    void need(std::size_t n) {
        if (bytes_.size() - pos_ < n) {
            throw CorruptLength("file ends before a declared field (need " + std::to_string(n) +
                                " bytes at offset " + std::to_string(pos_) + ")");
        }
    }

    std::string bytes_;
    std::size_t pos_ = 0;
};

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string() + " for reading");
    }
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) {
        throw IoError("read failure on " + path.string());
    }
    return bytes;
}

void spill(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw IoError("write failure on " + path.string());
    }
}

json descriptor_to_json(const ModelBundle& bundle) {
    json j = json::object();
    if (bundle.architecture) {
        const ToyArchitecture& a = *bundle.architecture;
        j["architecture"] = {{"type", "toy-mlp"}, {"vocab", a.vocab},   {"width", a.width},
                             {"classes", a.classes}, {"seq_len", a.seq_len},
                             {"layers", a.layer_names}};
    }
    if (bundle.dataset) {
        const DatasetRef& d = *bundle.dataset;
        j["dataset"] = {{"seed", d.seed}, {"samples", d.samples}, {"classes", d.classes}};
    }
    return j;
}

void descriptor_from_json(const std::string& text, ModelBundle& bundle) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw CorruptLength(std::string("descriptor block is not valid JSON: ") + e.what());
    }
    try {
        if (j.contains("architecture")) {
            const json& a = j.at("architecture");
            ToyArchitecture arch;
            arch.vocab = a.at("vocab").get<Index>();
            arch.width = a.at("width").get<Index>();
            arch.classes = a.at("classes").get<Index>();
            arch.seq_len = a.at("seq_len").get<Index>();
            arch.layer_names = a.at("layers").get<std::vector<std::string>>();
            bundle.architecture = std::move(arch);
        }
        if (j.contains("dataset")) {
            const json& d = j.at("dataset");
            DatasetRef ref;
            ref.seed = d.at("seed").get<std::uint64_t>();
            ref.samples = d.at("samples").get<Index>();
            ref.classes = d.at("classes").get<Index>();
            bundle.dataset = ref;
        }
    } catch (const json::exception& e) {
        throw CorruptLength(std::string("descriptor block missing required fields: ") + e.what());
    }
}

}  // namespace

void save_bundle(const ModelBundle& bundle, const std::filesystem::path& path) {
    std::string out;
    out.append(kBundleMagic, 4);
    put_u32(out, kBundleVersion);
    put_u32(out, static_cast<std::uint32_t>(bundle.size()));
    for (const auto& [name, tensor] : bundle.entries()) {
        put_u32(out, static_cast<std::uint32_t>(name.size()));
        out.append(name);
        out.push_back(1);  // dtype float64; tensors are held in 64-bit internally
        put_u32(out, static_cast<std::uint32_t>(tensor.ndim()));
        for (Index extent : tensor.shape()) put_u64(out, static_cast<std::uint64_t>(extent));
        for (double x : tensor.data()) put_f64(out, x);
    }
    const std::string descriptor = descriptor_to_json(bundle).dump();
    put_u32(out, static_cast<std::uint32_t>(descriptor.size()));
    out.append(descriptor);
    spill(path, out);
}

ModelBundle load_bundle(const std::filesystem::path& path) {
    Reader r(slurp(path));
    r.expect_magic(kBundleMagic, "PTWT bundle");
    const std::uint32_t version = r.u32();
    if (version != kBundleVersion) {
        throw UnsupportedVersion("bundle format version " + std::to_string(version) +
                                 " not supported");
    }

    ModelBundle bundle;
    const std::uint32_t count = r.u32();
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint32_t name_len = r.u32();
        std::string name = r.str(name_len);
        const std::uint8_t dtype = r.u8();
        if (dtype > 1) {
            throw CorruptLength("tensor '" + name + "' has unknown dtype code " +
                                std::to_string(dtype));
        }
        const std::uint32_t ndim = r.u32();
        if (ndim == 0) {
            throw CorruptLength("tensor '" + name + "' declares zero modes");
        }
        Shape shape;
        std::uint64_t volume = 1;
        for (std::uint32_t m = 0; m < ndim; ++m) {
            const std::uint64_t extent = r.u64();
            if (extent == 0 || volume > (1ULL << 40) / std::max<std::uint64_t>(extent, 1)) {
                throw CorruptLength("tensor '" + name + "' declares an implausible shape");
            }
            volume *= extent;
            shape.push_back(static_cast<Index>(extent));
        }
        std::vector<double> data;
        data.reserve(volume);
        for (std::uint64_t k = 0; k < volume; ++k) {
            data.push_back(dtype == 0 ? static_cast<double>(r.f32()) : r.f64());
        }
        bundle.add_tensor(std::move(name), DenseTensor(std::move(shape), std::move(data)));
    }

    const std::uint32_t desc_len = r.u32();
    descriptor_from_json(r.str(desc_len), bundle);
    if (!r.exhausted()) {
        throw CorruptLength("trailing bytes after the descriptor block");
    }
    return bundle;
}

void save_tt_checkpoint(const TTCores& cores, const ShapePlan& plan,
                        const std::filesystem::path& path) {
    validate(cores);
    if (plan.tensor_shape != cores.mode_sizes) {
        throw ShapeMismatch("checkpoint plan shape does not match the cores' mode sizes");
    }

    std::string out;
    out.append(kCheckpointMagic, 4);
    put_u32(out, kCheckpointVersion);
    put_f64(out, cores.epsilon_used);
    const Index d = cores.order();
    put_u32(out, static_cast<std::uint32_t>(d));
    for (Index n : cores.mode_sizes) put_u64(out, static_cast<std::uint64_t>(n));
    for (Index rk : cores.ranks) put_u64(out, static_cast<std::uint64_t>(rk));
    put_u64(out, static_cast<std::uint64_t>(plan.original_rows));
    put_u64(out, static_cast<std::uint64_t>(plan.original_cols));
    for (const DenseTensor& core : cores.cores) {
        for (double x : core.data()) put_f64(out, x);
    }
    spill(path, out);
}

TTCheckpoint load_tt_checkpoint(const std::filesystem::path& path) {
    Reader r(slurp(path));
    r.expect_magic(kCheckpointMagic, "PTTT checkpoint");
    const std::uint32_t version = r.u32();
    if (version != kCheckpointVersion) {
        throw UnsupportedVersion("checkpoint format version " + std::to_string(version) +
                                 " not supported");
    }

    TTCores tt;
    tt.epsilon_used = r.f64();
    const std::uint32_t d = r.u32();
    if (d == 0 || d > 64) {
        throw CorruptLength("checkpoint declares an implausible core count");
    }
    for (std::uint32_t j = 0; j < d; ++j) tt.mode_sizes.push_back(static_cast<Index>(r.u64()));
    for (std::uint32_t j = 0; j <= d; ++j) tt.ranks.push_back(static_cast<Index>(r.u64()));

    ShapePlan plan;
    plan.original_rows = static_cast<Index>(r.u64());
    plan.original_cols = static_cast<Index>(r.u64());
    plan.tensor_shape = tt.mode_sizes;

    for (std::uint32_t j = 0; j < d; ++j) {
        const Index r0 = tt.ranks[j];
        const Index n = tt.mode_sizes[j];
        const Index r1 = tt.ranks[j + 1];
        if (r0 < 1 || n < 1 || r1 < 1 || r0 > (1 << 20) || r1 > (1 << 20)) {
            throw CorruptLength("checkpoint declares an implausible rank chain");
        }
        const std::uint64_t volume = static_cast<std::uint64_t>(r0) * n * r1;
        std::vector<double> data;
        data.reserve(volume);
        for (std::uint64_t k = 0; k < volume; ++k) data.push_back(r.f64());
        tt.cores.emplace_back(Shape{r0, n, r1}, std::move(data));
    }
    if (!r.exhausted()) {
        throw CorruptLength("trailing bytes after the last core");
    }

    validate(tt);
    if (shape_volume(plan.tensor_shape) != plan.volume()) {
        throw CorruptLength("checkpoint plan volume does not match the stored modes");
    }
    return TTCheckpoint{std::move(tt), std::move(plan)};
}

}  // namespace ptnn
