// ptnn: tensor-train compression of weight bundles with an accuracy gate.
//
// Subcommands: generate-toy, decompose, reconstruct, compress-model,
// individual, report. Machine-readable JSON goes to stdout, diagnostics to
// stderr. Exit codes: 0 success, 1 error, 2 unfactorable layer volume.

#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ptnn/engine.hpp"
#include "ptnn/metrics.hpp"
#include "ptnn/model_store.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace ptnn;

namespace {

struct CliConfig {
    double epsilon = 0.5;
    Index d_target = 4;
    double tolerance = 0.05;
    std::uint64_t seed = 42;
    std::string sigma_rule = "paper";
    std::vector<std::string> layers;
    std::string output;
};

SigmaRule parse_sigma_rule(const std::string& name) {
    return name == "standard" ? SigmaRule::Standard : SigmaRule::Paper;
}

GateConfig gate_config(const CliConfig& cli) {
    GateConfig config;
    config.epsilon = cli.epsilon;
    config.accuracy_drop_tolerance = cli.tolerance;
    config.d_target = cli.d_target;
    config.layer_order = cli.layers;
    config.sigma_rule = parse_sigma_rule(cli.sigma_rule);
    return config;
}

json record_to_json(const LayerRecord& record) {
    return json{{"layer", record.layer},
                {"decision", std::string(to_string(record.decision))},
                {"pre_acc", record.pre_accuracy},
                {"post_acc", record.post_accuracy},
                {"original_params", record.metrics.original_params},
                {"compressed_params", record.metrics.compressed_params},
                {"space_saving", record.metrics.space_saving},
                {"ranks", record.ranks},
                {"rel_error", record.metrics.relative_error}};
}

void add_common_flags(CLI::App* cmd, CliConfig& cli, bool with_tolerance) {
    cmd->add_option("--epsilon", cli.epsilon, "Relative error bound for TT-SVD")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    cmd->add_option("--d-target", cli.d_target, "Tensor order for the shape plan")
        ->check(CLI::Range(static_cast<Index>(2), static_cast<Index>(16)))
        ->capture_default_str();
    cmd->add_option("--sigma-rule", cli.sigma_rule, "Truncation threshold rule")
        ->check(CLI::IsMember({"paper", "standard"}))
        ->capture_default_str();
    if (with_tolerance) {
        cmd->add_option("--tolerance", cli.tolerance, "Absolute accuracy drop budget")
            ->check(CLI::Range(0.0, 1.0))
            ->capture_default_str();
    }
}

int cmd_generate_toy(const CliConfig& cli, Index n_layers, Index width, Index classes,
                     const ToyGenOptions& opts) {
    if (cli.output.empty()) {
        throw Error("generate-toy needs --output");
    }
    auto [bundle, data] = generate_toy_bundle(cli.seed, n_layers, width, classes, opts);
    save_bundle(bundle, cli.output);

    json out{{"path", cli.output},
             {"seed", cli.seed},
             {"layers", bundle.names()},
             {"total_params", bundle.total_params()},
             {"samples", data.samples()},
             {"accuracy", evaluate(bundle, data)}};
    std::cout << out.dump() << "\n";
    return 0;
}

int cmd_decompose(const CliConfig& cli, const std::string& input, const std::string& layer) {
    if (cli.output.empty()) {
        throw Error("decompose needs --output");
    }
    const ModelBundle bundle = load_bundle(input);
    const DenseTensor& weight = bundle.tensor(layer);
    const Index rows = weight.shape()[0];
    const Index cols = weight.volume() / rows;

    const ShapePlan plan = plan_shape(rows, cols, cli.d_target);
    const Matrix matrix = Eigen::Map<const Matrix>(weight.data().data(), rows, cols);
    const DenseTensor folded = fold(matrix, plan);
    const TTCores cores = tt_svd(folded, cli.epsilon, parse_sigma_rule(cli.sigma_rule));

    const Matrix back = unfold(tt_reconstruct(cores), plan);
    const double rel_error =
        matrix.norm() > 0.0 ? (matrix - back).norm() / matrix.norm() : 0.0;

    save_tt_checkpoint(cores, plan, cli.output);

    const LayerMetrics metrics = layer_metrics(layer, weight.volume(), cores, rel_error);
    const ComplexityEstimate complexity = complexity_estimate(cores);
    json out{{"layer", metrics.layer_name},
             {"decision", std::string(to_string(metrics.gate_decision))},
             {"original_params", metrics.original_params},
             {"compressed_params", metrics.compressed_params},
             {"space_saving", metrics.space_saving},
             {"compression_ratio", metrics.compression_ratio},
             {"max_rank", metrics.max_rank},
             {"ranks", cores.ranks},
             {"rel_error", metrics.relative_error},
             {"matvec_flops", complexity.matvec_flops},
             {"complexity", "O(d*n*r^2)"},
             {"checkpoint", cli.output}};
    std::cout << out.dump() << "\n";
    return 0;
}

int cmd_reconstruct(const CliConfig& cli, const std::string& input, const std::string& name) {
    if (cli.output.empty()) {
        throw Error("reconstruct needs --output");
    }
    const TTCheckpoint checkpoint = load_tt_checkpoint(input);
    const Matrix matrix = unfold(tt_reconstruct(checkpoint.cores), checkpoint.plan);

    ModelBundle bundle;
    bundle.add_tensor(name, DenseTensor({checkpoint.plan.original_rows,
                                         checkpoint.plan.original_cols},
                                        std::vector<double>(matrix.data(),
                                                            matrix.data() + matrix.size())));
    save_bundle(bundle, cli.output);

    json out{{"path", cli.output},
             {"tensor", name},
             {"rows", checkpoint.plan.original_rows},
             {"cols", checkpoint.plan.original_cols},
             {"epsilon_used", checkpoint.cores.epsilon_used},
             {"ranks", checkpoint.cores.ranks}};
    std::cout << out.dump() << "\n";
    return 0;
}

int cmd_compress_model(const CliConfig& cli, const std::string& input, bool keep_inflating) {
    if (cli.output.empty()) {
        throw Error("compress-model needs --output DIR");
    }
    const ModelBundle bundle = load_bundle(input);
    const ToyOracle oracle(make_toy_dataset(bundle));

    GateConfig config = gate_config(cli);
    config.skip_inflating_layers = !keep_inflating;

    const fs::path outdir = cli.output;
    const fs::path ckptdir = outdir / "checkpoints";
    std::vector<fs::path> created;
    try {
        fs::create_directories(ckptdir);
        const CompressionResult result = run(bundle, oracle, config);

        const fs::path trace_path = outdir / "trace.jsonl";
        {
            std::ofstream trace(trace_path, std::ios::trunc);
            if (!trace) {
                throw IoError("cannot open " + trace_path.string() + " for writing");
            }
            for (const LayerRecord& record : result.trace.records) {
                trace << record_to_json(record).dump() << "\n";
            }
        }
        created.push_back(trace_path);

        const fs::path bundle_path = outdir / "final_bundle.ptwt";
        save_bundle(result.bundle, bundle_path);
        created.push_back(bundle_path);

        for (const CheckpointEntry& entry : result.checkpoints) {
            const fs::path ckpt = ckptdir / (entry.layer + ".pttt");
            save_tt_checkpoint(entry.cores, entry.plan, ckpt);
            created.push_back(ckpt);
        }

        std::vector<LayerMetrics> layer_list;
        for (const LayerRecord& record : result.trace.records) {
            layer_list.push_back(record.metrics);
        }
        const ModelMetrics mm = model_metrics(layer_list, bundle.total_params());

        json out{{"original_accuracy", result.trace.original_accuracy},
                 {"final_accuracy", result.trace.final_accuracy},
                 {"total_params", mm.total_params},
                 {"params_in_compressed_layers", mm.params_in_compressed_layers},
                 {"model_memory_fraction_saved", mm.model_memory_fraction_saved},
                 {"aggregate_space_saving", mm.aggregate_space_saving},
                 {"layers", result.trace.records.size()},
                 {"compressed_layers", result.checkpoints.size()},
                 {"trace", trace_path.string()},
                 {"final_bundle", bundle_path.string()}};
        std::cout << out.dump() << "\n";
        return 0;
    } catch (...) {
        // Leave no partial outputs behind.
        for (const fs::path& p : created) {
            std::error_code ec;
            fs::remove(p, ec);
        }
        throw;
    }
}

int cmd_individual(const CliConfig& cli, const std::string& input) {
    const ModelBundle bundle = load_bundle(input);
    const ToyOracle oracle(make_toy_dataset(bundle));
    GateConfig config = gate_config(cli);
    config.layer_order.clear();

    const std::vector<std::string> layers = cli.layers.empty() ? bundle.names() : cli.layers;

    std::optional<std::ofstream> file;
    if (!cli.output.empty()) {
        file.emplace(cli.output, std::ios::trunc);
        if (!*file) {
            throw IoError("cannot open " + cli.output + " for writing");
        }
    }
    for (const std::string& layer : layers) {
        const CompressionTrace trace = compress_single_layer(bundle, layer, config, oracle);
        json line = record_to_json(trace.records.front());
        // The study's measurement: accuracy with only this layer compressed.
        line["post_acc"] = trace.records.front().trial_accuracy;
        std::cout << line.dump() << "\n";
        if (file) *file << line.dump() << "\n";
    }
    return 0;
}

int cmd_report(const std::string& input) {
    std::ifstream in(input);
    if (!in) {
        throw IoError("cannot open " + input + " for reading");
    }

    std::printf("%-14s %-13s %10s %13s %9s  %s\n", "layer", "decision", "accuracy",
                "space_saving", "ranks", "params (orig -> stored)");
    Index original = 0, stored = 0, accepted = 0, rows = 0;
    double final_accuracy = 0.0;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json record;
        try {
            record = json::parse(line);
        } catch (const json::exception& e) {
            throw CorruptLength("trace line " + std::to_string(rows + 1) +
                                " is not valid JSON: " + e.what());
        }
        try {
            const std::string layer = record.at("layer").get<std::string>();
            const std::string decision = record.at("decision").get<std::string>();
            const double post = record.at("post_acc").get<double>();
            const double saving = record.at("space_saving").get<double>();
            const Index orig = record.at("original_params").get<Index>();
            const Index comp = record.at("compressed_params").get<Index>();
            std::string ranks = "-";
            if (!record.at("ranks").empty()) {
                ranks.clear();
                for (const auto& r : record.at("ranks")) {
                    ranks += (ranks.empty() ? "" : "-") + std::to_string(r.get<Index>());
                }
            }
            std::printf("%-14s %-13s %10.4f %13.4f %9s  %lld -> %lld\n", layer.c_str(),
                        decision.c_str(), post, saving, ranks.c_str(),
                        static_cast<long long>(orig), static_cast<long long>(comp));
            original += orig;
            stored += comp;
            final_accuracy = post;
            if (decision == "compressed") ++accepted;
            ++rows;
        } catch (const json::exception& e) {
            throw CorruptLength("trace line " + std::to_string(rows + 1) +
                                " misses required keys: " + e.what());
        }
    }
    const double aggregate =
        original > 0 ? 1.0 - static_cast<double>(stored) / static_cast<double>(original) : 0.0;
    const std::string kept =
        std::to_string(accepted) + "/" + std::to_string(rows) + " kept";
    std::printf("%-14s %-13s %10.4f %13.4f %9s  %lld -> %lld\n", "aggregate", kept.c_str(),
                final_accuracy, aggregate, "", static_cast<long long>(original),
                static_cast<long long>(stored));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Tensor-train weight compression with an iterative accuracy gate"};
    app.require_subcommand(1);

    CliConfig cli;

    // generate-toy
    Index n_layers = 4, width = 64, classes = 10;
    ToyGenOptions toy;
    CLI::App* generate = app.add_subcommand("generate-toy", "Write a deterministic toy bundle");
    generate->add_option("--seed", cli.seed, "Generator seed")->capture_default_str();
    generate->add_option("--n-layers", n_layers, "Total layer count (>= 3)")
        ->capture_default_str();
    generate->add_option("--width", width, "Hidden width")->capture_default_str();
    generate->add_option("--classes", classes, "Class count")->capture_default_str();
    generate->add_option("--vocab", toy.vocab, "Embedding rows")->capture_default_str();
    generate->add_option("--seq-len", toy.seq_len, "Tokens per sample")->capture_default_str();
    generate->add_option("--samples", toy.samples, "Evaluation samples")->capture_default_str();
    generate->add_option("--noise-amplitude", toy.noise_amplitude,
                         "Dense noise relative to the planted base RMS")
        ->capture_default_str();
    generate->add_option("--plant-rank", toy.plant_rank, "TT-rank of the planted base")
        ->capture_default_str();
    generate->add_option("--output", cli.output, "Bundle file to write")->required();

    // decompose
    std::string input, layer = "embedding", tensor_name = "weight";
    CLI::App* decompose = app.add_subcommand("decompose", "TT-decompose one layer to a checkpoint");
    decompose->add_option("bundle", input, "Input bundle file")->required();
    decompose->add_option("layer", layer, "Layer name to decompose")->required();
    add_common_flags(decompose, cli, false);
    decompose->add_option("--output", cli.output, "Checkpoint file to write")->required();

    // reconstruct
    CLI::App* reconstruct =
        app.add_subcommand("reconstruct", "Rebuild the dense weight from a checkpoint");
    reconstruct->add_option("checkpoint", input, "Input checkpoint file")->required();
    reconstruct->add_option("--name", tensor_name, "Tensor name in the output bundle")
        ->capture_default_str();
    reconstruct->add_option("--output", cli.output, "Bundle file to write")->required();

    // compress-model
    bool keep_inflating = false;
    CLI::App* compress =
        app.add_subcommand("compress-model", "Iterative accuracy-gated compression");
    compress->add_option("bundle", input, "Input toy bundle file")->required();
    add_common_flags(compress, cli, true);
    compress->add_option("--layers", cli.layers, "Explicit layer order")->delimiter(',');
    compress->add_flag("--keep-inflating", keep_inflating,
                       "Evaluate layers whose TT form stores more parameters than dense");
    compress->add_option("--output", cli.output, "Output directory")->required();

    // individual
    CLI::App* individual =
        app.add_subcommand("individual", "Per-layer study from the pristine bundle");
    individual->add_option("bundle", input, "Input toy bundle file")->required();
    add_common_flags(individual, cli, true);
    individual->add_option("--layers", cli.layers, "Layers to measure")->delimiter(',');
    individual->add_option("--output", cli.output, "Optional JSONL file to also write");

    // report
    CLI::App* report = app.add_subcommand("report", "Render a trace file as a table");
    report->add_option("trace", input, "trace.jsonl produced by compress-model")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (generate->parsed()) return cmd_generate_toy(cli, n_layers, width, classes, toy);
        if (decompose->parsed()) return cmd_decompose(cli, input, layer);
        if (reconstruct->parsed()) return cmd_reconstruct(cli, input, tensor_name);
        if (compress->parsed()) return cmd_compress_model(cli, input, keep_inflating);
        if (individual->parsed()) return cmd_individual(cli, input);
        if (report->parsed()) return cmd_report(input);
    } catch (const UnfactorableVolume& e) {
        std::cerr << "ptnn: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "ptnn: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
