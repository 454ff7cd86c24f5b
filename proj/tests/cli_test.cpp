#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <doctest.h>
#include <nlohmann/json.hpp>

#include "ptnn/model_store.hpp"

using namespace ptnn;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct CliRun {
    int exit_code = -1;
    std::string stdout_text;
};

// Drives the installed binary the way a script would.
CliRun run_cli(const fs::path& dir, const std::string& args) {
    const fs::path out = dir / "stdout.txt";
    const std::string command = std::string(PTNN_CLI_PATH) + " " + args + " > " +
                                out.string() + " 2> " + (dir / "stderr.txt").string();
    const int status = std::system(command.c_str());
    CliRun run;
    run.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(out);
    run.stdout_text.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    return run;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("ptnn_cli_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

}  // namespace

TEST_SUITE_BEGIN("cli");

TEST_CASE("full pipeline: generate, decompose, reconstruct, compress, report") {
    TempDir dir;
    const fs::path bundle = dir.path / "toy.ptwt";

    const CliRun gen = run_cli(
        dir.path, "generate-toy --seed 42 --samples 500 --output " + bundle.string());
    REQUIRE(gen.exit_code == 0);
    const json gen_out = json::parse(gen.stdout_text);
    CHECK(gen_out.at("accuracy").get<double>() == 1.0);
    CHECK(gen_out.at("layers").size() == 4);

    SUBCASE("decompose emits metrics and a loadable checkpoint") {
        const fs::path ckpt = dir.path / "emb.pttt";
        const CliRun dec = run_cli(dir.path, "decompose " + bundle.string() +
                                                 " embedding --epsilon 0.5 --output " +
                                                 ckpt.string());
        REQUIRE(dec.exit_code == 0);
        const json metrics = json::parse(dec.stdout_text);
        CHECK(metrics.at("layer") == "embedding");
        CHECK(metrics.at("space_saving").get<double>() > 0.0);
        CHECK(metrics.at("rel_error").get<double>() <= 0.5);

        const TTCheckpoint loaded = load_tt_checkpoint(ckpt);
        CHECK(loaded.plan.original_rows == 256);
        CHECK(loaded.plan.original_cols == 64);

        const fs::path dense = dir.path / "emb_dense.ptwt";
        const CliRun rec =
            run_cli(dir.path, "reconstruct " + ckpt.string() + " --output " + dense.string());
        REQUIRE(rec.exit_code == 0);
        const ModelBundle back = load_bundle(dense);
        CHECK(back.tensor("weight").shape() == Shape{256, 64});
    }

    SUBCASE("lossless decompose of a planted layer") {
        const fs::path zero_bundle = dir.path / "clean.ptwt";
        const CliRun gen2 = run_cli(dir.path,
                                    "generate-toy --seed 7 --noise-amplitude 0 --samples 200 "
                                    "--output " +
                                        zero_bundle.string());
        REQUIRE(gen2.exit_code == 0);
        const CliRun dec = run_cli(dir.path, "decompose " + zero_bundle.string() +
                                                 " dense0 --epsilon 0 --output " +
                                                 (dir.path / "d0.pttt").string());
        REQUIRE(dec.exit_code == 0);
        CHECK(json::parse(dec.stdout_text).at("rel_error").get<double>() <= 1e-8);
    }

    SUBCASE("compress-model writes trace, bundle, and checkpoints deterministically") {
        const CliRun run1 = run_cli(dir.path, "compress-model " + bundle.string() +
                                                  " --output " + (dir.path / "r1").string());
        REQUIRE(run1.exit_code == 0);
        const json summary = json::parse(run1.stdout_text);
        CHECK(summary.at("original_accuracy").get<double>() == 1.0);
        CHECK(summary.at("final_accuracy").get<double>() >=
              summary.at("original_accuracy").get<double>() - 0.05);
        CHECK(summary.at("model_memory_fraction_saved").get<double>() > 0.0);

        const CliRun run2 = run_cli(dir.path, "compress-model " + bundle.string() +
                                                  " --output " + (dir.path / "r2").string());
        REQUIRE(run2.exit_code == 0);
        CHECK(read_file(dir.path / "r1/trace.jsonl") == read_file(dir.path / "r2/trace.jsonl"));
        CHECK(read_file(dir.path / "r1/final_bundle.ptwt") ==
              read_file(dir.path / "r2/final_bundle.ptwt"));

        // One checkpoint per accepted layer, loadable.
        Index accepted = 0;
        std::ifstream trace(dir.path / "r1/trace.jsonl");
        std::string line;
        while (std::getline(trace, line)) {
            const json record = json::parse(line);
            for (const char* key :
                 {"layer", "decision", "pre_acc", "post_acc", "original_params",
                  "compressed_params", "space_saving", "ranks", "rel_error"}) {
                CHECK(record.contains(key));
            }
            if (record.at("decision") == "compressed") {
                ++accepted;
                const fs::path ckpt =
                    dir.path / "r1/checkpoints" / (record.at("layer").get<std::string>() + ".pttt");
                CHECK(fs::exists(ckpt));
                load_tt_checkpoint(ckpt);
            }
        }
        CHECK(accepted == summary.at("compressed_layers").get<Index>());

        const CliRun rep =
            run_cli(dir.path, "report " + (dir.path / "r1/trace.jsonl").string());
        CHECK(rep.exit_code == 0);
        CHECK(rep.stdout_text.find("aggregate") != std::string::npos);
    }

    SUBCASE("individual study emits one record per layer") {
        const CliRun ind = run_cli(dir.path, "individual " + bundle.string());
        REQUIRE(ind.exit_code == 0);
        Index lines = 0;
        std::size_t pos = 0;
        while ((pos = ind.stdout_text.find('\n', pos)) != std::string::npos) {
            ++lines;
            ++pos;
        }
        CHECK(lines == 4);
    }
}

TEST_CASE("error exits are distinct and scriptable") {
    TempDir dir;

    SUBCASE("missing input file names the path and exits 1") {
        const fs::path missing = dir.path / "absent.ptwt";
        const CliRun dec = run_cli(dir.path, "decompose " + missing.string() +
                                                 " embedding --output " +
                                                 (dir.path / "x.pttt").string());
        CHECK(dec.exit_code == 1);
        const std::string err = read_file(dir.path / "stderr.txt");
        CHECK(err.find("absent.ptwt") != std::string::npos);
    }

    SUBCASE("prime layer volume exits 2") {
        ModelBundle bundle;
        std::vector<double> data(13, 1.0);
        bundle.add_tensor("prime", DenseTensor({13, 1}, std::move(data)));
        const fs::path file = dir.path / "prime.ptwt";
        save_bundle(bundle, file);
        const CliRun dec = run_cli(dir.path, "decompose " + file.string() + " prime --output " +
                                                 (dir.path / "x.pttt").string());
        CHECK(dec.exit_code == 2);
    }

    SUBCASE("unknown subcommand fails") {
        const CliRun bad = run_cli(dir.path, "frobnicate");
        CHECK(bad.exit_code != 0);
    }

    SUBCASE("compress-model on a descriptorless bundle exits 1 and cleans up") {
        ModelBundle bundle;
        std::vector<double> data(64, 0.5);
        bundle.add_tensor("w", DenseTensor({8, 8}, std::move(data)));
        const fs::path file = dir.path / "raw.ptwt";
        save_bundle(bundle, file);
        const fs::path outdir = dir.path / "out";
        const CliRun comp = run_cli(
            dir.path, "compress-model " + file.string() + " --output " + outdir.string());
        CHECK(comp.exit_code == 1);
        CHECK_FALSE(fs::exists(outdir / "trace.jsonl"));
        CHECK_FALSE(fs::exists(outdir / "final_bundle.ptwt"));
    }
}

TEST_SUITE_END();
