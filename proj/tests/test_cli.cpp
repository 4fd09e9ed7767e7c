// Drives the installed CLI binary end to end; argv[1] is the binary path.
#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string g_cli;
fs::path g_dir;

struct Result {
    int exit_code = -1;
    std::string out;
};

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Result run(const std::string& args) {
    const fs::path out_path = g_dir / "stdout.txt";
    const std::string cmd = g_cli + " " + args + " > " + out_path.string() + " 2>&1";
    const int raw = std::system(cmd.c_str());
    Result r;
    r.exit_code = WEXITSTATUS(raw);
    r.out = slurp(out_path);
    return r;
}

std::string in_dir(const std::string& name) { return (g_dir / name).string(); }

} // namespace

TEST_CASE("synth writes the three scene files and is byte-deterministic") {
    const Result a =
        run("synth --rows 96 --cols 96 --vessels 3 --seed 7 --out " + in_dir("a"));
    REQUIRE(a.exit_code == 0);
    CHECK(fs::exists(in_dir("a") + ".json"));
    CHECK(fs::exists(in_dir("a") + ".f32"));
    CHECK(fs::exists(in_dir("a") + ".truth.json"));
    const json stats = json::parse(a.out);
    CHECK(stats["vessel_count"] == 3);
    CHECK(json::parse(slurp(in_dir("a") + ".truth.json")).size() == 3);

    const Result b =
        run("synth --rows 96 --cols 96 --vessels 3 --seed 7 --out " + in_dir("b"));
    REQUIRE(b.exit_code == 0);
    CHECK(slurp(in_dir("a") + ".f32") == slurp(in_dir("b") + ".f32"));
    CHECK(slurp(in_dir("a") + ".truth.json") == slurp(in_dir("b") + ".truth.json"));
}

TEST_CASE("impossible vessel placement exits with the config code") {
    const Result r =
        run("synth --rows 64 --cols 64 --vessels 100000 --seed 1 --out " + in_dir("x"));
    CHECK(r.exit_code == 2);
}

TEST_CASE("unknown config keys are a config error") {
    std::ofstream(in_dir("bad_cfg.json")) << R"({"sinth": {"rows": 32}})";
    const Result r = run("synth --config " + in_dir("bad_cfg.json") + " --out " + in_dir("y"));
    CHECK(r.exit_code == 2);
    CHECK(r.out.find("sinth") != std::string::npos);
}

TEST_CASE("missing scene files exit with the io code") {
    const Result r = run("denoise --scene " + in_dir("missing") + " --out " + in_dir("z"));
    CHECK(r.exit_code == 3);
}

TEST_CASE("malformed scene headers do not crash the process") {
    std::ofstream(in_dir("broken.json")) << "{ not json";
    std::ofstream(in_dir("broken.f32")) << "xxxx";
    const Result r = run("denoise --scene " + in_dir("broken") + " --out " + in_dir("z2"));
    CHECK(r.exit_code == 2);
}

TEST_CASE("cfar subcommand writes boxes JSON and a P5 mask") {
    REQUIRE(run("synth --rows 96 --cols 96 --vessels 2 --looks 4 --tcr-min 20 --tcr-max 20 "
                "--seed 9 --out " +
                in_dir("c"))
                .exit_code == 0);
    const Result r = run("cfar --scene " + in_dir("c") +
                         " --guard 16 --train-radius 24 --pfa 0.01 --out " + in_dir("c_boxes.json") +
                         " --mask " + in_dir("c_mask.pgm"));
    REQUIRE(r.exit_code == 0);
    const json boxes = json::parse(slurp(in_dir("c_boxes.json")));
    CHECK(boxes["band"] == "VV");
    CHECK(boxes["n_detections"].get<long long>() > 0);

    const std::string pgm = slurp(in_dir("c_mask.pgm"));
    CHECK(pgm.substr(0, 3) == "P5\n");
    CHECK(pgm.find("96 96\n255\n") != std::string::npos);
}

TEST_CASE("train, detect, overlay and eval chain") {
    for (int i = 0; i < 2; ++i)
        REQUIRE(run("synth --rows 192 --cols 192 --vessels 6 --looks 4 --seed " +
                    std::to_string(20 + i) + " --out " + in_dir("t" + std::to_string(i)))
                    .exit_code == 0);

    const Result trained =
        run("train --scenes " + in_dir("t0") + " " + in_dir("t1") + " --out " + in_dir("w.sdw") +
            " --history " + in_dir("hist.json") + " --epochs 8 --seed 3");
    REQUIRE(trained.exit_code == 0);
    const json history = json::parse(slurp(in_dir("hist.json")));
    CHECK(history["train_loss"].size() == 8);
    CHECK(history["epochs"] == 8);
    CHECK(history["training_time_ms"].get<double>() > 0.0);

    const Result detected = run("detect --scene " + in_dir("t0") + " --weights " +
                                in_dir("w.sdw") + " --out " + in_dir("dets.json") +
                                " --overlay " + in_dir("ov.pgm"));
    REQUIRE(detected.exit_code == 0);
    const json dets = json::parse(slurp(in_dir("dets.json")));
    CHECK(dets["scene_id"] == "synth-20");
    CHECK(dets["detection_time_ms"].get<double>() > 0.0);

    // Overlay: P5 header with scene dimensions, box outlines burned at 255.
    const std::string pgm = slurp(in_dir("ov.pgm"));
    REQUIRE(pgm.substr(0, 3) == "P5\n");
    const std::size_t header_end = pgm.find("255\n");
    REQUIRE(header_end != std::string::npos);
    CHECK(pgm.find("192 192\n") != std::string::npos);
    const std::size_t pixel_start = header_end + 4;
    REQUIRE(pgm.size() - pixel_start == 192u * 192u);
    for (const json& det : dets["detections"]) {
        const int row = det["row"].get<int>(), col = det["col"].get<int>();
        const int width = det["width"].get<int>();
        for (int c = col; c < col + width; ++c) {
            const auto px = static_cast<unsigned char>(
                pgm[pixel_start + static_cast<std::size_t>(row) * 192 + c]);
            CHECK(px == 255);
        }
    }

    const Result box_eval =
        run("eval --mode box --detections " + in_dir("dets.json") + " --truth " +
            in_dir("t0.truth.json") + " --iou-min 0.25 --out " + in_dir("box.json"));
    REQUIRE(box_eval.exit_code == 0);
    const json box_report = json::parse(slurp(in_dir("box.json")));
    CHECK(box_report["mode"] == "box");
    CHECK(box_report["counts"]["tp"].get<long long>() > 0);

    // A near-impossible iou bar drops recall versus the relaxed one.
    const Result strict_eval = run("eval --mode box --detections " + in_dir("dets.json") +
                                   " --truth " + in_dir("t0.truth.json") + " --iou-min 0.99");
    REQUIRE(strict_eval.exit_code == 0);
    CHECK(json::parse(strict_eval.out)["recall"].get<double>() <
          box_report["recall"].get<double>());

    const Result chip_eval =
        run("eval --mode chip --scenes " + in_dir("t0") + " " + in_dir("t1") + " --weights " +
            in_dir("w.sdw") + " --seed 3 --out " + in_dir("chip.json"));
    REQUIRE(chip_eval.exit_code == 0);
    const json chip_report = json::parse(slurp(in_dir("chip.json")));
    const std::vector<std::string> keys = {"accuracy_pct",     "precision",
                                           "recall",           "f1",
                                           "cohen_kappa",      "jaccard",
                                           "training_time_ms", "detection_time_ms",
                                           "counts",           "mode"};
    for (const auto& key : keys) CHECK(chip_report.contains(key));
    CHECK(chip_report.size() == keys.size());

    // Warm start from a mismatched architecture names the offending layer.
    const Result mismatch =
        run("train --scenes " + in_dir("t0") + " --out " + in_dir("w2.sdw") +
            " --epochs 1 --chip-size 16 --init-weights " + in_dir("w.sdw"));
    CHECK(mismatch.exit_code == 2);
    CHECK(mismatch.out.find("mismatch") != std::string::npos);
}

TEST_CASE("vessel-free scene detects nothing") {
    REQUIRE(run("synth --rows 128 --cols 128 --vessels 0 --looks 4 --seed 31 --out " +
                in_dir("empty"))
                .exit_code == 0);
    REQUIRE(run("synth --rows 192 --cols 192 --vessels 6 --looks 4 --seed 32 --out " +
                in_dir("full"))
                .exit_code == 0);
    REQUIRE(run("train --scenes " + in_dir("full") + " --out " + in_dir("w3.sdw") +
                " --epochs 8 --seed 4")
                .exit_code == 0);
    const Result r = run("detect --scene " + in_dir("empty") + " --weights " + in_dir("w3.sdw") +
                         " --out " + in_dir("empty_dets.json"));
    REQUIRE(r.exit_code == 0);
    CHECK(json::parse(slurp(in_dir("empty_dets.json")))["detections"].empty());
}

TEST_CASE("training on vessel-free scenes is a config error") {
    REQUIRE(fs::exists(in_dir("empty.json")));
    const Result r =
        run("train --scenes " + in_dir("empty") + " --out " + in_dir("w4.sdw") + " --epochs 1");
    CHECK(r.exit_code == 2);
    CHECK(r.out.find("vessel") != std::string::npos);
}

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr, "usage: %s <sardet-cli-path> [doctest args]\n", argv[0]);
        return 1;
    }
    g_cli = argv[1];
    g_dir = fs::temp_directory_path() / ("sardet_cli_" + std::to_string(::getpid()));
    fs::create_directories(g_dir);

    doctest::Context context;
    context.applyCommandLine(argc - 1, argv + 1);
    const int rc = context.run();
    fs::remove_all(g_dir);
    return rc;
}
