// sardet command line: synthetic scenes, denoising, CFAR, training,
// detection and evaluation, all through the libsardet C interface.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <sardet/sardet.h>

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;

[[noreturn]] void fail(int code, const std::string& message) {
    std::fprintf(stderr, "sardet: %s\n", message.c_str());
    std::exit(code);
}

void check(int rc) {
    if (rc == SARDET_OK) return;
    const int code = rc == SARDET_E_IO ? kExitIo : rc == SARDET_E_VALIDATION ? kExitConfig : 1;
    fail(code, sardet_last_error());
}

std::string take_string(char* s) {
    std::string out = s ? s : "";
    sardet_string_free(s);
    return out;
}

struct SceneDeleter {
    void operator()(sardet_scene* s) const { sardet_scene_free(s); }
};
struct NetworkDeleter {
    void operator()(sardet_network* n) const { sardet_network_free(n); }
};
struct DatasetDeleter {
    void operator()(sardet_dataset* d) const { sardet_dataset_free(d); }
};
using ScenePtr = std::unique_ptr<sardet_scene, SceneDeleter>;
using NetworkPtr = std::unique_ptr<sardet_network, NetworkDeleter>;
using DatasetPtr = std::unique_ptr<sardet_dataset, DatasetDeleter>;

ScenePtr load_scene(const std::string& stem) {
    sardet_scene* raw = nullptr;
    check(sardet_scene_load(stem.c_str(), &raw));
    return ScenePtr(raw);
}

ScenePtr synth_scene(const json& params) {
    sardet_scene* raw = nullptr;
    check(sardet_scene_synth(params.dump().c_str(), &raw));
    return ScenePtr(raw);
}

ScenePtr denoise_scene(const sardet_scene* scene, const json& cfg) {
    sardet_scene* raw = nullptr;
    check(sardet_scene_denoise(scene, cfg.dump().c_str(), &raw));
    return ScenePtr(raw);
}

void write_text_atomic(const std::string& path, const std::string& text) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(kExitIo, "cannot open for writing: " + tmp);
        out.write(text.data(), static_cast<std::streamsize>(text.size()));
        if (!out) fail(kExitIo, "write failed: " + tmp);
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) fail(kExitIo, "rename failed: " + path + ": " + ec.message());
}

void write_report(const std::string& path, const json& j) {
    write_text_atomic(path, j.dump(2) + "\n");
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(kExitIo, "cannot open: " + path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_pgm_atomic(const std::string& path, int rows, int cols,
                      const std::vector<std::uint8_t>& bytes) {
    std::string out = "P5\n" + std::to_string(cols) + " " + std::to_string(rows) + "\n255\n";
    out.append(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    write_text_atomic(path, out);
}

json parse_json_text(const std::string& text, const std::string& what) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        fail(kExitConfig, what + ": " + e.what());
    }
}

// Config file: a JSON object whose sections mirror the subcommand options.
json load_config(const std::string& path) {
    if (path.empty()) return json::object();
    const json cfg = parse_json_text(read_text(path), "config " + path);
    if (!cfg.is_object()) fail(kExitConfig, "config " + path + ": expected a JSON object");
    static const std::vector<std::string> known = {"seed",  "synth",  "denoise", "cfar",
                                                   "train", "detect", "eval",   "bench"};
    for (const auto& item : cfg.items()) {
        bool ok = false;
        for (const auto& k : known) ok = ok || item.key() == k;
        if (!ok) fail(kExitConfig, "config " + path + ": unknown key '" + item.key() + "'");
    }
    return cfg;
}

json section(const json& cfg, const char* name) {
    if (cfg.contains(name)) {
        if (!cfg[name].is_object() && !(std::string(name) == "denoise" && cfg[name].is_boolean()))
            fail(kExitConfig, std::string("config section '") + name + "' must be an object");
        return cfg[name];
    }
    return json::object();
}

// Flags the user actually passed override the config file.
struct OptionSet {
    std::vector<std::pair<CLI::Option*, std::function<void(json&)>>> setters;

    void apply(json& j) const {
        for (const auto& [opt, set] : setters)
            if (opt->count() > 0) set(j);
    }
};

std::uint64_t scene_seed(std::uint64_t base, std::uint64_t index) {
    // splitmix-style stream derivation, kept in the CLI so bench scene
    // seeds are reproducible from the single global seed.
    std::uint64_t z = base + 0x9e3779b97f4a7c15ull * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

json scene_stats(const sardet_scene* scene) {
    char* raw = nullptr;
    check(sardet_scene_stats_json(scene, &raw));
    return parse_json_text(take_string(raw), "scene stats");
}

std::vector<float> band_pixels(const sardet_scene* scene, int band) {
    const std::size_t n = static_cast<std::size_t>(sardet_scene_rows(scene)) *
                          static_cast<std::size_t>(sardet_scene_cols(scene));
    std::vector<float> pixels(n);
    check(sardet_scene_band_pixels(scene, band, pixels.data(), pixels.size()));
    return pixels;
}

void print_json_line(const json& j) { std::printf("%s\n", j.dump().c_str()); }

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

struct SynthArgs {
    std::string config_path, out;
    std::uint64_t seed = 0;
    int rows = 0, cols = 0, vessels = 0, looks = 0, vessel_min = 0, vessel_max = 0;
    double clutter_mean = 0, band_ratio = 0, tcr_min = 0, tcr_max = 0;
    OptionSet opts;
    CLI::Option* seed_opt = nullptr;
};

void run_synth(const SynthArgs& args) {
    const json cfg = load_config(args.config_path);
    json params = section(cfg, "synth");
    if (cfg.contains("seed") && !params.contains("seed")) params["seed"] = cfg["seed"];
    args.opts.apply(params);
    if (args.seed_opt->count() > 0) params["seed"] = args.seed;

    const ScenePtr scene = synth_scene(params);
    check(sardet_scene_save(scene.get(), args.out.c_str()));
    print_json_line(scene_stats(scene.get()));
}

// ---------------------------------------------------------------------------
// denoise
// ---------------------------------------------------------------------------

struct DenoiseArgs {
    std::string config_path, scene, out;
    std::string family, rule;
    int levels = 0;
    bool linear = false;
    OptionSet opts;
};

void run_denoise(const DenoiseArgs& args) {
    const json cfg = load_config(args.config_path);
    json dn = section(cfg, "denoise");
    if (dn.is_boolean()) dn = json::object();
    args.opts.apply(dn);

    const ScenePtr scene = load_scene(args.scene);
    const ScenePtr out = denoise_scene(scene.get(), dn);
    check(sardet_scene_save(out.get(), args.out.c_str()));
    print_json_line(scene_stats(out.get()));
}

// ---------------------------------------------------------------------------
// cfar
// ---------------------------------------------------------------------------

struct CfarArgs {
    std::string config_path, scene, band = "VV", out, mask_path;
    int guard = 0, train_radius = 0;
    double pfa = 0, k = 0;
    std::string variant;
    OptionSet opts;
};

void run_cfar(const CfarArgs& args) {
    const json cfg = load_config(args.config_path);
    json cf = section(cfg, "cfar");
    args.opts.apply(cf);

    const ScenePtr scene = load_scene(args.scene);
    const int rows = sardet_scene_rows(scene.get());
    const int cols = sardet_scene_cols(scene.get());
    std::vector<std::uint8_t> mask;
    std::uint8_t* mask_ptr = nullptr;
    if (!args.mask_path.empty()) {
        mask.assign(static_cast<std::size_t>(rows) * cols, 0);
        mask_ptr = mask.data();
    }
    char* raw = nullptr;
    check(sardet_cfar(scene.get(), args.band.c_str(), cf.dump().c_str(), mask_ptr, mask.size(),
                      &raw));
    json result = parse_json_text(take_string(raw), "cfar result");
    json out{{"scene_id", scene_stats(scene.get())["scene_id"]},
             {"band", args.band},
             {"n_detections", result["n_detections"]},
             {"boxes", result["boxes"]}};
    if (!args.out.empty()) write_report(args.out, out);
    if (mask_ptr) {
        for (auto& value : mask) value = value ? 255 : 0;
        write_pgm_atomic(args.mask_path, rows, cols, mask);
    }
    print_json_line({{"n_detections", result["n_detections"]},
                     {"boxes", result["boxes"].size()}});
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainArgs {
    std::string config_path, out, history_path, init_weights, arch = "default";
    std::vector<std::string> scenes;
    std::uint64_t seed = 0;
    int epochs = 0, batch = 0, chip_size = 32;
    double lr = 0, momentum = 0, train_fraction = 0.75;
    bool no_denoise = false;
    OptionSet opts;
    CLI::Option* seed_opt = nullptr;
    CLI::Option* chip_opt = nullptr;
    CLI::Option* fraction_opt = nullptr;
};

struct PreparedDataset {
    DatasetPtr train, val;
    long long train_size = 0, val_size = 0;
};

PreparedDataset build_split_dataset(const std::vector<std::string>& stems, bool no_denoise,
                                    const json& denoise_cfg, int chip_size, std::uint64_t seed,
                                    double train_fraction) {
    if (stems.empty()) fail(kExitConfig, "no scenes given");
    std::vector<ScenePtr> scenes;
    std::vector<const sardet_scene*> raw;
    for (const std::string& stem : stems) {
        ScenePtr scene = load_scene(stem);
        if (!no_denoise) scene = denoise_scene(scene.get(), denoise_cfg);
        raw.push_back(scene.get());
        scenes.push_back(std::move(scene));
    }
    const json ds_cfg{{"chip_size", chip_size}, {"seed", seed}};
    sardet_dataset* dataset_raw = nullptr;
    check(sardet_dataset_build(raw.data(), raw.size(), ds_cfg.dump().c_str(), &dataset_raw));
    DatasetPtr dataset(dataset_raw);
    if (sardet_dataset_vessel_count(dataset.get()) == 0)
        fail(kExitConfig, "no vessels in the given scenes");

    sardet_dataset* train_raw = nullptr;
    sardet_dataset* val_raw = nullptr;
    check(sardet_dataset_split(dataset.get(), train_fraction, seed, &train_raw, &val_raw));
    PreparedDataset out;
    out.train.reset(train_raw);
    out.val.reset(val_raw);
    out.train_size = sardet_dataset_size(out.train.get());
    out.val_size = sardet_dataset_size(out.val.get());
    return out;
}

void run_train(const TrainArgs& args) {
    const json cfg = load_config(args.config_path);
    json tr = section(cfg, "train");
    if (cfg.contains("seed") && !tr.contains("seed")) tr["seed"] = cfg["seed"];
    args.opts.apply(tr);
    if (args.seed_opt->count() > 0) tr["seed"] = args.seed;
    const std::uint64_t seed = tr.value("seed", std::uint64_t{0});
    if (!args.init_weights.empty()) tr["init_weights_path"] = args.init_weights;

    const PreparedDataset data =
        build_split_dataset(args.scenes, args.no_denoise, section(cfg, "denoise"),
                            args.chip_size, seed, args.train_fraction);

    sardet_network* net_raw = nullptr;
    check(sardet_network_create(args.arch.c_str(), args.chip_size, 2, seed, &net_raw));
    NetworkPtr net(net_raw);
    char* hist_raw = nullptr;
    check(sardet_train(net.get(), data.train.get(), data.val.get(), tr.dump().c_str(),
                       &hist_raw));
    const json history = parse_json_text(take_string(hist_raw), "history");
    check(sardet_network_save(net.get(), args.out.c_str()));

    json history_out{{"epochs", history["train_loss"].size()},
                     {"train_loss", history["train_loss"]},
                     {"val_accuracy", history["val_accuracy"]},
                     {"training_time_ms", history["wall_time_ms"]},
                     {"dataset", {{"train", data.train_size}, {"val", data.val_size}}}};
    if (!args.history_path.empty()) write_report(args.history_path, history_out);

    const json val_acc = history["val_accuracy"];
    print_json_line({{"weights", args.out},
                     {"train_size", data.train_size},
                     {"val_size", data.val_size},
                     {"final_val_accuracy", val_acc.empty() ? json() : val_acc.back()},
                     {"training_time_ms", history["wall_time_ms"]}});
}

// ---------------------------------------------------------------------------
// detect
// ---------------------------------------------------------------------------

struct DetectArgs {
    std::string config_path, scene, weights, out, overlay;
    std::string mode;
    int stride = 0, chip_size = 0, guard = 0, train_radius = 0;
    double score_threshold = 0, nms_iou = 0, pfa = 0;
    bool no_denoise = false;
    OptionSet opts, cfar_opts;
};

void burn_box_outline(std::vector<std::uint8_t>& img, int rows, int cols, const json& box) {
    const int row = box["row"].get<int>(), col = box["col"].get<int>();
    const int height = box["height"].get<int>(), width = box["width"].get<int>();
    const auto set = [&](int r, int c) {
        if (r >= 0 && c >= 0 && r < rows && c < cols)
            img[static_cast<std::size_t>(r) * cols + c] = 255;
    };
    for (int c = col; c < col + width; ++c) {
        set(row, c);
        set(row + height - 1, c);
    }
    for (int r = row; r < row + height; ++r) {
        set(r, col);
        set(r, col + width - 1);
    }
}

void write_overlay(const std::string& path, const sardet_scene* scene, const json& detections) {
    const int rows = sardet_scene_rows(scene);
    const int cols = sardet_scene_cols(scene);
    const std::vector<float> vv = band_pixels(scene, 0);
    float lo = vv[0], hi = vv[0];
    for (float x : vv) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    const float span = hi > lo ? hi - lo : 1.0f;
    std::vector<std::uint8_t> img(vv.size());
    for (std::size_t i = 0; i < vv.size(); ++i)
        img[i] = static_cast<std::uint8_t>(255.0f * (vv[i] - lo) / span);
    for (const json& det : detections) burn_box_outline(img, rows, cols, det);
    write_pgm_atomic(path, rows, cols, img);
}

json detect_section(const json& cfg, const DetectArgs& args) {
    json dt = section(cfg, "detect");
    args.opts.apply(dt);
    json cf = dt.contains("cfar") ? dt["cfar"] : json::object();
    args.cfar_opts.apply(cf);
    if (!cf.empty()) dt["cfar"] = cf;
    if (args.no_denoise) dt["denoise"] = false;
    return dt;
}

void run_detect(const DetectArgs& args) {
    const json cfg = load_config(args.config_path);
    const json dt = detect_section(cfg, args);

    const ScenePtr scene = load_scene(args.scene);
    sardet_network* net_raw = nullptr;
    check(sardet_network_load(args.weights.c_str(), &net_raw));
    NetworkPtr net(net_raw);

    char* raw = nullptr;
    check(sardet_detect(net.get(), scene.get(), dt.dump().c_str(), &raw));
    const json result = parse_json_text(take_string(raw), "detections");
    if (!args.out.empty()) write_report(args.out, result);
    if (!args.overlay.empty()) write_overlay(args.overlay, scene.get(), result["detections"]);
    print_json_line({{"scene_id", result["scene_id"]},
                     {"n_detections", result["detections"].size()},
                     {"detection_time_ms", result["detection_time_ms"]}});
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

struct EvalArgs {
    std::string config_path, mode, detections, truth, weights, out;
    std::vector<std::string> scenes;
    double iou_min = 0.5;
    long long n_proposals = -2; // -2: take from the detections file
    std::uint64_t seed = 0;
    int chip_size = 32;
    double train_fraction = 0.75;
    bool no_denoise = false;
    CLI::Option* proposals_opt = nullptr;
};

void run_eval(const EvalArgs& args) {
    const json cfg = load_config(args.config_path);
    json report;
    if (args.mode == "box") {
        if (args.detections.empty() || args.truth.empty())
            fail(kExitConfig, "eval box mode needs --detections and --truth");
        const json dets = parse_json_text(read_text(args.detections), "detections file");
        long long n_proposals = -1;
        if (args.proposals_opt->count() > 0)
            n_proposals = args.n_proposals;
        else if (dets.is_object() && dets.contains("n_proposals"))
            n_proposals = dets["n_proposals"].get<long long>();
        const double detection_ms =
            dets.is_object() ? dets.value("detection_time_ms", 0.0) : 0.0;
        char* raw = nullptr;
        check(sardet_eval_box(dets.dump().c_str(), read_text(args.truth).c_str(), args.iou_min,
                              n_proposals, 0.0, detection_ms, &raw));
        report = parse_json_text(take_string(raw), "report");
    } else if (args.mode == "chip") {
        if (args.weights.empty()) fail(kExitConfig, "eval chip mode needs --weights");
        const PreparedDataset data =
            build_split_dataset(args.scenes, args.no_denoise, section(cfg, "denoise"),
                                args.chip_size, args.seed, args.train_fraction);
        sardet_network* net_raw = nullptr;
        check(sardet_network_load(args.weights.c_str(), &net_raw));
        NetworkPtr net(net_raw);
        char* raw = nullptr;
        check(sardet_eval_chips(net.get(), data.val.get(), 0.0, &raw));
        report = parse_json_text(take_string(raw), "report");
    } else {
        fail(kExitConfig, "eval: --mode must be 'chip' or 'box'");
    }
    if (!args.out.empty()) write_report(args.out, report);
    print_json_line(report);
}

// ---------------------------------------------------------------------------
// bench
// ---------------------------------------------------------------------------

struct BenchArgs {
    std::string config_path, out;
    std::uint64_t seed = 0;
    int train_scenes = 20, eval_scenes = 5, rows = 512, cols = 512, looks = 4;
    int vessels_per_scene = 25, chip_size = 32, epochs = 200;
    double train_fraction = 0.75, box_iou_min = 0.25;
    OptionSet opts;
    CLI::Option* seed_opt = nullptr;
};

void run_bench(const BenchArgs& args) {
    const json file_cfg = load_config(args.config_path);
    json bench{{"n_train_scenes", args.train_scenes},
               {"n_eval_scenes", args.eval_scenes},
               {"rows", args.rows},
               {"cols", args.cols},
               {"looks", args.looks},
               {"clutter_mean_vv", 1.0},
               {"band_ratio_vh", 0.5},
               {"vessels_per_scene", args.vessels_per_scene},
               {"vessel_size_range", json::array({16, 28})},
               {"tcr_db_range", json::array({10.0, 20.0})},
               {"chip_size", args.chip_size},
               {"train_fraction", args.train_fraction},
               {"epochs", args.epochs},
               {"batch_size", 32},
               {"learning_rate", 0.01},
               {"momentum", 0.9},
               {"box_iou_min", args.box_iou_min},
               {"seed", args.seed}};
    const json overrides = section(file_cfg, "bench");
    for (const auto& item : overrides.items()) {
        if (!bench.contains(item.key()))
            fail(kExitConfig, "bench config: unknown key '" + item.key() + "'");
        bench[item.key()] = item.value();
    }
    args.opts.apply(bench);
    if (args.seed_opt->count() > 0)
        bench["seed"] = args.seed;
    else if (file_cfg.contains("seed") && !overrides.contains("seed"))
        bench["seed"] = file_cfg["seed"];
    const std::uint64_t seed = bench["seed"].get<std::uint64_t>();

    const auto synth_params = [&](std::uint64_t scene_index) {
        return json{{"rows", bench["rows"]},
                    {"cols", bench["cols"]},
                    {"clutter_mean_vv", bench["clutter_mean_vv"]},
                    {"looks", bench["looks"]},
                    {"band_ratio_vh", bench["band_ratio_vh"]},
                    {"n_vessels", bench["vessels_per_scene"]},
                    {"vessel_size_range", bench["vessel_size_range"]},
                    {"tcr_db_range", bench["tcr_db_range"]},
                    {"seed", scene_seed(seed, scene_index)}};
    };

    // Training scenes -> denoise -> balanced chip set -> split.
    const json denoise_cfg = section(file_cfg, "denoise");
    std::vector<ScenePtr> scenes;
    std::vector<const sardet_scene*> raw_scenes;
    const int n_train_scenes = bench["n_train_scenes"].get<int>();
    for (int i = 0; i < n_train_scenes; ++i) {
        ScenePtr scene = synth_scene(synth_params(static_cast<std::uint64_t>(i)));
        scene = denoise_scene(scene.get(), denoise_cfg);
        raw_scenes.push_back(scene.get());
        scenes.push_back(std::move(scene));
    }
    const json ds_cfg{{"chip_size", bench["chip_size"]}, {"seed", seed}};
    sardet_dataset* dataset_raw = nullptr;
    check(sardet_dataset_build(raw_scenes.data(), raw_scenes.size(), ds_cfg.dump().c_str(),
                               &dataset_raw));
    DatasetPtr dataset(dataset_raw);
    sardet_dataset* train_raw = nullptr;
    sardet_dataset* val_raw = nullptr;
    check(sardet_dataset_split(dataset.get(), bench["train_fraction"].get<double>(), seed,
                               &train_raw, &val_raw));
    DatasetPtr train_set(train_raw), val_set(val_raw);
    scenes.clear(); // chips are extracted; free the rasters before training
    raw_scenes.clear();

    sardet_network* net_raw = nullptr;
    check(sardet_network_create("default", bench["chip_size"].get<int>(), 2, seed, &net_raw));
    NetworkPtr net(net_raw);
    const json train_cfg{{"epochs", bench["epochs"]},
                         {"batch_size", bench["batch_size"]},
                         {"learning_rate", bench["learning_rate"]},
                         {"momentum", bench["momentum"]},
                         {"seed", seed}};
    char* hist_raw = nullptr;
    check(sardet_train(net.get(), train_set.get(), val_set.get(), train_cfg.dump().c_str(),
                       &hist_raw));
    const json history = parse_json_text(take_string(hist_raw), "history");
    const double training_ms = history["wall_time_ms"].get<double>();

    const std::string weights_path = args.out + ".sdw";
    check(sardet_network_save(net.get(), weights_path.c_str()));

    char* chip_report_raw = nullptr;
    check(sardet_eval_chips(net.get(), val_set.get(), training_ms, &chip_report_raw));
    const json chip_report = parse_json_text(take_string(chip_report_raw), "chip report");

    // Held-out scenes, detected with the pipeline defaults, pooled box-mode.
    const json detect_cfg = json::object();
    long long tp = 0, fp = 0, fn = 0, tn = 0;
    double detect_ms_total = 0.0;
    const int n_eval_scenes = bench["n_eval_scenes"].get<int>();
    for (int i = 0; i < n_eval_scenes; ++i) {
        const ScenePtr scene =
            synth_scene(synth_params(static_cast<std::uint64_t>(1000 + i)));
        char* det_raw = nullptr;
        check(sardet_detect(net.get(), scene.get(), detect_cfg.dump().c_str(), &det_raw));
        const json dets = parse_json_text(take_string(det_raw), "detections");
        detect_ms_total += dets["detection_time_ms"].get<double>();
        char* truth_raw = nullptr;
        check(sardet_scene_truth_json(scene.get(), &truth_raw));
        const std::string truth_text = take_string(truth_raw);
        char* report_raw = nullptr;
        check(sardet_eval_box(dets.dump().c_str(), truth_text.c_str(),
                              bench["box_iou_min"].get<double>(),
                              dets["n_proposals"].get<long long>(), 0.0, 0.0, &report_raw));
        const json scene_report = parse_json_text(take_string(report_raw), "report");
        tp += scene_report["counts"]["tp"].get<long long>();
        fp += scene_report["counts"]["fp"].get<long long>();
        fn += scene_report["counts"]["fn"].get<long long>();
        tn += scene_report["counts"]["tn"].get<long long>();
    }
    char* box_report_raw = nullptr;
    check(sardet_metrics(tp, fp, fn, tn, "box", training_ms,
                         n_eval_scenes > 0 ? detect_ms_total / n_eval_scenes : 0.0,
                         &box_report_raw));
    const json box_report = parse_json_text(take_string(box_report_raw), "box report");

    const json report{{"seed", seed},
                      {"config", bench},
                      {"dataset",
                       {{"train", sardet_dataset_size(train_set.get())},
                        {"val", sardet_dataset_size(val_set.get())}}},
                      {"chip_mode", chip_report},
                      {"box_mode", box_report},
                      {"weights", fs::path(weights_path).filename().string()},
                      {"history",
                       {{"train_loss", history["train_loss"]},
                        {"val_accuracy", history["val_accuracy"]},
                        {"training_time_ms", training_ms}}}};
    write_report(args.out + ".json", report);
    print_json_line({{"chip_accuracy_pct", chip_report["accuracy_pct"]},
                     {"box_f1", box_report["f1"]},
                     {"training_time_ms", training_ms},
                     {"report", args.out + ".json"}});
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"SAR vessel-detection toolkit"};
    app.require_subcommand(1);

    // --- synth
    SynthArgs synth_args;
    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic dual-band scene");
    synth->add_option("--config", synth_args.config_path, "JSON config file");
    synth->add_option("--out", synth_args.out, "output scene path stem")->required();
    synth_args.seed_opt = synth->add_option("--seed", synth_args.seed, "generator seed");
    auto& sos = synth_args.opts.setters;
    sos.push_back({synth->add_option("--rows", synth_args.rows),
                   [&](json& j) { j["rows"] = synth_args.rows; }});
    sos.push_back({synth->add_option("--cols", synth_args.cols),
                   [&](json& j) { j["cols"] = synth_args.cols; }});
    sos.push_back({synth->add_option("--vessels", synth_args.vessels),
                   [&](json& j) { j["n_vessels"] = synth_args.vessels; }});
    sos.push_back({synth->add_option("--looks", synth_args.looks),
                   [&](json& j) { j["looks"] = synth_args.looks; }});
    sos.push_back({synth->add_option("--clutter-mean", synth_args.clutter_mean),
                   [&](json& j) { j["clutter_mean_vv"] = synth_args.clutter_mean; }});
    sos.push_back({synth->add_option("--band-ratio", synth_args.band_ratio),
                   [&](json& j) { j["band_ratio_vh"] = synth_args.band_ratio; }});
    sos.push_back({synth->add_option("--vessel-min", synth_args.vessel_min), [&](json& j) {
                       j["vessel_size_range"][0] = synth_args.vessel_min;
                       if (!j["vessel_size_range"][1].is_number())
                           j["vessel_size_range"][1] = synth_args.vessel_min;
                   }});
    sos.push_back({synth->add_option("--vessel-max", synth_args.vessel_max), [&](json& j) {
                       if (!j["vessel_size_range"][0].is_number())
                           j["vessel_size_range"][0] = 16;
                       j["vessel_size_range"][1] = synth_args.vessel_max;
                   }});
    sos.push_back({synth->add_option("--tcr-min", synth_args.tcr_min), [&](json& j) {
                       j["tcr_db_range"][0] = synth_args.tcr_min;
                       if (!j["tcr_db_range"][1].is_number())
                           j["tcr_db_range"][1] = synth_args.tcr_min;
                   }});
    sos.push_back({synth->add_option("--tcr-max", synth_args.tcr_max), [&](json& j) {
                       if (!j["tcr_db_range"][0].is_number()) j["tcr_db_range"][0] = 10.0;
                       j["tcr_db_range"][1] = synth_args.tcr_max;
                   }});
    synth->callback([&] { run_synth(synth_args); });

    // --- denoise
    DenoiseArgs denoise_args;
    CLI::App* denoise = app.add_subcommand("denoise", "wavelet-denoise a scene");
    denoise->add_option("--config", denoise_args.config_path, "JSON config file");
    denoise->add_option("--scene", denoise_args.scene, "input scene stem")->required();
    denoise->add_option("--out", denoise_args.out, "output scene stem")->required();
    auto& dns = denoise_args.opts.setters;
    dns.push_back({denoise->add_option("--family", denoise_args.family),
                   [&](json& j) { j["family"] = denoise_args.family; }});
    dns.push_back({denoise->add_option("--levels", denoise_args.levels),
                   [&](json& j) { j["levels"] = denoise_args.levels; }});
    dns.push_back({denoise->add_option("--rule", denoise_args.rule),
                   [&](json& j) { j["rule"] = denoise_args.rule; }});
    dns.push_back({denoise->add_flag("--linear", denoise_args.linear,
                                     "threshold in the linear domain instead of log"),
                   [&](json& j) { j["log_domain"] = false; }});
    denoise->callback([&] { run_denoise(denoise_args); });

    // --- cfar
    CfarArgs cfar_args;
    CLI::App* cfar = app.add_subcommand("cfar", "run the CFAR baseline detector");
    cfar->add_option("--config", cfar_args.config_path, "JSON config file");
    cfar->add_option("--scene", cfar_args.scene, "input scene stem")->required();
    cfar->add_option("--band", cfar_args.band, "band to detect on (default VV)");
    cfar->add_option("--out", cfar_args.out, "boxes JSON output path");
    cfar->add_option("--mask", cfar_args.mask_path, "detection mask PGM output path");
    auto& cfs = cfar_args.opts.setters;
    cfs.push_back({cfar->add_option("--guard", cfar_args.guard),
                   [&](json& j) { j["guard_radius"] = cfar_args.guard; }});
    cfs.push_back({cfar->add_option("--train-radius", cfar_args.train_radius),
                   [&](json& j) { j["train_radius"] = cfar_args.train_radius; }});
    cfs.push_back({cfar->add_option("--pfa", cfar_args.pfa),
                   [&](json& j) { j["pfa"] = cfar_args.pfa; }});
    cfs.push_back({cfar->add_option("--variant", cfar_args.variant),
                   [&](json& j) { j["variant"] = cfar_args.variant; }});
    cfs.push_back({cfar->add_option("--k", cfar_args.k),
                   [&](json& j) { j["two_param_k"] = cfar_args.k; }});
    cfar->callback([&] { run_cfar(cfar_args); });

    // --- train
    TrainArgs train_args;
    CLI::App* train = app.add_subcommand("train", "train the chip classifier from scenes");
    train->add_option("--config", train_args.config_path, "JSON config file");
    train->add_option("--scenes", train_args.scenes, "scene stems with ground truth")
        ->required()
        ->expected(-1);
    train->add_option("--out", train_args.out, "weight file output path")->required();
    train->add_option("--history", train_args.history_path, "training history JSON path");
    train->add_option("--init-weights", train_args.init_weights, "warm-start weight file");
    train->add_option("--arch", train_args.arch, "network architecture (default|tiny)");
    train_args.chip_opt = train->add_option("--chip-size", train_args.chip_size);
    train_args.fraction_opt =
        train->add_option("--train-fraction", train_args.train_fraction);
    train->add_flag("--no-denoise", train_args.no_denoise, "skip wavelet preprocessing");
    train_args.seed_opt = train->add_option("--seed", train_args.seed, "seed");
    auto& trs = train_args.opts.setters;
    trs.push_back({train->add_option("--epochs", train_args.epochs),
                   [&](json& j) { j["epochs"] = train_args.epochs; }});
    trs.push_back({train->add_option("--batch", train_args.batch),
                   [&](json& j) { j["batch_size"] = train_args.batch; }});
    trs.push_back({train->add_option("--lr", train_args.lr),
                   [&](json& j) { j["learning_rate"] = train_args.lr; }});
    trs.push_back({train->add_option("--momentum", train_args.momentum),
                   [&](json& j) { j["momentum"] = train_args.momentum; }});
    train->callback([&] { run_train(train_args); });

    // --- detect
    DetectArgs detect_args;
    CLI::App* detect = app.add_subcommand("detect", "detect vessels in a scene");
    detect->add_option("--config", detect_args.config_path, "JSON config file");
    detect->add_option("--scene", detect_args.scene, "input scene stem")->required();
    detect->add_option("--weights", detect_args.weights, "trained weight file")->required();
    detect->add_option("--out", detect_args.out, "detections JSON output path");
    detect->add_option("--overlay", detect_args.overlay, "overlay PGM output path");
    detect->add_flag("--no-denoise", detect_args.no_denoise, "skip wavelet preprocessing");
    auto& dts = detect_args.opts.setters;
    dts.push_back({detect->add_option("--mode", detect_args.mode),
                   [&](json& j) { j["proposal_mode"] = detect_args.mode; }});
    dts.push_back({detect->add_option("--stride", detect_args.stride),
                   [&](json& j) { j["window_stride"] = detect_args.stride; }});
    dts.push_back({detect->add_option("--chip-size", detect_args.chip_size),
                   [&](json& j) { j["chip_size"] = detect_args.chip_size; }});
    dts.push_back({detect->add_option("--score-threshold", detect_args.score_threshold),
                   [&](json& j) { j["score_threshold"] = detect_args.score_threshold; }});
    dts.push_back({detect->add_option("--nms-iou", detect_args.nms_iou),
                   [&](json& j) { j["nms_iou"] = detect_args.nms_iou; }});
    auto& dcs = detect_args.cfar_opts.setters;
    dcs.push_back({detect->add_option("--pfa", detect_args.pfa),
                   [&](json& j) { j["pfa"] = detect_args.pfa; }});
    dcs.push_back({detect->add_option("--guard", detect_args.guard),
                   [&](json& j) { j["guard_radius"] = detect_args.guard; }});
    dcs.push_back({detect->add_option("--train-radius", detect_args.train_radius),
                   [&](json& j) { j["train_radius"] = detect_args.train_radius; }});
    detect->callback([&] { run_detect(detect_args); });

    // --- eval
    EvalArgs eval_args;
    CLI::App* eval = app.add_subcommand("eval", "evaluate detections or a classifier");
    eval->add_option("--config", eval_args.config_path, "JSON config file");
    eval->add_option("--mode", eval_args.mode, "chip or box")->required();
    eval->add_option("--detections", eval_args.detections, "detections JSON (box mode)");
    eval->add_option("--truth", eval_args.truth, "truth JSON (box mode)");
    eval->add_option("--iou-min", eval_args.iou_min, "matching iou threshold (box mode)");
    eval_args.proposals_opt =
        eval->add_option("--n-proposals", eval_args.n_proposals, "proposal count for tn");
    eval->add_option("--scenes", eval_args.scenes, "scene stems (chip mode)")->expected(-1);
    eval->add_option("--weights", eval_args.weights, "weight file (chip mode)");
    eval->add_option("--seed", eval_args.seed, "split seed (chip mode)");
    eval->add_option("--chip-size", eval_args.chip_size, "chip size (chip mode)");
    eval->add_option("--train-fraction", eval_args.train_fraction,
                     "train fraction of the split (chip mode)");
    eval->add_flag("--no-denoise", eval_args.no_denoise, "skip wavelet preprocessing");
    eval->add_option("--out", eval_args.out, "report JSON output path");
    eval->callback([&] { run_eval(eval_args); });

    // --- bench
    BenchArgs bench_args;
    CLI::App* bench = app.add_subcommand("bench", "one-shot synthetic benchmark");
    bench->add_option("--config", bench_args.config_path, "JSON config file");
    bench->add_option("--out", bench_args.out, "output stem for report and weights")->required();
    bench_args.seed_opt = bench->add_option("--seed", bench_args.seed, "benchmark seed");
    auto& bns = bench_args.opts.setters;
    bns.push_back({bench->add_option("--train-scenes", bench_args.train_scenes),
                   [&](json& j) { j["n_train_scenes"] = bench_args.train_scenes; }});
    bns.push_back({bench->add_option("--eval-scenes", bench_args.eval_scenes),
                   [&](json& j) { j["n_eval_scenes"] = bench_args.eval_scenes; }});
    bns.push_back({bench->add_option("--rows", bench_args.rows),
                   [&](json& j) { j["rows"] = bench_args.rows; }});
    bns.push_back({bench->add_option("--cols", bench_args.cols),
                   [&](json& j) { j["cols"] = bench_args.cols; }});
    bns.push_back({bench->add_option("--looks", bench_args.looks),
                   [&](json& j) { j["looks"] = bench_args.looks; }});
    bns.push_back({bench->add_option("--vessels-per-scene", bench_args.vessels_per_scene),
                   [&](json& j) { j["vessels_per_scene"] = bench_args.vessels_per_scene; }});
    bns.push_back({bench->add_option("--epochs", bench_args.epochs),
                   [&](json& j) { j["epochs"] = bench_args.epochs; }});
    bns.push_back({bench->add_option("--chip-size", bench_args.chip_size),
                   [&](json& j) { j["chip_size"] = bench_args.chip_size; }});
    bench->callback([&] { run_bench(bench_args); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }
    return 0;
}
