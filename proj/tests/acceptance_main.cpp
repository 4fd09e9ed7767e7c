// Acceptance suite: runs every release criterion end to end and prints one
// PASS/FAIL line per criterion.
//
//   acceptance <sardet-cli-path> <scratch-dir>
//
// Criteria 2 and 7 drive the CLI bench subcommand; everything else runs
// against the library directly.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cfar.hpp"
#include "cnn.hpp"
#include "dataset.hpp"
#include "detector.hpp"
#include "eval.hpp"
#include "rng.hpp"
#include "scene.hpp"
#include "wavelet.hpp"

using namespace sardet;
using njson = nlohmann::json;
namespace fs = std::filesystem;

namespace {

int g_passed = 0;
int g_failed = 0;

void report(int criterion, bool pass, const std::string& detail) {
    std::printf("[%s] criterion %d: %s\n", pass ? "PASS" : "FAIL", criterion, detail.c_str());
    std::fflush(stdout);
    (pass ? g_passed : g_failed) += 1;
}

std::string fmt(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", value);
    return buf;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// ---------------------------------------------------------------------------
// 1. Metric-formula fidelity.
// ---------------------------------------------------------------------------
void criterion_1() {
    const EvalReport r = metrics({9, 1, 1, 9});
    bool ok = std::fabs(r.accuracy_pct - 90.0) <= 1e-12 && std::fabs(r.precision - 0.9) <= 1e-12 &&
              std::fabs(r.recall - 0.9) <= 1e-12 && std::fabs(r.f1 - 0.9) <= 1e-12 &&
              std::fabs(r.cohen_kappa - 0.8) <= 1e-12 &&
              std::fabs(r.jaccard - 9.0 / 11.0) <= 1e-12;

    const double precision = 0.9292220761344402;
    const double recall = 0.948956901990269;
    const double reference_f1 = 0.9385346764142002;
    const double recomputed = 2.0 * precision * recall / (precision + recall);
    ok = ok && std::fabs(recomputed - reference_f1) <= 1e-3;

    report(1, ok,
           "metric formulas exact on (9,1,1,9); f1(P,R) = " + fmt(recomputed) + " vs reference " +
               fmt(reference_f1));
}

// ---------------------------------------------------------------------------
// 2 + 7. Benchmark accuracy and run-to-run determinism via the CLI.
// ---------------------------------------------------------------------------
struct BenchRun {
    bool ok = false;
    njson report;
    std::string weights_path;
};

njson strip_timings(njson j) {
    if (j.is_object()) {
        njson out = njson::object();
        for (auto& item : j.items()) {
            const std::string& key = item.key();
            if (key.size() > 3 && key.compare(key.size() - 3, 3, "_ms") == 0) continue;
            out[key] = strip_timings(item.value());
        }
        return out;
    }
    if (j.is_array()) {
        njson out = njson::array();
        for (auto& e : j) out.push_back(strip_timings(e));
        return out;
    }
    return j;
}

BenchRun run_bench(const std::string& cli, const fs::path& dir, std::uint64_t seed) {
    BenchRun run;
    fs::create_directories(dir);
    const std::string stem = (dir / "bench").string();
    const std::string cmd = cli + " bench --seed " + std::to_string(seed) + " --out " + stem +
                            " > " + (dir / "stdout.txt").string() + " 2>&1";
    if (std::system(cmd.c_str()) != 0) return run;
    try {
        run.report = njson::parse(slurp(stem + ".json"));
    } catch (...) {
        return run;
    }
    run.weights_path = stem + ".sdw";
    run.ok = fs::exists(run.weights_path);
    return run;
}

BenchRun criterion_2(const std::string& cli, const fs::path& work) {
    const auto t0 = std::chrono::steady_clock::now();
    BenchRun run = run_bench(cli, work / "run1", 1);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!run.ok) {
        report(2, false, "bench run failed (see " + (work / "run1" / "stdout.txt").string() + ")");
        return run;
    }
    const long long train_size = run.report["dataset"]["train"].get<long long>();
    const long long val_size = run.report["dataset"]["val"].get<long long>();
    const double accuracy = run.report["chip_mode"]["accuracy_pct"].get<double>();
    const std::size_t epochs_run = run.report["history"]["train_loss"].size();
    const bool ok = train_size == 750 && val_size == 250 && epochs_run == 200 &&
                    accuracy >= 90.0 && seconds <= 600.0;
    report(2, ok,
           "bench split " + std::to_string(train_size) + "/" + std::to_string(val_size) + ", " +
               std::to_string(epochs_run) + " epochs, chip accuracy " + fmt(accuracy) +
               "% (gate 90%), " + fmt(seconds) + " s");
    return run;
}

void criterion_7(const std::string& cli, const fs::path& work, const BenchRun& first) {
    if (!first.ok) {
        report(7, false, "skipped comparison: first bench run failed");
        return;
    }
    const BenchRun second = run_bench(cli, work / "run2", 1);
    if (!second.ok) {
        report(7, false, "second bench run failed");
        return;
    }
    const bool weights_equal = slurp(first.weights_path) == slurp(second.weights_path);
    const bool metrics_equal = strip_timings(first.report) == strip_timings(second.report);
    report(7, weights_equal && metrics_equal,
           std::string("same seed: weight files ") +
               (weights_equal ? "byte-identical" : "DIFFER") + ", non-timing report fields " +
               (metrics_equal ? "identical" : "DIFFER"));
}

// ---------------------------------------------------------------------------
// 3. Hybrid CFAR+CNN beats raw CFAR on speckled scenes.
// ---------------------------------------------------------------------------
void criterion_3() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto speckled_params = [](std::uint64_t seed) {
        SynthParams p;
        p.rows = 512;
        p.cols = 512;
        p.looks = 1;
        p.n_vessels = 12;
        p.vessel_min = 16;
        p.vessel_max = 28;
        p.tcr_db_min = 8.0;
        p.tcr_db_max = 14.0;
        p.seed = seed;
        return p;
    };

    // Training pool, disjoint seeds from the held-out evaluation scenes.
    std::vector<SarScene> scenes;
    std::vector<GroundTruth> truths;
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        auto [scene, truth] = synth_scene(speckled_params(9000 + seed));
        for (GridF& band : scene.pixels) band = denoise(band, DenoiseConfig{});
        scenes.push_back(std::move(scene));
        truths.push_back(std::move(truth));
    }
    std::vector<const SarScene*> scene_ptrs;
    std::vector<const GroundTruth*> truth_ptrs;
    for (std::size_t i = 0; i < scenes.size(); ++i) {
        scene_ptrs.push_back(&scenes[i]);
        truth_ptrs.push_back(&truths[i]);
    }
    const std::vector<Chip> chips = build_chip_dataset(scene_ptrs, truth_ptrs, {32, 11});
    TrainConfig train_cfg;
    train_cfg.epochs = 50;
    train_cfg.seed = 11;
    const Network net = train(Network::make_default(32, 2), chips, {}, train_cfg).first;

    DetectConfig detect_cfg; // cfar proposals at pfa 1e-2, denoise on
    ConfusionCounts hybrid_counts, cfar_counts;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto [scene, truth] = synth_scene(speckled_params(9500 + seed));

        const auto [dets, ms] = detect(scene, net, detect_cfg);
        const ConfusionCounts h = match_box_detections(dets, truth, 0.25);
        hybrid_counts.tp += h.tp;
        hybrid_counts.fp += h.fp;
        hybrid_counts.fn += h.fn;

        // Raw CFAR baseline: same threshold machinery, no wavelet, no CNN.
        const CfarResult raw = cfar_detect(scene.band("VV"), detect_cfg.cfar);
        std::vector<Detection> raw_dets;
        for (const BoundingBox& box : raw.boxes)
            raw_dets.push_back({box, 1.0f, DetectionSource::cfar});
        const ConfusionCounts c = match_box_detections(raw_dets, truth, 0.25);
        cfar_counts.tp += c.tp;
        cfar_counts.fp += c.fp;
        cfar_counts.fn += c.fn;
    }
    const double f1_hybrid = metrics(hybrid_counts, EvalMode::box).f1;
    const double f1_cfar = metrics(cfar_counts, EvalMode::box).f1;
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool ok = f1_hybrid >= f1_cfar && f1_hybrid > f1_cfar && seconds <= 300.0;
    report(3, ok,
           "pooled box F1: hybrid " + fmt(f1_hybrid) + " vs raw CFAR " + fmt(f1_cfar) +
               " (strict improvement required), " + fmt(seconds) + " s");
}

// ---------------------------------------------------------------------------
// 4. CFAR false-alarm calibration on vessel-free exponential clutter.
// ---------------------------------------------------------------------------
void criterion_4() {
    bool ok = true;
    std::string detail;
    for (const double pfa : {1e-2, 1e-3}) {
        CfarConfig cfg;
        cfg.guard_radius = 1;
        cfg.train_radius = 4;
        cfg.pfa = pfa;
        std::int64_t hits = 0, cells = 0;
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            SynthParams p;
            p.rows = 512;
            p.cols = 512;
            p.looks = 1;
            p.n_vessels = 0;
            p.seed = 7000 + seed * 13 + static_cast<std::uint64_t>(pfa * 1e6);
            const auto [scene, truth] = synth_scene(p);
            hits += cfar_detect(scene.band("VV"), cfg).n_detections;
            cells += static_cast<std::int64_t>(scene.rows) * scene.cols;
        }
        const double rate = static_cast<double>(hits) / static_cast<double>(cells);
        ok = ok && cells >= 2'500'000 && rate >= pfa / 2.0 && rate <= pfa * 2.0;
        if (!detail.empty()) detail += "; ";
        detail += "pfa " + fmt(pfa) + " -> " + fmt(rate) + " over " + std::to_string(cells) +
                  " cells";
    }
    report(4, ok, detail + " (factor-2 window)");
}

// ---------------------------------------------------------------------------
// 5. Wavelet perfect reconstruction and energy preservation.
// ---------------------------------------------------------------------------
void criterion_5() {
    bool ok = true;
    double worst_rec = 0.0, worst_energy = 0.0;
    for (const WaveletFamily family : {WaveletFamily::haar, WaveletFamily::db4}) {
        for (const auto& [rows, cols] : {std::pair{16, 16}, std::pair{15, 17}, std::pair{64, 64}}) {
            for (int levels = 1; levels <= 3; ++levels) {
                Rng rng(5000 + static_cast<std::uint64_t>(rows * 100 + cols + levels));
                GridD img(rows, cols);
                for (double& x : img.v) x = rng.uniform(-1.0, 1.0);

                const WaveletPyramid pyr = dwt2(img, family, levels);
                double img_energy = 0.0, coeff_energy = 0.0, peak = 0.0;
                for (double x : img.v) {
                    img_energy += x * x;
                    peak = std::max(peak, std::fabs(x));
                }
                for (double x : pyr.base_ll.v) coeff_energy += x * x;
                for (const auto& det : pyr.details) {
                    for (double x : det.lh.v) coeff_energy += x * x;
                    for (double x : det.hl.v) coeff_energy += x * x;
                    for (double x : det.hh.v) coeff_energy += x * x;
                }
                const double energy_err = std::fabs(coeff_energy - img_energy) / img_energy;

                const GridD rec = idwt2(pyr);
                double rec_err = 0.0;
                for (std::size_t i = 0; i < rec.v.size(); ++i)
                    rec_err = std::max(rec_err, std::fabs(rec.v[i] - img.v[i]) / peak);

                worst_rec = std::max(worst_rec, rec_err);
                worst_energy = std::max(worst_energy, energy_err);
                ok = ok && rec_err <= 1e-6 && energy_err <= 1e-5;
            }
        }
    }
    report(5, ok,
           "haar+db4, sizes {16x16, 15x17, 64x64}, levels 1-3: max reconstruction error " +
               fmt(worst_rec) + " (<= 1e-6), max energy error " + fmt(worst_energy) +
               " (<= 1e-5)");
}

// ---------------------------------------------------------------------------
// 6. Gradient correctness on the tiny default architecture.
// ---------------------------------------------------------------------------
void criterion_6() {
    Network net = Network::make_tiny(2);
    net.init_params(21);
    Tensor batch({4, 8, 8, 2});
    Rng rng(22);
    for (float& x : batch.data) x = static_cast<float>(rng.uniform(-1.0, 1.0));
    const double err = grad_check(net, batch, {0, 1, 1, 0}, 1e-3);
    report(6, err <= 1e-3,
           "grad_check(tiny net, batch of 4, step 1e-3) = " + fmt(err) + " (<= 1e-3)");
}

// ---------------------------------------------------------------------------
// 8. Detection latency.
// ---------------------------------------------------------------------------
void criterion_8(const BenchRun& bench) {
    Network net;
    if (bench.ok) {
        net = load_weights(bench.weights_path);
    } else {
        net = Network::make_default(32, 2);
        net.init_params(1);
    }

    // Per-chip inference over a validation-sized batch.
    SynthParams p;
    p.rows = 512;
    p.cols = 512;
    p.looks = 4;
    p.n_vessels = 25;
    p.seed = 31;
    auto [scene, truth] = synth_scene(p);
    std::vector<const SarScene*> scene_ptrs{&scene};
    std::vector<const GroundTruth*> truth_ptrs{&truth};
    const std::vector<Chip> pool = build_chip_dataset(scene_ptrs, truth_ptrs, {32, 31});
    std::vector<Chip> chips;
    for (std::size_t i = 0; i < 250; ++i) chips.push_back(pool[i % pool.size()]);
    const double chip_batch_ms = measure_ms([&] { (void)vessel_scores(net, chips); });
    const double per_chip_ms = chip_batch_ms / static_cast<double>(chips.size());

    const auto [dets, scene_ms] = detect(scene, net, DetectConfig{});

    bool ok = per_chip_ms <= 50.0 && scene_ms <= 10'000.0;
    std::string detail = "per-chip inference " + fmt(per_chip_ms) +
                         " ms (<= 50), 512x512 detect " + fmt(scene_ms) + " ms (<= 10000)";
    if (bench.ok) {
        const double reported_chip = bench.report["chip_mode"]["detection_time_ms"].get<double>();
        const double reported_scene = bench.report["box_mode"]["detection_time_ms"].get<double>();
        ok = ok && reported_chip <= 50.0 && reported_scene <= 10'000.0;
        detail += "; bench reports " + fmt(reported_chip) + " / " + fmt(reported_scene) + " ms";
    }
    report(8, ok, detail);
}

} // namespace

template <class Fn>
void guarded(int criterion, Fn&& fn) {
    try {
        fn();
    } catch (const std::exception& e) {
        report(criterion, false, std::string("unexpected error: ") + e.what());
    }
}

int main(int argc, char** argv) {
    if (argc < 3) {
        std::fprintf(stderr, "usage: %s <sardet-cli-path> <scratch-dir>\n", argv[0]);
        return 2;
    }
    const std::string cli = argv[1];
    const fs::path work = fs::path(argv[2]) / "acceptance";
    fs::create_directories(work);

    guarded(1, [&] { criterion_1(); });
    BenchRun bench;
    guarded(2, [&] { bench = criterion_2(cli, work); });
    guarded(3, [&] { criterion_3(); });
    guarded(4, [&] { criterion_4(); });
    guarded(5, [&] { criterion_5(); });
    guarded(6, [&] { criterion_6(); });
    guarded(7, [&] { criterion_7(cli, work, bench); });
    guarded(8, [&] { criterion_8(bench); });

    std::printf("acceptance: %d/%d criteria passed\n", g_passed, g_passed + g_failed);
    return g_failed == 0 ? 0 : 1;
}
