#include "sardet/sardet.h"

#include <cstring>
#include <exception>
#include <new>
#include <string>

#include "cfar.hpp"
#include "cnn.hpp"
#include "dataset.hpp"
#include "detector.hpp"
#include "errors.hpp"
#include "eval.hpp"
#include "scene.hpp"
#include "wavelet.hpp"

using namespace sardet;

extern "C" {

struct sardet_scene {
    SarScene scene;
    std::optional<GroundTruth> truth;
};

struct sardet_network {
    Network net;
};

struct sardet_dataset {
    std::vector<Chip> chips;
};

} // extern "C"

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& message) { g_last_error = message; }

char* copy_string(const std::string& s) {
    char* out = new char[s.size() + 1];
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

template <class Fn>
int guarded(Fn&& fn) {
    try {
        fn();
        g_last_error.clear();
        return SARDET_OK;
    } catch (const IoError& e) {
        set_error(e.what());
        return SARDET_E_IO;
    } catch (const ValidationError& e) {
        set_error(e.what());
        return SARDET_E_VALIDATION;
    } catch (const json::exception& e) {
        set_error(e.what());
        return SARDET_E_VALIDATION;
    } catch (const std::exception& e) {
        set_error(e.what());
        return SARDET_E_INTERNAL;
    }
}

json parse_json_arg(const char* text, const char* what) {
    if (!text) throw ValidationError(std::string(what) + ": null JSON argument");
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw ValidationError(std::string(what) + ": " + e.what());
    }
}

template <class T>
const T& deref(const T* p, const char* what) {
    if (!p) throw ValidationError(std::string(what) + ": null handle");
    return *p;
}

} // namespace

extern "C" {

const char* sardet_version(void) { return "1.0.0"; }

const char* sardet_last_error(void) { return g_last_error.c_str(); }

void sardet_string_free(char* s) { delete[] s; }

int sardet_scene_synth(const char* params_json, sardet_scene** out_scene) {
    return guarded([&] {
        if (!out_scene) throw ValidationError("scene_synth: null output pointer");
        const SynthParams params = parse_synth_params(parse_json_arg(params_json, "synth params"));
        auto [scene, truth] = synth_scene(params);
        *out_scene = new sardet_scene{std::move(scene), std::move(truth)};
    });
}

int sardet_scene_load(const char* path_stem, sardet_scene** out_scene) {
    return guarded([&] {
        if (!out_scene || !path_stem) throw ValidationError("scene_load: null argument");
        auto [scene, truth] = load_scene(path_stem);
        *out_scene = new sardet_scene{std::move(scene), std::move(truth)};
    });
}

int sardet_scene_save(const sardet_scene* scene, const char* path_stem) {
    return guarded([&] {
        const auto& s = deref(scene, "scene_save");
        if (!path_stem) throw ValidationError("scene_save: null path");
        save_scene(s.scene, s.truth ? &*s.truth : nullptr, path_stem);
    });
}

int sardet_scene_rows(const sardet_scene* scene) { return scene ? scene->scene.rows : 0; }

int sardet_scene_cols(const sardet_scene* scene) { return scene ? scene->scene.cols : 0; }

int sardet_scene_band_count(const sardet_scene* scene) {
    return scene ? static_cast<int>(scene->scene.bands.size()) : 0;
}

int sardet_scene_band_name(const sardet_scene* scene, int band, char** out_name) {
    return guarded([&] {
        const auto& s = deref(scene, "scene_band_name");
        if (!out_name) throw ValidationError("scene_band_name: null output pointer");
        if (band < 0 || band >= static_cast<int>(s.scene.bands.size()))
            throw ValidationError("scene_band_name: band index out of range");
        *out_name = copy_string(s.scene.bands[static_cast<std::size_t>(band)]);
    });
}

int sardet_scene_band_pixels(const sardet_scene* scene, int band, float* dst, size_t dst_len) {
    return guarded([&] {
        const auto& s = deref(scene, "scene_band_pixels");
        if (!dst) throw ValidationError("scene_band_pixels: null destination");
        if (band < 0 || band >= static_cast<int>(s.scene.bands.size()))
            throw ValidationError("scene_band_pixels: band index out of range");
        const GridF& g = s.scene.pixels[static_cast<std::size_t>(band)];
        if (dst_len < g.v.size())
            throw ValidationError("scene_band_pixels: destination too small");
        std::memcpy(dst, g.v.data(), g.v.size() * sizeof(float));
    });
}

int sardet_scene_truth_json(const sardet_scene* scene, char** out_json) {
    return guarded([&] {
        const auto& s = deref(scene, "scene_truth_json");
        if (!out_json) throw ValidationError("scene_truth_json: null output pointer");
        *out_json = copy_string(s.truth ? truth_to_json(*s.truth).dump() : "null");
    });
}

int sardet_scene_stats_json(const sardet_scene* scene, char** out_json) {
    return guarded([&] {
        const auto& s = deref(scene, "scene_stats_json");
        if (!out_json) throw ValidationError("scene_stats_json: null output pointer");
        *out_json = copy_string(scene_stats(s.scene, s.truth ? &*s.truth : nullptr).dump());
    });
}

int sardet_scene_denoise(const sardet_scene* scene, const char* cfg_json,
                         sardet_scene** out_scene) {
    return guarded([&] {
        const auto& s = deref(scene, "scene_denoise");
        if (!out_scene) throw ValidationError("scene_denoise: null output pointer");
        const DenoiseConfig cfg = parse_denoise_config(parse_json_arg(cfg_json, "denoise config"));
        auto out = new sardet_scene{s.scene, s.truth};
        try {
            for (GridF& band : out->scene.pixels) band = denoise(band, cfg);
        } catch (...) {
            delete out;
            throw;
        }
        *out_scene = out;
    });
}

void sardet_scene_free(sardet_scene* scene) { delete scene; }

int sardet_cfar(const sardet_scene* scene, const char* band, const char* cfg_json,
                uint8_t* mask_or_null, size_t mask_len, char** out_json) {
    return guarded([&] {
        const auto& s = deref(scene, "cfar");
        if (!band || !out_json) throw ValidationError("cfar: null argument");
        const CfarConfig cfg = parse_cfar_config(parse_json_arg(cfg_json, "cfar config"));
        const CfarResult result = cfar_detect(s.scene.band(band), cfg);
        if (mask_or_null) {
            if (mask_len < result.mask.v.size())
                throw ValidationError("cfar: mask buffer too small");
            std::memcpy(mask_or_null, result.mask.v.data(), result.mask.v.size());
        }
        json boxes = json::array();
        for (const BoundingBox& b : result.boxes)
            boxes.push_back(
                {{"row", b.row}, {"col", b.col}, {"height", b.height}, {"width", b.width}});
        *out_json = copy_string(
            json{{"n_detections", result.n_detections}, {"boxes", boxes}}.dump());
    });
}

int sardet_network_create(const char* arch, int chip_size, int n_bands, uint64_t seed,
                          sardet_network** out_net) {
    return guarded([&] {
        if (!arch || !out_net) throw ValidationError("network_create: null argument");
        Network net;
        const std::string name = arch;
        if (name == "default")
            net = Network::make_default(chip_size > 0 ? chip_size : 32, n_bands);
        else if (name == "tiny")
            net = Network::make_tiny(n_bands);
        else
            throw ValidationError("network_create: unknown architecture '" + name + "'");
        net.init_params(seed);
        *out_net = new sardet_network{std::move(net)};
    });
}

int sardet_network_load(const char* path, sardet_network** out_net) {
    return guarded([&] {
        if (!path || !out_net) throw ValidationError("network_load: null argument");
        *out_net = new sardet_network{load_weights(path)};
    });
}

int sardet_network_save(const sardet_network* net, const char* path) {
    return guarded([&] {
        const auto& n = deref(net, "network_save");
        if (!path) throw ValidationError("network_save: null path");
        save_weights(n.net, path);
    });
}

void sardet_network_free(sardet_network* net) { delete net; }

int sardet_dataset_build(const sardet_scene* const* scenes, size_t n_scenes, const char* cfg_json,
                         sardet_dataset** out_dataset) {
    return guarded([&] {
        if (!scenes || !out_dataset) throw ValidationError("dataset_build: null argument");
        const json j = parse_json_arg(cfg_json, "dataset config");
        require_keys(j, {"chip_size", "seed"}, "dataset config");
        DatasetConfig cfg;
        cfg.chip_size = static_cast<int>(get_int(j, "chip_size", cfg.chip_size, "dataset config"));
        if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
        std::vector<const SarScene*> scene_ptrs;
        std::vector<const GroundTruth*> truth_ptrs;
        for (size_t i = 0; i < n_scenes; ++i) {
            const auto& s = deref(scenes[i], "dataset_build scene");
            if (!s.truth)
                throw ValidationError("dataset_build: scene '" + s.scene.scene_id +
                                      "' has no ground truth");
            scene_ptrs.push_back(&s.scene);
            truth_ptrs.push_back(&*s.truth);
        }
        *out_dataset = new sardet_dataset{build_chip_dataset(scene_ptrs, truth_ptrs, cfg)};
    });
}

int sardet_dataset_split(const sardet_dataset* dataset, double train_fraction, uint64_t seed,
                         sardet_dataset** out_train, sardet_dataset** out_val) {
    return guarded([&] {
        const auto& d = deref(dataset, "dataset_split");
        if (!out_train || !out_val) throw ValidationError("dataset_split: null output pointer");
        auto [train_chips, val_chips] = split_dataset(d.chips, train_fraction, seed);
        *out_train = new sardet_dataset{std::move(train_chips)};
        *out_val = new sardet_dataset{std::move(val_chips)};
    });
}

long long sardet_dataset_size(const sardet_dataset* dataset) {
    return dataset ? static_cast<long long>(dataset->chips.size()) : 0;
}

long long sardet_dataset_vessel_count(const sardet_dataset* dataset) {
    if (!dataset) return 0;
    long long n = 0;
    for (const Chip& chip : dataset->chips)
        if (chip.label && *chip.label == ChipLabel::vessel) ++n;
    return n;
}

void sardet_dataset_free(sardet_dataset* dataset) { delete dataset; }

int sardet_train(sardet_network* net, const sardet_dataset* train_set,
                 const sardet_dataset* val_set, const char* cfg_json, char** out_history_json) {
    return guarded([&] {
        if (!net) throw ValidationError("train: null network handle");
        const auto& tr = deref(train_set, "train");
        if (!out_history_json) throw ValidationError("train: null output pointer");
        const TrainConfig cfg = parse_train_config(parse_json_arg(cfg_json, "train config"));
        const std::vector<Chip> no_val;
        const std::vector<Chip>& val = val_set ? val_set->chips : no_val;
        auto [trained, history] = train(net->net, tr.chips, val, cfg);
        net->net = std::move(trained);
        *out_history_json = copy_string(json{{"train_loss", history.train_loss},
                                             {"val_accuracy", history.val_accuracy},
                                             {"wall_time_ms", history.wall_time_ms}}
                                            .dump());
    });
}

int sardet_eval_chips(const sardet_network* net, const sardet_dataset* chips,
                      double training_time_ms, char** out_report_json) {
    return guarded([&] {
        const auto& n = deref(net, "eval_chips");
        const auto& d = deref(chips, "eval_chips");
        if (!out_report_json) throw ValidationError("eval_chips: null output pointer");
        if (d.chips.empty()) throw ValidationError("eval_chips: empty chip set");
        std::vector<int> labels;
        for (const Chip& chip : d.chips) {
            if (!chip.label) throw ValidationError("eval_chips: chip without a label");
            labels.push_back(static_cast<int>(*chip.label));
        }
        auto [predictions, total_ms] = time_ms([&] { return classify(n.net, d.chips); });
        EvalReport report = metrics(chip_confusion(predictions, labels), EvalMode::chip);
        report.training_time_ms = training_time_ms;
        report.detection_time_ms = total_ms / static_cast<double>(d.chips.size());
        *out_report_json = copy_string(report_to_json(report).dump());
    });
}

int sardet_detect(const sardet_network* net, const sardet_scene* scene, const char* cfg_json,
                  char** out_json) {
    return guarded([&] {
        const auto& n = deref(net, "detect");
        const auto& s = deref(scene, "detect");
        if (!out_json) throw ValidationError("detect: null output pointer");
        const DetectConfig cfg = parse_detect_config(parse_json_arg(cfg_json, "detect config"));
        // Proposal count feeds proposal-level negatives in box-mode eval.
        std::size_t n_proposals = 0;
        auto [dets, ms] = detect(s.scene, n.net, cfg, &n_proposals);
        *out_json = copy_string(json{{"scene_id", s.scene.scene_id},
                                     {"detection_time_ms", ms},
                                     {"n_proposals", n_proposals},
                                     {"detections", detections_to_json(dets)}}
                                    .dump());
    });
}

int sardet_eval_box(const char* detections_json, const char* truth_json, double iou_min,
                    long long n_proposals, double training_time_ms, double detection_time_ms,
                    char** out_report_json) {
    return guarded([&] {
        if (!out_report_json) throw ValidationError("eval_box: null output pointer");
        json jd = parse_json_arg(detections_json, "detections");
        if (jd.is_object()) {
            if (!jd.contains("detections"))
                throw ValidationError("detections: object form must contain 'detections'");
            jd = jd["detections"];
        }
        const std::vector<Detection> dets = detections_from_json(jd);
        const json jt = parse_json_arg(truth_json, "truth");
        // Box extents only matter for matching, so validate against a huge frame.
        const GroundTruth truth = truth_from_json(jt, 1 << 30, 1 << 30);
        std::optional<std::int64_t> proposals;
        if (n_proposals >= 0) proposals = n_proposals;
        EvalReport report =
            metrics(match_box_detections(dets, truth, iou_min, proposals), EvalMode::box);
        report.training_time_ms = training_time_ms;
        report.detection_time_ms = detection_time_ms;
        *out_report_json = copy_string(report_to_json(report).dump());
    });
}

int sardet_metrics(long long tp, long long fp, long long fn, long long tn, const char* mode,
                   double training_time_ms, double detection_time_ms, char** out_report_json) {
    return guarded([&] {
        if (!mode || !out_report_json) throw ValidationError("metrics: null argument");
        const std::string name = mode;
        EvalMode eval_mode;
        if (name == "chip")
            eval_mode = EvalMode::chip;
        else if (name == "box")
            eval_mode = EvalMode::box;
        else
            throw ValidationError("metrics: unknown mode '" + name + "'");
        if (tp < 0 || fp < 0 || fn < 0 || tn < 0)
            throw ValidationError("metrics: counts must be non-negative");
        EvalReport report = metrics(ConfusionCounts{tp, fp, fn, tn}, eval_mode);
        report.training_time_ms = training_time_ms;
        report.detection_time_ms = detection_time_ms;
        *out_report_json = copy_string(report_to_json(report).dump());
    });
}

} // extern "C"
