/*
 * sardet — SAR vessel-detection toolkit, C interface.
 *
 * All functions return SARDET_OK (0) on success or an error code; the
 * message for the most recent failure on the calling thread is available
 * via sardet_last_error(). Objects are opaque handles released with the
 * matching _free function. Strings returned through char** out-parameters
 * are heap-allocated and must be released with sardet_string_free().
 *
 * Configuration arguments are UTF-8 JSON documents; unknown keys are
 * rejected. The formats mirror the files the CLI reads and writes.
 */
#ifndef SARDET_H
#define SARDET_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define SARDET_API __declspec(dllexport)
#else
#define SARDET_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

enum {
    SARDET_OK = 0,
    SARDET_E_INTERNAL = 1,   /* unexpected failure */
    SARDET_E_VALIDATION = 2, /* bad configuration, malformed content, broken invariant */
    SARDET_E_IO = 3          /* filesystem failure */
};

typedef struct sardet_scene sardet_scene;
typedef struct sardet_network sardet_network;
typedef struct sardet_dataset sardet_dataset;

SARDET_API const char* sardet_version(void);

/* Message of the last error on this thread; empty string when none. */
SARDET_API const char* sardet_last_error(void);

SARDET_API void sardet_string_free(char* s);

/* ------------------------------------------------------------------ scenes */

/* params_json keys: rows, cols, clutter_mean_vv, looks, band_ratio_vh,
 * n_vessels, vessel_size_range [min,max], tcr_db_range [min,max], seed. */
SARDET_API int sardet_scene_synth(const char* params_json, sardet_scene** out_scene);

/* Reads <stem>.json + <stem>.f32 and, when present, <stem>.truth.json. */
SARDET_API int sardet_scene_load(const char* path_stem, sardet_scene** out_scene);
SARDET_API int sardet_scene_save(const sardet_scene* scene, const char* path_stem);

SARDET_API int sardet_scene_rows(const sardet_scene* scene);
SARDET_API int sardet_scene_cols(const sardet_scene* scene);
SARDET_API int sardet_scene_band_count(const sardet_scene* scene);
SARDET_API int sardet_scene_band_name(const sardet_scene* scene, int band, char** out_name);

/* Copies one band, row-major, into dst (length rows*cols). */
SARDET_API int sardet_scene_band_pixels(const sardet_scene* scene, int band, float* dst,
                                        size_t dst_len);

/* Ground-truth boxes as a JSON array, or the JSON literal null when the
 * scene carries no truth. */
SARDET_API int sardet_scene_truth_json(const sardet_scene* scene, char** out_json);

/* Per-band mean/max plus vessel count when truth is attached. */
SARDET_API int sardet_scene_stats_json(const sardet_scene* scene, char** out_json);

/* cfg_json keys: family ("haar"|"db4"), levels, rule ("soft"|"hard"),
 * log_domain. Pass "{}" for the defaults. Truth is carried over. */
SARDET_API int sardet_scene_denoise(const sardet_scene* scene, const char* cfg_json,
                                    sardet_scene** out_scene);

SARDET_API void sardet_scene_free(sardet_scene* scene);

/* -------------------------------------------------------------------- cfar */

/* cfg_json keys: guard_radius, train_radius, pfa, variant ("ca"|"two_param"),
 * two_param_k. When mask_or_null is non-null it receives rows*cols bytes of
 * 0/1. out_json: {"n_detections": N, "boxes": [{row,col,height,width}...]}. */
SARDET_API int sardet_cfar(const sardet_scene* scene, const char* band, const char* cfg_json,
                           uint8_t* mask_or_null, size_t mask_len, char** out_json);

/* ---------------------------------------------------------------- networks */

/* arch is "default" or "tiny" (8x8 input). chip_size <= 0 selects the
 * arch default (32 for "default"); parameters are He-uniform initialized
 * from seed. */
SARDET_API int sardet_network_create(const char* arch, int chip_size, int n_bands, uint64_t seed,
                                     sardet_network** out_net);
SARDET_API int sardet_network_load(const char* path, sardet_network** out_net);
SARDET_API int sardet_network_save(const sardet_network* net, const char* path);
SARDET_API void sardet_network_free(sardet_network* net);

/* ---------------------------------------------------------------- datasets */

/* cfg_json keys: chip_size, seed. Builds a balanced vessel/sea chip set from
 * scenes that carry ground truth. */
SARDET_API int sardet_dataset_build(const sardet_scene* const* scenes, size_t n_scenes,
                                    const char* cfg_json, sardet_dataset** out_dataset);

/* Seeded shuffle split into round(n*train_fraction) / rest. */
SARDET_API int sardet_dataset_split(const sardet_dataset* dataset, double train_fraction,
                                    uint64_t seed, sardet_dataset** out_train,
                                    sardet_dataset** out_val);

SARDET_API long long sardet_dataset_size(const sardet_dataset* dataset);
SARDET_API long long sardet_dataset_vessel_count(const sardet_dataset* dataset);
SARDET_API void sardet_dataset_free(sardet_dataset* dataset);

/* ---------------------------------------------------------------- training */

/* cfg_json keys: epochs, batch_size, learning_rate, momentum, seed,
 * init_weights_path (warm start). Trains net in place. out_history_json:
 * {"train_loss": [...], "val_accuracy": [...], "wall_time_ms": ...}. */
SARDET_API int sardet_train(sardet_network* net, const sardet_dataset* train_set,
                            const sardet_dataset* val_set, const char* cfg_json,
                            char** out_history_json);

/* Chip-mode evaluation report over labeled chips. detection_time_ms in the
 * report is the mean per-chip inference time measured here; training_time_ms
 * is passed through from the caller. */
SARDET_API int sardet_eval_chips(const sardet_network* net, const sardet_dataset* chips,
                                 double training_time_ms, char** out_report_json);

/* --------------------------------------------------------------- detection */

/* cfg_json keys: proposal_mode ("cfar"|"dense"), cfar {…}, window_stride,
 * chip_size, score_threshold, nms_iou, denoise ({…} or false). out_json:
 * {"scene_id":…, "detection_time_ms":…, "n_proposals":…, "detections":[…]} with
 * detections entries {row,col,height,width,score,source}. */
SARDET_API int sardet_detect(const sardet_network* net, const sardet_scene* scene,
                             const char* cfg_json, char** out_json);

/* Box-mode evaluation: detections_json is either the sardet_detect output
 * object or a bare detections array; truth_json is a truth array. Pass
 * n_proposals < 0 when proposal-level negatives are unknown. */
SARDET_API int sardet_eval_box(const char* detections_json, const char* truth_json,
                               double iou_min, long long n_proposals, double training_time_ms,
                               double detection_time_ms, char** out_report_json);

/* Full metric record straight from confusion counts (e.g. counts pooled
 * over scenes). mode is "chip" or "box". */
SARDET_API int sardet_metrics(long long tp, long long fp, long long fn, long long tn,
                              const char* mode, double training_time_ms,
                              double detection_time_ms, char** out_report_json);

#ifdef __cplusplus
}
#endif

#endif /* SARDET_H */
