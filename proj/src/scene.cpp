#include "scene.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>

#include "errors.hpp"
#include "file_util.hpp"
#include "rng.hpp"

namespace sardet {

namespace {

bool known_band(const std::string& name) { return name == "VV" || name == "VH"; }

void encode_f32le(float x, unsigned char* out) {
    std::uint32_t bits;
    std::memcpy(&bits, &x, 4);
    out[0] = static_cast<unsigned char>(bits & 0xff);
    out[1] = static_cast<unsigned char>((bits >> 8) & 0xff);
    out[2] = static_cast<unsigned char>((bits >> 16) & 0xff);
    out[3] = static_cast<unsigned char>((bits >> 24) & 0xff);
}

float decode_f32le(const unsigned char* in) {
    const std::uint32_t bits = static_cast<std::uint32_t>(in[0]) |
                               (static_cast<std::uint32_t>(in[1]) << 8) |
                               (static_cast<std::uint32_t>(in[2]) << 16) |
                               (static_cast<std::uint32_t>(in[3]) << 24);
    float x;
    std::memcpy(&x, &bits, 4);
    return x;
}

} // namespace

int SarScene::band_index(const std::string& name) const {
    for (std::size_t i = 0; i < bands.size(); ++i)
        if (bands[i] == name) return static_cast<int>(i);
    return -1;
}

const GridF& SarScene::band(const std::string& name) const {
    const int i = band_index(name);
    if (i < 0) throw ValidationError("scene '" + scene_id + "' has no band " + name);
    return pixels[static_cast<std::size_t>(i)];
}

void SarScene::validate() const {
    if (rows < 1 || cols < 1) throw ValidationError("scene dimensions must be positive");
    if (bands.empty()) throw ValidationError("scene must have at least one band");
    if (bands.size() != pixels.size())
        throw ValidationError("band label count does not match pixel band count");
    for (std::size_t i = 0; i < bands.size(); ++i) {
        if (!known_band(bands[i])) throw ValidationError("unknown band label: " + bands[i]);
        for (std::size_t k = i + 1; k < bands.size(); ++k)
            if (bands[i] == bands[k]) throw ValidationError("duplicate band label: " + bands[i]);
        const GridF& g = pixels[i];
        if (g.rows != rows || g.cols != cols)
            throw ValidationError("band " + bands[i] + " shape differs from scene shape");
        for (float x : g.v)
            if (!std::isfinite(x) || x < 0.0f)
                throw ValidationError("band " + bands[i] + " contains a non-finite or negative pixel");
    }
    if (pixel_spacing_m && *pixel_spacing_m <= 0.0)
        throw ValidationError("pixel_spacing_m must be positive");
}

void SynthParams::validate() const {
    if (rows < 1 || cols < 1) throw ValidationError("synth: rows/cols must be positive");
    if (clutter_mean_vv <= 0.0) throw ValidationError("synth: clutter_mean_vv must be positive");
    if (looks < 1) throw ValidationError("synth: looks must be a positive integer");
    if (band_ratio_vh <= 0.0 || band_ratio_vh > 1.0)
        throw ValidationError("synth: band_ratio_vh must lie in (0, 1]");
    if (n_vessels < 0) throw ValidationError("synth: n_vessels must be >= 0");
    if (vessel_min < 1 || vessel_min > vessel_max)
        throw ValidationError("synth: vessel_size_range must satisfy 1 <= min <= max");
    if (tcr_db_min > tcr_db_max) throw ValidationError("synth: tcr_db_range must satisfy min <= max");
    if (tcr_db_min <= 0.0) throw ValidationError("synth: tcr_db_range min must be > 0 dB");
}

void save_scene(const SarScene& scene, const GroundTruth* truth, const std::string& path_stem) {
    scene.validate();
    if (truth) {
        for (const TruthBox& t : truth->boxes) {
            if (t.box.row < 0 || t.box.col < 0 || t.box.height < 1 || t.box.width < 1 ||
                t.box.row_end() > scene.rows || t.box.col_end() > scene.cols)
                throw ValidationError("truth box does not fit inside scene '" + scene.scene_id + "'");
        }
    }

    json header;
    header["scene_id"] = scene.scene_id;
    header["rows"] = scene.rows;
    header["cols"] = scene.cols;
    header["bands"] = scene.bands;
    header["dtype"] = "f32le";
    if (scene.pixel_spacing_m) header["pixel_spacing_m"] = *scene.pixel_spacing_m;
    write_file_atomic(path_stem + ".json", header.dump(2) + "\n");

    std::string raw(scene.bands.size() * static_cast<std::size_t>(scene.rows) * scene.cols * 4, '\0');
    std::size_t off = 0;
    for (const GridF& g : scene.pixels)
        for (float x : g.v) {
            encode_f32le(x, reinterpret_cast<unsigned char*>(raw.data()) + off);
            off += 4;
        }
    write_file_atomic(path_stem + ".f32", raw);

    if (truth) write_file_atomic(path_stem + ".truth.json", truth_to_json(*truth).dump(2) + "\n");
}

std::pair<SarScene, std::optional<GroundTruth>> load_scene(const std::string& path_stem) {
    const std::string header_path = path_stem + ".json";
    json header;
    try {
        header = json::parse(read_file(header_path));
    } catch (const json::exception& e) {
        throw ValidationError("bad scene header " + header_path + ": " + e.what());
    }
    require_keys(header, {"scene_id", "rows", "cols", "bands", "dtype", "pixel_spacing_m"},
                 header_path);

    SarScene scene;
    scene.scene_id = get_str(header, "scene_id", "", header_path);
    scene.rows = static_cast<int>(get_int(header, "rows", 0, header_path));
    scene.cols = static_cast<int>(get_int(header, "cols", 0, header_path));
    if (!header.contains("bands") || !header["bands"].is_array())
        throw ValidationError(header_path + ": 'bands' must be an array of strings");
    for (const auto& b : header["bands"]) {
        if (!b.is_string()) throw ValidationError(header_path + ": 'bands' must be an array of strings");
        scene.bands.push_back(b.get<std::string>());
    }
    const std::string dtype = get_str(header, "dtype", "", header_path);
    if (dtype != "f32le") throw ValidationError(header_path + ": unsupported dtype '" + dtype + "'");
    if (header.contains("pixel_spacing_m"))
        scene.pixel_spacing_m = get_num(header, "pixel_spacing_m", 0.0, header_path);
    if (scene.rows < 1 || scene.cols < 1)
        throw ValidationError(header_path + ": rows/cols must be positive");

    const std::string raw_path = path_stem + ".f32";
    const std::string raw = read_file(raw_path);
    const std::size_t expect =
        scene.bands.size() * static_cast<std::size_t>(scene.rows) * scene.cols * 4;
    if (raw.size() != expect)
        throw ValidationError(raw_path + ": size mismatch, header implies " + std::to_string(expect) +
                              " bytes but file has " + std::to_string(raw.size()));

    std::size_t off = 0;
    for (std::size_t b = 0; b < scene.bands.size(); ++b) {
        GridF g(scene.rows, scene.cols);
        for (std::size_t i = 0; i < g.v.size(); ++i) {
            g.v[i] = decode_f32le(reinterpret_cast<const unsigned char*>(raw.data()) + off);
            off += 4;
        }
        scene.pixels.push_back(std::move(g));
    }
    scene.validate();

    std::optional<GroundTruth> truth;
    const std::string truth_path = path_stem + ".truth.json";
    if (std::filesystem::exists(truth_path)) {
        json jt;
        try {
            jt = json::parse(read_file(truth_path));
        } catch (const json::exception& e) {
            throw ValidationError("bad truth file " + truth_path + ": " + e.what());
        }
        truth = truth_from_json(jt, scene.rows, scene.cols);
    }
    return {std::move(scene), std::move(truth)};
}

Chip extract_chip(const SarScene& scene, int center_row, int center_col, int size) {
    if (size < 1) throw ValidationError("chip size must be >= 1");
    if (size > scene.rows || size > scene.cols)
        throw ValidationError("scene too small for chip size " + std::to_string(size));

    int top = center_row - size / 2;
    int left = center_col - size / 2;
    top = std::clamp(top, 0, scene.rows - size);
    left = std::clamp(left, 0, scene.cols - size);

    Chip chip;
    chip.size = size;
    chip.n_bands = static_cast<int>(scene.bands.size());
    chip.scene_id = scene.scene_id;
    chip.origin_row = top;
    chip.origin_col = left;
    chip.data.resize(static_cast<std::size_t>(size) * size * chip.n_bands);
    std::size_t k = 0;
    for (int r = 0; r < size; ++r)
        for (int c = 0; c < size; ++c)
            for (int b = 0; b < chip.n_bands; ++b)
                chip.data[k++] = scene.pixels[static_cast<std::size_t>(b)].at(top + r, left + c);
    return chip;
}

std::pair<SarScene, GroundTruth> synth_scene(const SynthParams& params) {
    params.validate();

    // Independent streams so the clutter field does not shift with vessel layout.
    Rng layout_rng(Rng::derive(params.seed, 1));
    Rng vv_rng(Rng::derive(params.seed, 2));
    Rng vh_rng(Rng::derive(params.seed, 3));

    GroundTruth truth;
    std::vector<double> tcr_factors;
    constexpr int kMaxAttempts = 1000;
    for (int v = 0; v < params.n_vessels; ++v) {
        bool placed = false;
        for (int attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
            BoundingBox box;
            box.height = static_cast<int>(layout_rng.next_int(params.vessel_min, params.vessel_max));
            box.width = static_cast<int>(layout_rng.next_int(params.vessel_min, params.vessel_max));
            if (box.height > params.rows || box.width > params.cols) continue;
            box.row = static_cast<int>(layout_rng.next_int(0, params.rows - box.height));
            box.col = static_cast<int>(layout_rng.next_int(0, params.cols - box.width));
            bool clash = false;
            for (const TruthBox& t : truth.boxes)
                if (boxes_overlap(box, t.box)) { clash = true; break; }
            if (clash) continue;
            truth.boxes.push_back({box, "vessel"});
            const double tcr_db = layout_rng.uniform(params.tcr_db_min, params.tcr_db_max);
            tcr_factors.push_back(std::pow(10.0, tcr_db / 10.0));
            placed = true;
        }
        if (!placed)
            throw ValidationError("synth: could not place vessel " + std::to_string(v + 1) + " of " +
                                  std::to_string(params.n_vessels) + " without overlap");
    }

    SarScene scene;
    scene.scene_id = "synth-" + std::to_string(params.seed);
    scene.rows = params.rows;
    scene.cols = params.cols;
    scene.bands = {"VV", "VH"};
    const double means[2] = {params.clutter_mean_vv, params.band_ratio_vh * params.clutter_mean_vv};
    Rng* rngs[2] = {&vv_rng, &vh_rng};
    for (int b = 0; b < 2; ++b) {
        GridF g(scene.rows, scene.cols);
        for (auto& x : g.v)
            x = static_cast<float>(rngs[b]->gamma_int(params.looks, means[b]));
        for (std::size_t i = 0; i < truth.boxes.size(); ++i) {
            const BoundingBox& box = truth.boxes[i].box;
            const float f = static_cast<float>(tcr_factors[i]);
            for (int r = box.row; r < box.row_end(); ++r)
                for (int c = box.col; c < box.col_end(); ++c)
                    g.at(r, c) *= f;
        }
        scene.pixels.push_back(std::move(g));
    }
    return {std::move(scene), std::move(truth)};
}

SynthParams parse_synth_params(const json& j) {
    const std::string ctx = "synth config";
    require_keys(j,
                 {"rows", "cols", "clutter_mean_vv", "looks", "band_ratio_vh", "n_vessels",
                  "vessel_size_range", "tcr_db_range", "seed"},
                 ctx);
    SynthParams p;
    p.rows = static_cast<int>(get_int(j, "rows", p.rows, ctx));
    p.cols = static_cast<int>(get_int(j, "cols", p.cols, ctx));
    p.clutter_mean_vv = get_num(j, "clutter_mean_vv", p.clutter_mean_vv, ctx);
    p.looks = static_cast<int>(get_int(j, "looks", p.looks, ctx));
    p.band_ratio_vh = get_num(j, "band_ratio_vh", p.band_ratio_vh, ctx);
    p.n_vessels = static_cast<int>(get_int(j, "n_vessels", p.n_vessels, ctx));
    if (j.contains("vessel_size_range")) {
        const auto& r = j["vessel_size_range"];
        if (!r.is_array() || r.size() != 2 || !r[0].is_number_integer() || !r[1].is_number_integer())
            throw ValidationError(ctx + ": 'vessel_size_range' must be [min, max] integers");
        p.vessel_min = r[0].get<int>();
        p.vessel_max = r[1].get<int>();
    }
    if (j.contains("tcr_db_range")) {
        const auto& r = j["tcr_db_range"];
        if (!r.is_array() || r.size() != 2 || !r[0].is_number() || !r[1].is_number())
            throw ValidationError(ctx + ": 'tcr_db_range' must be [min, max] numbers");
        p.tcr_db_min = r[0].get<double>();
        p.tcr_db_max = r[1].get<double>();
    }
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned() && !j["seed"].is_number_integer())
            throw ValidationError(ctx + ": 'seed' must be an integer");
        p.seed = j["seed"].get<std::uint64_t>();
    }
    p.validate();
    return p;
}

json truth_to_json(const GroundTruth& truth) {
    json arr = json::array();
    for (const TruthBox& t : truth.boxes) {
        arr.push_back({{"row", t.box.row},
                       {"col", t.box.col},
                       {"height", t.box.height},
                       {"width", t.box.width},
                       {"class", t.label}});
    }
    return arr;
}

GroundTruth truth_from_json(const json& j, int rows, int cols) {
    if (!j.is_array()) throw ValidationError("truth: expected a JSON array");
    GroundTruth truth;
    for (const auto& e : j) {
        require_keys(e, {"row", "col", "height", "width", "class"}, "truth entry");
        TruthBox t;
        t.box.row = static_cast<int>(get_int(e, "row", -1, "truth entry"));
        t.box.col = static_cast<int>(get_int(e, "col", -1, "truth entry"));
        t.box.height = static_cast<int>(get_int(e, "height", 0, "truth entry"));
        t.box.width = static_cast<int>(get_int(e, "width", 0, "truth entry"));
        t.label = get_str(e, "class", "vessel", "truth entry");
        if (t.label != "vessel") throw ValidationError("truth: unknown class '" + t.label + "'");
        if (t.box.row < 0 || t.box.col < 0 || t.box.height < 1 || t.box.width < 1 ||
            t.box.row_end() > rows || t.box.col_end() > cols)
            throw ValidationError("truth: box does not fit inside the scene");
        truth.boxes.push_back(t);
    }
    return truth;
}

json scene_stats(const SarScene& scene, const GroundTruth* truth) {
    json bands = json::array();
    for (std::size_t b = 0; b < scene.bands.size(); ++b) {
        double sum = 0.0;
        float mx = 0.0f;
        for (float x : scene.pixels[b].v) {
            sum += x;
            mx = std::max(mx, x);
        }
        bands.push_back({{"name", scene.bands[b]},
                         {"mean", sum / static_cast<double>(scene.pixels[b].v.size())},
                         {"max", mx}});
    }
    json out{{"scene_id", scene.scene_id},
             {"rows", scene.rows},
             {"cols", scene.cols},
             {"bands", bands}};
    if (truth) out["vessel_count"] = truth->boxes.size();
    return out;
}

} // namespace sardet
