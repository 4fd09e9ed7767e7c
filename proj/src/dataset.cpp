#include "dataset.hpp"

#include <string>

#include "errors.hpp"
#include "rng.hpp"

namespace sardet {

std::vector<Chip> build_chip_dataset(const std::vector<const SarScene*>& scenes,
                                     const std::vector<const GroundTruth*>& truths,
                                     const DatasetConfig& cfg) {
    if (scenes.size() != truths.size())
        throw ValidationError("dataset: one ground truth per scene required");
    if (cfg.chip_size < 1) throw ValidationError("dataset: chip_size must be >= 1");

    Rng rng(Rng::derive(cfg.seed, 13));
    std::vector<Chip> chips;
    for (std::size_t s = 0; s < scenes.size(); ++s) {
        const SarScene& scene = *scenes[s];
        const GroundTruth& truth = *truths[s];
        for (const TruthBox& t : truth.boxes) {
            Chip chip = extract_chip(scene, t.box.row + t.box.height / 2,
                                     t.box.col + t.box.width / 2, cfg.chip_size);
            chip.label = ChipLabel::vessel;
            chips.push_back(std::move(chip));
        }
        const std::size_t n_sea = truth.boxes.size();
        constexpr int kMaxAttempts = 1000;
        for (std::size_t i = 0; i < n_sea; ++i) {
            bool placed = false;
            for (int attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
                const int r = static_cast<int>(rng.next_int(0, scene.rows - 1));
                const int c = static_cast<int>(rng.next_int(0, scene.cols - 1));
                bool clear = true;
                for (const TruthBox& t : truth.boxes)
                    if (chebyshev_to_box(r, c, t.box) < cfg.chip_size) {
                        clear = false;
                        break;
                    }
                if (!clear) continue;
                Chip chip = extract_chip(scene, r, c, cfg.chip_size);
                chip.label = ChipLabel::sea;
                chips.push_back(std::move(chip));
                placed = true;
            }
            if (!placed)
                throw ValidationError("dataset: could not sample a vessel-free sea chip in scene '" +
                                      scene.scene_id + "'");
        }
    }
    return chips;
}

} // namespace sardet
