#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "errors.hpp"
#include "eval.hpp"
#include "rng.hpp"

using namespace sardet;

namespace {

std::vector<Chip> numbered_chips(int n) {
    std::vector<Chip> chips(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        chips[static_cast<std::size_t>(i)].origin_row = i; // identity marker
        chips[static_cast<std::size_t>(i)].label = i % 2 ? ChipLabel::vessel : ChipLabel::sea;
    }
    return chips;
}

std::multiset<int> ids(const std::vector<Chip>& chips) {
    std::multiset<int> out;
    for (const Chip& chip : chips) out.insert(chip.origin_row);
    return out;
}

Detection det(int row, int col, int h, int w, float score) {
    return {{row, col, h, w}, score, DetectionSource::cfar};
}

} // namespace

TEST_CASE("split sizes follow round(n * fraction)") {
    const auto [train, val] = split_dataset(numbered_chips(1000), 0.75, 1);
    CHECK(train.size() == 750);
    CHECK(val.size() == 250);

    const auto [t2, v2] = split_dataset(numbered_chips(2), 0.5, 1);
    CHECK(t2.size() == 1);
    CHECK(v2.size() == 1);
}

TEST_CASE("split is an exact seeded partition") {
    const std::vector<Chip> chips = numbered_chips(101);
    const auto [train, val] = split_dataset(chips, 0.33, 7);
    CHECK(train.size() + val.size() == chips.size());

    std::multiset<int> all = ids(train);
    all.merge(ids(val));
    CHECK(all == ids(chips)); // disjoint and exhaustive

    const auto [train_b, val_b] = split_dataset(chips, 0.33, 7);
    CHECK(ids(train) == ids(train_b));

    int distinct = 0;
    for (std::uint64_t seed = 100; seed < 105; ++seed) {
        const auto [train_c, val_c] = split_dataset(numbered_chips(1000), 0.75, seed);
        const auto [train_d, val_d] = split_dataset(numbered_chips(1000), 0.75, seed + 50);
        if (ids(train_c) != ids(train_d)) ++distinct;
    }
    CHECK(distinct == 5);
}

TEST_CASE("split rejects degenerate inputs") {
    CHECK_THROWS_AS(split_dataset(numbered_chips(1), 0.5, 1), ValidationError);
    CHECK_THROWS_AS(split_dataset(numbered_chips(10), 0.0, 1), ValidationError);
    CHECK_THROWS_AS(split_dataset(numbered_chips(10), 1.0, 1), ValidationError);
}

TEST_CASE("box matching: perfect, missing, and double detections") {
    GroundTruth truth;
    truth.boxes = {{{0, 0, 4, 4}, "vessel"}, {{10, 10, 4, 4}, "vessel"}};

    SUBCASE("perfect one-to-one") {
        const std::vector<Detection> dets = {det(0, 0, 4, 4, 0.9f), det(10, 10, 4, 4, 0.8f)};
        const ConfusionCounts counts = match_box_detections(dets, truth);
        CHECK(counts.tp == 2);
        CHECK(counts.fp == 0);
        CHECK(counts.fn == 0);
        CHECK(counts.tn == 0);
    }

    SUBCASE("no detections leaves every truth unmatched") {
        const ConfusionCounts counts = match_box_detections({}, truth);
        CHECK(counts.tp == 0);
        CHECK(counts.fn == 2);
    }

    SUBCASE("two detections on one truth: greedy keeps one") {
        GroundTruth one;
        one.boxes = {{{0, 0, 10, 10}, "vessel"}};
        // iou 0.8 (score 0.9) and iou ~0.6 (score 0.7) on the same truth.
        const std::vector<Detection> dets = {det(0, 0, 10, 8, 0.9f), det(0, 0, 10, 6, 0.7f)};
        const ConfusionCounts counts = match_box_detections(dets, one, 0.5);
        CHECK(counts.tp == 1);
        CHECK(counts.fp == 1);
        CHECK(counts.fn == 0);
    }

    SUBCASE("proposal count feeds tn") {
        const std::vector<Detection> dets = {det(0, 0, 4, 4, 0.9f)};
        const ConfusionCounts counts = match_box_detections(dets, truth, 0.5, 40);
        CHECK(counts.tp == 1);
        CHECK(counts.fp == 0);
        CHECK(counts.fn == 1);
        CHECK(counts.tn == 39);
    }
}

TEST_CASE("matching is one-to-one on random inputs") {
    Rng rng(42);
    for (int trial = 0; trial < 20; ++trial) {
        GroundTruth truth;
        const int n_truth = static_cast<int>(rng.next_int(0, 6));
        for (int i = 0; i < n_truth; ++i)
            truth.boxes.push_back({{static_cast<int>(rng.next_int(0, 40)),
                                    static_cast<int>(rng.next_int(0, 40)),
                                    static_cast<int>(rng.next_int(2, 8)),
                                    static_cast<int>(rng.next_int(2, 8))},
                                   "vessel"});
        std::vector<Detection> dets;
        const int n_dets = static_cast<int>(rng.next_int(0, 8));
        for (int i = 0; i < n_dets; ++i)
            dets.push_back(det(static_cast<int>(rng.next_int(0, 40)),
                               static_cast<int>(rng.next_int(0, 40)),
                               static_cast<int>(rng.next_int(2, 8)),
                               static_cast<int>(rng.next_int(2, 8)),
                               static_cast<float>(rng.next_double())));
        const ConfusionCounts counts = match_box_detections(dets, truth, 0.3);
        CHECK(counts.tp <= std::min<std::int64_t>(n_dets, n_truth));
        CHECK(counts.tp + counts.fp == n_dets);
        CHECK(counts.tp + counts.fn == n_truth);
    }
}

TEST_CASE("chip confusion tabulates directly") {
    SUBCASE("all correct") {
        const ConfusionCounts counts = chip_confusion({1, 0, 1}, {1, 0, 1});
        CHECK(counts.tp == 2);
        CHECK(counts.tn == 1);
        CHECK(counts.fp == 0);
        CHECK(counts.fn == 0);
    }

    SUBCASE("constant vessel prediction on a half-vessel set") {
        const std::vector<int> preds(10, 1);
        std::vector<int> labels(10, 0);
        for (int i = 0; i < 5; ++i) labels[static_cast<std::size_t>(i)] = 1;
        const ConfusionCounts counts = chip_confusion(preds, labels);
        CHECK(counts.tp == 5);
        CHECK(counts.fp == 5);
        CHECK(counts.tn == 0);
        CHECK(counts.fn == 0);
    }

    SUBCASE("random lists match an independent tally") {
        Rng rng(8);
        std::vector<int> preds(200), labels(200);
        for (std::size_t i = 0; i < preds.size(); ++i) {
            preds[i] = rng.next_double() < 0.4 ? 1 : 0;
            labels[i] = rng.next_double() < 0.5 ? 1 : 0;
        }
        std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;
        for (std::size_t i = 0; i < preds.size(); ++i) {
            tp += preds[i] == 1 && labels[i] == 1;
            fp += preds[i] == 1 && labels[i] == 0;
            fn += preds[i] == 0 && labels[i] == 1;
            tn += preds[i] == 0 && labels[i] == 0;
        }
        const ConfusionCounts counts = chip_confusion(preds, labels);
        CHECK(counts.tp == tp);
        CHECK(counts.fp == fp);
        CHECK(counts.fn == fn);
        CHECK(counts.tn == tn);
    }

    SUBCASE("length mismatch") {
        CHECK_THROWS_AS(chip_confusion({1}, {1, 0}), ValidationError);
    }
}

TEST_CASE("metric formulas on the reference confusion matrix") {
    const EvalReport r = metrics({9, 1, 1, 9});
    CHECK(std::fabs(r.accuracy_pct - 90.0) <= 1e-12);
    CHECK(std::fabs(r.precision - 0.9) <= 1e-12);
    CHECK(std::fabs(r.recall - 0.9) <= 1e-12);
    CHECK(std::fabs(r.f1 - 0.9) <= 1e-12);
    CHECK(std::fabs(r.cohen_kappa - 0.8) <= 1e-12);
    CHECK(std::fabs(r.jaccard - 9.0 / 11.0) <= 1e-12);
}

TEST_CASE("perfect predictions score 1 across the board") {
    const EvalReport r = metrics({5, 0, 0, 3});
    CHECK(r.accuracy_pct == 100.0);
    CHECK(r.precision == 1.0);
    CHECK(r.recall == 1.0);
    CHECK(r.f1 == 1.0);
    CHECK(r.cohen_kappa == 1.0);
    CHECK(r.jaccard == 1.0);
}

TEST_CASE("reference precision/recall pair reproduces its f1") {
    const double precision = 0.9292220761344402;
    const double recall = 0.948956901990269;
    const double f1 = 2.0 * precision * recall / (precision + recall);
    CHECK(std::fabs(f1 - 0.9385346764142002) <= 1e-3);
    CHECK(f1 == doctest::Approx(0.93899).epsilon(2e-5));
}

TEST_CASE("metrics are scale-free and internally ordered") {
    Rng rng(12);
    for (int trial = 0; trial < 30; ++trial) {
        ConfusionCounts counts{rng.next_int(0, 50), rng.next_int(0, 50), rng.next_int(0, 50),
                               rng.next_int(0, 50)};
        if (counts.total() == 0) counts.tp = 1;
        const EvalReport base = metrics(counts);

        const std::int64_t k = rng.next_int(2, 9);
        const EvalReport scaled = metrics({counts.tp * k, counts.fp * k, counts.fn * k,
                                           counts.tn * k});
        CHECK(scaled.accuracy_pct == doctest::Approx(base.accuracy_pct).epsilon(1e-12));
        CHECK(scaled.precision == doctest::Approx(base.precision).epsilon(1e-12));
        CHECK(scaled.recall == doctest::Approx(base.recall).epsilon(1e-12));
        CHECK(scaled.f1 == doctest::Approx(base.f1).epsilon(1e-12));
        CHECK(scaled.cohen_kappa == doctest::Approx(base.cohen_kappa).epsilon(1e-12));
        CHECK(scaled.jaccard == doctest::Approx(base.jaccard).epsilon(1e-12));

        CHECK(base.f1 >= std::min(base.precision, base.recall) - 1e-12);
        CHECK(base.f1 <= std::max(base.precision, base.recall) + 1e-12);
        if (counts.tp + counts.fp + counts.fn > 0) CHECK(base.jaccard <= base.f1 + 1e-12);
    }
}

TEST_CASE("kappa extremes") {
    // kappa = 1 exactly when there are no errors and both classes appear.
    CHECK(metrics({3, 0, 0, 7}).cohen_kappa == doctest::Approx(1.0));
    CHECK(metrics({3, 1, 0, 7}).cohen_kappa < 1.0);
    CHECK(metrics({3, 0, 1, 7}).cohen_kappa < 1.0);
    // Constant predictions on a mixed truth carry no information.
    CHECK(metrics({5, 5, 0, 0}).cohen_kappa == doctest::Approx(0.0));
    CHECK(metrics({0, 0, 5, 5}).cohen_kappa == doctest::Approx(0.0));
    // Degenerate single-class agreement: p_e = 1 convention.
    CHECK(metrics({4, 0, 0, 0}).cohen_kappa == 1.0);
}

TEST_CASE("zero-denominator conventions") {
    const EvalReport none = metrics({0, 0, 3, 5});
    CHECK(none.precision == 0.0);
    CHECK(none.recall == 0.0);
    CHECK(none.f1 == 0.0);

    const EvalReport only_tn = metrics({0, 0, 0, 5});
    CHECK(only_tn.jaccard == 1.0);
    CHECK(only_tn.accuracy_pct == 100.0);

    CHECK_THROWS_AS(metrics({0, 0, 0, 0}), ValidationError);
}

TEST_CASE("report JSON uses the expected row names") {
    EvalReport r = metrics({9, 1, 1, 9}, EvalMode::box);
    r.training_time_ms = 12.5;
    r.detection_time_ms = 3.25;
    const json j = report_to_json(r);
    const std::vector<std::string> keys = {"accuracy_pct",     "precision",
                                           "recall",           "f1",
                                           "cohen_kappa",      "jaccard",
                                           "training_time_ms", "detection_time_ms",
                                           "counts",           "mode"};
    for (const auto& key : keys) CHECK(j.contains(key));
    CHECK(j.size() == keys.size());
    CHECK(j["mode"] == "box");
    CHECK(j["counts"]["tp"] == 9);
}

TEST_CASE("time_ms wraps actions with a monotonic wall clock") {
    const auto [value, ms] = time_ms([] { return 42; });
    CHECK(value == 42);
    CHECK(ms >= 0.0);
    CHECK(ms < 100.0);

    volatile double sink = 0.0;
    const double first = measure_ms([&] {
        for (int i = 0; i < 200000; ++i) sink = sink + std::sqrt(static_cast<double>(i));
    });
    const double second = measure_ms([&] {
        for (int i = 0; i < 200000; ++i) sink = sink + std::sqrt(static_cast<double>(i));
    });
    CHECK(first > 0.0);
    CHECK(second > 0.0);
}
