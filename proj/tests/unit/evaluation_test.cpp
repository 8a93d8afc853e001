#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "gridmap/error.hpp"
#include "gridmap/evaluation.hpp"
#include "synthetic.hpp"

using namespace gridmap;

namespace {

GroundTruthLabel make_gt(RawClass raw, RotatedBox box, double bbox_height = 60.0, int occlusion = 0,
                         double truncation = 0.0) {
  GroundTruthLabel g;
  g.raw_class = raw;
  g.merged_class = *merge_class(raw);
  g.box = box;
  g.occlusion = occlusion;
  g.truncation = truncation;
  g.image_bbox = {100.0, 100.0, 200.0, 100.0 + bbox_height};
  g.height = 1.5;
  return g;
}

DetectionRecord make_det(ObjectClass cls, RotatedBox box, double score) {
  return DetectionRecord{cls, box, score, std::nullopt};
}

RotatedBox car_at(double x, double y) { return {x, y, 4.0, 1.8, 0.0}; }

// Two counted cars; detections 0.9 hit, 0.8 miss, 0.7 hit.
EvalFrame hand_example() {
  EvalFrame f;
  f.gt.objects = {make_gt(RawClass::Car, car_at(10, 0)), make_gt(RawClass::Car, car_at(20, 5))};
  f.dets = {make_det(ObjectClass::Car, car_at(10, 0), 0.9), make_det(ObjectClass::Car, car_at(40, -8), 0.8),
            make_det(ObjectClass::Car, car_at(20, 5), 0.7)};
  return f;
}

double car_easy_ap(const std::vector<EvalFrame>& frames, ApMode mode = ApMode::ElevenPoint) {
  EvalOptions opts;
  opts.ap_mode = mode;
  for (const auto& r : evaluate_dataset(frames, opts))
    if (r.object_class == ObjectClass::Car && r.difficulty == Difficulty::Easy) return r.ap;
  return -1.0;
}

// Independent restatement of the matching rules: counted GTs are exactly the
// given class inside the devkit thresholds; same-class GTs outside them, Vans
// (for Car) and sitting persons (for Pedestrian) only absorb detections.
struct Counts {
  std::size_t tp = 0, fp = 0, fn = 0;
};

Counts oracle_counts(const EvalFrame& f, ObjectClass cls, Difficulty d, double thr) {
  const double min_h[] = {40, 25, 25}, max_occ[] = {0, 1, 2}, max_tr[] = {0.15, 0.30, 0.50};
  const int k = int(d);
  enum Role { None, Count, Absorb };
  std::vector<Role> role;
  for (const auto& g : f.gt.objects) {
    Role r = None;
    const bool sibling = (cls == ObjectClass::Car && g.raw_class == RawClass::Van) ||
                         (cls == ObjectClass::Pedestrian && g.raw_class == RawClass::PersonSitting);
    const bool exact = (cls == ObjectClass::Car && g.raw_class == RawClass::Car) ||
                       (cls == ObjectClass::Pedestrian && g.raw_class == RawClass::Pedestrian) ||
                       (cls == ObjectClass::Cyclist && g.raw_class == RawClass::Cyclist);
    if (sibling) r = Absorb;
    if (exact) {
      const bool in = g.image_bbox.height() >= min_h[k] && g.occlusion <= max_occ[k] && g.truncation <= max_tr[k];
      r = in ? Count : Absorb;
    }
    role.push_back(r);
  }
  std::vector<const DetectionRecord*> order;
  for (const auto& det : f.dets)
    if (det.object_class == cls) order.push_back(&det);
  std::stable_sort(order.begin(), order.end(), [](auto a, auto b) { return a->score > b->score; });
  std::vector<bool> used(role.size(), false);
  Counts c;
  for (const DetectionRecord* det : order) {
    int pick = -1;
    for (Role want : {Count, Absorb}) {
      double best = -1.0;
      for (std::size_t g = 0; g < role.size(); ++g) {
        if (used[g] || role[g] != want) continue;
        const double iou = rotated_iou(det->box, f.gt.objects[g].box);
        if (iou >= thr && iou > best) {
          best = iou;
          pick = int(g);
        }
      }
      if (pick >= 0) break;
    }
    if (pick < 0) {
      ++c.fp;
      continue;
    }
    used[std::size_t(pick)] = true;
    if (role[std::size_t(pick)] == Count) ++c.tp;
  }
  for (std::size_t g = 0; g < role.size(); ++g)
    if (role[g] == Count && !used[g]) ++c.fn;
  return c;
}

}  // namespace

TEST(Difficulty, DevkitThresholds) {
  const auto all = assign_difficulty(make_gt(RawClass::Car, car_at(5, 0), 45.0, 0, 0.1));
  for (Difficulty d : kDifficulties) EXPECT_TRUE(contains(all, d));
  const auto occluded = assign_difficulty(make_gt(RawClass::Car, car_at(5, 0), 45.0, 2, 0.1));
  EXPECT_FALSE(contains(occluded, Difficulty::Easy));
  EXPECT_FALSE(contains(occluded, Difficulty::Moderate));
  EXPECT_TRUE(contains(occluded, Difficulty::Hard));
  EXPECT_EQ(assign_difficulty(make_gt(RawClass::Car, car_at(5, 0), 30.0, 0, 0.0)),
            assign_difficulty(make_gt(RawClass::Car, car_at(5, 0), 30.0, 1, 0.2)));
  EXPECT_EQ(assign_difficulty(make_gt(RawClass::Car, car_at(5, 0), 20.0, 0, 0.0)), DifficultySet{0});
  EXPECT_EQ(assign_difficulty(make_gt(RawClass::Car, car_at(5, 0), 60.0, 3, 0.0)), DifficultySet{0});
}

TEST(Difficulty, MembershipIsNested) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> h(0.0, 80.0), tr(0.0, 1.0);
  for (int i = 0; i < 5000; ++i) {
    const auto set = assign_difficulty(make_gt(RawClass::Car, car_at(5, 0), h(rng), int(rng() % 4), tr(rng)));
    if (contains(set, Difficulty::Easy)) EXPECT_TRUE(contains(set, Difficulty::Moderate));
    if (contains(set, Difficulty::Moderate)) EXPECT_TRUE(contains(set, Difficulty::Hard));
  }
}

TEST(Difficulty, ThresholdsMustBeNested) {
  DifficultyThresholds th;
  th.limits[0].min_bbox_height = 10.0;
  EXPECT_THROW(th.validate(), Error);
}

TEST(Matching, PerfectAndDuplicate) {
  EvalFrame f = hand_example();
  f.dets = {make_det(ObjectClass::Car, car_at(10, 0), 0.5), make_det(ObjectClass::Car, car_at(20, 5), 0.6)};
  auto a = match_detections(f.dets, f.gt, ObjectClass::Car, 0.7, Difficulty::Easy);
  EXPECT_EQ(a.true_positives, 2u);
  EXPECT_EQ(a.false_positives, 0u);
  EXPECT_EQ(a.false_negatives, 0u);
  EXPECT_EQ(a.matched_gt, (std::vector<int>{0, 1}));

  for (std::size_t k = 1; k <= 5; ++k) {
    std::vector<DetectionRecord> dups(k, make_det(ObjectClass::Car, car_at(10, 0), 0.9));
    a = match_detections(dups, f.gt, ObjectClass::Car, 0.7, Difficulty::Easy);
    EXPECT_EQ(a.true_positives, 1u);
    EXPECT_EQ(a.false_positives, k - 1);
  }
}

TEST(Matching, SiblingClassesAbsorbDetections) {
  EvalFrame f;
  f.gt.objects = {make_gt(RawClass::Van, car_at(10, 0)), make_gt(RawClass::PersonSitting, {5, 3, 0.8, 0.8, 0})};
  f.dets = {make_det(ObjectClass::Car, car_at(10, 0), 0.9), make_det(ObjectClass::Pedestrian, {5, 3, 0.8, 0.8, 0}, 0.8)};
  const auto car = match_detections(f.dets, f.gt, ObjectClass::Car, 0.7, Difficulty::Moderate);
  EXPECT_EQ(car.num_gt, 0u);
  EXPECT_EQ(car.false_positives, 0u);
  EXPECT_EQ(car.outcome[0], DetectionOutcome::Ignored);
  EXPECT_EQ(car.outcome[1], DetectionOutcome::NotConsidered);
  const auto ped = match_detections(f.dets, f.gt, ObjectClass::Pedestrian, 0.5, Difficulty::Moderate);
  EXPECT_EQ(ped.false_positives, 0u);
  EXPECT_EQ(ped.outcome[1], DetectionOutcome::Ignored);
  // A second Car detection on the same Van is a false positive.
  f.dets.push_back(make_det(ObjectClass::Car, car_at(10, 0), 0.1));
  EXPECT_EQ(match_detections(f.dets, f.gt, ObjectClass::Car, 0.7, Difficulty::Moderate).false_positives, 1u);
}

TEST(Matching, HarderObjectsAreIgnoredAtEasy) {
  EvalFrame f;
  f.gt.objects = {make_gt(RawClass::Car, car_at(10, 0), 30.0, 1, 0.2)};
  f.dets = {make_det(ObjectClass::Car, car_at(10, 0), 0.9)};
  const auto easy = match_detections(f.dets, f.gt, ObjectClass::Car, 0.7, Difficulty::Easy);
  EXPECT_EQ(easy.num_gt, 0u);
  EXPECT_EQ(easy.false_positives, 0u);
  const auto mod = match_detections(f.dets, f.gt, ObjectClass::Car, 0.7, Difficulty::Moderate);
  EXPECT_EQ(mod.true_positives, 1u);
}

TEST(Matching, DontCareMasksDetectionsWithImageBoxes) {
  EvalFrame f;
  f.gt.dont_care = {DontCareRegion{{0.0, 0.0, 100.0, 100.0}}};
  DetectionRecord inside = make_det(ObjectClass::Car, car_at(30, 0), 0.9);
  inside.image_bbox = ImageBox{10.0, 10.0, 60.0, 60.0};
  DetectionRecord outside = inside;
  outside.image_bbox = ImageBox{300.0, 10.0, 360.0, 60.0};
  const DetectionRecord bev_only = make_det(ObjectClass::Car, car_at(30, 0), 0.9);
  const auto a = match_detections({inside, outside, bev_only}, f.gt, ObjectClass::Car, 0.7, Difficulty::Easy);
  EXPECT_EQ(a.outcome[0], DetectionOutcome::Ignored);
  EXPECT_EQ(a.outcome[1], DetectionOutcome::FalsePositive);
  EXPECT_EQ(a.outcome[2], DetectionOutcome::FalsePositive);
  EvalOptions off;
  off.mask_dont_care = false;
  EXPECT_EQ(match_detections({inside}, f.gt, ObjectClass::Car, 0.7, Difficulty::Easy, off).false_positives, 1u);
}

TEST(Matching, AgreesWithIndependentGreedyMatcher) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> pos(0.0, 12.0), jitter(-0.6, 0.6), score(0.0, 1.0), h(10.0, 80.0);
  const RawClass raws[] = {RawClass::Car, RawClass::Van, RawClass::Pedestrian, RawClass::PersonSitting,
                           RawClass::Cyclist, RawClass::Truck};
  const ObjectClass classes[] = {ObjectClass::Car, ObjectClass::Pedestrian, ObjectClass::Cyclist};
  for (int scene = 0; scene < 300; ++scene) {
    EvalFrame f;
    const int n_gt = int(rng() % 6);
    for (int i = 0; i < n_gt; ++i) {
      const RawClass raw = raws[rng() % 6];
      const RotatedBox b{pos(rng), pos(rng), 1.0 + 3.0 * score(rng), 0.8 + score(rng), 3.0 * jitter(rng)};
      f.gt.objects.push_back(make_gt(raw, b, h(rng), int(rng() % 4), 0.6 * score(rng)));
    }
    const int n_det = int(rng() % 8);
    for (int i = 0; i < n_det; ++i) {
      RotatedBox b{pos(rng), pos(rng), 1.0 + 3.0 * score(rng), 0.8 + score(rng), 3.0 * jitter(rng)};
      if (!f.gt.objects.empty() && rng() % 3) {
        b = f.gt.objects[rng() % f.gt.objects.size()].box;
        b.x += 0.3 * jitter(rng);
        b.y += 0.3 * jitter(rng);
      }
      f.dets.push_back(make_det(classes[rng() % 3], b, std::round(10.0 * score(rng)) / 10.0));
    }
    for (ObjectClass cls : classes) {
      for (Difficulty d : kDifficulties) {
        const double thr = cls == ObjectClass::Car ? 0.7 : 0.5;
        const auto lib = match_detections(f.dets, f.gt, cls, thr, d);
        const Counts ref = oracle_counts(f, cls, d, thr);
        ASSERT_EQ(lib.true_positives, ref.tp) << "scene " << scene;
        ASSERT_EQ(lib.false_positives, ref.fp) << "scene " << scene;
        ASSERT_EQ(lib.false_negatives, ref.fn) << "scene " << scene;
      }
    }
  }
}

TEST(PrCurve, HandExample) {
  const EvalFrame f = hand_example();
  const auto a = match_detections(f.dets, f.gt, ObjectClass::Car, 0.7, Difficulty::Easy);
  const auto curve = compute_pr({a});
  ASSERT_EQ(curve.samples.size(), 3u);
  EXPECT_DOUBLE_EQ(curve.samples[0][0], 0.5);
  EXPECT_DOUBLE_EQ(curve.samples[0][1], 1.0);
  EXPECT_DOUBLE_EQ(curve.samples[1][0], 0.5);
  EXPECT_DOUBLE_EQ(curve.samples[1][1], 0.5);
  EXPECT_DOUBLE_EQ(curve.samples[2][0], 1.0);
  EXPECT_DOUBLE_EQ(curve.samples[2][1], 2.0 / 3.0);

  EXPECT_NEAR(average_precision(curve).ap, 100.0 * (6.0 + 5.0 * 2.0 / 3.0) / 11.0, 1e-9);
  EXPECT_NEAR(average_precision(curve, ApMode::FortyPoint).ap, 100.0 * (20.0 + 20.0 * 2.0 / 3.0) / 40.0, 1e-9);
}

TEST(PrCurve, TiedScoresShareOneSample) {
  EvalFrame f = hand_example();
  for (auto& d : f.dets) d.score = 0.5;
  const auto curve = compute_pr({match_detections(f.dets, f.gt, ObjectClass::Car, 0.7, Difficulty::Easy)});
  ASSERT_EQ(curve.samples.size(), 1u);
  EXPECT_DOUBLE_EQ(curve.samples[0][0], 1.0);
  EXPECT_DOUBLE_EQ(curve.samples[0][1], 2.0 / 3.0);
}

TEST(AveragePrecision, Extremes) {
  EvalFrame f = hand_example();
  f.dets.clear();
  for (const auto& g : f.gt.objects) f.dets.push_back(make_det(g.merged_class, g.box, 1.0));
  EXPECT_DOUBLE_EQ(car_easy_ap({f}), 100.0);
  EXPECT_DOUBLE_EQ(car_easy_ap({f}, ApMode::FortyPoint), 100.0);
  f.dets.clear();
  EXPECT_EQ(car_easy_ap({f}), 0.0);

  PRCurve empty;
  try {
    average_precision(empty);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Undefined);
  }
}

TEST(AveragePrecision, GroundTruthAgainstItselfIsPerfectEverywhere) {
  std::mt19937_64 rng(2);
  std::vector<EvalFrame> frames;
  const RawClass raws[] = {RawClass::Car, RawClass::Pedestrian, RawClass::Cyclist};
  for (int i = 0; i < 10; ++i) {
    EvalFrame f;
    for (int k = 0; k < 9; ++k) {
      const RotatedBox b{6.0 * k, 4.0 * i, 1.5 + k % 3, 1.0, 0.1 * k};
      // One object per class at each difficulty level.
      const int level = k / 3;
      const double heights[] = {50.0, 30.0, 26.0}, truncations[] = {0.1, 0.2, 0.4};
      f.gt.objects.push_back(make_gt(raws[k % 3], b, heights[level], level, truncations[level]));
      f.dets.push_back(make_det(f.gt.objects.back().merged_class, b, 1.0));
    }
    frames.push_back(f);
  }
  const auto results = evaluate_dataset(frames);
  ASSERT_EQ(results.size(), 9u);
  for (const auto& r : results) {
    ASSERT_TRUE(r.defined) << to_string(r.object_class) << " " << to_string(r.difficulty);
    EXPECT_DOUBLE_EQ(r.ap, 100.0);
  }
}

TEST(AveragePrecision, InvariantUnderMonotoneScoreMaps) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0), jitter(-0.5, 0.5);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<EvalFrame> frames;
    for (int i = 0; i < 5; ++i) {
      EvalFrame f;
      for (int k = 0; k < 6; ++k) {
        const RotatedBox b{8.0 * k, 10.0 * i, 4.0, 1.8, 0.0};
        f.gt.objects.push_back(make_gt(RawClass::Car, b));
        RotatedBox d = b;
        d.x += jitter(rng);
        f.dets.push_back(make_det(ObjectClass::Car, d, u(rng)));
      }
      frames.push_back(f);
    }
    const double base = car_easy_ap(frames);
    auto mapped = frames;
    for (auto& f : mapped)
      for (auto& d : f.dets) d.score = std::exp(3.0 * d.score) - 7.0;
    EXPECT_DOUBLE_EQ(car_easy_ap(mapped), base);

    auto extra = frames;
    extra[0].dets.push_back(make_det(ObjectClass::Car, car_at(200, 200), -1.0));
    EXPECT_LE(car_easy_ap(extra), base);
  }
}

TEST(EvaluateDataset, MissingClassesAreUndefined) {
  const auto results = evaluate_dataset({hand_example()});
  for (const auto& r : results) {
    EXPECT_EQ(r.defined, r.object_class == ObjectClass::Car);
    EXPECT_EQ(r.iou_threshold, r.object_class == ObjectClass::Car ? 0.7 : 0.5);
  }
  const std::string table = format_ap_table(results);
  EXPECT_NE(table.find("n/a"), std::string::npos);
  EXPECT_NE(table.find("84.85"), std::string::npos);
  const std::string json = ap_results_json(results);
  EXPECT_NE(json.find("\"Pedestrian\""), std::string::npos);
}
