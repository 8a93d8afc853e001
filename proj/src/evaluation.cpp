#include "gridmap/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <numeric>

#include "gridmap/error.hpp"

namespace gridmap {
namespace {

enum class GtRole { Unrelated, Counted, Ignored };

GtRole gt_role(const GroundTruthLabel& l, ObjectClass cls, Difficulty d, const DifficultyThresholds& th) {
  if (l.raw_class == RawClass::DontCare) return GtRole::Unrelated;
  if ((cls == ObjectClass::Car && l.raw_class == RawClass::Van) ||
      (cls == ObjectClass::Pedestrian && l.raw_class == RawClass::PersonSitting))
    return GtRole::Ignored;
  if (l.merged_class != cls) return GtRole::Unrelated;
  return contains(assign_difficulty(l, th), d) ? GtRole::Counted : GtRole::Ignored;
}

double image_overlap_of_first(const ImageBox& a, const ImageBox& b) {
  const double w = std::min(a.right, b.right) - std::max(a.left, b.left);
  const double h = std::min(a.bottom, b.bottom) - std::max(a.top, b.top);
  const double area = (a.right - a.left) * (a.bottom - a.top);
  if (w <= 0.0 || h <= 0.0 || area <= 0.0) return 0.0;
  return w * h / area;
}

}  // namespace

std::string_view to_string(Difficulty d) {
  switch (d) {
    case Difficulty::Easy: return "Easy";
    case Difficulty::Moderate: return "Moderate";
    case Difficulty::Hard: return "Hard";
  }
  return "?";
}

void DifficultyThresholds::validate() const {
  for (std::size_t i = 1; i < limits.size(); ++i) {
    const auto& easier = limits[i - 1];
    const auto& harder = limits[i];
    if (harder.min_bbox_height > easier.min_bbox_height || harder.max_occlusion < easier.max_occlusion ||
        harder.max_truncation < easier.max_truncation)
      fail(ErrorCode::Config, "difficulty thresholds must admit more objects at each harder level");
  }
}

DifficultySet assign_difficulty(const GroundTruthLabel& label, const DifficultyThresholds& th) {
  DifficultySet set = 0;
  for (Difficulty d : kDifficulties) {
    const auto& lim = th[d];
    if (label.image_bbox.height() >= lim.min_bbox_height && label.occlusion <= lim.max_occlusion &&
        label.truncation <= lim.max_truncation)
      set |= DifficultySet(1u << unsigned(d));
  }
  return set;
}

double EvalOptions::iou_for(ObjectClass c) const {
  auto it = iou_threshold.find(c);
  if (it == iou_threshold.end())
    fail(ErrorCode::Config, "no IoU threshold configured for class " + std::string(to_string(c)));
  return it->second;
}

FrameAssignment match_detections(const std::vector<DetectionRecord>& dets, const FrameLabels& gts, ObjectClass cls,
                                 double iou_threshold, Difficulty difficulty, const EvalOptions& opts) {
  FrameAssignment fa;
  fa.outcome.assign(dets.size(), DetectionOutcome::NotConsidered);
  fa.matched_gt.assign(dets.size(), -1);

  std::vector<GtRole> roles;
  roles.reserve(gts.objects.size());
  for (const auto& g : gts.objects) {
    roles.push_back(gt_role(g, cls, difficulty, opts.thresholds));
    if (roles.back() == GtRole::Counted) ++fa.num_gt;
  }

  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < dets.size(); ++i)
    if (dets[i].object_class == cls) order.push_back(i);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });

  std::vector<bool> taken(gts.objects.size(), false);
  for (std::size_t d : order) {
    int best_counted = -1, best_ignored = -1;
    double iou_counted = 0.0, iou_ignored = 0.0;
    for (std::size_t g = 0; g < gts.objects.size(); ++g) {
      if (taken[g] || roles[g] == GtRole::Unrelated) continue;
      const double iou = rotated_iou(dets[d].box, gts.objects[g].box);
      if (iou < iou_threshold) continue;
      if (roles[g] == GtRole::Counted && (best_counted < 0 || iou > iou_counted)) {
        best_counted = int(g);
        iou_counted = iou;
      } else if (roles[g] == GtRole::Ignored && (best_ignored < 0 || iou > iou_ignored)) {
        best_ignored = int(g);
        iou_ignored = iou;
      }
    }
    if (best_counted >= 0) {
      taken[std::size_t(best_counted)] = true;
      fa.matched_gt[d] = best_counted;
      fa.outcome[d] = DetectionOutcome::TruePositive;
      ++fa.true_positives;
      fa.scored.push_back({dets[d].score, true});
    } else if (best_ignored >= 0) {
      taken[std::size_t(best_ignored)] = true;
      fa.matched_gt[d] = best_ignored;
      fa.outcome[d] = DetectionOutcome::Ignored;
    } else {
      bool masked = false;
      if (opts.mask_dont_care && dets[d].image_bbox) {
        for (const auto& dc : gts.dont_care)
          if (image_overlap_of_first(*dets[d].image_bbox, dc.image_bbox) > opts.dont_care_overlap) masked = true;
      }
      if (masked) {
        fa.outcome[d] = DetectionOutcome::Ignored;
      } else {
        fa.outcome[d] = DetectionOutcome::FalsePositive;
        ++fa.false_positives;
        fa.scored.push_back({dets[d].score, false});
      }
    }
  }
  for (std::size_t g = 0; g < gts.objects.size(); ++g)
    if (roles[g] == GtRole::Counted && !taken[g]) ++fa.false_negatives;
  return fa;
}

PRCurve compute_pr(const std::vector<FrameAssignment>& frames, ObjectClass cls, Difficulty difficulty) {
  PRCurve curve;
  curve.object_class = cls;
  curve.difficulty = difficulty;
  std::vector<ScoredOutcome> all;
  for (const auto& f : frames) {
    curve.num_gt += f.num_gt;
    all.insert(all.end(), f.scored.begin(), f.scored.end());
  }
  if (curve.num_gt == 0) return curve;
  std::stable_sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.score > b.score; });
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < all.size(); ++i) {
    (all[i].true_positive ? tp : fp) += 1;
    // One sample per score threshold: emit after the last detection sharing this score.
    if (i + 1 < all.size() && all[i + 1].score == all[i].score) continue;
    curve.samples.push_back({double(tp) / double(curve.num_gt), double(tp) / double(tp + fp)});
  }
  return curve;
}

APResult average_precision(const PRCurve& curve, ApMode mode) {
  if (!curve.has_ground_truth())
    fail(ErrorCode::Undefined, "average precision is undefined without ground truth (" +
                                   std::string(to_string(curve.object_class)) + ", " +
                                   std::string(to_string(curve.difficulty)) + ")");
  std::vector<double> recall_points;
  if (mode == ApMode::ElevenPoint) {
    for (int i = 0; i <= 10; ++i) recall_points.push_back(i / 10.0);
  } else {
    for (int i = 1; i <= 40; ++i) recall_points.push_back(i / 40.0);
  }
  double sum = 0.0;
  for (double r : recall_points) {
    double best = 0.0;
    for (const auto& s : curve.samples)
      if (s[0] >= r - 1e-12) best = std::max(best, s[1]);
    sum += best;
  }
  APResult res;
  res.object_class = curve.object_class;
  res.difficulty = curve.difficulty;
  res.num_gt = curve.num_gt;
  res.ap = 100.0 * sum / double(recall_points.size());
  return res;
}

std::vector<APResult> evaluate_dataset(const std::vector<EvalFrame>& frames, const EvalOptions& opts) {
  opts.thresholds.validate();
  std::vector<APResult> results;
  for (ObjectClass cls : kBenchmarkClasses) {
    const double thr = opts.iou_for(cls);
    for (Difficulty d : kDifficulties) {
      std::vector<FrameAssignment> assignments;
      assignments.reserve(frames.size());
      for (const auto& f : frames) assignments.push_back(match_detections(f.dets, f.gt, cls, thr, d, opts));
      PRCurve curve = compute_pr(assignments, cls, d);
      APResult r;
      if (curve.has_ground_truth()) {
        r = average_precision(curve, opts.ap_mode);
      } else {
        r.object_class = cls;
        r.difficulty = d;
        r.defined = false;
      }
      r.iou_threshold = thr;
      results.push_back(r);
    }
  }
  return results;
}

std::string format_ap_table(const std::vector<APResult>& results) {
  std::string out = "Class        IoU   Easy      Moderate  Hard\n";
  for (ObjectClass cls : kBenchmarkClasses) {
    char line[128];
    double iou = 0.0;
    std::array<std::string, 3> cells{"n/a", "n/a", "n/a"};
    for (const auto& r : results) {
      if (r.object_class != cls) continue;
      iou = r.iou_threshold;
      if (r.defined) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.2f", r.ap);
        cells[std::size_t(r.difficulty)] = buf;
      }
    }
    std::snprintf(line, sizeof line, "%-12s %.2f  %-9s %-9s %s\n", std::string(to_string(cls)).c_str(), iou,
                  cells[0].c_str(), cells[1].c_str(), cells[2].c_str());
    out += line;
  }
  return out;
}

std::string ap_results_json(const std::vector<APResult>& results) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : results) {
    nlohmann::json rec = {{"class", to_string(r.object_class)},
                          {"difficulty", to_string(r.difficulty)},
                          {"iou_threshold", r.iou_threshold},
                          {"num_gt", r.num_gt},
                          {"defined", r.defined}};
    rec["ap"] = r.defined ? nlohmann::json(r.ap) : nlohmann::json(nullptr);
    arr.push_back(rec);
  }
  return arr.dump(2);
}

}  // namespace gridmap
