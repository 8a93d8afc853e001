#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "gridmap/labels.hpp"

namespace gridmap {

enum class Difficulty { Easy, Moderate, Hard };
inline constexpr std::array<Difficulty, 3> kDifficulties = {Difficulty::Easy, Difficulty::Moderate, Difficulty::Hard};
inline constexpr std::array<ObjectClass, 3> kBenchmarkClasses = {ObjectClass::Car, ObjectClass::Pedestrian,
                                                                 ObjectClass::Cyclist};

std::string_view to_string(Difficulty d);

struct DifficultyLimits {
  double min_bbox_height = 0.0;  ///< pixels
  int max_occlusion = 0;
  double max_truncation = 0.0;
};

/// Defaults follow the public KITTI devkit.
struct DifficultyThresholds {
  std::array<DifficultyLimits, 3> limits{{{40.0, 0, 0.15}, {25.0, 1, 0.30}, {25.0, 2, 0.50}}};

  const DifficultyLimits& operator[](Difficulty d) const { return limits[std::size_t(d)]; }
  /// Throws ErrorCode::Config unless each level admits everything the easier one does.
  void validate() const;
};

/// Bit i set <=> member of Difficulty(i).
using DifficultySet = std::uint8_t;
inline bool contains(DifficultySet set, Difficulty d) { return (set >> unsigned(d)) & 1u; }

DifficultySet assign_difficulty(const GroundTruthLabel& label, const DifficultyThresholds& th = {});

enum class ApMode { ElevenPoint = 11, FortyPoint = 40 };

struct EvalOptions {
  DifficultyThresholds thresholds;
  std::map<ObjectClass, double> iou_threshold{
      {ObjectClass::Car, 0.7}, {ObjectClass::Pedestrian, 0.5}, {ObjectClass::Cyclist, 0.5}};
  ApMode ap_mode = ApMode::ElevenPoint;
  /// Drop unmatched detections whose image box lies mostly inside a DontCare region.
  bool mask_dont_care = true;
  double dont_care_overlap = 0.5;

  double iou_for(ObjectClass c) const;
};

enum class DetectionOutcome { NotConsidered, TruePositive, FalsePositive, Ignored };

struct ScoredOutcome {
  double score = 0.0;
  bool true_positive = false;
};

struct FrameAssignment {
  std::vector<DetectionOutcome> outcome;  ///< per input detection, input order
  std::vector<int> matched_gt;            ///< per input detection; index into gts.objects or -1
  std::vector<ScoredOutcome> scored;      ///< TP/FP detections only
  std::size_t num_gt = 0;                 ///< GTs counted as positives at this difficulty
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  std::size_t false_negatives = 0;
};

/// Greedy one-to-one matching in descending score order. A detection takes the
/// unmatched counted GT with the highest BEV IoU ≥ threshold; failing that, an
/// unmatched ignored GT (Van for Car, Person_sitting for Pedestrian, or outside
/// the difficulty) absorbs it without penalty.
FrameAssignment match_detections(const std::vector<DetectionRecord>& dets, const FrameLabels& gts, ObjectClass cls,
                                 double iou_threshold, Difficulty difficulty, const EvalOptions& opts = {});

struct PRCurve {
  ObjectClass object_class = ObjectClass::Car;
  Difficulty difficulty = Difficulty::Easy;
  std::size_t num_gt = 0;
  std::vector<std::array<double, 2>> samples;  ///< (recall, precision), one per distinct score

  bool has_ground_truth() const { return num_gt > 0; }
};

PRCurve compute_pr(const std::vector<FrameAssignment>& frames, ObjectClass cls = ObjectClass::Car,
                   Difficulty difficulty = Difficulty::Easy);

struct APResult {
  ObjectClass object_class = ObjectClass::Car;
  Difficulty difficulty = Difficulty::Easy;
  double ap = 0.0;  ///< percent
  double iou_threshold = 0.0;
  std::size_t num_gt = 0;
  bool defined = true;
};

/// Interpolated AP in percent. Throws ErrorCode::Undefined without ground truth.
APResult average_precision(const PRCurve& curve, ApMode mode = ApMode::ElevenPoint);

struct EvalFrame {
  FrameLabels gt;
  std::vector<DetectionRecord> dets;
};

/// AP for Car, Pedestrian and Cyclist at each difficulty; entries with no
/// ground truth come back with defined = false.
std::vector<APResult> evaluate_dataset(const std::vector<EvalFrame>& frames, const EvalOptions& opts = {});

std::string format_ap_table(const std::vector<APResult>& results);
std::string ap_results_json(const std::vector<APResult>& results);

}  // namespace gridmap
