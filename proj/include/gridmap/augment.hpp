#pragma once

#include <cstdint>
#include <vector>

#include "gridmap/labels.hpp"
#include "gridmap/point_cloud.hpp"

namespace gridmap {

struct AugmentConfig {
  double flip_probability = 0.5;
  double rotation_range = 0.2617993877991494;  ///< radians (15°); angles are drawn from [-range, range]
  std::uint64_t seed = 0;

  void validate() const;
};

/// What augment_sample did, recorded for reproducibility.
struct AppliedTransform {
  bool flipped = false;
  double angle = 0.0;  ///< radians, applied after the flip
  std::uint64_t seed = 0;
  std::uint64_t draw_index = 0;
};

struct Scene {
  PointCloud cloud;
  std::vector<GroundTruthLabel> labels;  ///< boxes in the sensor frame
};

/// Mirror about the forward axis: (x, y, z) -> (x, -y, z), heading -> -heading.
Scene flip_x(const Scene& scene);

/// Planar rotation about `pivot` (the sensor origin); z is untouched and box
/// headings advance by `angle` before being canonicalized.
Scene rotate_scene(const Scene& scene, double angle, Vec2 pivot = {});

struct AugmentResult {
  Scene scene;
  AppliedTransform transform;
};

/// Flip decision and rotation angle are drawn from a generator keyed on
/// (cfg.seed, draw_index) only, so the same pair always yields the same scene.
AppliedTransform draw_transform(const AugmentConfig& cfg, std::uint64_t draw_index);
AugmentResult augment_sample(const Scene& scene, const AugmentConfig& cfg, std::uint64_t draw_index, Vec2 pivot = {});
Scene apply_transform(const Scene& scene, const AppliedTransform& t, Vec2 pivot = {});

}  // namespace gridmap
