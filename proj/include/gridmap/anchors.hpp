#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "gridmap/box.hpp"
#include "gridmap/grid.hpp"

namespace gridmap {

struct AnchorConfig {
  std::vector<double> sizes{1.75, 2.5, 9.0, 22.0};  ///< meters, ascending
  std::vector<double> aspect_ratios{1.0, 2.0, 0.5};  ///< r for r:1
  int stride = 16;                                   ///< in grid cells
  GridConfig grid;

  void validate() const;
  /// Anchor locations along x and y: ceil(cells / stride), i.e. the output
  /// size of a stride-`stride` feature map with same-padding.
  int locations_x() const;
  int locations_y() const;
};

struct Anchor {
  AxisBox box;
  std::size_t location = 0;
  std::size_t size_index = 0;
  std::size_t ratio_index = 0;
};

struct AnchorGrid {
  std::vector<Anchor> anchors;  ///< location-major, then size, then ratio
  int locations_x = 0;
  int locations_y = 0;
};

/// Anchors sit at the centers of the stride blocks. Size s with ratio r gets
/// extents (s·√r, s/√r), so every ratio keeps the area s².
AnchorGrid generate_anchors(const AnchorConfig& cfg);

enum class AnchorLabel { Negative, Ignore, Positive };

struct MatchConfig {
  double positive_iou = 0.7;
  double negative_iou = 0.3;
  BoxEncoding encoding = BoxEncoding::B1;
};

struct MatchResult {
  std::vector<AnchorLabel> labels;  ///< per anchor
  std::vector<int> gt_index;        ///< per anchor; -1 unless positive
  std::vector<double> max_iou;      ///< per anchor, against in-grid GT hulls
  std::vector<std::size_t> positives;          ///< anchor indices, ascending
  std::vector<std::array<double, 4>> v;        ///< parallel to positives
  std::vector<std::vector<double>> u;          ///< parallel to positives
  std::vector<bool> gt_in_grid;     ///< per GT; GTs outside the extent are ignored
};

/// Anchors are compared with the axis-aligned hull of each GT. Positive when
/// IoU ≥ positive_iou, negative when the best IoU < negative_iou, ignored in
/// between. Each in-grid GT additionally claims its best remaining anchor
/// (lowest index on ties), so none is left without a positive.
MatchResult match_anchors(const AnchorGrid& grid, const std::vector<RotatedBox>& gts, const GridConfig& extent,
                          const MatchConfig& cfg = {});

/// Scale-invariant translation and log-space size shift of the GT hull.
std::array<double, 4> compute_target_v(const AxisBox& anchor, const RotatedBox& gt);
AxisBox apply_target_v(const AxisBox& anchor, const std::array<double, 4>& v);

/// Encoded rotated GT relative to the anchor: positions normalized like v,
/// extents as log ratios to the anchor scale √(w_a·h_a), angle terms raw.
std::vector<double> compute_target_u(const AxisBox& anchor, const RotatedBox& gt, BoxEncoding enc);
RotatedBox apply_target_u(const AxisBox& anchor, const std::vector<double>& u, BoxEncoding enc);

}  // namespace gridmap
