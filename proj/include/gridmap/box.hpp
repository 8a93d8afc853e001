#pragma once

#include <array>
#include <cstddef>
#include <string_view>
#include <vector>

namespace gridmap {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Vec2&, const Vec2&) = default;
};

/// Bird's-eye-view box. `length` runs along the heading, `width` across it.
struct RotatedBox {
  double x = 0.0;
  double y = 0.0;
  double length = 1.0;
  double width = 1.0;
  double theta = 0.0;  ///< heading against the grid x axis, radians
};

/// Axis-aligned box as used for anchors and proposal hulls.
struct AxisBox {
  double x = 0.0;
  double y = 0.0;
  double size_x = 1.0;
  double size_y = 1.0;
};

enum class BoxEncoding { B1, B2, B3 };

std::string_view to_string(BoxEncoding enc);
BoxEncoding parse_box_encoding(std::string_view name);
/// Parameter count: 6 for B1, 5 for B2 and B3.
std::size_t encoding_size(BoxEncoding enc);

/// B1: [x_c, y_c, w, h, sin 2θ, cos 2θ]
/// B2: [x_c, y_c, w, h, θ]
/// B3: [x₁, y₁, x₂, y₂, w], the midpoints of the rear and front sides plus width.
/// (w, h) = (width, length) throughout.
struct EncodedBox {
  BoxEncoding encoding = BoxEncoding::B1;
  std::vector<double> params;
};

/// Maps a heading onto [-π/2, π/2); boxes are symmetric under a half turn.
double canonical_heading(double theta);

/// Wraps to [-π, π).
double wrap_angle(double theta);

EncodedBox encode(const RotatedBox& box, BoxEncoding enc);
/// Inverse of encode with the heading canonicalized. Throws ErrorCode::Undefined
/// for a zero B1 angle pair or coincident B3 points.
RotatedBox decode(const EncodedBox& enc);

/// Corners in counter-clockwise order, starting front-right.
std::array<Vec2, 4> corners(const RotatedBox& box);

double area(const RotatedBox& box);
double polygon_area(const std::vector<Vec2>& poly);

/// Intersection of two convex counter-clockwise polygons (Sutherland–Hodgman).
std::vector<Vec2> clip_convex(const std::vector<Vec2>& subject, const std::vector<Vec2>& clip);

/// Exact BEV intersection-over-union of two rotated boxes.
double rotated_iou(const RotatedBox& a, const RotatedBox& b);

AxisBox axis_aligned_hull(const RotatedBox& box);
double axis_iou(const AxisBox& a, const AxisBox& b);

}  // namespace gridmap
