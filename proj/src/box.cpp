#include "gridmap/box.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <tuple>

#include "gridmap/error.hpp"

namespace gridmap {

using std::numbers::pi;

std::string_view to_string(BoxEncoding enc) {
  switch (enc) {
    case BoxEncoding::B1: return "B1";
    case BoxEncoding::B2: return "B2";
    case BoxEncoding::B3: return "B3";
  }
  return "?";
}

BoxEncoding parse_box_encoding(std::string_view name) {
  if (name == "B1") return BoxEncoding::B1;
  if (name == "B2") return BoxEncoding::B2;
  if (name == "B3") return BoxEncoding::B3;
  fail(ErrorCode::Config, "unknown box encoding '" + std::string(name) + "' (expected B1, B2 or B3)");
}

std::size_t encoding_size(BoxEncoding enc) { return enc == BoxEncoding::B1 ? 6 : 5; }

double canonical_heading(double theta) {
  double t = theta - pi * std::floor((theta + pi / 2) / pi);
  // floor() can land exactly on the open end after rounding.
  if (t >= pi / 2) t -= pi;
  if (t < -pi / 2) t += pi;
  return t;
}

double wrap_angle(double theta) {
  double t = theta - 2 * pi * std::floor((theta + pi) / (2 * pi));
  if (t >= pi) t -= 2 * pi;
  if (t < -pi) t += 2 * pi;
  return t;
}

EncodedBox encode(const RotatedBox& box, BoxEncoding enc) {
  const double theta = canonical_heading(box.theta);
  switch (enc) {
    case BoxEncoding::B1:
      return {enc, {box.x, box.y, box.width, box.length, std::sin(2 * theta), std::cos(2 * theta)}};
    case BoxEncoding::B2:
      return {enc, {box.x, box.y, box.width, box.length, theta}};
    case BoxEncoding::B3: {
      const double hx = 0.5 * box.length * std::cos(theta);
      const double hy = 0.5 * box.length * std::sin(theta);
      return {enc, {box.x - hx, box.y - hy, box.x + hx, box.y + hy, box.width}};
    }
  }
  fail(ErrorCode::InvalidArgument, "unknown box encoding");
}

RotatedBox decode(const EncodedBox& enc) {
  const auto& p = enc.params;
  if (p.size() != encoding_size(enc.encoding))
    fail(ErrorCode::InvalidArgument, std::string(to_string(enc.encoding)) + " expects " +
                                         std::to_string(encoding_size(enc.encoding)) + " parameters, got " +
                                         std::to_string(p.size()));
  switch (enc.encoding) {
    case BoxEncoding::B1: {
      if (std::hypot(p[4], p[5]) < 1e-12) fail(ErrorCode::Undefined, "B1 angle pair (0, 0) has no heading");
      return {p[0], p[1], p[3], p[2], canonical_heading(0.5 * std::atan2(p[4], p[5]))};
    }
    case BoxEncoding::B2:
      return {p[0], p[1], p[3], p[2], canonical_heading(p[4])};
    case BoxEncoding::B3: {
      const double dx = p[2] - p[0];
      const double dy = p[3] - p[1];
      const double len = std::hypot(dx, dy);
      if (len == 0.0) fail(ErrorCode::Undefined, "B3 side midpoints coincide");
      return {0.5 * (p[0] + p[2]), 0.5 * (p[1] + p[3]), len, p[4], canonical_heading(std::atan2(dy, dx))};
    }
  }
  fail(ErrorCode::InvalidArgument, "unknown box encoding");
}

std::array<Vec2, 4> corners(const RotatedBox& box) {
  const double c = std::cos(box.theta);
  const double s = std::sin(box.theta);
  const double hl = 0.5 * box.length;
  const double hw = 0.5 * box.width;
  auto place = [&](double u, double v) { return Vec2{box.x + u * c - v * s, box.y + u * s + v * c}; };
  return {place(hl, -hw), place(hl, hw), place(-hl, hw), place(-hl, -hw)};
}

double area(const RotatedBox& box) { return box.length * box.width; }

double polygon_area(const std::vector<Vec2>& poly) {
  if (poly.size() < 3) return 0.0;
  double twice = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % poly.size()];
    twice += a.x * b.y - a.y * b.x;
  }
  return 0.5 * twice;
}

std::vector<Vec2> clip_convex(const std::vector<Vec2>& subject, const std::vector<Vec2>& clip) {
  std::vector<Vec2> out = subject;
  for (std::size_t i = 0; i < clip.size() && !out.empty(); ++i) {
    const Vec2 a = clip[i];
    const Vec2 b = clip[(i + 1) % clip.size()];
    // > 0 on the inner (left) side of the directed edge a->b.
    auto side = [&](const Vec2& p) { return (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x); };
    std::vector<Vec2> in = std::move(out);
    out.clear();
    for (std::size_t j = 0; j < in.size(); ++j) {
      const Vec2 cur = in[j];
      const Vec2 prev = in[(j + in.size() - 1) % in.size()];
      const double sc = side(cur);
      const double sp = side(prev);
      if (sc >= 0.0) {
        if (sp < 0.0) {
          const double t = sp / (sp - sc);
          out.push_back({prev.x + t * (cur.x - prev.x), prev.y + t * (cur.y - prev.y)});
        }
        out.push_back(cur);
      } else if (sp >= 0.0) {
        const double t = sp / (sp - sc);
        out.push_back({prev.x + t * (cur.x - prev.x), prev.y + t * (cur.y - prev.y)});
      }
    }
  }
  return out;
}

double rotated_iou(const RotatedBox& a, const RotatedBox& b) {
  const double ra = 0.5 * std::hypot(a.length, a.width);
  const double rb = 0.5 * std::hypot(b.length, b.width);
  if (std::hypot(a.x - b.x, a.y - b.y) > ra + rb) return 0.0;

  // Clip in a fixed argument order so the result is bitwise symmetric.
  auto key = [](const RotatedBox& r) { return std::tie(r.x, r.y, r.length, r.width, r.theta); };
  const RotatedBox& first = key(a) <= key(b) ? a : b;
  const RotatedBox& second = key(a) <= key(b) ? b : a;
  auto ca = corners(first);
  auto cb = corners(second);
  const double inter = polygon_area(clip_convex({ca.begin(), ca.end()}, {cb.begin(), cb.end()}));
  if (inter <= 0.0) return 0.0;
  const double uni = area(a) + area(b) - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

AxisBox axis_aligned_hull(const RotatedBox& box) {
  const double c = std::abs(std::cos(box.theta));
  const double s = std::abs(std::sin(box.theta));
  return {box.x, box.y, box.length * c + box.width * s, box.length * s + box.width * c};
}

double axis_iou(const AxisBox& a, const AxisBox& b) {
  const double ix = std::min(a.x + 0.5 * a.size_x, b.x + 0.5 * b.size_x) -
                    std::max(a.x - 0.5 * a.size_x, b.x - 0.5 * b.size_x);
  const double iy = std::min(a.y + 0.5 * a.size_y, b.y + 0.5 * b.size_y) -
                    std::max(a.y - 0.5 * a.size_y, b.y - 0.5 * b.size_y);
  if (ix <= 0.0 || iy <= 0.0) return 0.0;
  const double inter = ix * iy;
  return inter / (a.size_x * a.size_y + b.size_x * b.size_y - inter);
}

}  // namespace gridmap
