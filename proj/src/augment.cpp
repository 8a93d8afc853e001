#include "gridmap/augment.hpp"

#include <cmath>
#include <random>

#include "gridmap/error.hpp"

namespace gridmap {
namespace {

// mt19937_64 and seed_seq are fully specified by the standard, so draws are
// reproducible across platforms; the unit-interval mapping is done by hand for
// the same reason.
double unit_draw(std::mt19937_64& gen) { return double(gen() >> 11) * 0x1.0p-53; }

}  // namespace

void AugmentConfig::validate() const {
  if (!(flip_probability >= 0.0 && flip_probability <= 1.0))
    fail(ErrorCode::Config, "flip_probability must lie in [0, 1]");
  if (!(rotation_range >= 0.0) || !std::isfinite(rotation_range))
    fail(ErrorCode::Config, "rotation_range must be a non-negative angle");
}

Scene flip_x(const Scene& scene) {
  Scene out = scene;
  for (Point& p : out.cloud.points) p.y = -p.y;
  for (auto& l : out.labels) {
    l.box.y = -l.box.y;
    l.box.theta = canonical_heading(-l.box.theta);
  }
  return out;
}

Scene rotate_scene(const Scene& scene, double angle, Vec2 pivot) {
  Scene out = scene;
  if (angle == 0.0) return out;
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  auto rotate = [&](double& x, double& y) {
    const double u = x - pivot.x;
    const double v = y - pivot.y;
    x = pivot.x + c * u - s * v;
    y = pivot.y + s * u + c * v;
  };
  for (Point& p : out.cloud.points) rotate(p.x, p.y);
  for (auto& l : out.labels) {
    rotate(l.box.x, l.box.y);
    l.box.theta = canonical_heading(l.box.theta + angle);
  }
  return out;
}

AppliedTransform draw_transform(const AugmentConfig& cfg, std::uint64_t draw_index) {
  cfg.validate();
  std::seed_seq seq{std::uint32_t(cfg.seed), std::uint32_t(cfg.seed >> 32), std::uint32_t(draw_index),
                    std::uint32_t(draw_index >> 32)};
  std::mt19937_64 gen(seq);
  AppliedTransform t;
  t.seed = cfg.seed;
  t.draw_index = draw_index;
  const double u_flip = unit_draw(gen);
  const double u_angle = unit_draw(gen);
  t.flipped = u_flip < cfg.flip_probability;
  t.angle = (2.0 * u_angle - 1.0) * cfg.rotation_range;
  return t;
}

Scene apply_transform(const Scene& scene, const AppliedTransform& t, Vec2 pivot) {
  if (!t.flipped) return rotate_scene(scene, t.angle, pivot);
  if (pivot.y == 0.0) return rotate_scene(flip_x(scene), t.angle, pivot);
  // Mirror about the forward axis through the pivot.
  Scene shifted = scene;
  for (Point& p : shifted.cloud.points) p.y -= pivot.y;
  for (auto& l : shifted.labels) l.box.y -= pivot.y;
  Scene flipped = flip_x(shifted);
  for (Point& p : flipped.cloud.points) p.y += pivot.y;
  for (auto& l : flipped.labels) l.box.y += pivot.y;
  return rotate_scene(flipped, t.angle, pivot);
}

AugmentResult augment_sample(const Scene& scene, const AugmentConfig& cfg, std::uint64_t draw_index, Vec2 pivot) {
  AppliedTransform t = draw_transform(cfg, draw_index);
  return {apply_transform(scene, t, pivot), t};
}

}  // namespace gridmap
