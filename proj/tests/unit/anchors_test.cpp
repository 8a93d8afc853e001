#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gridmap/anchors.hpp"
#include "gridmap/error.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"

using namespace gridmap;

namespace {

AnchorConfig anchor_config(double cell) {
  AnchorConfig cfg;
  cfg.grid.cell_size = cell;
  return cfg;
}

std::vector<AxisBox> boxes_of(const AnchorGrid& g) {
  std::vector<AxisBox> out;
  for (const auto& a : g.anchors) out.push_back(a.box);
  return out;
}

std::vector<RotatedBox> random_scene(std::mt19937_64& rng, int count) {
  std::vector<RotatedBox> gts;
  for (int i = 0; i < count; ++i) {
    RotatedBox b = gridmap::testing::random_box(rng, 32.0, 0.5, 8.0);
    b.x += 30.0;  // the grid spans x in [0, 60]
    gts.push_back(b);
  }
  return gts;
}

bool same_box(const RotatedBox& a, const RotatedBox& b, double tol) {
  const double dtheta = std::abs(canonical_heading(a.theta - b.theta));
  return std::abs(a.x - b.x) < tol && std::abs(a.y - b.y) < tol && std::abs(a.length - b.length) < tol &&
         std::abs(a.width - b.width) < tol && dtheta < tol;
}

}  // namespace

TEST(Anchors, CountsForBothCellSizes) {
  const auto coarse = generate_anchors(anchor_config(0.15));
  EXPECT_EQ(coarse.locations_x, 25);
  EXPECT_EQ(coarse.anchors.size(), 7500u);
  const auto fine = generate_anchors(anchor_config(0.10));
  EXPECT_EQ(fine.locations_x, 38);
  EXPECT_EQ(fine.anchors.size(), 17328u);
}

TEST(Anchors, GeometryAndOrder) {
  const auto g = generate_anchors(anchor_config(0.15));
  const Anchor& first = g.anchors.front();
  EXPECT_NEAR(first.box.x, 1.2, 1e-12);
  EXPECT_NEAR(first.box.y, -30.0 + 1.2, 1e-12);
  for (std::size_t i = 0; i < 12; ++i) {
    const auto& a = g.anchors[i];
    EXPECT_EQ(a.location, 0u);
    EXPECT_EQ(a.size_index, i / 3);
    EXPECT_EQ(a.ratio_index, i % 3);
    const double s = AnchorConfig{}.sizes[a.size_index];
    EXPECT_NEAR(a.box.size_x * a.box.size_y, s * s, 1e-9);
    EXPECT_NEAR(a.box.size_x / a.box.size_y, AnchorConfig{}.aspect_ratios[a.ratio_index], 1e-12);
  }
  EXPECT_EQ(g.anchors.back().location, 624u);
}

TEST(Anchors, ConfigValidation) {
  AnchorConfig cfg = anchor_config(0.15);
  cfg.sizes = {2.0, 1.0};
  EXPECT_THROW(cfg.validate(), Error);
  cfg = anchor_config(0.15);
  cfg.aspect_ratios = {0.0};
  EXPECT_THROW(cfg.validate(), Error);
  cfg = anchor_config(0.15);
  cfg.stride = 401;
  EXPECT_THROW(cfg.validate(), Error);
}

TEST(AnchorMatching, AgreesWithBruteForce) {
  const auto grid = generate_anchors(anchor_config(0.15));
  const auto boxes = boxes_of(grid);
  const GridConfig extent = anchor_config(0.15).grid;
  std::mt19937_64 rng(17);
  for (int scene = 0; scene < 20; ++scene) {
    auto gts = random_scene(rng, 1 + int(rng() % 15));
    const auto m = match_anchors(grid, gts, extent);
    const auto oracle = gridmap::testing::brute_force_match(boxes, gts, extent, 0.7, 0.3);
    ASSERT_EQ(m.labels, oracle.labels) << "scene " << scene;
    ASSERT_EQ(m.gt_index, oracle.gt_index) << "scene " << scene;
  }
}

TEST(AnchorMatching, EveryInGridGroundTruthGetsAnAnchor) {
  const auto grid = generate_anchors(anchor_config(0.10));
  const GridConfig extent = anchor_config(0.10).grid;
  std::vector<RotatedBox> gts = {{3.0, 4.0, 0.6, 0.6, 0.3},      // far smaller than any anchor
                                 {12.0, 7.0, 4.2, 1.8, 1.0},
                                 {-5.0, 0.0, 4.0, 1.8, 0.0}};    // behind the sensor, outside the grid
  const auto m = match_anchors(grid, gts, extent);
  EXPECT_EQ(m.gt_in_grid, (std::vector<bool>{true, true, false}));
  std::vector<int> hits(gts.size(), 0);
  for (std::size_t a : m.positives) ++hits[std::size_t(m.gt_index[a])];
  EXPECT_GE(hits[0], 1);
  EXPECT_GE(hits[1], 1);
  EXPECT_EQ(hits[2], 0);
}

TEST(AnchorMatching, LabelsRespectThresholds) {
  const auto grid = generate_anchors(anchor_config(0.15));
  const GridConfig extent = anchor_config(0.15).grid;
  std::mt19937_64 rng(5);
  const auto gts = random_scene(rng, 10);
  const auto m = match_anchors(grid, gts, extent);
  ASSERT_EQ(m.positives.size(), m.v.size());
  ASSERT_EQ(m.positives.size(), m.u.size());
  for (std::size_t a = 0; a < grid.anchors.size(); ++a) {
    if (m.labels[a] == AnchorLabel::Negative) {
      EXPECT_LT(m.max_iou[a], 0.3);
      EXPECT_EQ(m.gt_index[a], -1);
    }
    if (m.labels[a] == AnchorLabel::Ignore) {
      EXPECT_GE(m.max_iou[a], 0.3);
      EXPECT_LT(m.max_iou[a], 0.7);
    }
  }
}

TEST(AnchorTargets, VRoundTripsToHull) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> size(0.5, 20.0);
  for (int i = 0; i < 2000; ++i) {
    const RotatedBox gt = gridmap::testing::random_box(rng);
    const AxisBox anchor{gt.x + size(rng) - 10.0, gt.y + size(rng) - 10.0, size(rng), size(rng)};
    const AxisBox hull = axis_aligned_hull(gt);
    const AxisBox back = apply_target_v(anchor, compute_target_v(anchor, gt));
    EXPECT_NEAR(back.x, hull.x, 1e-9);
    EXPECT_NEAR(back.y, hull.y, 1e-9);
    EXPECT_NEAR(back.size_x, hull.size_x, 1e-9);
    EXPECT_NEAR(back.size_y, hull.size_y, 1e-9);
  }
}

TEST(AnchorTargets, VIsZeroForTheAnchorItself) {
  const AxisBox anchor{1.0, -2.0, 4.0, 2.0};
  const auto v = compute_target_v(anchor, RotatedBox{1.0, -2.0, 4.0, 2.0, 0.0});
  for (double c : v) EXPECT_NEAR(c, 0.0, 1e-15);
}

TEST(AnchorTargets, URoundTripsForEveryEncoding) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> size(0.5, 20.0);
  for (BoxEncoding enc : {BoxEncoding::B1, BoxEncoding::B2, BoxEncoding::B3}) {
    for (int i = 0; i < 2000; ++i) {
      const RotatedBox gt = gridmap::testing::random_box(rng);
      const AxisBox anchor{gt.x + size(rng) - 10.0, gt.y + size(rng) - 10.0, size(rng), size(rng)};
      const auto u = compute_target_u(anchor, gt, enc);
      ASSERT_EQ(u.size(), encoding_size(enc));
      EXPECT_TRUE(same_box(apply_target_u(anchor, u, enc), gt, 1e-9)) << to_string(enc) << " #" << i;
    }
  }
  EXPECT_THROW(apply_target_u(AxisBox{}, {0.0, 0.0}, BoxEncoding::B2), Error);
  EXPECT_THROW(compute_target_v(AxisBox{0, 0, 0, 1}, RotatedBox{}), Error);
}
