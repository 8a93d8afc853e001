#include "gridmap/anchors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gridmap/error.hpp"

namespace gridmap {
namespace {

// IoUs closer than this count as tied; mirrored anchor positions give ties
// that rounding would otherwise break arbitrarily.
constexpr double kTieTolerance = 1e-12;

void check_extents(const AxisBox& a) {
  if (!(a.size_x > 0.0 && a.size_y > 0.0)) fail(ErrorCode::InvalidArgument, "anchor extents must be positive");
}

void check_extents(const RotatedBox& b) {
  if (!(b.length > 0.0 && b.width > 0.0)) fail(ErrorCode::InvalidArgument, "box extents must be positive");
}

}  // namespace

void AnchorConfig::validate() const {
  grid.validate();
  if (sizes.empty() || aspect_ratios.empty()) fail(ErrorCode::Config, "anchor sizes and aspect ratios must be non-empty");
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (!(sizes[i] > 0.0)) fail(ErrorCode::Config, "anchor sizes must be positive");
    if (i > 0 && !(sizes[i] > sizes[i - 1])) fail(ErrorCode::Config, "anchor sizes must be strictly ascending");
  }
  for (double r : aspect_ratios)
    if (!(r > 0.0)) fail(ErrorCode::Config, "aspect ratios must be positive");
  if (stride < 1 || stride > grid.cols() || stride > grid.rows())
    fail(ErrorCode::Config, "anchor stride " + std::to_string(stride) + " does not fit a " +
                                std::to_string(grid.cols()) + " x " + std::to_string(grid.rows()) + " grid");
}

int AnchorConfig::locations_x() const { return (grid.cols() + stride - 1) / stride; }
int AnchorConfig::locations_y() const { return (grid.rows() + stride - 1) / stride; }

AnchorGrid generate_anchors(const AnchorConfig& cfg) {
  cfg.validate();
  AnchorGrid out;
  out.locations_x = cfg.locations_x();
  out.locations_y = cfg.locations_y();
  const double step = cfg.stride * cfg.grid.cell_size;
  out.anchors.reserve(std::size_t(out.locations_x) * std::size_t(out.locations_y) * cfg.sizes.size() *
                      cfg.aspect_ratios.size());
  for (int ly = 0; ly < out.locations_y; ++ly) {
    for (int lx = 0; lx < out.locations_x; ++lx) {
      const std::size_t loc = std::size_t(ly) * std::size_t(out.locations_x) + std::size_t(lx);
      const double cx = cfg.grid.x_min() + (lx + 0.5) * step;
      const double cy = cfg.grid.y_min() + (ly + 0.5) * step;
      for (std::size_t si = 0; si < cfg.sizes.size(); ++si) {
        for (std::size_t ri = 0; ri < cfg.aspect_ratios.size(); ++ri) {
          const double root = std::sqrt(cfg.aspect_ratios[ri]);
          out.anchors.push_back({{cx, cy, cfg.sizes[si] * root, cfg.sizes[si] / root}, loc, si, ri});
        }
      }
    }
  }
  return out;
}

MatchResult match_anchors(const AnchorGrid& grid, const std::vector<RotatedBox>& gts, const GridConfig& extent,
                          const MatchConfig& cfg) {
  const std::size_t n = grid.anchors.size();
  MatchResult m;
  m.labels.assign(n, AnchorLabel::Negative);
  m.gt_index.assign(n, -1);
  m.max_iou.assign(n, 0.0);
  m.gt_in_grid.resize(gts.size());

  std::vector<AxisBox> hulls;
  std::vector<int> live;  // in-grid GT indices
  for (std::size_t g = 0; g < gts.size(); ++g) {
    check_extents(gts[g]);
    m.gt_in_grid[g] = point_to_cell(extent, gts[g].x, gts[g].y).has_value();
    hulls.push_back(axis_aligned_hull(gts[g]));
    if (m.gt_in_grid[g]) live.push_back(int(g));
  }

  // IoU table, anchor-major.
  std::vector<double> iou(n * live.size(), 0.0);
  std::vector<int> best_gt(n, -1);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t k = 0; k < live.size(); ++k) {
      const double v = axis_iou(grid.anchors[a].box, hulls[std::size_t(live[k])]);
      iou[a * live.size() + k] = v;
      if (best_gt[a] < 0 || v > m.max_iou[a]) {
        m.max_iou[a] = v;
        best_gt[a] = live[k];
      }
    }
    if (live.empty()) continue;
    if (m.max_iou[a] >= cfg.positive_iou) {
      m.labels[a] = AnchorLabel::Positive;
      m.gt_index[a] = best_gt[a];
    } else if (m.max_iou[a] < cfg.negative_iou) {
      m.labels[a] = AnchorLabel::Negative;
    } else {
      m.labels[a] = AnchorLabel::Ignore;
    }
  }

  std::vector<bool> claimed(n, false);
  for (std::size_t k = 0; k < live.size(); ++k) {
    std::size_t best = n;
    double best_iou = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
      if (claimed[a]) continue;
      const double v = iou[a * live.size() + k];
      if (v > best_iou + kTieTolerance) {
        best_iou = v;
        best = a;
      }
    }
    if (best == n) continue;
    claimed[best] = true;
    m.labels[best] = AnchorLabel::Positive;
    m.gt_index[best] = live[k];
  }

  for (std::size_t a = 0; a < n; ++a) {
    if (m.labels[a] != AnchorLabel::Positive) continue;
    const RotatedBox& gt = gts[std::size_t(m.gt_index[a])];
    m.positives.push_back(a);
    m.v.push_back(compute_target_v(grid.anchors[a].box, gt));
    m.u.push_back(compute_target_u(grid.anchors[a].box, gt, cfg.encoding));
  }
  return m;
}

std::array<double, 4> compute_target_v(const AxisBox& anchor, const RotatedBox& gt) {
  check_extents(anchor);
  check_extents(gt);
  const AxisBox h = axis_aligned_hull(gt);
  return {(h.x - anchor.x) / anchor.size_x, (h.y - anchor.y) / anchor.size_y, std::log(h.size_x / anchor.size_x),
          std::log(h.size_y / anchor.size_y)};
}

AxisBox apply_target_v(const AxisBox& anchor, const std::array<double, 4>& v) {
  check_extents(anchor);
  return {anchor.x + v[0] * anchor.size_x, anchor.y + v[1] * anchor.size_y, anchor.size_x * std::exp(v[2]),
          anchor.size_y * std::exp(v[3])};
}

std::vector<double> compute_target_u(const AxisBox& anchor, const RotatedBox& gt, BoxEncoding enc) {
  check_extents(anchor);
  check_extents(gt);
  const double scale = std::sqrt(anchor.size_x * anchor.size_y);
  auto px = [&](double x) { return (x - anchor.x) / anchor.size_x; };
  auto py = [&](double y) { return (y - anchor.y) / anchor.size_y; };
  const auto p = encode(gt, enc).params;
  switch (enc) {
    case BoxEncoding::B1:
      return {px(p[0]), py(p[1]), std::log(p[2] / scale), std::log(p[3] / scale), p[4], p[5]};
    case BoxEncoding::B2:
      return {px(p[0]), py(p[1]), std::log(p[2] / scale), std::log(p[3] / scale), p[4]};
    case BoxEncoding::B3:
      return {px(p[0]), py(p[1]), px(p[2]), py(p[3]), std::log(p[4] / scale)};
  }
  fail(ErrorCode::InvalidArgument, "unknown box encoding");
}

RotatedBox apply_target_u(const AxisBox& anchor, const std::vector<double>& u, BoxEncoding enc) {
  check_extents(anchor);
  if (u.size() != encoding_size(enc))
    fail(ErrorCode::InvalidArgument, "u has " + std::to_string(u.size()) + " components, " +
                                         std::string(to_string(enc)) + " needs " + std::to_string(encoding_size(enc)));
  const double scale = std::sqrt(anchor.size_x * anchor.size_y);
  auto x = [&](double t) { return anchor.x + t * anchor.size_x; };
  auto y = [&](double t) { return anchor.y + t * anchor.size_y; };
  switch (enc) {
    case BoxEncoding::B1:
      return decode({enc, {x(u[0]), y(u[1]), scale * std::exp(u[2]), scale * std::exp(u[3]), u[4], u[5]}});
    case BoxEncoding::B2:
      return decode({enc, {x(u[0]), y(u[1]), scale * std::exp(u[2]), scale * std::exp(u[3]), u[4]}});
    case BoxEncoding::B3:
      return decode({enc, {x(u[0]), y(u[1]), x(u[2]), y(u[3]), scale * std::exp(u[4])}});
  }
  fail(ErrorCode::InvalidArgument, "unknown box encoding");
}

}  // namespace gridmap
