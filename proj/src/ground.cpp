#include "gridmap/ground.hpp"

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "gridmap/error.hpp"

namespace gridmap {
namespace {

// Weighted total least squares: exact minimizer of Σ wᵢ (n·pᵢ + d)² with |n| = 1.
template <typename WeightFn>
PlaneParams weighted_plane(const std::vector<Point>& pts, WeightFn&& weight) {
  double wsum = 0.0;
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double w = weight(i);
    wsum += w;
    centroid += w * Eigen::Vector3d(pts[i].x, pts[i].y, pts[i].z);
  }
  if (!(wsum > 0.0)) fail(ErrorCode::Degenerate, "ground fit: all weights vanished");
  centroid /= wsum;

  Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    Eigen::Vector3d d(pts[i].x - centroid.x(), pts[i].y - centroid.y(), pts[i].z - centroid.z());
    scatter += weight(i) * d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(scatter);
  const Eigen::Vector3d ev = eig.eigenvalues();  // ascending
  // Collinear (or coincident) points leave two vanishing eigenvalues.
  if (!(ev(1) > 1e-12 * std::max(ev(2), 1e-300)))
    fail(ErrorCode::Degenerate, "ground fit: points are collinear, plane normal is undetermined");

  Eigen::Vector3d n = eig.eigenvectors().col(0).normalized();
  if (n.z() < 0.0) n = -n;
  return {{n.x(), n.y(), n.z()}, -n.dot(centroid)};
}

double residual(const PlaneParams& pl, const Point& p) {
  return pl.normal[0] * p.x + pl.normal[1] * p.y + pl.normal[2] * p.z + pl.offset;
}

}  // namespace

void RobustFitConfig::validate() const {
  if (!(cauchy_scale > 0.0)) fail(ErrorCode::Config, "cauchy_scale must be positive");
  if (!(removal_threshold > 0.0)) fail(ErrorCode::Config, "removal_threshold must be positive");
  if (max_iterations < 0) fail(ErrorCode::Config, "max_iterations must be non-negative");
  if (!(convergence_tol >= 0.0)) fail(ErrorCode::Config, "convergence_tol must be non-negative");
  if (!(init_fraction > 0.0 && init_fraction <= 1.0)) fail(ErrorCode::Config, "init_fraction must be in (0, 1]");
}

double robust_cost(const PointCloud& cloud, const PlaneParams& plane, double cauchy_scale) {
  const double s2 = cauchy_scale * cauchy_scale;
  double cost = 0.0;
  for (const Point& p : cloud.points) {
    const double r = residual(plane, p);
    cost += s2 * std::log1p(r * r / s2);
  }
  return cost;
}

PlaneParams fit_ground_plane(const PointCloud& cloud, const RobustFitConfig& cfg, FitReport* report) {
  cfg.validate();
  const auto& pts = cloud.points;
  if (pts.size() < 3)
    fail(ErrorCode::Degenerate, "ground fit needs at least 3 points, got " + std::to_string(pts.size()));

  // Seed: unweighted plane through the lowest share of points (ties broken by index).
  std::vector<std::size_t> order(pts.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t seed_count =
      std::max<std::size_t>(3, std::size_t(std::ceil(cfg.init_fraction * double(pts.size()))));
  std::nth_element(order.begin(), order.begin() + std::ptrdiff_t(seed_count - 1), order.end(),
                   [&](std::size_t a, std::size_t b) { return pts[a].z != pts[b].z ? pts[a].z < pts[b].z : a < b; });
  std::vector<Point> seed;
  seed.reserve(seed_count);
  for (std::size_t i = 0; i < seed_count; ++i) seed.push_back(pts[order[i]]);
  std::sort(seed.begin(), seed.end(), [](const Point& a, const Point& b) { return a.z < b.z; });

  PlaneParams plane;
  try {
    plane = weighted_plane(seed, [](std::size_t) { return 1.0; });
  } catch (const Error&) {
    // The lowest points alone may be collinear (e.g. a single scan ring); fall back to all points.
    plane = weighted_plane(pts, [](std::size_t) { return 1.0; });
  }

  const double s2 = cfg.cauchy_scale * cfg.cauchy_scale;
  FitReport local;
  double cost = robust_cost(cloud, plane, cfg.cauchy_scale);
  local.cost_trace.push_back(cost);
  std::vector<double> weights(pts.size());
  for (int it = 0; it < cfg.max_iterations; ++it) {
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double r = residual(plane, pts[i]);
      weights[i] = 1.0 / (1.0 + r * r / s2);
    }
    plane = weighted_plane(pts, [&](std::size_t i) { return weights[i]; });
    const double next_cost = robust_cost(cloud, plane, cfg.cauchy_scale);
    ++local.iterations;
    local.cost_trace.push_back(next_cost);
    const double decrease = cost - next_cost;
    cost = next_cost;
    if (decrease <= cfg.convergence_tol * std::max(cost, 1e-300)) {
      local.converged = true;
      break;
    }
  }
  if (report) *report = std::move(local);
  return plane;
}

double signed_distance(const PlaneParams& plane, const Point& p) { return residual(plane, p); }

GroundSplit split_ground(const PointCloud& cloud, const PlaneParams& plane, const RobustFitConfig& cfg) {
  cfg.validate();
  GroundSplit split;
  for (const Point& p : cloud.points) {
    if (signed_distance(plane, p) < cfg.removal_threshold)
      split.ground.points.push_back(p);
    else
      split.non_ground.points.push_back(p);
  }
  return split;
}

}  // namespace gridmap
