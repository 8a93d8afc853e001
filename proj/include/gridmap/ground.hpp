#pragma once

#include <array>
#include <vector>

#include "gridmap/point_cloud.hpp"

namespace gridmap {

/// Plane {p : normal·p + offset = 0} with a unit normal pointing up (z > 0).
struct PlaneParams {
  std::array<double, 3> normal{0.0, 0.0, 1.0};
  double offset = 0.0;
};

struct RobustFitConfig {
  double cauchy_scale = 0.05;      ///< meters
  int max_iterations = 20;
  double convergence_tol = 1e-8;   ///< relative cost decrease
  double removal_threshold = 0.2;  ///< meters
  double init_fraction = 0.3;      ///< share of lowest points seeding the fit

  void validate() const;
};

struct FitReport {
  /// Robust cost of the initial plane followed by the cost after each iteration.
  std::vector<double> cost_trace;
  int iterations = 0;
  bool converged = false;
};

/// Cauchy cost s²·ln(1 + r²/s²) summed over all points.
double robust_cost(const PointCloud& cloud, const PlaneParams& plane, double cauchy_scale);

/// Minimizes the Cauchy-robustified point-to-plane error by iteratively
/// reweighted least squares, seeded with a plain least-squares plane through the
/// lowest points. Each reweighted subproblem is solved exactly (weighted
/// centroid plus smallest eigenvector of the weighted scatter), so the robust
/// cost never increases. Throws ErrorCode::Degenerate for fewer than three
/// points or a collinear set.
PlaneParams fit_ground_plane(const PointCloud& cloud, const RobustFitConfig& cfg = {}, FitReport* report = nullptr);

double signed_distance(const PlaneParams& plane, const Point& p);

struct GroundSplit {
  PointCloud ground;
  PointCloud non_ground;
};

/// Ground holds every point with signed distance below the removal threshold,
/// including points far beneath the plane.
GroundSplit split_ground(const PointCloud& cloud, const PlaneParams& plane, const RobustFitConfig& cfg = {});

}  // namespace gridmap
