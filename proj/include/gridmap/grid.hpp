#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "gridmap/point_cloud.hpp"

namespace gridmap {

/// Fixed-extent top-view raster. The sensor sits at the midpoint of the rear
/// edge: x ∈ [sx, sx + extent_x] forward, y ∈ [sy - extent_y/2, sy + extent_y/2].
struct GridConfig {
  double extent_x = 60.0;
  double extent_y = 60.0;
  double cell_size = 0.15;
  std::array<double, 3> sensor_origin{0.0, 0.0, 0.0};

  double x_min() const { return sensor_origin[0]; }
  double y_min() const { return sensor_origin[1] - 0.5 * extent_y; }
  double x_max() const { return x_min() + extent_x; }
  double y_max() const { return y_min() + extent_y; }
  int cols() const;  ///< cells along x
  int rows() const;  ///< cells along y
  std::size_t cell_count() const { return std::size_t(rows()) * std::size_t(cols()); }

  /// Throws ErrorCode::Config unless cell_size > 0 and both extents are whole
  /// multiples of it.
  void validate() const;
};

struct CellIndex {
  int row = 0;  ///< along y
  int col = 0;  ///< along x
  friend bool operator==(const CellIndex&, const CellIndex&) = default;
  friend auto operator<=>(const CellIndex&, const CellIndex&) = default;
};

inline std::size_t linear_index(const GridConfig& cfg, CellIndex c) {
  return std::size_t(c.row) * std::size_t(cfg.cols()) + std::size_t(c.col);
}

/// Floor division of grid-frame coordinates; points on the far (max) edge fall
/// into the last cell. Returns nullopt outside the closed extent.
std::optional<CellIndex> point_to_cell(const GridConfig& cfg, double x, double y);

/// Cells a segment passes through and the length of the segment inside each.
struct RayTraversal {
  std::vector<CellIndex> cells;
  std::vector<double> lengths;  ///< meters, 3D segment length inside each cell column

  double total_length() const;
};

/// Slab-method traversal: the segment is clipped against the grid box, then
/// walked cell by cell where each step is the slab exit of the current cell.
/// Cells touched only at a single point are skipped. Lengths are 3D, measured
/// along the segment inside each cell's vertical column. Throws
/// ErrorCode::InvalidArgument when origin == end.
RayTraversal traverse_ray_slab(const GridConfig& cfg, const std::array<double, 3>& origin,
                               const std::array<double, 3>& end);

/// Distances and intensities are accumulated in fixed point so the result is
/// independent of ray order and thread count. One unit is 1e-12 m, fine enough
/// for cells that a ray only grazes; int64 still holds ~9e6 m per cell.
inline constexpr double kFixedPointScale = 1e12;

struct CellAccumulator {
  std::uint32_t detections = 0;
  std::uint32_t observations = 0;
  std::int64_t traversal_fixed = 0;
  std::int64_t intensity_fixed = 0;
  double z_min = 0.0;
  double z_max = 0.0;

  double traversal_sum() const { return double(traversal_fixed) / kFixedPointScale; }
  double intensity_sum() const { return double(intensity_fixed) / kFixedPointScale; }
  friend bool operator==(const CellAccumulator&, const CellAccumulator&) = default;
};

struct AccumulatorRaster {
  GridConfig config;
  std::vector<CellAccumulator> cells;  ///< row-major

  const CellAccumulator& at(CellIndex c) const { return cells[linear_index(config, c)]; }
};

/// Casts one ray per point from the sensor origin. The endpoint cell gains a
/// detection (intensity and z extrema); every cell along the in-grid part of
/// the ray gains an observation and its crossing length. The endpoint cell is
/// always counted as observed. `threads` > 1 splits the rays across workers;
/// the output is bit-identical for any thread count.
AccumulatorRaster accumulate_cloud(const GridConfig& cfg, const PointCloud& cloud, int threads = 1);

/// Detections per meter traversed; 0 when the cell was never traversed.
double compute_decay_rate(const CellAccumulator& acc);

}  // namespace gridmap
