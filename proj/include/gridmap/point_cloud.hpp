#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

namespace gridmap {

struct Point {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double intensity = 0.0;  ///< reflectance, clamped to [0, 1]

  friend bool operator==(const Point&, const Point&) = default;
};

/// Ordered point set in the sensor frame (x forward, y left, z up).
struct PointCloud {
  std::vector<Point> points;

  std::size_t size() const noexcept { return points.size(); }
  bool empty() const noexcept { return points.empty(); }
  friend bool operator==(const PointCloud&, const PointCloud&) = default;
};

struct ScanReadStats {
  std::size_t records = 0;
  std::size_t rejected = 0;  ///< records holding a NaN or infinity
};

/// Reads a KITTI velodyne scan: consecutive 16-byte records of little-endian
/// float32 (x, y, z, intensity). Throws ErrorCode::Format naming the byte
/// offset of a truncated trailing record.
PointCloud read_point_cloud(const std::filesystem::path& path, ScanReadStats* stats = nullptr);

/// Writes the same layout back; values are narrowed to float32.
void write_point_cloud(const PointCloud& cloud, const std::filesystem::path& path);

}  // namespace gridmap
