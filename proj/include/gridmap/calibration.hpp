#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <string_view>

#include "gridmap/point_cloud.hpp"

namespace gridmap {

struct ImageSize {
  int width = 1242;
  int height = 375;
};

/// Camera/lidar calibration for one KITTI frame (keys P2, R0_rect, Tr_velo_to_cam).
struct CalibrationSet {
  Eigen::Matrix<double, 3, 4> cam_projection = Eigen::Matrix<double, 3, 4>::Zero();
  Eigen::Matrix3d rect_rotation = Eigen::Matrix3d::Identity();
  Eigen::Matrix<double, 3, 4> lidar_to_cam = Eigen::Matrix<double, 3, 4>::Zero();
  ImageSize image_size;

  /// Sensor frame -> rectified camera frame.
  Eigen::Vector3d to_rectified(const Eigen::Vector3d& p_lidar) const;
  /// Rectified camera frame -> sensor frame.
  Eigen::Vector3d to_lidar(const Eigen::Vector3d& p_rect) const;

  /// Throws ErrorCode::Format on non-finite entries or a rectification matrix
  /// that is not orthonormal.
  void validate() const;
};

CalibrationSet parse_calibration(std::string_view text, ImageSize image_size = {});
CalibrationSet read_calibration(const std::filesystem::path& path, ImageSize image_size = {});

/// Keeps points with positive rectified depth whose projection lands inside
/// [0, width) x [0, height).
PointCloud filter_camera_fov(const PointCloud& cloud, const CalibrationSet& calib);

}  // namespace gridmap
