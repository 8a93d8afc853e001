#include "gridmap/calibration.hpp"

#include <Eigen/Geometry>
#include <Eigen/LU>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "gridmap/error.hpp"

namespace gridmap {
namespace {

constexpr double kOrthonormalTol = 1e-5;

std::vector<double> parse_values(const std::string& key, const std::string& rest, std::size_t expected) {
  std::istringstream in(rest);
  std::vector<double> values;
  std::string tok;
  while (in >> tok) {
    try {
      values.push_back(std::stod(tok));
    } catch (const std::exception&) {
      fail(ErrorCode::Format, "calibration key '" + key + "': bad number '" + tok + "'");
    }
  }
  if (values.size() != expected)
    fail(ErrorCode::Format, "calibration key '" + key + "' expects " + std::to_string(expected) + " values, got " +
                                std::to_string(values.size()));
  return values;
}

Eigen::Matrix<double, 3, 4> to_3x4(const std::vector<double>& v) {
  Eigen::Matrix<double, 3, 4> m;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 4; ++c) m(r, c) = v[std::size_t(r * 4 + c)];
  return m;
}

}  // namespace

Eigen::Vector3d CalibrationSet::to_rectified(const Eigen::Vector3d& p_lidar) const {
  return rect_rotation * (lidar_to_cam.leftCols<3>() * p_lidar + lidar_to_cam.col(3));
}

Eigen::Vector3d CalibrationSet::to_lidar(const Eigen::Vector3d& p_rect) const {
  // Exact inverses: the published matrices are only orthonormal to ~1e-7.
  const Eigen::Vector3d p_cam = rect_rotation.partialPivLu().solve(p_rect);
  return lidar_to_cam.leftCols<3>().partialPivLu().solve(p_cam - lidar_to_cam.col(3));
}

void CalibrationSet::validate() const {
  if (!cam_projection.allFinite() || !rect_rotation.allFinite() || !lidar_to_cam.allFinite())
    fail(ErrorCode::Format, "calibration contains non-finite values");
  double err = (rect_rotation * rect_rotation.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  if (err > kOrthonormalTol)
    fail(ErrorCode::Format, "R0_rect is not orthonormal (max deviation " + std::to_string(err) + ")");
  if (std::abs(lidar_to_cam.leftCols<3>().determinant()) < 1e-9)
    fail(ErrorCode::Format, "Tr_velo_to_cam rotation is singular");
  if (image_size.width <= 0 || image_size.height <= 0) fail(ErrorCode::Format, "image size must be positive");
}

CalibrationSet parse_calibration(std::string_view text, ImageSize image_size) {
  std::map<std::string, std::string> entries;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    auto colon = line.find(':');
    if (colon == std::string::npos) continue;
    entries[line.substr(0, colon)] = line.substr(colon + 1);
  }
  auto require = [&](const std::string& key) -> const std::string& {
    auto it = entries.find(key);
    if (it == entries.end()) fail(ErrorCode::Format, "calibration is missing key '" + key + "'");
    return it->second;
  };

  CalibrationSet calib;
  calib.image_size = image_size;
  calib.cam_projection = to_3x4(parse_values("P2", require("P2"), 12));
  auto r0 = parse_values("R0_rect", require("R0_rect"), 9);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) calib.rect_rotation(r, c) = r0[std::size_t(r * 3 + c)];
  calib.lidar_to_cam = to_3x4(parse_values("Tr_velo_to_cam", require("Tr_velo_to_cam"), 12));
  calib.validate();
  return calib;
}

CalibrationSet read_calibration(const std::filesystem::path& path, ImageSize image_size) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open calibration '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_calibration(buf.str(), image_size);
  } catch (const Error& e) {
    fail(e.code(), path.string() + ": " + e.what());
  }
}

PointCloud filter_camera_fov(const PointCloud& cloud, const CalibrationSet& calib) {
  const double width = calib.image_size.width;
  const double height = calib.image_size.height;
  const Eigen::Matrix3d rot = calib.rect_rotation * calib.lidar_to_cam.leftCols<3>();
  const Eigen::Vector3d trans = calib.rect_rotation * calib.lidar_to_cam.col(3);

  PointCloud out;
  out.points.reserve(cloud.size());
  for (const Point& p : cloud.points) {
    Eigen::Vector3d rect = rot * Eigen::Vector3d(p.x, p.y, p.z) + trans;
    if (!(rect.z() > 0.0)) continue;
    Eigen::Vector3d pix = calib.cam_projection.leftCols<3>() * rect + calib.cam_projection.col(3);
    if (!(pix.z() > 0.0)) continue;
    double u = pix.x() / pix.z();
    double v = pix.y() / pix.z();
    if (u >= 0.0 && u < width && v >= 0.0 && v < height) out.points.push_back(p);
  }
  return out;
}

}  // namespace gridmap
