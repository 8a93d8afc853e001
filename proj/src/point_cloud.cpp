#include "gridmap/point_cloud.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "gridmap/error.hpp"

namespace gridmap {
namespace {

constexpr std::size_t kRecordBytes = 16;

float load_f32_le(const unsigned char* p) {
  std::uint32_t bits = std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) |
                       (std::uint32_t(p[2]) << 16) | (std::uint32_t(p[3]) << 24);
  return std::bit_cast<float>(bits);
}

void store_f32_le(float v, unsigned char* p) {
  auto bits = std::bit_cast<std::uint32_t>(v);
  for (int i = 0; i < 4; ++i) p[i] = static_cast<unsigned char>(bits >> (8 * i));
}

}  // namespace

PointCloud read_point_cloud(const std::filesystem::path& path, ScanReadStats* stats) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open scan '" + path.string() + "'");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() % kRecordBytes != 0) {
    std::size_t offset = bytes.size() - bytes.size() % kRecordBytes;
    fail(ErrorCode::Format, "truncated point record at byte offset " + std::to_string(offset) + " in '" +
                                path.string() + "' (file size " + std::to_string(bytes.size()) + ")");
  }

  PointCloud cloud;
  const std::size_t n = bytes.size() / kRecordBytes;
  cloud.points.reserve(n);
  std::size_t rejected = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const unsigned char* rec = bytes.data() + i * kRecordBytes;
    std::array<float, 4> v{load_f32_le(rec), load_f32_le(rec + 4), load_f32_le(rec + 8), load_f32_le(rec + 12)};
    if (!std::all_of(v.begin(), v.end(), [](float f) { return std::isfinite(f); })) {
      ++rejected;
      continue;
    }
    cloud.points.push_back({v[0], v[1], v[2], std::clamp(double(v[3]), 0.0, 1.0)});
  }
  if (stats) *stats = {n, rejected};
  return cloud;
}

void write_point_cloud(const PointCloud& cloud, const std::filesystem::path& path) {
  std::vector<unsigned char> bytes(cloud.size() * kRecordBytes);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Point& p = cloud.points[i];
    unsigned char* rec = bytes.data() + i * kRecordBytes;
    store_f32_le(float(p.x), rec);
    store_f32_le(float(p.y), rec + 4);
    store_f32_le(float(p.z), rec + 8);
    store_f32_le(float(p.intensity), rec + 12);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot write scan '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
  if (!out) fail(ErrorCode::Io, "short write to '" + path.string() + "'");
}

}  // namespace gridmap
