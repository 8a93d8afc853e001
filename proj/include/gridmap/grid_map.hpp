#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gridmap/augment.hpp"
#include "gridmap/grid.hpp"
#include "gridmap/ground.hpp"

namespace gridmap {

/// Layer configurations: F1 = intensity, min/max z, detections, observations;
/// F2 = intensity, min/max z, decay rate; F3 = intensity, detections,
/// observations; F1* = F1 computed from non-ground points.
enum class FeatureConfig { F1, F2, F3, F1Star };

std::string_view to_string(FeatureConfig fc);
FeatureConfig parse_feature_config(std::string_view name);
std::vector<std::string> layer_names(FeatureConfig fc);

struct MultiLayerGridMap {
  GridConfig config;
  FeatureConfig feature_config = FeatureConfig::F1;
  int rows = 0;
  int cols = 0;
  std::vector<std::string> layer_names;
  std::vector<std::vector<float>> layers;  ///< row-major, one per name
  std::optional<AppliedTransform> applied_transform;

  /// Throws ErrorCode::InvalidArgument for an unknown name.
  const std::vector<float>& layer(std::string_view name) const;
  friend bool operator==(const MultiLayerGridMap& a, const MultiLayerGridMap& b);
};

/// Builds the layer set for `fc`. Empty cells hold 0 in every layer. F1*
/// requires the plane used to strip ground points upstream.
MultiLayerGridMap assemble_features(const AccumulatorRaster& acc, FeatureConfig fc,
                                    const std::optional<PlaneParams>& ground_plane = std::nullopt);

/// Container: one line of JSON header, then the layers as little-endian
/// float32 planes in header order.
void write_grid_map(const MultiLayerGridMap& map, const std::filesystem::path& path);
MultiLayerGridMap read_grid_map(const std::filesystem::path& path);
std::string grid_header_json(const MultiLayerGridMap& map);

/// 16-bit grayscale PNG, min-max normalized per layer. The range is stored in
/// tEXt chunks so the values can be recovered.
void render_layer(const MultiLayerGridMap& map, std::string_view layer, const std::filesystem::path& path);

struct LayerImage {
  int rows = 0;
  int cols = 0;
  std::vector<std::uint16_t> pixels;
  double min_value = 0.0;
  double max_value = 0.0;

  std::vector<float> denormalized() const;
};

LayerImage load_layer_png(const std::filesystem::path& path);

}  // namespace gridmap
