#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "gridmap/anchors.hpp"
#include "gridmap/augment.hpp"
#include "gridmap/calibration.hpp"
#include "gridmap/evaluation.hpp"
#include "gridmap/grid_map.hpp"
#include "gridmap/ground.hpp"

namespace gridmap {

struct GroundSettings {
  bool enabled = false;
  RobustFitConfig fit;
};

struct CameraFovSettings {
  bool enabled = true;
  ImageSize image_size;
};

struct PipelineConfig {
  GridConfig grid;
  FeatureConfig feature_config = FeatureConfig::F1;
  GroundSettings ground;
  CameraFovSettings camera_fov;
  AugmentConfig augment;
  AnchorConfig anchor;  ///< anchor.grid mirrors grid
  MatchConfig match;    ///< match.encoding mirrors box_encoding
  BoxEncoding box_encoding = BoxEncoding::B1;
  EvalOptions eval;
  int threads = 1;

  /// Throws ErrorCode::Config on any inconsistent setting, including F1*
  /// without ground removal.
  void validate() const;
};

/// Keys missing from the document keep their defaults; unknown keys and
/// wrongly typed values are ErrorCode::Config.
PipelineConfig parse_pipeline_config(std::string_view json_text);
PipelineConfig load_pipeline_config(const std::filesystem::path& path);
std::string pipeline_config_json(const PipelineConfig& cfg);

/// Sets one dotted key, e.g. "grid.cell_size" = "0.10". The value is read as
/// JSON when it parses, otherwise as a string. Only the key and value type are
/// checked here; call validate() once all overrides are in.
void apply_override(PipelineConfig& cfg, std::string_view dotted_key, std::string_view value);

/// FOV filter (when a calibration is given and the filter is enabled), ground
/// removal (when enabled), ray accumulation and feature assembly.
MultiLayerGridMap build_grid_map(const PointCloud& cloud, const PipelineConfig& cfg,
                                 const CalibrationSet* calib = nullptr);

}  // namespace gridmap
