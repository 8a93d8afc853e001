#include "gridmap/pipeline.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <numbers>
#include <sstream>

#include "gridmap/error.hpp"

namespace gridmap {
namespace {

using nlohmann::json;

json to_json(const PipelineConfig& c) {
  json j;
  j["grid"] = {{"extent_x", c.grid.extent_x},
               {"extent_y", c.grid.extent_y},
               {"cell_size", c.grid.cell_size},
               {"sensor_origin", c.grid.sensor_origin}};
  j["feature_config"] = to_string(c.feature_config);
  j["ground"] = {{"enabled", c.ground.enabled},
                 {"cauchy_scale", c.ground.fit.cauchy_scale},
                 {"max_iterations", c.ground.fit.max_iterations},
                 {"convergence_tol", c.ground.fit.convergence_tol},
                 {"removal_threshold", c.ground.fit.removal_threshold},
                 {"init_fraction", c.ground.fit.init_fraction}};
  j["camera_fov"] = {{"enabled", c.camera_fov.enabled},
                     {"image_width", c.camera_fov.image_size.width},
                     {"image_height", c.camera_fov.image_size.height}};
  j["augment"] = {{"flip_probability", c.augment.flip_probability},
                  {"rotation_range_deg", c.augment.rotation_range * 180.0 / std::numbers::pi},
                  {"seed", c.augment.seed}};
  j["anchor"] = {{"sizes", c.anchor.sizes},
                 {"aspect_ratios", c.anchor.aspect_ratios},
                 {"stride", c.anchor.stride},
                 {"positive_iou", c.match.positive_iou},
                 {"negative_iou", c.match.negative_iou}};
  j["box_encoding"] = to_string(c.box_encoding);
  json iou = json::object();
  for (const auto& [cls, v] : c.eval.iou_threshold) iou[std::string(to_string(cls))] = v;
  json diff = json::object();
  for (Difficulty d : kDifficulties) {
    const auto& lim = c.eval.thresholds[d];
    diff[std::string(to_string(d))] = {{"min_bbox_height", lim.min_bbox_height},
                                       {"max_occlusion", lim.max_occlusion},
                                       {"max_truncation", lim.max_truncation}};
  }
  j["eval"] = {{"ap_mode", int(c.eval.ap_mode)},
               {"iou", iou},
               {"difficulty", diff},
               {"mask_dont_care", c.eval.mask_dont_care},
               {"dont_care_overlap", c.eval.dont_care_overlap}};
  j["threads"] = c.threads;
  return j;
}

bool same_kind(const json& a, const json& b) {
  if (a.is_number() && b.is_number()) return true;
  return a.type() == b.type();
}

void check_known(const json& user, const json& defaults, const std::string& where) {
  if (!same_kind(user, defaults))
    fail(ErrorCode::Config, "config key '" + where + "' expects " + std::string(defaults.type_name()) + ", got " +
                                std::string(user.type_name()));
  if (!user.is_object()) return;
  for (const auto& [key, value] : user.items()) {
    const std::string path = where.empty() ? key : where + "." + key;
    if (!defaults.contains(key)) fail(ErrorCode::Config, "unknown config key '" + path + "'");
    check_known(value, defaults.at(key), path);
  }
}

template <typename T>
T get(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorCode::Config, std::string("config key '") + key + "': " + e.what());
  }
}

PipelineConfig from_json(const json& j) {
  PipelineConfig c;
  const json& g = j.at("grid");
  c.grid.extent_x = get<double>(g, "extent_x");
  c.grid.extent_y = get<double>(g, "extent_y");
  c.grid.cell_size = get<double>(g, "cell_size");
  c.grid.sensor_origin = get<std::array<double, 3>>(g, "sensor_origin");

  c.feature_config = parse_feature_config(get<std::string>(j, "feature_config"));

  const json& gr = j.at("ground");
  c.ground.enabled = get<bool>(gr, "enabled");
  c.ground.fit.cauchy_scale = get<double>(gr, "cauchy_scale");
  c.ground.fit.max_iterations = get<int>(gr, "max_iterations");
  c.ground.fit.convergence_tol = get<double>(gr, "convergence_tol");
  c.ground.fit.removal_threshold = get<double>(gr, "removal_threshold");
  c.ground.fit.init_fraction = get<double>(gr, "init_fraction");

  const json& fov = j.at("camera_fov");
  c.camera_fov.enabled = get<bool>(fov, "enabled");
  c.camera_fov.image_size = {get<int>(fov, "image_width"), get<int>(fov, "image_height")};

  const json& au = j.at("augment");
  c.augment.flip_probability = get<double>(au, "flip_probability");
  c.augment.rotation_range = get<double>(au, "rotation_range_deg") * std::numbers::pi / 180.0;
  if (!au.at("seed").is_number_unsigned())
    fail(ErrorCode::Config, "config key 'augment.seed' must be a non-negative integer");
  c.augment.seed = get<std::uint64_t>(au, "seed");

  const json& an = j.at("anchor");
  c.anchor.sizes = get<std::vector<double>>(an, "sizes");
  c.anchor.aspect_ratios = get<std::vector<double>>(an, "aspect_ratios");
  c.anchor.stride = get<int>(an, "stride");
  c.match.positive_iou = get<double>(an, "positive_iou");
  c.match.negative_iou = get<double>(an, "negative_iou");

  c.box_encoding = parse_box_encoding(get<std::string>(j, "box_encoding"));

  const json& ev = j.at("eval");
  const int mode = get<int>(ev, "ap_mode");
  if (mode != 11 && mode != 40) fail(ErrorCode::Config, "eval.ap_mode must be 11 or 40");
  c.eval.ap_mode = ApMode(mode);
  c.eval.iou_threshold.clear();
  for (const auto& [name, v] : ev.at("iou").items()) {
    auto cls = parse_object_class(name);
    if (!cls) fail(ErrorCode::Config, "unknown class in eval.iou: " + name);
    c.eval.iou_threshold[*cls] = v.get<double>();
  }
  for (Difficulty d : kDifficulties) {
    const json& dj = ev.at("difficulty").at(std::string(to_string(d)));
    auto& lim = c.eval.thresholds.limits[std::size_t(d)];
    lim.min_bbox_height = get<double>(dj, "min_bbox_height");
    lim.max_occlusion = get<int>(dj, "max_occlusion");
    lim.max_truncation = get<double>(dj, "max_truncation");
  }
  c.eval.mask_dont_care = get<bool>(ev, "mask_dont_care");
  c.eval.dont_care_overlap = get<double>(ev, "dont_care_overlap");

  c.threads = get<int>(j, "threads");
  c.anchor.grid = c.grid;
  c.match.encoding = c.box_encoding;
  return c;
}

PipelineConfig from_user_json(const json& user) {
  json defaults = to_json(PipelineConfig{});
  check_known(user, defaults, "");
  defaults.merge_patch(user);
  PipelineConfig c = from_json(defaults);
  c.validate();
  return c;
}

}  // namespace

void PipelineConfig::validate() const {
  grid.validate();
  if (feature_config == FeatureConfig::F1Star && !ground.enabled)
    fail(ErrorCode::Config, "feature config F1* requires ground removal");
  ground.fit.validate();
  augment.validate();
  AnchorConfig a = anchor;
  a.grid = grid;
  a.validate();
  if (!(match.negative_iou >= 0.0 && match.negative_iou <= match.positive_iou && match.positive_iou <= 1.0))
    fail(ErrorCode::Config, "anchor IoU thresholds must satisfy 0 <= negative <= positive <= 1");
  if (camera_fov.image_size.width <= 0 || camera_fov.image_size.height <= 0)
    fail(ErrorCode::Config, "camera image size must be positive");
  eval.thresholds.validate();
  for (ObjectClass cls : kBenchmarkClasses) {
    const double t = eval.iou_for(cls);
    if (!(t > 0.0 && t <= 1.0)) fail(ErrorCode::Config, "eval IoU thresholds must lie in (0, 1]");
  }
  if (!(eval.dont_care_overlap > 0.0 && eval.dont_care_overlap <= 1.0))
    fail(ErrorCode::Config, "eval.dont_care_overlap must lie in (0, 1]");
  if (threads < 1) fail(ErrorCode::Config, "threads must be at least 1");
}

PipelineConfig parse_pipeline_config(std::string_view json_text) {
  json user;
  try {
    user = json::parse(json_text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::Config, std::string("config is not valid JSON: ") + e.what());
  }
  if (!user.is_object()) fail(ErrorCode::Config, "config document must be a JSON object");
  return from_user_json(user);
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_pipeline_config(ss.str());
}

std::string pipeline_config_json(const PipelineConfig& cfg) { return to_json(cfg).dump(2); }

void apply_override(PipelineConfig& cfg, std::string_view dotted_key, std::string_view value) {
  json parsed;
  try {
    parsed = json::parse(value);
  } catch (const json::parse_error&) {
    parsed = std::string(value);
  }
  json patch = json::object();
  json* node = &patch;
  std::string_view rest = dotted_key;
  while (true) {
    const auto dot = rest.find('.');
    const std::string key(rest.substr(0, dot));
    if (key.empty()) fail(ErrorCode::Config, "malformed config key '" + std::string(dotted_key) + "'");
    if (dot == std::string_view::npos) {
      (*node)[key] = parsed;
      break;
    }
    node = &(*node)[key];
    rest.remove_prefix(dot + 1);
  }
  json current = to_json(cfg);
  check_known(patch, current, "");
  current.merge_patch(patch);
  cfg = from_json(current);
}

MultiLayerGridMap build_grid_map(const PointCloud& cloud, const PipelineConfig& cfg, const CalibrationSet* calib) {
  cfg.validate();
  PointCloud work = calib && cfg.camera_fov.enabled ? filter_camera_fov(cloud, *calib) : cloud;
  std::optional<PlaneParams> plane;
  if (cfg.ground.enabled) {
    plane = fit_ground_plane(work, cfg.ground.fit);
    work = split_ground(work, *plane, cfg.ground.fit).non_ground;
  }
  const AccumulatorRaster acc = accumulate_cloud(cfg.grid, work, cfg.threads);
  return assemble_features(acc, cfg.feature_config, plane);
}

}  // namespace gridmap
