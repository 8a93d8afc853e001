#include "gridmap/gridmap_c.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <new>
#include <string>

#include "gridmap/error.hpp"
#include "gridmap/labels.hpp"
#include "gridmap/pipeline.hpp"

using namespace gridmap;

struct gm_config {
  PipelineConfig cfg;
};
struct gm_cloud {
  PointCloud cloud;
};
struct gm_calib {
  CalibrationSet calib;
};
struct gm_raster {
  AccumulatorRaster raster;
};
struct gm_grid {
  MultiLayerGridMap map;
};
struct gm_labels {
  FrameLabels labels;
};
struct gm_detections {
  std::vector<DetectionRecord> dets;
};
struct gm_eval {
  EvalOptions options;
  std::vector<EvalFrame> frames;
};

namespace {

thread_local std::string g_last_error;

gm_status status_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return GM_ERR_INVALID_ARGUMENT;
    case ErrorCode::Io: return GM_ERR_IO;
    case ErrorCode::Format: return GM_ERR_FORMAT;
    case ErrorCode::Degenerate: return GM_ERR_DEGENERATE;
    case ErrorCode::Config: return GM_ERR_CONFIG;
    case ErrorCode::Undefined: return GM_ERR_UNDEFINED;
  }
  return GM_ERR_INTERNAL;
}

template <typename F>
gm_status wrap_catch(F&& body) {
  try {
    body();
    g_last_error.clear();
    return GM_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
  } catch (const std::exception& e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown error";
  }
  return GM_ERR_INTERNAL;
}

template <typename T>
const T& need(const T* p, const char* what) {
  if (!p) fail(ErrorCode::InvalidArgument, std::string(what) + " is NULL");
  return *p;
}

template <typename T>
T& need(T* p, const char* what) {
  if (!p) fail(ErrorCode::InvalidArgument, std::string(what) + " is NULL");
  return *p;
}

const char* text(const char* s, const char* what) {
  if (!s) fail(ErrorCode::InvalidArgument, std::string(what) + " is NULL");
  return s;
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

BoxEncoding to_encoding(gm_box_encoding enc) {
  switch (enc) {
    case GM_BOX_B1: return BoxEncoding::B1;
    case GM_BOX_B2: return BoxEncoding::B2;
    case GM_BOX_B3: return BoxEncoding::B3;
  }
  fail(ErrorCode::InvalidArgument, "unknown box encoding " + std::to_string(int(enc)));
}

RotatedBox to_box(const gm_box& b) { return {b.x, b.y, b.length, b.width, b.theta}; }
gm_box from_box(const RotatedBox& b) { return {b.x, b.y, b.length, b.width, b.theta}; }

}  // namespace

extern "C" {

GM_API const char* gm_version(void) { return "0.1.0"; }
GM_API const char* gm_last_error(void) { return g_last_error.c_str(); }

GM_API const char* gm_status_name(gm_status status) {
  switch (status) {
    case GM_OK: return "ok";
    case GM_ERR_INVALID_ARGUMENT: return "invalid argument";
    case GM_ERR_IO: return "i/o error";
    case GM_ERR_FORMAT: return "format error";
    case GM_ERR_DEGENERATE: return "degenerate input";
    case GM_ERR_CONFIG: return "config error";
    case GM_ERR_UNDEFINED: return "undefined result";
    case GM_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

GM_API void gm_string_free(char* s) { std::free(s); }

// Names are string literals, so the views are NUL-terminated.
GM_API const char* gm_raw_class_name(int raw_class) {
  if (raw_class < 0 || raw_class > int(RawClass::DontCare)) return nullptr;
  return to_string(RawClass(raw_class)).data();
}

GM_API const char* gm_object_class_name(int object_class) {
  if (object_class < 0 || object_class > int(ObjectClass::Tram)) return nullptr;
  return to_string(ObjectClass(object_class)).data();
}

GM_API const char* gm_difficulty_name(int difficulty) {
  if (difficulty < 0 || difficulty > int(Difficulty::Hard)) return nullptr;
  return to_string(Difficulty(difficulty)).data();
}

GM_API gm_status gm_config_default(gm_config** out) {
  return wrap_catch([&] { need(out, "out") = new gm_config{}; });
}

GM_API gm_status gm_config_from_json(const char* json, gm_config** out) {
  return wrap_catch([&] {
    auto cfg = parse_pipeline_config(text(json, "json"));
    need(out, "out") = new gm_config{std::move(cfg)};
  });
}

GM_API gm_status gm_config_from_file(const char* path, gm_config** out) {
  return wrap_catch([&] {
    auto cfg = load_pipeline_config(text(path, "path"));
    need(out, "out") = new gm_config{std::move(cfg)};
  });
}

GM_API gm_status gm_config_set(gm_config* cfg, const char* key, const char* value) {
  return wrap_catch([&] { apply_override(need(cfg, "cfg").cfg, text(key, "key"), text(value, "value")); });
}

GM_API gm_status gm_config_validate(const gm_config* cfg) {
  return wrap_catch([&] { need(cfg, "cfg").cfg.validate(); });
}

GM_API gm_status gm_config_to_json(const gm_config* cfg, char** out) {
  return wrap_catch([&] { need(out, "out") = dup_string(pipeline_config_json(need(cfg, "cfg").cfg)); });
}

GM_API gm_status gm_config_box_encoding(const gm_config* cfg, gm_box_encoding* out) {
  return wrap_catch([&] { need(out, "out") = gm_box_encoding(int(need(cfg, "cfg").cfg.box_encoding)); });
}

GM_API gm_status gm_config_threads(const gm_config* cfg, int* out) {
  return wrap_catch([&] { need(out, "out") = need(cfg, "cfg").cfg.threads; });
}

GM_API void gm_config_free(gm_config* cfg) { delete cfg; }

GM_API gm_status gm_cloud_read(const char* path, gm_cloud** out, size_t* rejected) {
  return wrap_catch([&] {
    ScanReadStats stats;
    auto cloud = read_point_cloud(text(path, "path"), &stats);
    need(out, "out") = new gm_cloud{std::move(cloud)};
    if (rejected) *rejected = stats.rejected;
  });
}

GM_API gm_status gm_cloud_from_points(const gm_point* points, size_t count, gm_cloud** out) {
  return wrap_catch([&] {
    if (count > 0) need(points, "points");
    auto* c = new gm_cloud{};
    c->cloud.points.reserve(count);
    for (size_t i = 0; i < count; ++i)
      c->cloud.points.push_back({points[i].x, points[i].y, points[i].z, points[i].intensity});
    need(out, "out") = c;
  });
}

GM_API gm_status gm_cloud_write(const gm_cloud* cloud, const char* path) {
  return wrap_catch([&] { write_point_cloud(need(cloud, "cloud").cloud, text(path, "path")); });
}

GM_API size_t gm_cloud_size(const gm_cloud* cloud) { return cloud ? cloud->cloud.size() : 0; }

GM_API gm_status gm_cloud_points(const gm_cloud* cloud, gm_point* out, size_t capacity) {
  return wrap_catch([&] {
    const auto& pts = need(cloud, "cloud").cloud.points;
    const size_t n = std::min(capacity, pts.size());
    if (n > 0) need(out, "out");
    for (size_t i = 0; i < n; ++i) out[i] = {pts[i].x, pts[i].y, pts[i].z, pts[i].intensity};
  });
}

GM_API void gm_cloud_free(gm_cloud* cloud) { delete cloud; }

GM_API gm_status gm_calib_read(const char* path, const gm_config* cfg, gm_calib** out) {
  return wrap_catch([&] {
    auto calib = read_calibration(text(path, "path"), need(cfg, "cfg").cfg.camera_fov.image_size);
    need(out, "out") = new gm_calib{std::move(calib)};
  });
}

GM_API void gm_calib_free(gm_calib* calib) { delete calib; }

GM_API gm_status gm_cloud_filter_fov(const gm_cloud* cloud, const gm_calib* calib, gm_cloud** out) {
  return wrap_catch([&] {
    auto filtered = filter_camera_fov(need(cloud, "cloud").cloud, need(calib, "calib").calib);
    need(out, "out") = new gm_cloud{std::move(filtered)};
  });
}

GM_API gm_status gm_ground_fit(const gm_cloud* cloud, const gm_config* cfg, gm_plane* out, gm_fit_report* report) {
  return wrap_catch([&] {
    FitReport rep;
    const PlaneParams plane = fit_ground_plane(need(cloud, "cloud").cloud, need(cfg, "cfg").cfg.ground.fit, &rep);
    need(out, "out") = {{plane.normal[0], plane.normal[1], plane.normal[2]}, plane.offset};
    if (report) {
      report->iterations = rep.iterations;
      report->converged = rep.converged ? 1 : 0;
      report->initial_cost = rep.cost_trace.empty() ? 0.0 : rep.cost_trace.front();
      report->final_cost = rep.cost_trace.empty() ? 0.0 : rep.cost_trace.back();
    }
  });
}

GM_API gm_status gm_ground_split(const gm_cloud* cloud, const gm_plane* plane, const gm_config* cfg,
                                 gm_cloud** ground, gm_cloud** non_ground) {
  return wrap_catch([&] {
    const gm_plane& p = need(plane, "plane");
    PlaneParams params{{p.normal[0], p.normal[1], p.normal[2]}, p.offset};
    auto split = split_ground(need(cloud, "cloud").cloud, params, need(cfg, "cfg").cfg.ground.fit);
    if (ground) *ground = new gm_cloud{std::move(split.ground)};
    if (non_ground) *non_ground = new gm_cloud{std::move(split.non_ground)};
  });
}

GM_API gm_status gm_rasterize(const gm_cloud* cloud, const gm_calib* calib, const gm_config* cfg, gm_grid** out) {
  return wrap_catch([&] {
    auto map = build_grid_map(need(cloud, "cloud").cloud, need(cfg, "cfg").cfg, calib ? &calib->calib : nullptr);
    need(out, "out") = new gm_grid{std::move(map)};
  });
}

GM_API gm_status gm_accumulate(const gm_cloud* cloud, const gm_config* cfg, gm_raster** out) {
  return wrap_catch([&] {
    const auto& c = need(cfg, "cfg").cfg;
    c.grid.validate();
    if (c.threads < 1) fail(ErrorCode::Config, "threads must be at least 1");
    auto raster = accumulate_cloud(c.grid, need(cloud, "cloud").cloud, c.threads);
    need(out, "out") = new gm_raster{std::move(raster)};
  });
}

GM_API void gm_raster_free(gm_raster* raster) { delete raster; }

GM_API gm_status gm_assemble(const gm_raster* raster, const gm_config* cfg, const gm_plane* plane, gm_grid** out) {
  return wrap_catch([&] {
    std::optional<PlaneParams> p;
    if (plane) p = PlaneParams{{plane->normal[0], plane->normal[1], plane->normal[2]}, plane->offset};
    auto map = assemble_features(need(raster, "raster").raster, need(cfg, "cfg").cfg.feature_config, p);
    need(out, "out") = new gm_grid{std::move(map)};
  });
}

GM_API gm_status gm_grid_dims(const gm_grid* grid, int* rows, int* cols, size_t* layers) {
  return wrap_catch([&] {
    const auto& m = need(grid, "grid").map;
    if (rows) *rows = m.rows;
    if (cols) *cols = m.cols;
    if (layers) *layers = m.layers.size();
  });
}

GM_API const char* gm_grid_layer_name(const gm_grid* grid, size_t index) {
  if (!grid || index >= grid->map.layer_names.size()) return nullptr;
  return grid->map.layer_names[index].c_str();
}

GM_API gm_status gm_grid_layer(const gm_grid* grid, size_t index, const float** data) {
  return wrap_catch([&] {
    const auto& m = need(grid, "grid").map;
    if (index >= m.layers.size())
      fail(ErrorCode::InvalidArgument, "layer index " + std::to_string(index) + " out of range");
    need(data, "data") = m.layers[index].data();
  });
}

GM_API gm_status gm_grid_set_transform(gm_grid* grid, const gm_transform* t) {
  return wrap_catch([&] {
    const gm_transform& tr = need(t, "transform");
    need(grid, "grid").map.applied_transform = AppliedTransform{tr.flipped != 0, tr.angle, tr.seed, tr.draw_index};
  });
}

GM_API gm_status gm_grid_write(const gm_grid* grid, const char* path) {
  return wrap_catch([&] { write_grid_map(need(grid, "grid").map, text(path, "path")); });
}

GM_API gm_status gm_grid_read(const char* path, gm_grid** out) {
  return wrap_catch([&] {
    auto map = read_grid_map(text(path, "path"));
    need(out, "out") = new gm_grid{std::move(map)};
  });
}

GM_API gm_status gm_grid_render(const gm_grid* grid, const char* layer, const char* png_path) {
  return wrap_catch([&] { render_layer(need(grid, "grid").map, text(layer, "layer"), text(png_path, "png_path")); });
}

GM_API gm_status gm_grid_header_json(const gm_grid* grid, char** out) {
  return wrap_catch([&] { need(out, "out") = dup_string(grid_header_json(need(grid, "grid").map)); });
}

GM_API int gm_grid_equal(const gm_grid* a, const gm_grid* b) {
  if (!a || !b) return 0;
  return a->map == b->map ? 1 : 0;
}

GM_API void gm_grid_free(gm_grid* grid) { delete grid; }

GM_API gm_status gm_labels_read(const char* path, gm_labels** out) {
  return wrap_catch([&] {
    auto labels = read_labels(text(path, "path"));
    need(out, "out") = new gm_labels{std::move(labels)};
  });
}

GM_API gm_status gm_labels_write(const gm_labels* labels, const char* path) {
  return wrap_catch([&] { write_labels(need(labels, "labels").labels, text(path, "path")); });
}

GM_API gm_status gm_labels_to_sensor(gm_labels* labels, const gm_calib* calib) {
  return wrap_catch([&] {
    auto& l = need(labels, "labels").labels;
    l = labels_to_sensor_frame(l, need(calib, "calib").calib);
  });
}

GM_API gm_status gm_labels_to_camera(gm_labels* labels, const gm_calib* calib) {
  return wrap_catch([&] {
    auto& l = need(labels, "labels").labels;
    l = labels_to_camera_frame(l, need(calib, "calib").calib);
  });
}

GM_API size_t gm_labels_count(const gm_labels* labels) { return labels ? labels->labels.objects.size() : 0; }

GM_API gm_status gm_labels_get(const gm_labels* labels, size_t index, gm_label_info* out) {
  return wrap_catch([&] {
    const auto& objs = need(labels, "labels").labels.objects;
    if (index >= objs.size()) fail(ErrorCode::InvalidArgument, "label index " + std::to_string(index) + " out of range");
    const auto& o = objs[index];
    need(out, "out") = {int(o.raw_class),
                        int(o.merged_class),
                        o.truncation,
                        o.occlusion,
                        {o.image_bbox.left, o.image_bbox.top, o.image_bbox.right, o.image_bbox.bottom},
                        from_box(o.box),
                        o.height,
                        o.elevation};
  });
}

GM_API void gm_labels_free(gm_labels* labels) { delete labels; }

GM_API gm_status gm_augment(const gm_cloud* cloud, const gm_labels* labels, const gm_config* cfg,
                            uint64_t draw_index, gm_cloud** out_cloud, gm_labels** out_labels,
                            gm_transform* applied) {
  return wrap_catch([&] {
    const auto& c = need(cfg, "cfg").cfg;
    Scene scene{need(cloud, "cloud").cloud, {}};
    if (labels) {
      if (labels->labels.frame != LabelFrame::Sensor)
        fail(ErrorCode::InvalidArgument, "augmentation needs labels in the sensor frame");
      scene.labels = labels->labels.objects;
    }
    AugmentResult res = augment_sample(scene, c.augment, draw_index);
    if (labels && out_labels) {
      FrameLabels fl = labels->labels;
      fl.objects = std::move(res.scene.labels);
      *out_labels = new gm_labels{std::move(fl)};
    }
    if (applied) {
      *applied = {res.transform.flipped ? 1 : 0, res.transform.angle, res.transform.seed, res.transform.draw_index};
    }
    need(out_cloud, "out_cloud") = new gm_cloud{std::move(res.scene.cloud)};
  });
}

GM_API size_t gm_box_encoding_size(gm_box_encoding enc) {
  if (enc != GM_BOX_B1 && enc != GM_BOX_B2 && enc != GM_BOX_B3) return 0;
  return encoding_size(to_encoding(enc));
}

GM_API gm_status gm_box_encode(const gm_box* box, gm_box_encoding enc, double* params, size_t capacity) {
  return wrap_catch([&] {
    const EncodedBox e = encode(to_box(need(box, "box")), to_encoding(enc));
    if (capacity < e.params.size())
      fail(ErrorCode::InvalidArgument, "parameter buffer holds " + std::to_string(capacity) + ", need " +
                                           std::to_string(e.params.size()));
    need(params, "params");
    std::copy(e.params.begin(), e.params.end(), params);
  });
}

GM_API gm_status gm_box_decode(gm_box_encoding enc, const double* params, size_t count, gm_box* out) {
  return wrap_catch([&] {
    if (count > 0) need(params, "params");
    EncodedBox e{to_encoding(enc), std::vector<double>(params, params + count)};
    need(out, "out") = from_box(decode(e));
  });
}

GM_API gm_status gm_box_iou(const gm_box* a, const gm_box* b, double* out) {
  return wrap_catch([&] { need(out, "out") = rotated_iou(to_box(need(a, "a")), to_box(need(b, "b"))); });
}

GM_API gm_status gm_detections_read(const char* path, gm_detections** out) {
  return wrap_catch([&] {
    auto dets = read_detections(text(path, "path"));
    need(out, "out") = new gm_detections{std::move(dets)};
  });
}

GM_API size_t gm_detections_count(const gm_detections* dets) { return dets ? dets->dets.size() : 0; }

GM_API void gm_detections_free(gm_detections* dets) { delete dets; }

GM_API gm_status gm_eval_create(const gm_config* cfg, gm_eval** out) {
  return wrap_catch([&] {
    const auto& c = need(cfg, "cfg").cfg;
    c.validate();
    need(out, "out") = new gm_eval{c.eval, {}};
  });
}

GM_API gm_status gm_eval_add_frame(gm_eval* ev, const gm_labels* gt, const gm_detections* dets) {
  return wrap_catch([&] {
    auto& e = need(ev, "eval");
    const auto& labels = need(gt, "gt").labels;
    if (labels.frame != LabelFrame::CameraBev)
      fail(ErrorCode::InvalidArgument, "evaluation expects ground truth in the camera frame");
    e.frames.push_back({labels, dets ? dets->dets : std::vector<DetectionRecord>{}});
  });
}

GM_API gm_status gm_eval_compute(const gm_eval* ev, gm_ap_result* out, size_t capacity, size_t* count) {
  return wrap_catch([&] {
    const auto& e = need(ev, "eval");
    const auto results = evaluate_dataset(e.frames, e.options);
    if (capacity > 0) need(out, "out");
    for (size_t i = 0; i < std::min(capacity, results.size()); ++i) {
      const auto& r = results[i];
      out[i] = {int(r.object_class), int(r.difficulty), r.ap, r.iou_threshold, r.num_gt, r.defined ? 1 : 0};
    }
    if (count) *count = results.size();
  });
}

GM_API gm_status gm_eval_format(const gm_ap_result* results, size_t count, int as_json, char** out) {
  return wrap_catch([&] {
    if (count > 0) need(results, "results");
    std::vector<APResult> rs;
    for (size_t i = 0; i < count; ++i) {
      const auto& r = results[i];
      if (r.object_class < 0 || r.object_class > int(ObjectClass::Tram) || r.difficulty < 0 ||
          r.difficulty > int(Difficulty::Hard))
        fail(ErrorCode::InvalidArgument, "result " + std::to_string(i) + " has an unknown class or difficulty");
      rs.push_back({ObjectClass(r.object_class), Difficulty(r.difficulty), r.ap, r.iou_threshold, r.num_gt,
                    r.defined != 0});
    }
    need(out, "out") = dup_string(as_json ? ap_results_json(rs) : format_ap_table(rs));
  });
}

GM_API void gm_eval_free(gm_eval* ev) { delete ev; }

}  // extern "C"
