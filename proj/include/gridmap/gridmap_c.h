/* C interface to the grid-map pipeline. Every object is an opaque handle owned
 * by the caller and released with the matching *_free function. Functions
 * return GM_OK or an error code; gm_last_error() then describes the failure on
 * the calling thread. */
#ifndef GRIDMAP_C_H
#define GRIDMAP_C_H

#include <stddef.h>
#include <stdint.h>

#if defined(GM_BUILDING_LIBRARY)
#define GM_API __attribute__((visibility("default")))
#else
#define GM_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum gm_status {
  GM_OK = 0,
  GM_ERR_INVALID_ARGUMENT = 1,
  GM_ERR_IO = 2,
  GM_ERR_FORMAT = 3,
  GM_ERR_DEGENERATE = 4,
  GM_ERR_CONFIG = 5,
  GM_ERR_UNDEFINED = 6,
  GM_ERR_INTERNAL = 100
} gm_status;

typedef enum gm_box_encoding { GM_BOX_B1 = 0, GM_BOX_B2 = 1, GM_BOX_B3 = 2 } gm_box_encoding;

typedef struct gm_config gm_config;
typedef struct gm_cloud gm_cloud;
typedef struct gm_calib gm_calib;
typedef struct gm_raster gm_raster;
typedef struct gm_grid gm_grid;
typedef struct gm_labels gm_labels;
typedef struct gm_detections gm_detections;
typedef struct gm_eval gm_eval;

typedef struct gm_point {
  double x, y, z, intensity;
} gm_point;

typedef struct gm_plane {
  double normal[3];
  double offset;
} gm_plane;

typedef struct gm_fit_report {
  int iterations;
  int converged;
  double initial_cost;
  double final_cost;
} gm_fit_report;

/* BEV box: center, length along the heading, width across it, heading in radians. */
typedef struct gm_box {
  double x, y, length, width, theta;
} gm_box;

typedef struct gm_label_info {
  int raw_class;    /* index into gm_raw_class_name */
  int object_class; /* index into gm_object_class_name */
  double truncation;
  int occlusion;
  double image_bbox[4]; /* left, top, right, bottom */
  gm_box box;
  double height;
  double elevation;
} gm_label_info;

typedef struct gm_transform {
  int flipped;
  double angle;
  uint64_t seed;
  uint64_t draw_index;
} gm_transform;

typedef struct gm_ap_result {
  int object_class;
  int difficulty;
  double ap; /* percent; meaningless unless defined */
  double iou_threshold;
  size_t num_gt;
  int defined;
} gm_ap_result;

GM_API const char* gm_version(void);
GM_API const char* gm_last_error(void);
GM_API const char* gm_status_name(gm_status status);
/* Releases strings returned through char** out-parameters. */
GM_API void gm_string_free(char* s);

GM_API const char* gm_raw_class_name(int raw_class);
GM_API const char* gm_object_class_name(int object_class);
GM_API const char* gm_difficulty_name(int difficulty);

/* Configuration. Keys are dotted paths into the JSON document, e.g.
 * "grid.cell_size". gm_config_set checks the key and type only; call
 * gm_config_validate once every override is applied. */
GM_API gm_status gm_config_default(gm_config** out);
GM_API gm_status gm_config_from_json(const char* json, gm_config** out);
GM_API gm_status gm_config_from_file(const char* path, gm_config** out);
GM_API gm_status gm_config_set(gm_config* cfg, const char* key, const char* value);
GM_API gm_status gm_config_validate(const gm_config* cfg);
GM_API gm_status gm_config_to_json(const gm_config* cfg, char** out);
GM_API gm_status gm_config_box_encoding(const gm_config* cfg, gm_box_encoding* out);
GM_API gm_status gm_config_threads(const gm_config* cfg, int* out);
GM_API void gm_config_free(gm_config* cfg);

/* Point clouds (KITTI velodyne .bin). */
GM_API gm_status gm_cloud_read(const char* path, gm_cloud** out, size_t* rejected);
GM_API gm_status gm_cloud_from_points(const gm_point* points, size_t count, gm_cloud** out);
GM_API gm_status gm_cloud_write(const gm_cloud* cloud, const char* path);
GM_API size_t gm_cloud_size(const gm_cloud* cloud);
/* Copies min(size, capacity) points. */
GM_API gm_status gm_cloud_points(const gm_cloud* cloud, gm_point* out, size_t capacity);
GM_API void gm_cloud_free(gm_cloud* cloud);

/* Calibration; the image size comes from the config's camera_fov section. */
GM_API gm_status gm_calib_read(const char* path, const gm_config* cfg, gm_calib** out);
GM_API void gm_calib_free(gm_calib* calib);
GM_API gm_status gm_cloud_filter_fov(const gm_cloud* cloud, const gm_calib* calib, gm_cloud** out);

/* Ground plane. report may be NULL. */
GM_API gm_status gm_ground_fit(const gm_cloud* cloud, const gm_config* cfg, gm_plane* out, gm_fit_report* report);
GM_API gm_status gm_ground_split(const gm_cloud* cloud, const gm_plane* plane, const gm_config* cfg,
                                 gm_cloud** ground, gm_cloud** non_ground);

/* Rasterization. gm_rasterize runs the configured pipeline end to end (calib
 * may be NULL to skip the FOV filter); gm_accumulate and gm_assemble expose the
 * two grid stages separately. plane may be NULL except for F1*. */
GM_API gm_status gm_rasterize(const gm_cloud* cloud, const gm_calib* calib, const gm_config* cfg, gm_grid** out);
GM_API gm_status gm_accumulate(const gm_cloud* cloud, const gm_config* cfg, gm_raster** out);
GM_API void gm_raster_free(gm_raster* raster);
GM_API gm_status gm_assemble(const gm_raster* raster, const gm_config* cfg, const gm_plane* plane, gm_grid** out);

GM_API gm_status gm_grid_dims(const gm_grid* grid, int* rows, int* cols, size_t* layers);
/* NULL for an out-of-range index. */
GM_API const char* gm_grid_layer_name(const gm_grid* grid, size_t index);
/* The pointer stays valid until the grid is freed. */
GM_API gm_status gm_grid_layer(const gm_grid* grid, size_t index, const float** data);
GM_API gm_status gm_grid_set_transform(gm_grid* grid, const gm_transform* t);
GM_API gm_status gm_grid_write(const gm_grid* grid, const char* path);
GM_API gm_status gm_grid_read(const char* path, gm_grid** out);
GM_API gm_status gm_grid_render(const gm_grid* grid, const char* layer, const char* png_path);
GM_API gm_status gm_grid_header_json(const gm_grid* grid, char** out);
/* 1 when configuration, layers and values are identical. */
GM_API int gm_grid_equal(const gm_grid* a, const gm_grid* b);
GM_API void gm_grid_free(gm_grid* grid);

/* Labels. Files hold the camera frame; convert before mixing with sensor data. */
GM_API gm_status gm_labels_read(const char* path, gm_labels** out);
GM_API gm_status gm_labels_write(const gm_labels* labels, const char* path);
GM_API gm_status gm_labels_to_sensor(gm_labels* labels, const gm_calib* calib);
GM_API gm_status gm_labels_to_camera(gm_labels* labels, const gm_calib* calib);
GM_API size_t gm_labels_count(const gm_labels* labels);
GM_API gm_status gm_labels_get(const gm_labels* labels, size_t index, gm_label_info* out);
GM_API void gm_labels_free(gm_labels* labels);

/* Flip/rotation augmentation keyed on (config seed, draw_index). labels may be
 * NULL, in which case *out_labels is left untouched; out_labels and applied may
 * be NULL. Labels must be in the sensor frame. */
GM_API gm_status gm_augment(const gm_cloud* cloud, const gm_labels* labels, const gm_config* cfg,
                            uint64_t draw_index, gm_cloud** out_cloud, gm_labels** out_labels,
                            gm_transform* applied);

/* Box parameterizations. */
GM_API size_t gm_box_encoding_size(gm_box_encoding enc);
GM_API gm_status gm_box_encode(const gm_box* box, gm_box_encoding enc, double* params, size_t capacity);
GM_API gm_status gm_box_decode(gm_box_encoding enc, const double* params, size_t count, gm_box* out);
GM_API gm_status gm_box_iou(const gm_box* a, const gm_box* b, double* out);

/* Detections (KITTI result files) and evaluation. */
GM_API gm_status gm_detections_read(const char* path, gm_detections** out);
GM_API size_t gm_detections_count(const gm_detections* dets);
GM_API void gm_detections_free(gm_detections* dets);

GM_API gm_status gm_eval_create(const gm_config* cfg, gm_eval** out);
/* dets may be NULL for a frame without detections. */
GM_API gm_status gm_eval_add_frame(gm_eval* ev, const gm_labels* gt, const gm_detections* dets);
/* Writes up to capacity results (3 classes x 3 difficulties) and their total count. */
GM_API gm_status gm_eval_compute(const gm_eval* ev, gm_ap_result* out, size_t capacity, size_t* count);
GM_API gm_status gm_eval_format(const gm_ap_result* results, size_t count, int as_json, char** out);
GM_API void gm_eval_free(gm_eval* ev);

#ifdef __cplusplus
}
#endif

#endif /* GRIDMAP_C_H */
