// Command-line front end. Everything goes through the C interface of libgridmap.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "gridmap/gridmap_c.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum ExitCode { kOk = 0, kFileErrors = 1, kUsage = 2 };

struct Failure : std::runtime_error {
  gm_status status;
  Failure(gm_status s, const std::string& what) : std::runtime_error(what), status(s) {}
};

void check(gm_status s, const std::string& context = {}) {
  if (s == GM_OK) return;
  std::string msg = gm_last_error();
  if (!context.empty()) msg = context + ": " + msg;
  throw Failure(s, msg);
}

template <typename T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using Config = std::unique_ptr<gm_config, Deleter<gm_config, gm_config_free>>;
using Cloud = std::unique_ptr<gm_cloud, Deleter<gm_cloud, gm_cloud_free>>;
using Calib = std::unique_ptr<gm_calib, Deleter<gm_calib, gm_calib_free>>;
using Raster = std::unique_ptr<gm_raster, Deleter<gm_raster, gm_raster_free>>;
using Grid = std::unique_ptr<gm_grid, Deleter<gm_grid, gm_grid_free>>;
using Labels = std::unique_ptr<gm_labels, Deleter<gm_labels, gm_labels_free>>;
using Detections = std::unique_ptr<gm_detections, Deleter<gm_detections, gm_detections_free>>;
using Eval = std::unique_ptr<gm_eval, Deleter<gm_eval, gm_eval_free>>;

std::string take_string(char* s) {
  std::string out = s ? s : "";
  gm_string_free(s);
  return out;
}

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string cell_size;
  std::string feature_config;
  std::string box_encoding;
  std::string ap_mode;
  std::string seed;
  int threads = 0;
  bool ground_removal = false;
  bool no_fov = false;
};

Config build_config(const CommonOptions& o) {
  gm_config* raw = nullptr;
  if (o.config_path.empty())
    check(gm_config_default(&raw));
  else
    check(gm_config_from_file(o.config_path.c_str(), &raw));
  Config cfg(raw);
  auto set = [&](const std::string& key, const std::string& value) {
    check(gm_config_set(cfg.get(), key.c_str(), value.c_str()), "--set " + key);
  };
  for (const auto& kv : o.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw Failure(GM_ERR_CONFIG, "--set expects key=value, got '" + kv + "'");
    set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!o.cell_size.empty()) set("grid.cell_size", o.cell_size);
  if (!o.feature_config.empty()) set("feature_config", json(o.feature_config).dump());
  if (!o.box_encoding.empty()) set("box_encoding", json(o.box_encoding).dump());
  if (!o.ap_mode.empty()) set("eval.ap_mode", o.ap_mode);
  if (!o.seed.empty()) set("augment.seed", o.seed);
  if (o.threads > 0) set("threads", std::to_string(o.threads));
  if (o.ground_removal) set("ground.enabled", "true");
  if (o.no_fov) set("camera_fov.enabled", "false");
  check(gm_config_validate(cfg.get()));
  return cfg;
}

struct CalibSource {
  std::string file;
  std::string dir;

  bool any() const { return !file.empty() || !dir.empty(); }
  fs::path for_scan(const fs::path& scan) const {
    if (!file.empty()) return file;
    return fs::path(dir) / (scan.stem().string() + ".txt");
  }
};

Calib load_calib(const CalibSource& src, const fs::path& scan, const gm_config* cfg) {
  if (!src.any()) return nullptr;
  gm_calib* raw = nullptr;
  const fs::path p = src.for_scan(scan);
  check(gm_calib_read(p.string().c_str(), cfg, &raw), p.string());
  return Calib(raw);
}

Cloud read_cloud(const fs::path& path) {
  gm_cloud* raw = nullptr;
  check(gm_cloud_read(path.string().c_str(), &raw, nullptr), path.string());
  return Cloud(raw);
}

// Runs `work(i)` for every input on up to `jobs` workers and prints each
// result in input order, so batch output does not depend on scheduling.
struct FileResult {
  std::string out;
  std::string err;
};

int run_batch(std::size_t count, int jobs, const std::function<FileResult(std::size_t)>& work) {
  std::vector<FileResult> results(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) results[i] = work(i);
  };
  const int n = std::max(1, std::min<int>(jobs, int(count)));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  int failures = 0;
  for (const auto& r : results) {
    std::cout << r.out;
    if (!r.err.empty()) {
      std::cerr << "error: " << r.err << "\n";
      ++failures;
    }
  }
  std::cout.flush();
  return failures ? kFileErrors : kOk;
}

template <typename F>
FileResult guarded(const fs::path& input, F&& body) {
  FileResult r;
  try {
    r.out = body();
  } catch (const Failure& e) {
    r.err = e.what();
    if (r.err.rfind(input.string(), 0) != 0) r.err = input.string() + ": " + r.err;
  } catch (const std::exception& e) {
    r.err = input.string() + ": " + e.what();
  }
  return r;
}

double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

int cmd_rasterize(const CommonOptions& common, const std::vector<std::string>& scans, const std::string& out_dir,
                  const CalibSource& calib_src, bool render, bool timing, int jobs) {
  Config cfg = build_config(common);
  fs::create_directories(out_dir);
  return run_batch(scans.size(), jobs, [&](std::size_t i) {
    const fs::path scan = scans[i];
    return guarded(scan, [&] {
      const auto t0 = std::chrono::steady_clock::now();
      Cloud cloud = read_cloud(scan);
      Calib calib = load_calib(calib_src, scan, cfg.get());
      gm_grid* raw = nullptr;
      check(gm_rasterize(cloud.get(), calib.get(), cfg.get(), &raw), scan.string());
      Grid grid(raw);
      const fs::path out = fs::path(out_dir) / (scan.stem().string() + ".gmap");
      check(gm_grid_write(grid.get(), out.string().c_str()), out.string());
      if (render) {
        size_t layers = 0;
        check(gm_grid_dims(grid.get(), nullptr, nullptr, &layers));
        for (size_t l = 0; l < layers; ++l) {
          const std::string name = gm_grid_layer_name(grid.get(), l);
          const fs::path png = fs::path(out_dir) / (scan.stem().string() + "_" + name + ".png");
          check(gm_grid_render(grid.get(), name.c_str(), png.string().c_str()), png.string());
        }
      }
      std::string line;
      if (timing) {
        char buf[64];
        std::snprintf(buf, sizeof buf, " %.1f ms", elapsed_ms(t0));
        line = scan.string() + buf + "\n";
      }
      return line;
    });
  });
}

int cmd_ground(const CommonOptions& common, const std::vector<std::string>& scans, const std::string& out_dir,
               const CalibSource& calib_src, int jobs) {
  Config cfg = build_config(common);
  if (!out_dir.empty()) fs::create_directories(out_dir);
  return run_batch(scans.size(), jobs, [&](std::size_t i) {
    const fs::path scan = scans[i];
    return guarded(scan, [&] {
      Cloud cloud = read_cloud(scan);
      Calib calib = load_calib(calib_src, scan, cfg.get());
      if (calib) {
        gm_cloud* filtered = nullptr;
        check(gm_cloud_filter_fov(cloud.get(), calib.get(), &filtered));
        cloud.reset(filtered);
      }
      gm_plane plane{};
      gm_fit_report report{};
      check(gm_ground_fit(cloud.get(), cfg.get(), &plane, &report), scan.string());
      gm_cloud *g = nullptr, *ng = nullptr;
      check(gm_ground_split(cloud.get(), &plane, cfg.get(), &g, &ng));
      Cloud ground(g), non_ground(ng);
      if (!out_dir.empty()) {
        const fs::path out = fs::path(out_dir) / (scan.stem().string() + ".bin");
        check(gm_cloud_write(non_ground.get(), out.string().c_str()), out.string());
      }
      json rec = {{"scan", scan.string()},
                  {"normal", {plane.normal[0], plane.normal[1], plane.normal[2]}},
                  {"offset", plane.offset},
                  {"iterations", report.iterations},
                  {"converged", report.converged != 0},
                  {"initial_cost", report.initial_cost},
                  {"final_cost", report.final_cost},
                  {"ground_points", gm_cloud_size(ground.get())},
                  {"non_ground_points", gm_cloud_size(non_ground.get())}};
      return rec.dump() + "\n";
    });
  });
}

int cmd_augment(const CommonOptions& common, const std::vector<std::string>& scans, const std::string& out_dir,
                const CalibSource& calib_src, const std::string& label_dir, std::uint64_t first_index,
                bool write_grid, bool render) {
  Config cfg = build_config(common);
  fs::create_directories(out_dir);
  if (!label_dir.empty() && !calib_src.any())
    throw Failure(GM_ERR_CONFIG, "augmenting labels needs --calib or --calib-dir");
  return run_batch(scans.size(), 1, [&](std::size_t i) {
    const fs::path scan = scans[i];
    return guarded(scan, [&] {
      const std::uint64_t draw_index = first_index + i;
      const std::string stem = scan.stem().string();
      Cloud cloud = read_cloud(scan);
      Calib calib = load_calib(calib_src, scan, cfg.get());
      Labels labels;
      if (!label_dir.empty()) {
        const fs::path lp = fs::path(label_dir) / (stem + ".txt");
        gm_labels* raw = nullptr;
        check(gm_labels_read(lp.string().c_str(), &raw), lp.string());
        labels.reset(raw);
        check(gm_labels_to_sensor(labels.get(), calib.get()), lp.string());
      }
      gm_cloud* out_cloud = nullptr;
      gm_labels* out_labels = nullptr;
      gm_transform t{};
      check(gm_augment(cloud.get(), labels.get(), cfg.get(), draw_index, &out_cloud, &out_labels, &t));
      Cloud aug_cloud(out_cloud);
      Labels aug_labels(out_labels);
      const fs::path base = fs::path(out_dir) / stem;
      check(gm_cloud_write(aug_cloud.get(), (base.string() + ".bin").c_str()));
      if (aug_labels) {
        check(gm_labels_to_camera(aug_labels.get(), calib.get()));
        check(gm_labels_write(aug_labels.get(), (base.string() + ".txt").c_str()));
      }
      json rec = {{"scan", scan.string()},
                  {"seed", t.seed},
                  {"draw_index", t.draw_index},
                  {"flipped", t.flipped != 0},
                  {"angle_rad", t.angle},
                  {"angle_deg", t.angle * 180.0 / std::numbers::pi}};
      {
        std::ofstream f(base.string() + "_transform.json");
        f << rec.dump(2) << "\n";
        if (!f) throw Failure(GM_ERR_IO, "cannot write " + base.string() + "_transform.json");
      }
      if (write_grid || render) {
        gm_grid* raw = nullptr;
        check(gm_rasterize(aug_cloud.get(), calib.get(), cfg.get(), &raw));
        Grid grid(raw);
        check(gm_grid_set_transform(grid.get(), &t));
        if (write_grid) check(gm_grid_write(grid.get(), (base.string() + ".gmap").c_str()));
        if (render) {
          size_t layers = 0;
          check(gm_grid_dims(grid.get(), nullptr, nullptr, &layers));
          for (size_t l = 0; l < layers; ++l) {
            const std::string name = gm_grid_layer_name(grid.get(), l);
            check(gm_grid_render(grid.get(), name.c_str(), (base.string() + "_" + name + ".png").c_str()));
          }
        }
      }
      return rec.dump() + "\n";
    });
  });
}

double heading_error(double a, double b) {
  const double d = std::remainder(a - b, std::numbers::pi);
  return std::abs(d);
}

int cmd_encode_check(const CommonOptions& common, const std::vector<std::string>& label_files, double tolerance) {
  Config cfg = build_config(common);
  gm_box_encoding enc{};
  check(gm_config_box_encoding(cfg.get(), &enc));
  const char* enc_name = enc == GM_BOX_B1 ? "B1" : enc == GM_BOX_B2 ? "B2" : "B3";
  std::size_t total = 0, bad = 0;
  double worst_pos = 0.0, worst_ext = 0.0, worst_heading = 0.0, worst_iou = 1.0;
  const int status = run_batch(label_files.size(), 1, [&](std::size_t i) {
    const fs::path path = label_files[i];
    return guarded(path, [&] {
      gm_labels* raw = nullptr;
      check(gm_labels_read(path.string().c_str(), &raw), path.string());
      Labels labels(raw);
      std::vector<double> params(gm_box_encoding_size(enc));
      double pos = 0.0, ext = 0.0, head = 0.0, iou_min = 1.0;
      const size_t n = gm_labels_count(labels.get());
      std::size_t file_bad = 0;
      for (size_t k = 0; k < n; ++k) {
        gm_label_info info{};
        check(gm_labels_get(labels.get(), k, &info));
        check(gm_box_encode(&info.box, enc, params.data(), params.size()));
        gm_box back{};
        check(gm_box_decode(enc, params.data(), params.size(), &back));
        double iou = 0.0;
        check(gm_box_iou(&info.box, &back, &iou));
        const double p = std::max(std::abs(back.x - info.box.x), std::abs(back.y - info.box.y));
        const double e = std::max(std::abs(back.length - info.box.length), std::abs(back.width - info.box.width));
        const double h = heading_error(back.theta, info.box.theta);
        if (p > tolerance || e > tolerance || h > tolerance) ++file_bad;
        pos = std::max(pos, p);
        ext = std::max(ext, e);
        head = std::max(head, h);
        iou_min = std::min(iou_min, iou);
      }
      total += n;
      bad += file_bad;
      worst_pos = std::max(worst_pos, pos);
      worst_ext = std::max(worst_ext, ext);
      worst_heading = std::max(worst_heading, head);
      worst_iou = std::min(worst_iou, iou_min);
      char buf[256];
      std::snprintf(buf, sizeof buf, "%s boxes=%zu center_err=%.3g extent_err=%.3g heading_err=%.3g min_iou=%.12f%s\n",
                    path.string().c_str(), std::size_t(n), pos, ext, head, iou_min, file_bad ? " FAIL" : "");
      return std::string(buf);
    });
  });
  std::printf("encoding=%s boxes=%zu failures=%zu center_err=%.3g extent_err=%.3g heading_err=%.3g min_iou=%.12f\n",
              enc_name, total, bad, worst_pos, worst_ext, worst_heading, worst_iou);
  return bad ? kFileErrors : status;
}

std::vector<std::string> frame_ids(const fs::path& dir) {
  std::vector<std::string> ids;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".txt") ids.push_back(e.path().stem().string());
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::string join_ids(const std::vector<std::string>& ids) {
  std::string s;
  for (std::size_t i = 0; i < ids.size(); ++i) s += (i ? ", " : "") + ids[i];
  return s;
}

int cmd_evaluate(const CommonOptions& common, const std::string& gt_dir, const std::string& det_dir,
                 const std::string& split_file, const std::string& json_out, bool print_json) {
  Config cfg = build_config(common);
  if (!fs::is_directory(gt_dir)) throw Failure(GM_ERR_IO, "ground-truth directory not found: " + gt_dir);
  if (!fs::is_directory(det_dir)) throw Failure(GM_ERR_IO, "detection directory not found: " + det_dir);

  std::vector<std::string> frames;
  if (!split_file.empty()) {
    std::ifstream in(split_file);
    if (!in) throw Failure(GM_ERR_IO, "cannot open split file " + split_file);
    for (std::string id; in >> id;) frames.push_back(id);
  } else {
    frames = frame_ids(gt_dir);
  }
  std::vector<std::string> missing_gt;
  for (const auto& id : frames)
    if (!fs::exists(fs::path(gt_dir) / (id + ".txt"))) missing_gt.push_back(id);
  if (!missing_gt.empty())
    throw Failure(GM_ERR_FORMAT, "frames missing from ground truth: " + join_ids(missing_gt));

  // An empty detection directory means "no detections anywhere"; otherwise
  // the two frame sets have to agree.
  const std::vector<std::string> det_ids = frame_ids(det_dir);
  if (!det_ids.empty()) {
    const std::set<std::string> want(frames.begin(), frames.end());
    const std::set<std::string> have(det_ids.begin(), det_ids.end());
    std::vector<std::string> missing_det, extra_det;
    for (const auto& id : want)
      if (!have.count(id)) missing_det.push_back(id);
    // With a split, result files for other frames are simply not read.
    if (split_file.empty())
      for (const auto& id : have)
        if (!want.count(id)) extra_det.push_back(id);
    if (!missing_det.empty() || !extra_det.empty()) {
      std::string msg = "frame mismatch between ground truth and detections";
      if (!missing_det.empty()) msg += "; missing detections for: " + join_ids(missing_det);
      if (!extra_det.empty()) msg += "; detections without ground truth: " + join_ids(extra_det);
      throw Failure(GM_ERR_FORMAT, msg);
    }
  }

  gm_eval* raw_eval = nullptr;
  check(gm_eval_create(cfg.get(), &raw_eval));
  Eval ev(raw_eval);
  for (const auto& id : frames) {
    const fs::path gp = fs::path(gt_dir) / (id + ".txt");
    gm_labels* raw = nullptr;
    check(gm_labels_read(gp.string().c_str(), &raw), gp.string());
    Labels gt(raw);
    Detections dets;
    if (!det_ids.empty()) {
      const fs::path dp = fs::path(det_dir) / (id + ".txt");
      gm_detections* rd = nullptr;
      check(gm_detections_read(dp.string().c_str(), &rd), dp.string());
      dets.reset(rd);
    }
    check(gm_eval_add_frame(ev.get(), gt.get(), dets.get()));
  }
  std::vector<gm_ap_result> results(9);
  size_t count = 0;
  check(gm_eval_compute(ev.get(), results.data(), results.size(), &count));
  results.resize(std::min(count, results.size()));

  char* text = nullptr;
  check(gm_eval_format(results.data(), results.size(), print_json ? 1 : 0, &text));
  std::cout << take_string(text);
  if (print_json) std::cout << "\n";
  if (!json_out.empty()) {
    char* js = nullptr;
    check(gm_eval_format(results.data(), results.size(), 1, &js));
    std::ofstream f(json_out);
    f << take_string(js) << "\n";
    if (!f) throw Failure(GM_ERR_IO, "cannot write " + json_out);
  }
  return kOk;
}

struct StageStats {
  double median = 0.0;
  double p95 = 0.0;
};

StageStats stats_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  StageStats s;
  if (v.empty()) return s;
  const std::size_t n = v.size();
  s.median = n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  // Nearest-rank percentile.
  s.p95 = v[std::size_t(std::ceil(0.95 * double(n))) - 1];
  return s;
}

int cmd_bench(const CommonOptions& common, const std::vector<std::string>& scans, const CalibSource& calib_src,
              int repeat) {
  Config cfg = build_config(common);
  int threads = 1;
  check(gm_config_threads(cfg.get(), &threads));
  char* cfg_text = nullptr;
  check(gm_config_to_json(cfg.get(), &cfg_text));
  const json cfg_json = json::parse(take_string(cfg_text));
  const bool ground_enabled = cfg_json["ground"]["enabled"].get<bool>();

  const char* names[5] = {"read", "fov_filter", "ground_fit", "ray_cast", "assemble"};
  std::vector<double> samples[5];
  std::vector<double> totals;
  std::size_t points = 0;
  using clock = std::chrono::steady_clock;
  for (int r = 0; r < repeat; ++r) {
    for (const auto& s : scans) {
      const fs::path scan = s;
      Calib calib = load_calib(calib_src, scan, cfg.get());
      auto t = clock::now();
      const auto start = t;
      Cloud cloud = read_cloud(scan);
      samples[0].push_back(elapsed_ms(t));

      t = clock::now();
      if (calib) {
        gm_cloud* f = nullptr;
        check(gm_cloud_filter_fov(cloud.get(), calib.get(), &f));
        cloud.reset(f);
      }
      samples[1].push_back(elapsed_ms(t));
      if (r == 0) points += gm_cloud_size(cloud.get());

      t = clock::now();
      gm_plane plane{};
      const bool have_plane = gm_ground_fit(cloud.get(), cfg.get(), &plane, nullptr) == GM_OK;
      if (ground_enabled) {
        if (!have_plane) check(GM_ERR_DEGENERATE, scan.string());
        gm_cloud* ng = nullptr;
        check(gm_ground_split(cloud.get(), &plane, cfg.get(), nullptr, &ng));
        cloud.reset(ng);
      }
      samples[2].push_back(elapsed_ms(t));

      t = clock::now();
      gm_raster* raster = nullptr;
      check(gm_accumulate(cloud.get(), cfg.get(), &raster), scan.string());
      Raster acc(raster);
      samples[3].push_back(elapsed_ms(t));

      t = clock::now();
      gm_grid* grid = nullptr;
      check(gm_assemble(acc.get(), cfg.get(), have_plane ? &plane : nullptr, &grid), scan.string());
      Grid g(grid);
      samples[4].push_back(elapsed_ms(t));
      totals.push_back(elapsed_ms(start));
    }
  }
  std::printf("scans=%zu repeat=%d threads=%d points=%zu\n", scans.size(), repeat, threads, points);
  std::printf("%-12s %12s %12s\n", "stage", "median_ms", "p95_ms");
  for (int k = 0; k < 5; ++k) {
    const auto st = stats_of(samples[k]);
    std::printf("%-12s %12.3f %12.3f\n", names[k], st.median, st.p95);
  }
  const auto tot = stats_of(totals);
  std::printf("%-12s %12.3f %12.3f\n", "total", tot.median, tot.p95);
  double sum = 0.0;
  for (double v : totals) sum += v;
  std::printf("sum_ms %.3f\n", sum);
  return kOk;
}

void add_common(CLI::App* sub, CommonOptions& o) {
  sub->add_option("--config", o.config_path, "JSON pipeline config")->check(CLI::ExistingFile);
  sub->add_option("--set", o.overrides, "Override a config key, key=value (repeatable)");
  sub->add_option("--cell-size", o.cell_size, "Cell size in meters")->check(CLI::IsMember({"0.10", "0.15", "0.1"}));
  sub->add_option("--feature-config", o.feature_config, "Layer set")->check(CLI::IsMember({"F1", "F2", "F3", "F1*"}));
  sub->add_option("--box-encoding", o.box_encoding, "Box parameterization")->check(CLI::IsMember({"B1", "B2", "B3"}));
  sub->add_option("--ap-mode", o.ap_mode, "AP interpolation points")->check(CLI::IsMember({"11", "40"}));
  sub->add_option("--seed", o.seed, "Augmentation seed")->check(CLI::NonNegativeNumber);
  sub->add_option("--threads", o.threads, "Ray-casting worker threads")->check(CLI::PositiveNumber);
  sub->add_flag("--ground-removal", o.ground_removal, "Fit the ground plane and drop ground points");
  sub->add_flag("--no-fov-filter", o.no_fov, "Keep points outside the camera field of view");
}

void add_calib(CLI::App* sub, CalibSource& c) {
  auto* f = sub->add_option("--calib", c.file, "Calibration file used for every scan")->check(CLI::ExistingFile);
  sub->add_option("--calib-dir", c.dir, "Directory of <frame>.txt calibration files")
      ->check(CLI::ExistingDirectory)
      ->excludes(f);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"BEV grid-map preprocessing and evaluation for KITTI-style data"};
  app.set_version_flag("--version", std::string(gm_version()));
  app.require_subcommand(1);

  CommonOptions common;
  CalibSource calib;
  std::vector<std::string> inputs;
  std::string out_dir;
  int jobs = 1;

  auto* ras = app.add_subcommand("rasterize", "Rasterize scans into grid-map containers");
  add_common(ras, common);
  add_calib(ras, calib);
  ras->add_option("scans", inputs, "Velodyne .bin files")->required()->check(CLI::ExistingFile);
  ras->add_option("-o,--output-dir", out_dir, "Output directory")->required();
  bool render = false, timing = false;
  ras->add_flag("--render", render, "Also write a 16-bit PNG per layer");
  ras->add_flag("--timing", timing, "Print wall time per scan");
  ras->add_option("--jobs", jobs, "Scans processed in parallel")->check(CLI::PositiveNumber);

  auto* gnd = app.add_subcommand("ground", "Fit the ground plane and split each scan");
  add_common(gnd, common);
  add_calib(gnd, calib);
  gnd->add_option("scans", inputs, "Velodyne .bin files")->required()->check(CLI::ExistingFile);
  gnd->add_option("-o,--output-dir", out_dir, "Write non-ground points here");
  gnd->add_option("--jobs", jobs, "Scans processed in parallel")->check(CLI::PositiveNumber);

  auto* aug = app.add_subcommand("augment", "Flip/rotate scans and their labels");
  add_common(aug, common);
  add_calib(aug, calib);
  std::string label_dir;
  std::uint64_t first_index = 0;
  bool write_grid = false;
  aug->add_option("scans", inputs, "Velodyne .bin files")->required()->check(CLI::ExistingFile);
  aug->add_option("-o,--output-dir", out_dir, "Output directory")->required();
  aug->add_option("--label-dir", label_dir, "Directory of <frame>.txt labels")->check(CLI::ExistingDirectory);
  aug->add_option("--index", first_index, "Draw index of the first scan; later scans count up from it");
  aug->add_flag("--grid", write_grid, "Also rasterize the augmented scan");
  aug->add_flag("--render", render, "Also render the augmented grid");

  auto* enc = app.add_subcommand("encode-check", "Round-trip label boxes through a box encoding");
  add_common(enc, common);
  double tolerance = 1e-9;
  enc->add_option("labels", inputs, "Label files")->required()->check(CLI::ExistingFile);
  enc->add_option("--tolerance", tolerance, "Largest accepted round-trip error");

  auto* ev = app.add_subcommand("evaluate", "BEV average precision of detections against labels");
  add_common(ev, common);
  std::string gt_dir, det_dir, split_file, json_out;
  bool print_json = false;
  ev->add_option("--gt-dir", gt_dir, "Ground-truth label directory")->required();
  ev->add_option("--det-dir", det_dir, "Detection result directory")->required();
  ev->add_option("--split", split_file, "File listing the frame ids to evaluate");
  ev->add_option("--json-out", json_out, "Also write the results as JSON");
  ev->add_flag("--json", print_json, "Print JSON instead of the table");

  auto* bench = app.add_subcommand("bench", "Per-stage timing of the rasterization pipeline");
  add_common(bench, common);
  add_calib(bench, calib);
  int repeat = 5;
  bench->add_option("scans", inputs, "Velodyne .bin files")->required()->check(CLI::ExistingFile);
  bench->add_option("--repeat", repeat, "Passes over the scan set")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Help and version exit 0; usage errors share the config exit code.
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*ras) return cmd_rasterize(common, inputs, out_dir, calib, render, timing, jobs);
    if (*gnd) return cmd_ground(common, inputs, out_dir, calib, jobs);
    if (*aug) return cmd_augment(common, inputs, out_dir, calib, label_dir, first_index, write_grid, render);
    if (*enc) return cmd_encode_check(common, inputs, tolerance);
    if (*ev) return cmd_evaluate(common, gt_dir, det_dir, split_file, json_out, print_json);
    if (*bench) return cmd_bench(common, inputs, calib, repeat);
  } catch (const Failure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.status == GM_ERR_CONFIG || e.status == GM_ERR_INVALID_ARGUMENT ? kUsage : kFileErrors;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFileErrors;
  }
  return kUsage;
}
