#include "gridmap/labels.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "gridmap/calibration.hpp"
#include "gridmap/error.hpp"

namespace gridmap {
namespace {

using std::numbers::pi;

struct ParsedLine {
  std::string type;
  std::vector<double> values;  // everything after the type token
};

std::vector<ParsedLine> tokenize(std::string_view text, std::string_view source, std::size_t min_values) {
  std::vector<ParsedLine> lines;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream fields(line);
    ParsedLine parsed;
    if (!(fields >> parsed.type)) continue;
    std::string tok;
    while (fields >> tok) {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (ec != std::errc() || ptr != tok.data() + tok.size())
        fail(ErrorCode::Format, std::string(source) + ":" + std::to_string(lineno) + ": bad number '" + tok + "'");
      parsed.values.push_back(v);
    }
    if (parsed.values.size() < min_values)
      fail(ErrorCode::Format, std::string(source) + ":" + std::to_string(lineno) + ": expected at least " +
                                  std::to_string(min_values + 1) + " fields, got " +
                                  std::to_string(parsed.values.size() + 1));
    if (!parse_raw_class(parsed.type))
      fail(ErrorCode::Format,
           std::string(source) + ":" + std::to_string(lineno) + ": unknown class '" + parsed.type + "'");
    lines.push_back(std::move(parsed));
  }
  return lines;
}

// Camera rotation_y -> BEV heading, and back.
double heading_from_rotation_y(double ry) { return canonical_heading(-ry - pi / 2); }
double rotation_y_from_heading(double theta) { return wrap_angle(-theta - pi / 2); }

RotatedBox bev_box(const std::vector<double>& v) {
  // v: trunc occ alpha l t r b h w l x y z ry
  return {v[12], -v[10], v[9], v[8], heading_from_rotation_y(v[13])};
}

std::string format_line(std::string_view type, double trunc, int occ, double alpha, const ImageBox& bb,
                        double h, double w, double l, double x, double y, double z, double ry) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s %.2f %d %.2f %.2f %.2f %.2f %.2f %.2f %.2f %.2f %.2f %.2f %.2f %.2f",
                std::string(type).c_str(), trunc, occ, alpha, bb.left, bb.top, bb.right, bb.bottom, h, w, l, x, y,
                z, ry);
  return buf;
}

std::string slurp(const std::filesystem::path& path, std::string_view what) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open " + std::string(what) + " '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void dump(const std::string& text, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot write '" + path.string() + "'");
  out << text;
  if (!out) fail(ErrorCode::Io, "short write to '" + path.string() + "'");
}

}  // namespace

std::string_view to_string(RawClass c) {
  switch (c) {
    case RawClass::Car: return "Car";
    case RawClass::Van: return "Van";
    case RawClass::Truck: return "Truck";
    case RawClass::Pedestrian: return "Pedestrian";
    case RawClass::PersonSitting: return "Person_sitting";
    case RawClass::Cyclist: return "Cyclist";
    case RawClass::Tram: return "Tram";
    case RawClass::Misc: return "Misc";
    case RawClass::DontCare: return "DontCare";
  }
  return "?";
}

std::string_view to_string(ObjectClass c) {
  switch (c) {
    case ObjectClass::Car: return "Car";
    case ObjectClass::Pedestrian: return "Pedestrian";
    case ObjectClass::Cyclist: return "Cyclist";
    case ObjectClass::Truck: return "Truck";
    case ObjectClass::Misc: return "Misc";
    case ObjectClass::Tram: return "Tram";
  }
  return "?";
}

std::optional<RawClass> parse_raw_class(std::string_view token) {
  static const std::map<std::string_view, RawClass> table = {
      {"Car", RawClass::Car},       {"Van", RawClass::Van},
      {"Truck", RawClass::Truck},   {"Pedestrian", RawClass::Pedestrian},
      {"Person_sitting", RawClass::PersonSitting}, {"Cyclist", RawClass::Cyclist},
      {"Tram", RawClass::Tram},     {"Misc", RawClass::Misc},
      {"DontCare", RawClass::DontCare}};
  auto it = table.find(token);
  if (it == table.end()) return std::nullopt;
  return it->second;
}

std::optional<ObjectClass> parse_object_class(std::string_view token) {
  for (ObjectClass c : kObjectClasses)
    if (to_string(c) == token) return c;
  return std::nullopt;
}

std::optional<ObjectClass> merge_class(RawClass c) {
  switch (c) {
    case RawClass::Car:
    case RawClass::Van: return ObjectClass::Car;
    case RawClass::Pedestrian:
    case RawClass::PersonSitting: return ObjectClass::Pedestrian;
    case RawClass::Cyclist: return ObjectClass::Cyclist;
    case RawClass::Truck: return ObjectClass::Truck;
    case RawClass::Misc: return ObjectClass::Misc;
    case RawClass::Tram: return ObjectClass::Tram;
    case RawClass::DontCare: return std::nullopt;
  }
  return std::nullopt;
}

FrameLabels parse_labels(std::string_view text, std::string_view source) {
  FrameLabels labels;
  for (const ParsedLine& line : tokenize(text, source, 14)) {
    const auto& v = line.values;
    RawClass raw = *parse_raw_class(line.type);
    ImageBox bb{v[3], v[4], v[5], v[6]};
    if (raw == RawClass::DontCare) {
      labels.dont_care.push_back({bb});
      continue;
    }
    GroundTruthLabel label;
    label.raw_class = raw;
    label.merged_class = *merge_class(raw);
    label.truncation = v[0];
    label.occlusion = static_cast<int>(std::lround(v[1]));
    label.alpha = v[2];
    label.image_bbox = bb;
    label.height = v[7];
    label.box = bev_box(v);
    label.elevation = v[11];
    labels.objects.push_back(label);
  }
  return labels;
}

FrameLabels read_labels(const std::filesystem::path& path) {
  return parse_labels(slurp(path, "label file"), path.string());
}

std::string format_labels(const FrameLabels& labels) {
  if (labels.frame != LabelFrame::CameraBev)
    fail(ErrorCode::InvalidArgument, "labels must be in the camera frame to be written in KITTI format");
  std::string out;
  for (const auto& l : labels.objects) {
    out += format_line(to_string(l.raw_class), l.truncation, l.occlusion, l.alpha, l.image_bbox, l.height,
                       l.box.width, l.box.length, -l.box.y, l.elevation, l.box.x, rotation_y_from_heading(l.box.theta));
    out += '\n';
  }
  for (const auto& dc : labels.dont_care) {
    out += format_line("DontCare", -1, -1, -10, dc.image_bbox, -1, -1, -1, -1000, -1000, -1000, -10);
    out += '\n';
  }
  return out;
}

void write_labels(const FrameLabels& labels, const std::filesystem::path& path) { dump(format_labels(labels), path); }

std::string format_detections(const std::vector<DetectionRecord>& dets) {
  std::vector<const DetectionRecord*> order;
  order.reserve(dets.size());
  for (const auto& d : dets) {
    if (!std::isfinite(d.score)) fail(ErrorCode::InvalidArgument, "detection score is not finite");
    order.push_back(&d);
  }
  std::stable_sort(order.begin(), order.end(),
                   [](const DetectionRecord* a, const DetectionRecord* b) { return a->score > b->score; });
  std::string out;
  for (const DetectionRecord* d : order) {
    ImageBox bb = d->image_bbox.value_or(ImageBox{-1, -1, -1, -1});
    // Height and camera y are not carried by detections: -1 and 0 placeholders.
    out += format_line(to_string(d->object_class), -1, -1, -10, bb, -1, d->box.width, d->box.length, -d->box.y, 0.0,
                       d->box.x, rotation_y_from_heading(d->box.theta));
    char score[32];
    std::snprintf(score, sizeof score, " %.4f\n", d->score);
    out += score;
  }
  return out;
}

void write_detections(const std::vector<DetectionRecord>& dets, const std::filesystem::path& path) {
  dump(format_detections(dets), path);
}

std::vector<DetectionRecord> parse_detections(std::string_view text, std::string_view source) {
  std::vector<DetectionRecord> dets;
  std::size_t index = 0;
  for (const ParsedLine& line : tokenize(text, source, 15)) {
    ++index;
    RawClass raw = *parse_raw_class(line.type);
    if (raw == RawClass::DontCare) continue;
    const auto& v = line.values;
    DetectionRecord d;
    d.object_class = *merge_class(raw);
    d.box = bev_box(v);
    d.score = v[14];
    if (!std::isfinite(d.score))
      fail(ErrorCode::Format, std::string(source) + ": detection " + std::to_string(index) + " has no finite score");
    ImageBox bb{v[3], v[4], v[5], v[6]};
    if (bb.right > bb.left && bb.bottom > bb.top) d.image_bbox = bb;
    dets.push_back(d);
  }
  return dets;
}

std::vector<DetectionRecord> read_detections(const std::filesystem::path& path) {
  return parse_detections(slurp(path, "detection file"), path.string());
}

namespace {

template <typename Transform>
FrameLabels transform_labels(const FrameLabels& labels, LabelFrame target, Transform&& to_target,
                             bool from_camera) {
  FrameLabels out = labels;
  out.frame = target;
  for (auto& l : out.objects) {
    const double c = std::cos(l.box.theta);
    const double s = std::sin(l.box.theta);
    Eigen::Vector3d center, dir;
    if (from_camera) {
      center = {-l.box.y, l.elevation, l.box.x};
      dir = {-s, 0.0, c};
    } else {
      center = {l.box.x, l.box.y, l.elevation};
      dir = {c, s, 0.0};
    }
    Eigen::Vector3d p = to_target(center);
    Eigen::Vector3d d = to_target(Eigen::Vector3d(center + dir)) - p;
    if (from_camera) {
      l.box.x = p.x();
      l.box.y = p.y();
      l.elevation = p.z();
      l.box.theta = canonical_heading(std::atan2(d.y(), d.x()));
    } else {
      l.box.x = p.z();
      l.box.y = -p.x();
      l.elevation = p.y();
      l.box.theta = canonical_heading(std::atan2(-d.x(), d.z()));
    }
  }
  return out;
}

}  // namespace

FrameLabels labels_to_sensor_frame(const FrameLabels& labels, const CalibrationSet& calib) {
  if (labels.frame == LabelFrame::Sensor) return labels;
  return transform_labels(labels, LabelFrame::Sensor, [&](const Eigen::Vector3d& p) { return calib.to_lidar(p); },
                          true);
}

FrameLabels labels_to_camera_frame(const FrameLabels& labels, const CalibrationSet& calib) {
  if (labels.frame == LabelFrame::CameraBev) return labels;
  return transform_labels(labels, LabelFrame::CameraBev,
                          [&](const Eigen::Vector3d& p) { return calib.to_rectified(p); }, false);
}

std::vector<ClassStatistics> class_statistics(const std::vector<FrameLabels>& frames) {
  std::vector<ClassStatistics> stats;
  for (RawClass c : kLabeledClasses) stats.push_back({c, 0, 0.0, 0.0, 0.0});
  std::size_t total = 0;
  for (const auto& f : frames) {
    for (const auto& l : f.objects) {
      auto it = std::find_if(stats.begin(), stats.end(), [&](const auto& s) { return s.raw_class == l.raw_class; });
      ++it->count;
      ++total;
      it->max_length = std::max(it->max_length, l.box.length);
      it->max_width = std::max(it->max_width, l.box.width);
    }
  }
  for (auto& s : stats) s.occurrence_percent = total ? 100.0 * double(s.count) / double(total) : 0.0;
  return stats;
}

}  // namespace gridmap
