#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gridmap/box.hpp"

namespace gridmap {

struct CalibrationSet;

/// The eight labeled KITTI classes plus DontCare.
enum class RawClass { Car, Van, Truck, Pedestrian, PersonSitting, Cyclist, Tram, Misc, DontCare };

/// Training classes after merging Van into Car and sitting persons into Pedestrian.
enum class ObjectClass { Car, Pedestrian, Cyclist, Truck, Misc, Tram };

inline constexpr std::array<RawClass, 8> kLabeledClasses = {RawClass::Car,     RawClass::Pedestrian,
                                                             RawClass::Van,     RawClass::Cyclist,
                                                             RawClass::Truck,   RawClass::Misc,
                                                             RawClass::Tram,    RawClass::PersonSitting};
inline constexpr std::array<ObjectClass, 6> kObjectClasses = {ObjectClass::Car,   ObjectClass::Pedestrian,
                                                              ObjectClass::Cyclist, ObjectClass::Truck,
                                                              ObjectClass::Misc,  ObjectClass::Tram};

std::string_view to_string(RawClass c);
std::string_view to_string(ObjectClass c);
std::optional<RawClass> parse_raw_class(std::string_view token);
std::optional<ObjectClass> parse_object_class(std::string_view token);

/// Total over every RawClass; DontCare has no object class.
std::optional<ObjectClass> merge_class(RawClass c);

struct ImageBox {
  double left = 0.0;
  double top = 0.0;
  double right = 0.0;
  double bottom = 0.0;
  double height() const { return bottom - top; }
};

/// Frame the BEV boxes of a label set are expressed in. CameraBev maps the
/// rectified camera frame onto x forward (= z_cam), y left (= -x_cam).
enum class LabelFrame { CameraBev, Sensor };

struct GroundTruthLabel {
  RawClass raw_class = RawClass::Car;
  ObjectClass merged_class = ObjectClass::Car;
  double truncation = 0.0;
  int occlusion = 0;
  double alpha = 0.0;
  ImageBox image_bbox;
  RotatedBox box;
  double height = 0.0;
  /// Vertical coordinate of the box bottom: camera y (down) in CameraBev,
  /// sensor z (up) in Sensor.
  double elevation = 0.0;
};

struct DontCareRegion {
  ImageBox image_bbox;
};

struct FrameLabels {
  LabelFrame frame = LabelFrame::CameraBev;
  std::vector<GroundTruthLabel> objects;
  std::vector<DontCareRegion> dont_care;
};

struct DetectionRecord {
  ObjectClass object_class = ObjectClass::Car;
  RotatedBox box;
  double score = 0.0;
  std::optional<ImageBox> image_bbox;
};

FrameLabels parse_labels(std::string_view text, std::string_view source = "<memory>");
FrameLabels read_labels(const std::filesystem::path& path);
std::string format_labels(const FrameLabels& labels);
void write_labels(const FrameLabels& labels, const std::filesystem::path& path);

/// Sorted by descending score (stable), one KITTI result line per record.
std::string format_detections(const std::vector<DetectionRecord>& dets);
void write_detections(const std::vector<DetectionRecord>& dets, const std::filesystem::path& path);
std::vector<DetectionRecord> parse_detections(std::string_view text, std::string_view source = "<memory>");
std::vector<DetectionRecord> read_detections(const std::filesystem::path& path);

FrameLabels labels_to_sensor_frame(const FrameLabels& labels, const CalibrationSet& calib);
FrameLabels labels_to_camera_frame(const FrameLabels& labels, const CalibrationSet& calib);

struct ClassStatistics {
  RawClass raw_class = RawClass::Car;
  std::size_t count = 0;
  double occurrence_percent = 0.0;
  double max_length = 0.0;
  double max_width = 0.0;
};

/// Occurrence share and maximum extents per labeled class (DontCare excluded).
std::vector<ClassStatistics> class_statistics(const std::vector<FrameLabels>& frames);

}  // namespace gridmap
