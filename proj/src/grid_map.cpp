#include "gridmap/grid_map.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <memory>

#include "gridmap/error.hpp"

namespace gridmap {
namespace {

using nlohmann::json;

constexpr const char* kContainerFormat = "gridmap-container";
constexpr int kContainerVersion = 1;

std::vector<float> make_layer(const AccumulatorRaster& acc, std::string_view name) {
  std::vector<float> out(acc.cells.size(), 0.0f);
  for (std::size_t i = 0; i < acc.cells.size(); ++i) {
    const CellAccumulator& c = acc.cells[i];
    double v = 0.0;
    if (name == "intensity") {
      v = c.detections ? c.intensity_sum() / c.detections : 0.0;
    } else if (name == "z_min") {
      v = c.detections ? c.z_min : 0.0;
    } else if (name == "z_max") {
      v = c.detections ? c.z_max : 0.0;
    } else if (name == "detections") {
      v = c.detections;
    } else if (name == "observations") {
      v = c.observations;
    } else if (name == "decay_rate") {
      v = compute_decay_rate(c);
    }
    out[i] = float(v);
  }
  return out;
}

struct PngWriteGuard {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngWriteGuard() { png_destroy_write_struct(&png, &info); }
};

struct PngReadGuard {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngReadGuard() { png_destroy_read_struct(&png, &info, nullptr); }
};

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};

}  // namespace

std::string_view to_string(FeatureConfig fc) {
  switch (fc) {
    case FeatureConfig::F1: return "F1";
    case FeatureConfig::F2: return "F2";
    case FeatureConfig::F3: return "F3";
    case FeatureConfig::F1Star: return "F1*";
  }
  return "?";
}

FeatureConfig parse_feature_config(std::string_view name) {
  if (name == "F1") return FeatureConfig::F1;
  if (name == "F2") return FeatureConfig::F2;
  if (name == "F3") return FeatureConfig::F3;
  if (name == "F1*" || name == "F1star" || name == "F1Star") return FeatureConfig::F1Star;
  fail(ErrorCode::Config, "unknown feature configuration '" + std::string(name) + "' (expected F1, F2, F3 or F1*)");
}

std::vector<std::string> layer_names(FeatureConfig fc) {
  switch (fc) {
    case FeatureConfig::F1:
    case FeatureConfig::F1Star: return {"intensity", "z_min", "z_max", "detections", "observations"};
    case FeatureConfig::F2: return {"intensity", "z_min", "z_max", "decay_rate"};
    case FeatureConfig::F3: return {"intensity", "detections", "observations"};
  }
  fail(ErrorCode::Config, "unknown feature configuration");
}

const std::vector<float>& MultiLayerGridMap::layer(std::string_view name) const {
  for (std::size_t i = 0; i < layer_names.size(); ++i)
    if (layer_names[i] == name) return layers[i];
  fail(ErrorCode::InvalidArgument, "grid map (" + std::string(to_string(feature_config)) + ") has no layer '" +
                                       std::string(name) + "'");
}

bool operator==(const MultiLayerGridMap& a, const MultiLayerGridMap& b) {
  auto same_transform = [](const std::optional<AppliedTransform>& x, const std::optional<AppliedTransform>& y) {
    if (x.has_value() != y.has_value()) return false;
    if (!x) return true;
    return x->flipped == y->flipped && x->angle == y->angle && x->seed == y->seed && x->draw_index == y->draw_index;
  };
  return a.config.extent_x == b.config.extent_x && a.config.extent_y == b.config.extent_y &&
         a.config.cell_size == b.config.cell_size && a.config.sensor_origin == b.config.sensor_origin &&
         a.feature_config == b.feature_config && a.rows == b.rows && a.cols == b.cols &&
         a.layer_names == b.layer_names && a.layers == b.layers && same_transform(a.applied_transform, b.applied_transform);
}

MultiLayerGridMap assemble_features(const AccumulatorRaster& acc, FeatureConfig fc,
                                    const std::optional<PlaneParams>& ground_plane) {
  if (fc == FeatureConfig::F1Star && !ground_plane)
    fail(ErrorCode::Config, "feature configuration F1* needs a fitted ground plane (enable ground removal)");
  MultiLayerGridMap map;
  map.config = acc.config;
  map.feature_config = fc;
  map.rows = acc.config.rows();
  map.cols = acc.config.cols();
  map.layer_names = layer_names(fc);
  for (const auto& name : map.layer_names) map.layers.push_back(make_layer(acc, name));
  return map;
}

std::string grid_header_json(const MultiLayerGridMap& map) {
  json header = {
      {"format", kContainerFormat},
      {"version", kContainerVersion},
      {"grid",
       {{"extent_x", map.config.extent_x},
        {"extent_y", map.config.extent_y},
        {"cell_size", map.config.cell_size},
        {"sensor_origin", map.config.sensor_origin}}},
      {"feature_config", std::string(to_string(map.feature_config))},
      {"layers", map.layer_names},
      {"rows", map.rows},
      {"cols", map.cols},
      {"layout", "row-major"},
      {"dtype", "float32-le"},
  };
  if (map.applied_transform) {
    const auto& t = *map.applied_transform;
    header["augmentation"] = {{"flipped", t.flipped}, {"angle", t.angle}, {"seed", t.seed}, {"draw_index", t.draw_index}};
  }
  return header.dump();
}

void write_grid_map(const MultiLayerGridMap& map, const std::filesystem::path& path) {
  std::string blob = grid_header_json(map);
  blob += '\n';
  const std::size_t header_size = blob.size();
  blob.resize(header_size + map.layers.size() * std::size_t(map.rows) * std::size_t(map.cols) * 4);
  char* out = blob.data() + header_size;
  for (const auto& layer : map.layers) {
    for (float v : layer) {
      auto bits = std::bit_cast<std::uint32_t>(v);
      for (int i = 0; i < 4; ++i) *out++ = static_cast<char>(bits >> (8 * i));
    }
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) fail(ErrorCode::Io, "cannot write grid container '" + path.string() + "'");
  f.write(blob.data(), std::streamsize(blob.size()));
  if (!f) fail(ErrorCode::Io, "short write to '" + path.string() + "'");
}

MultiLayerGridMap read_grid_map(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::Io, "cannot open grid container '" + path.string() + "'");
  std::string header_line;
  std::getline(f, header_line);
  json header;
  try {
    header = json::parse(header_line);
  } catch (const json::exception& e) {
    fail(ErrorCode::Format, path.string() + ": bad container header: " + e.what());
  }
  MultiLayerGridMap map;
  try {
    if (header.at("format") != kContainerFormat || header.at("version") != kContainerVersion)
      fail(ErrorCode::Format, path.string() + ": not a version 1 grid container");
    const auto& g = header.at("grid");
    map.config.extent_x = g.at("extent_x");
    map.config.extent_y = g.at("extent_y");
    map.config.cell_size = g.at("cell_size");
    map.config.sensor_origin = g.at("sensor_origin");
    map.feature_config = parse_feature_config(header.at("feature_config").get<std::string>());
    map.layer_names = header.at("layers").get<std::vector<std::string>>();
    map.rows = header.at("rows");
    map.cols = header.at("cols");
    if (header.contains("augmentation")) {
      const auto& a = header["augmentation"];
      map.applied_transform = AppliedTransform{a.at("flipped"), a.at("angle"), a.at("seed"), a.at("draw_index")};
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::Format, path.string() + ": bad container header: " + e.what());
  }
  map.config.validate();
  if (map.layer_names != layer_names(map.feature_config))
    fail(ErrorCode::Format, path.string() + ": layer list does not match feature configuration " +
                                std::string(to_string(map.feature_config)));
  if (map.rows != map.config.rows() || map.cols != map.config.cols())
    fail(ErrorCode::Format, path.string() + ": dimensions disagree with the grid configuration");

  const std::size_t cells = std::size_t(map.rows) * std::size_t(map.cols);
  std::vector<char> raw(cells * 4);
  for (std::size_t l = 0; l < map.layer_names.size(); ++l) {
    f.read(raw.data(), std::streamsize(raw.size()));
    if (f.gcount() != std::streamsize(raw.size()))
      fail(ErrorCode::Format, path.string() + ": truncated plane for layer '" + map.layer_names[l] + "'");
    std::vector<float> layer(cells);
    for (std::size_t i = 0; i < cells; ++i) {
      std::uint32_t bits = 0;
      for (int b = 0; b < 4; ++b) bits |= std::uint32_t(static_cast<unsigned char>(raw[i * 4 + b])) << (8 * b);
      layer[i] = std::bit_cast<float>(bits);
    }
    map.layers.push_back(std::move(layer));
  }
  if (f.peek() != std::char_traits<char>::eof()) fail(ErrorCode::Format, path.string() + ": trailing bytes");
  return map;
}

void render_layer(const MultiLayerGridMap& map, std::string_view layer_name, const std::filesystem::path& path) {
  const auto& layer = map.layer(layer_name);
  double lo = 0.0, hi = 0.0;
  if (!layer.empty()) {
    auto [mn, mx] = std::minmax_element(layer.begin(), layer.end());
    lo = *mn;
    hi = *mx;
  }
  std::vector<std::uint16_t> pixels(layer.size(), 0);
  if (hi > lo) {
    for (std::size_t i = 0; i < layer.size(); ++i)
      pixels[i] = static_cast<std::uint16_t>(std::lround((double(layer[i]) - lo) / (hi - lo) * 65535.0));
  }
  // PNG stores 16-bit samples big-endian.
  std::vector<unsigned char> bytes(pixels.size() * 2);
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    bytes[2 * i] = static_cast<unsigned char>(pixels[i] >> 8);
    bytes[2 * i + 1] = static_cast<unsigned char>(pixels[i] & 0xff);
  }

  char lo_text[40], hi_text[40];
  std::snprintf(lo_text, sizeof lo_text, "%.17g", lo);
  std::snprintf(hi_text, sizeof hi_text, "%.17g", hi);
  std::string name(layer_name);

  std::unique_ptr<std::FILE, FileCloser> file(std::fopen(path.string().c_str(), "wb"));
  if (!file) fail(ErrorCode::Io, "cannot write image '" + path.string() + "'");
  PngWriteGuard g;
  g.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!g.png) fail(ErrorCode::Io, "libpng initialization failed");
  g.info = png_create_info_struct(g.png);
  if (!g.info || setjmp(png_jmpbuf(g.png))) fail(ErrorCode::Io, "libpng failed writing '" + path.string() + "'");
  png_init_io(g.png, file.get());
  png_set_IHDR(g.png, g.info, png_uint_32(map.cols), png_uint_32(map.rows), 16, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_text text[3] = {};
  text[0].compression = text[1].compression = text[2].compression = PNG_TEXT_COMPRESSION_NONE;
  text[0].key = const_cast<char*>("gridmap:layer");
  text[0].text = name.data();
  text[1].key = const_cast<char*>("gridmap:min");
  text[1].text = lo_text;
  text[2].key = const_cast<char*>("gridmap:max");
  text[2].text = hi_text;
  png_set_text(g.png, g.info, text, 3);
  // Fixed zlib level keeps the output byte-identical across runs.
  png_set_compression_level(g.png, 6);
  png_write_info(g.png, g.info);
  for (int r = 0; r < map.rows; ++r) png_write_row(g.png, bytes.data() + std::size_t(r) * std::size_t(map.cols) * 2);
  png_write_end(g.png, nullptr);
}

std::vector<float> LayerImage::denormalized() const {
  std::vector<float> out(pixels.size());
  for (std::size_t i = 0; i < pixels.size(); ++i)
    out[i] = float(min_value + double(pixels[i]) / 65535.0 * (max_value - min_value));
  return out;
}

LayerImage load_layer_png(const std::filesystem::path& path) {
  std::unique_ptr<std::FILE, FileCloser> file(std::fopen(path.string().c_str(), "rb"));
  if (!file) fail(ErrorCode::Io, "cannot open image '" + path.string() + "'");
  PngReadGuard g;
  g.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!g.png) fail(ErrorCode::Io, "libpng initialization failed");
  g.info = png_create_info_struct(g.png);
  if (!g.info || setjmp(png_jmpbuf(g.png))) fail(ErrorCode::Format, "libpng failed reading '" + path.string() + "'");
  png_init_io(g.png, file.get());
  png_read_info(g.png, g.info);
  if (png_get_bit_depth(g.png, g.info) != 16 || png_get_color_type(g.png, g.info) != PNG_COLOR_TYPE_GRAY)
    fail(ErrorCode::Format, path.string() + ": expected a 16-bit grayscale image");

  LayerImage img;
  img.cols = int(png_get_image_width(g.png, g.info));
  img.rows = int(png_get_image_height(g.png, g.info));
  png_textp texts = nullptr;
  int count = png_get_text(g.png, g.info, &texts, nullptr);
  for (int i = 0; i < count; ++i) {
    if (std::strcmp(texts[i].key, "gridmap:min") == 0) img.min_value = std::strtod(texts[i].text, nullptr);
    if (std::strcmp(texts[i].key, "gridmap:max") == 0) img.max_value = std::strtod(texts[i].text, nullptr);
  }
  std::vector<unsigned char> row(std::size_t(img.cols) * 2);
  img.pixels.reserve(std::size_t(img.rows) * std::size_t(img.cols));
  for (int r = 0; r < img.rows; ++r) {
    png_read_row(g.png, row.data(), nullptr);
    for (int c = 0; c < img.cols; ++c)
      img.pixels.push_back(std::uint16_t((row[2 * std::size_t(c)] << 8) | row[2 * std::size_t(c) + 1]));
  }
  return img;
}

}  // namespace gridmap
