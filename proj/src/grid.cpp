#include "gridmap/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <thread>

#include "gridmap/error.hpp"

namespace gridmap {
namespace {

constexpr double kMinCrossing = 1e-9;  // meters; shorter crossings are corner touches

int whole_cells(double extent, double cell) {
  const double n = std::round(extent / cell);
  if (!(n >= 1.0) || std::abs(n * cell - extent) > 1e-9 * std::max(1.0, extent)) return -1;
  return int(n);
}

// Walks the cells along origin->end, calling visit(CellIndex, length).
template <typename Visit>
void walk_ray(const GridConfig& cfg, const std::array<double, 3>& o, const std::array<double, 3>& e, Visit&& visit) {
  const double dx = e[0] - o[0];
  const double dy = e[1] - o[1];
  const double dz = e[2] - o[2];
  const double len3 = std::sqrt(dx * dx + dy * dy + dz * dz);
  const int cols = cfg.cols();
  const int rows = cfg.rows();
  const double cs = cfg.cell_size;
  const double xmin = cfg.x_min(), ymin = cfg.y_min();
  const double xmax = cfg.x_max(), ymax = cfg.y_max();

  // Slab clip against the grid box.
  double t0 = 0.0, t1 = 1.0;
  auto clip = [&](double o_, double d_, double lo, double hi) {
    if (d_ == 0.0) return o_ >= lo && o_ <= hi;
    double ta = (lo - o_) / d_;
    double tb = (hi - o_) / d_;
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    return true;
  };
  if (!clip(o[0], dx, xmin, xmax) || !clip(o[1], dy, ymin, ymax) || !(t0 < t1)) {
    // Purely vertical ray: the whole segment stays in one column.
    if (dx == 0.0 && dy == 0.0 && len3 > 0.0) {
      if (auto c = point_to_cell(cfg, o[0], o[1])) visit(*c, len3);
    }
    return;
  }
  if (dx == 0.0 && dy == 0.0) {
    if (auto c = point_to_cell(cfg, o[0], o[1])) visit(*c, len3);
    return;
  }

  // Entry cell: the cell the segment occupies just after t0.
  auto entry_index = [&](double pos, double d_, double lo, int n) {
    const double u = (pos - lo) / cs;
    int i = int(std::floor(u));
    if (d_ < 0.0 && double(i) == u) --i;
    return std::clamp(i, 0, n - 1);
  };
  int ix = entry_index(o[0] + t0 * dx, dx, xmin, cols);
  int iy = entry_index(o[1] + t0 * dy, dy, ymin, rows);
  const int sx = dx > 0.0 ? 1 : (dx < 0.0 ? -1 : 0);
  const int sy = dy > 0.0 ? 1 : (dy < 0.0 ? -1 : 0);
  const double inv_dx = sx ? 1.0 / dx : 0.0;
  const double inv_dy = sy ? 1.0 / dy : 0.0;
  constexpr double inf = std::numeric_limits<double>::infinity();
  // Slab exit of cell (ix, iy) along each axis.
  auto exit_x = [&](int i) { return sx ? (xmin + double(sx > 0 ? i + 1 : i) * cs - o[0]) * inv_dx : inf; };
  auto exit_y = [&](int j) { return sy ? (ymin + double(sy > 0 ? j + 1 : j) * cs - o[1]) * inv_dy : inf; };

  double t = t0;
  double tx = exit_x(ix);
  double ty = exit_y(iy);
  while (true) {
    const double tn = std::min({tx, ty, t1});
    const double length = (tn - t) * len3;
    if (length > kMinCrossing) visit(CellIndex{iy, ix}, length);
    if (tn >= t1) break;
    if (tx <= ty) {
      ix += sx;
      if (ix < 0 || ix >= cols) break;
      tx = exit_x(ix);
    }
    if (ty <= tn) {
      iy += sy;
      if (iy < 0 || iy >= rows) break;
      ty = exit_y(iy);
    }
    t = tn;
  }
}

std::int64_t to_fixed(double v) { return std::llround(v * kFixedPointScale); }

void accumulate_range(const GridConfig& cfg, const std::vector<Point>& pts, std::size_t begin, std::size_t end,
                      std::vector<CellAccumulator>& cells) {
  const std::array<double, 3> origin = cfg.sensor_origin;
  for (std::size_t i = begin; i < end; ++i) {
    const Point& p = pts[i];
    const std::array<double, 3> tip{p.x, p.y, p.z};
    std::size_t last = std::numeric_limits<std::size_t>::max();
    if (tip != origin) {
      walk_ray(cfg, origin, tip, [&](CellIndex c, double len) {
        last = linear_index(cfg, c);
        CellAccumulator& acc = cells[last];
        ++acc.observations;
        acc.traversal_fixed += to_fixed(len);
      });
    }
    if (auto c = point_to_cell(cfg, p.x, p.y)) {
      const std::size_t idx = linear_index(cfg, *c);
      CellAccumulator& acc = cells[idx];
      if (idx != last) ++acc.observations;
      if (acc.detections == 0) {
        acc.z_min = acc.z_max = p.z;
      } else {
        acc.z_min = std::min(acc.z_min, p.z);
        acc.z_max = std::max(acc.z_max, p.z);
      }
      ++acc.detections;
      acc.intensity_fixed += to_fixed(p.intensity);
    }
  }
}

}  // namespace

int GridConfig::cols() const { return whole_cells(extent_x, cell_size); }
int GridConfig::rows() const { return whole_cells(extent_y, cell_size); }

void GridConfig::validate() const {
  if (!(cell_size > 0.0) || !std::isfinite(cell_size)) fail(ErrorCode::Config, "cell_size must be positive");
  if (!(extent_x > 0.0) || !(extent_y > 0.0)) fail(ErrorCode::Config, "grid extents must be positive");
  if (cols() < 0 || rows() < 0)
    fail(ErrorCode::Config, "grid extent " + std::to_string(extent_x) + " x " + std::to_string(extent_y) +
                                " is not a whole number of " + std::to_string(cell_size) + " m cells");
  for (double v : sensor_origin)
    if (!std::isfinite(v)) fail(ErrorCode::Config, "sensor origin must be finite");
}

std::optional<CellIndex> point_to_cell(const GridConfig& cfg, double x, double y) {
  const double u = x - cfg.x_min();
  const double v = y - cfg.y_min();
  if (!(u >= 0.0 && u <= cfg.extent_x && v >= 0.0 && v <= cfg.extent_y)) return std::nullopt;
  const int col = std::min(int(std::floor(u / cfg.cell_size)), cfg.cols() - 1);
  const int row = std::min(int(std::floor(v / cfg.cell_size)), cfg.rows() - 1);
  return CellIndex{row, col};
}

double RayTraversal::total_length() const {
  double sum = 0.0;
  for (double l : lengths) sum += l;
  return sum;
}

RayTraversal traverse_ray_slab(const GridConfig& cfg, const std::array<double, 3>& origin,
                               const std::array<double, 3>& end) {
  cfg.validate();
  if (origin == end) fail(ErrorCode::InvalidArgument, "ray has zero length");
  RayTraversal out;
  walk_ray(cfg, origin, end, [&](CellIndex c, double len) {
    out.cells.push_back(c);
    out.lengths.push_back(len);
  });
  return out;
}

AccumulatorRaster accumulate_cloud(const GridConfig& cfg, const PointCloud& cloud, int threads) {
  cfg.validate();
  AccumulatorRaster raster{cfg, std::vector<CellAccumulator>(cfg.cell_count())};
  const auto& pts = cloud.points;
  const std::size_t workers = std::clamp<std::size_t>(std::size_t(std::max(threads, 1)), 1, std::max<std::size_t>(pts.size(), 1));
  if (workers == 1) {
    accumulate_range(cfg, pts, 0, pts.size(), raster.cells);
    return raster;
  }

  std::vector<std::vector<CellAccumulator>> partial(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = pts.size() * w / workers;
    const std::size_t end = pts.size() * (w + 1) / workers;
    pool.emplace_back([&, w, begin, end] {
      partial[w].assign(cfg.cell_count(), CellAccumulator{});
      accumulate_range(cfg, pts, begin, end, partial[w]);
    });
  }
  for (auto& t : pool) t.join();

  for (const auto& part : partial) {
    for (std::size_t i = 0; i < part.size(); ++i) {
      const CellAccumulator& src = part[i];
      CellAccumulator& dst = raster.cells[i];
      if (src.detections > 0) {
        if (dst.detections == 0) {
          dst.z_min = src.z_min;
          dst.z_max = src.z_max;
        } else {
          dst.z_min = std::min(dst.z_min, src.z_min);
          dst.z_max = std::max(dst.z_max, src.z_max);
        }
      }
      dst.detections += src.detections;
      dst.observations += src.observations;
      dst.traversal_fixed += src.traversal_fixed;
      dst.intensity_fixed += src.intensity_fixed;
    }
  }
  return raster;
}

double compute_decay_rate(const CellAccumulator& acc) {
  if (acc.traversal_fixed <= 0) return 0.0;
  return double(acc.detections) / acc.traversal_sum();
}

}  // namespace gridmap
