#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace gridmap::testing {

double monte_carlo_iou(const RotatedBox& a, const RotatedBox& b, int side, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(0.0, 1.0);
  const double ca = std::cos(a.theta), sa = std::sin(a.theta);
  const double cb = std::cos(b.theta), sb = std::sin(b.theta);
  const double hlb = 0.5 * b.length, hwb = 0.5 * b.width;
  std::int64_t inside = 0;
  for (int i = 0; i < side; ++i) {
    for (int j = 0; j < side; ++j) {
      const double u = ((i + jitter(rng)) / side - 0.5) * a.length;
      const double v = ((j + jitter(rng)) / side - 0.5) * a.width;
      const double wx = a.x + u * ca - v * sa;
      const double wy = a.y + u * sa + v * ca;
      const double rx = wx - b.x, ry = wy - b.y;
      const double bu = rx * cb + ry * sb;
      const double bv = -rx * sb + ry * cb;
      if (std::abs(bu) <= hlb && std::abs(bv) <= hwb) ++inside;
    }
  }
  const double area_a = a.length * a.width, area_b = b.length * b.width;
  const double inter = area_a * double(inside) / (double(side) * double(side));
  return inter / (area_a + area_b - inter);
}

namespace {

struct Seg {
  std::array<double, 3> o, d;
  double len3;
  std::array<double, 2> at(double t) const { return {o[0] + t * d[0], o[1] + t * d[1]}; }
};

// (col, row), or (-1, -1) outside the closed grid box.
std::pair<int, int> cell_at(const GridConfig& cfg, std::array<double, 2> p) {
  const double u = (p[0] - cfg.x_min()) / cfg.cell_size;
  const double v = (p[1] - cfg.y_min()) / cfg.cell_size;
  const int nc = int(std::lround(cfg.extent_x / cfg.cell_size));
  const int nr = int(std::lround(cfg.extent_y / cfg.cell_size));
  if (p[0] < cfg.x_min() || p[0] > cfg.x_max() || p[1] < cfg.y_min() || p[1] > cfg.y_max()) return {-1, -1};
  return {std::min(int(std::floor(u)), nc - 1), std::min(int(std::floor(v)), nr - 1)};
}

}  // namespace

std::map<std::pair<int, int>, double> march_ray(const GridConfig& cfg, const std::array<double, 3>& origin,
                                                const std::array<double, 3>& end) {
  Seg s{origin, {end[0] - origin[0], end[1] - origin[1], end[2] - origin[2]}, 0.0};
  s.len3 = std::sqrt(s.d[0] * s.d[0] + s.d[1] * s.d[1] + s.d[2] * s.d[2]);
  std::map<std::pair<int, int>, double> out;
  const double len2 = std::hypot(s.d[0], s.d[1]);
  if (len2 == 0.0) {
    auto c = cell_at(cfg, s.at(0.0));
    if (c.first >= 0) out[{c.second, c.first}] = s.len3;
    return out;
  }
  // A quarter cell per step: consecutive samples differ by at most one index per axis.
  const int steps = std::max(4, int(std::ceil(len2 / (0.25 * cfg.cell_size))));
  auto cell = [&](double t) { return cell_at(cfg, s.at(t)); };

  // Cell boundaries along the segment, found by bisection between samples.
  std::vector<std::pair<double, std::pair<int, int>>> pieces;  // (start t, cell)
  std::function<void(double, double, std::pair<int, int>, std::pair<int, int>)> refine =
      [&](double ta, double tb, std::pair<int, int> ca, std::pair<int, int> cb) {
        if (ca == cb) return;
        if (tb - ta < 1e-15) {
          pieces.push_back({tb, cb});
          return;
        }
        const bool adjacent = ca.first >= 0 && cb.first >= 0 &&
                              std::abs(ca.first - cb.first) + std::abs(ca.second - cb.second) == 1;
        const double tm = 0.5 * (ta + tb);
        const auto cm = cell(tm);
        if (adjacent || ca.first < 0 || cb.first < 0) {
          // Exactly one transition expected; bisect it down to round-off.
          if (cm == ca) return refine(tm, tb, cm, cb);
          if (cm == cb) return refine(ta, tm, ca, cm);
        }
        refine(ta, tm, ca, cm);
        refine(tm, tb, cm, cb);
      };

  auto prev = cell(0.0);
  pieces.push_back({0.0, prev});
  for (int k = 1; k <= steps; ++k) {
    const double t = double(k) / steps;
    const auto c = cell(t);
    refine(double(k - 1) / steps, t, prev, c);
    prev = c;
  }
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    const double t_begin = pieces[i].first;
    const double t_end = i + 1 < pieces.size() ? pieces[i + 1].first : 1.0;
    const auto c = pieces[i].second;
    if (c.first < 0 || t_end <= t_begin) continue;
    out[{c.second, c.first}] += (t_end - t_begin) * s.len3;
  }
  return out;
}

double clipped_length(const GridConfig& cfg, const std::array<double, 3>& origin, const std::array<double, 3>& end) {
  const double d[3] = {end[0] - origin[0], end[1] - origin[1], end[2] - origin[2]};
  const double len3 = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
  // Liang-Barsky.
  const double p[4] = {-d[0], d[0], -d[1], d[1]};
  const double q[4] = {origin[0] - cfg.x_min(), cfg.x_max() - origin[0], origin[1] - cfg.y_min(),
                       cfg.y_max() - origin[1]};
  double t0 = 0.0, t1 = 1.0;
  for (int k = 0; k < 4; ++k) {
    if (p[k] == 0.0) {
      if (q[k] < 0.0) return 0.0;
      continue;
    }
    const double r = q[k] / p[k];
    if (p[k] < 0.0)
      t0 = std::max(t0, r);
    else
      t1 = std::min(t1, r);
  }
  return t1 > t0 ? (t1 - t0) * len3 : 0.0;
}

std::vector<double> decay_two_pass(const GridConfig& cfg, const PointCloud& cloud) {
  const int nc = int(std::lround(cfg.extent_x / cfg.cell_size));
  const int nr = int(std::lround(cfg.extent_y / cfg.cell_size));
  const double cs = cfg.cell_size;
  std::vector<double> hits(std::size_t(nc) * nr, 0.0), travel(std::size_t(nc) * nr, 0.0);

  for (const Point& p : cloud.points) {
    auto c = cell_at(cfg, {p.x, p.y});
    if (c.first >= 0) hits[std::size_t(c.second) * nc + c.first] += 1.0;
  }

  const auto& o = cfg.sensor_origin;
  for (const Point& p : cloud.points) {
    const double d[3] = {p.x - o[0], p.y - o[1], p.z - o[2]};
    const double len3 = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
    if (len3 == 0.0) continue;
    // Slab interval of the parameter t for [lo, hi] along one axis.
    auto slab = [](double start, double dir, double lo, double hi, double& a, double& b) {
      if (dir == 0.0) {
        a = (start >= lo && start < hi) ? 0.0 : 1.0;
        b = (start >= lo && start < hi) ? 1.0 : 0.0;
        return;
      }
      a = (lo - start) / dir;
      b = (hi - start) / dir;
      if (a > b) std::swap(a, b);
    };
    if (d[0] == 0.0 && d[1] == 0.0) {
      auto c = cell_at(cfg, {o[0], o[1]});
      if (c.first >= 0) travel[std::size_t(c.second) * nc + c.first] += len3;
      continue;
    }
    for (int col = 0; col < nc; ++col) {
      const double xlo = cfg.x_min() + col * cs;
      double xa, xb;
      slab(o[0], d[0], xlo, xlo + cs, xa, xb);
      if (d[0] == 0.0 && col == nc - 1 && o[0] == cfg.x_max()) xa = 0.0, xb = 1.0;
      const double ta = std::max(0.0, xa), tb = std::min(1.0, xb);
      if (!(tb > ta)) continue;
      const double y0 = o[1] + ta * d[1], y1 = o[1] + tb * d[1];
      int r0 = int(std::floor((std::min(y0, y1) - cfg.y_min()) / cs));
      int r1 = int(std::floor((std::max(y0, y1) - cfg.y_min()) / cs));
      r0 = std::max(r0, 0);
      r1 = std::min(r1, nr - 1);
      for (int row = r0; row <= r1; ++row) {
        const double ylo = cfg.y_min() + row * cs;
        double ya, yb;
        slab(o[1], d[1], ylo, ylo + cs, ya, yb);
        if (d[1] == 0.0 && row == nr - 1 && o[1] == cfg.y_max()) ya = 0.0, yb = 1.0;
        const double a = std::max(ta, ya), b = std::min(tb, yb);
        if (b > a) travel[std::size_t(row) * nc + col] += (b - a) * len3;
      }
    }
  }
  std::vector<double> decay(hits.size(), 0.0);
  for (std::size_t i = 0; i < hits.size(); ++i)
    if (travel[i] > 0.0) decay[i] = hits[i] / travel[i];
  return decay;
}

BruteForceMatch brute_force_match(const std::vector<AxisBox>& anchors, const std::vector<RotatedBox>& gts,
                                  const GridConfig& extent, double positive_iou, double negative_iou) {
  struct Rect {
    double x0, y0, x1, y1;
  };
  auto hull = [](const RotatedBox& b) {
    const double c = std::abs(std::cos(b.theta)), s = std::abs(std::sin(b.theta));
    const double hx = 0.5 * (b.length * c + b.width * s), hy = 0.5 * (b.length * s + b.width * c);
    return Rect{b.x - hx, b.y - hy, b.x + hx, b.y + hy};
  };
  auto rect = [](const AxisBox& a) {
    return Rect{a.x - 0.5 * a.size_x, a.y - 0.5 * a.size_y, a.x + 0.5 * a.size_x, a.y + 0.5 * a.size_y};
  };
  auto iou = [](const Rect& a, const Rect& b) {
    const double w = std::max(0.0, std::min(a.x1, b.x1) - std::max(a.x0, b.x0));
    const double h = std::max(0.0, std::min(a.y1, b.y1) - std::max(a.y0, b.y0));
    const double inter = w * h;
    const double uni = (a.x1 - a.x0) * (a.y1 - a.y0) + (b.x1 - b.x0) * (b.y1 - b.y0) - inter;
    return uni > 0.0 ? inter / uni : 0.0;
  };

  std::vector<int> live;
  for (std::size_t g = 0; g < gts.size(); ++g) {
    const auto& b = gts[g];
    if (b.x >= extent.x_min() && b.x <= extent.x_max() && b.y >= extent.y_min() && b.y <= extent.y_max())
      live.push_back(int(g));
  }
  BruteForceMatch m;
  m.labels.assign(anchors.size(), AnchorLabel::Negative);
  m.gt_index.assign(anchors.size(), -1);
  std::vector<std::vector<double>> table(anchors.size(), std::vector<double>(gts.size(), 0.0));
  for (std::size_t a = 0; a < anchors.size(); ++a) {
    double best = -1.0;
    int best_g = -1;
    for (int g : live) {
      table[a][std::size_t(g)] = iou(rect(anchors[a]), hull(gts[std::size_t(g)]));
      if (table[a][std::size_t(g)] > best) {
        best = table[a][std::size_t(g)];
        best_g = g;
      }
    }
    if (best_g < 0) continue;
    if (best >= positive_iou) {
      m.labels[a] = AnchorLabel::Positive;
      m.gt_index[a] = best_g;
    } else if (best >= negative_iou) {
      m.labels[a] = AnchorLabel::Ignore;
    }
  }
  std::vector<bool> taken(anchors.size(), false);
  for (int g : live) {
    int best_a = -1;
    double best = 0.0;
    for (std::size_t a = 0; a < anchors.size(); ++a) {
      if (!taken[a] && table[a][std::size_t(g)] > best + 1e-12) {
        best = table[a][std::size_t(g)];
        best_a = int(a);
      }
    }
    if (best_a < 0) continue;
    taken[std::size_t(best_a)] = true;
    m.labels[std::size_t(best_a)] = AnchorLabel::Positive;
    m.gt_index[std::size_t(best_a)] = g;
  }
  return m;
}

std::vector<double> numeric_gradient(const std::function<double(const std::vector<double>&)>& f,
                                     std::vector<double> x, double h) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double up = f(x);
    x[i] = keep - h;
    const double down = f(x);
    x[i] = keep;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

double gradient_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1.0});
}

}  // namespace gridmap::testing
