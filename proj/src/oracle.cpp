#include "qfm/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <thread>

#include "qfm/feasibility.hpp"
#include "qfm/format.hpp"
#include "qfm/metrics.hpp"

namespace qfm {

template <class T>
std::vector<std::size_t> RegionGrid<T>::coordinates(std::size_t index) const {
  std::vector<std::size_t> k(bounds.size());
  for (std::size_t j = 0; j < bounds.size(); ++j) {
    k[j] = index % resolution;
    index /= resolution;
  }
  return k;
}

template <class T>
std::size_t RegionGrid<T>::index_of(const std::vector<std::size_t>& coordinates) const {
  std::size_t index = 0;
  for (std::size_t j = coordinates.size(); j-- > 0;) index = index * resolution + coordinates[j];
  return index;
}

template <class T>
Rational RegionGrid<T>::step(std::size_t good) const {
  return (bounds[good].hi - bounds[good].lo) / Rational(static_cast<long>(resolution - 1));
}

template <class T>
Rational RegionGrid<T>::exact_coordinate(std::size_t good, std::size_t k) const {
  return bounds[good].lo + step(good) * Rational(static_cast<long>(k));
}

template <class T>
PriceVector<T> RegionGrid<T>::price(std::size_t index) const {
  const auto k = coordinates(index);
  PriceVector<T> p(k.size());
  for (std::size_t j = 0; j < k.size(); ++j) p[j] = from_rational<T>(exact_coordinate(j, k[j]));
  return p;
}

template <class T>
RegionGrid<T> grid_scan(const BasicMarket<T>& market, const std::vector<PriceWindow>& bounds,
                        std::size_t resolution, const T& tol, unsigned threads) {
  require_valid(market);
  if (bounds.size() != market.num_goods()) throw PreconditionError("one price window per good is required");
  if (resolution < 2) throw PreconditionError("resolution must be at least 2");
  for (const auto& w : bounds) {
    if (!(w.lo > 0) || w.hi < w.lo) throw PreconditionError("price windows must satisfy 0 < lo <= hi");
  }
  std::size_t points = 1;
  for (std::size_t j = 0; j < bounds.size(); ++j) {
    if (points > kMaxGridPoints / resolution)
      throw PreconditionError("grid exceeds " + std::to_string(kMaxGridPoints) +
                              " points; lower the resolution or narrow the window");
    points *= resolution;
  }

  RegionGrid<T> grid;
  grid.bounds = bounds;
  grid.resolution = resolution;
  grid.tol = tol;
  grid.feasible.assign(points, 0);
  grid.revenue.assign(points, T(0));
  grid.welfare.assign(points, T(0));

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, points));
  std::vector<std::exception_ptr> errors(threads);
  auto work = [&](unsigned worker) {
    try {
      for (std::size_t index = worker; index < points; index += threads) {
        auto cert = check_feasible(market, grid.price(index), tol);
        grid.feasible[index] = cert.feasible ? 1 : 0;
        if (cert.feasible) {
          grid.revenue[index] = cert.revenue;
          grid.welfare[index] = social_welfare(market, *cert.allocation);
        }
      }
    } catch (...) {
      errors[worker] = std::current_exception();
    }
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return grid;
}

template <class T>
PriceVector<T> oracle_min_price(const RegionGrid<T>& grid) {
  std::vector<std::size_t> lowest(grid.num_goods(), std::numeric_limits<std::size_t>::max());
  bool any = false;
  for (std::size_t index = 0; index < grid.size(); ++index) {
    if (!grid.feasible[index]) continue;
    any = true;
    const auto k = grid.coordinates(index);
    for (std::size_t j = 0; j < k.size(); ++j) lowest[j] = std::min(lowest[j], k[j]);
  }
  if (!any) throw PreconditionError("no feasible price in the window; widen bounds");
  const std::size_t index = grid.index_of(lowest);
  if (!grid.feasible[index])
    throw InvariantError("elementwise minimum of feasible grid points is infeasible");
  return grid.price(index);
}

template <class T>
std::pair<PriceVector<T>, T> oracle_max_revenue(const RegionGrid<T>& grid) {
  std::size_t best = grid.size();
  for (std::size_t index = 0; index < grid.size(); ++index) {
    if (!grid.feasible[index]) continue;
    if (best == grid.size()) {
      best = index;
      continue;
    }
    const T& r = grid.revenue[index];
    const T& top = grid.revenue[best];
    const T margin = grid.tol * (abs_value(top) > T(1) ? abs_value(top) : T(1));
    if (r > top + margin) best = index;
  }
  if (best == grid.size()) throw PreconditionError("no feasible price in the window; widen bounds");
  return {grid.price(best), grid.revenue[best]};
}

namespace {

// Contour vertices live on cell-edge midpoints; doubling grid coordinates
// makes them integral.
using Key = std::pair<long, long>;

struct Segment {
  Key a;
  Key b;
};

}  // namespace

template <class T>
std::vector<Polyline> region_boundary_2d(const RegionGrid<T>& grid) {
  if (grid.num_goods() != 2) throw PreconditionError("region boundary is only supported for two goods");
  const long r = static_cast<long>(grid.resolution);
  auto inside = [&](long a, long b) {
    if (a < 0 || b < 0 || a >= r || b >= r) return false;
    return grid.feasible[static_cast<std::size_t>(b * r + a)] != 0;
  };

  std::vector<Segment> segments;
  for (long b = -1; b < r; ++b) {
    for (long a = -1; a < r; ++a) {
      const int code = (inside(a, b) ? 1 : 0) | (inside(a + 1, b) ? 2 : 0) | (inside(a + 1, b + 1) ? 4 : 0) |
                       (inside(a, b + 1) ? 8 : 0);
      const Key bottom{2 * a + 1, 2 * b};
      const Key right{2 * a + 2, 2 * b + 1};
      const Key top{2 * a + 1, 2 * b + 2};
      const Key left{2 * a, 2 * b + 1};
      switch (code) {
        case 1: case 14: segments.push_back({left, bottom}); break;
        case 2: case 13: segments.push_back({bottom, right}); break;
        case 3: case 12: segments.push_back({left, right}); break;
        case 4: case 11: segments.push_back({right, top}); break;
        case 6: case 9: segments.push_back({bottom, top}); break;
        case 7: case 8: segments.push_back({left, top}); break;
        // Saddles: diagonal corners are kept apart.
        case 5: segments.push_back({left, bottom}); segments.push_back({right, top}); break;
        case 10: segments.push_back({bottom, right}); segments.push_back({left, top}); break;
        default: break;
      }
    }
  }

  std::map<Key, std::vector<std::size_t>> incident;
  for (std::size_t s = 0; s < segments.size(); ++s) {
    incident[segments[s].a].push_back(s);
    incident[segments[s].b].push_back(s);
  }
  auto to_point = [&](const Key& key) {
    Point2 p;
    const double xs = to_double(grid.step(0));
    const double ys = to_double(grid.step(1));
    const double x0 = to_double(grid.bounds[0].lo), x1 = to_double(grid.bounds[0].hi);
    const double y0 = to_double(grid.bounds[1].lo), y1 = to_double(grid.bounds[1].hi);
    p.x = std::clamp(x0 + 0.5 * static_cast<double>(key.first) * xs, x0, x1);
    p.y = std::clamp(y0 + 0.5 * static_cast<double>(key.second) * ys, y0, y1);
    return p;
  };

  std::vector<bool> used(segments.size(), false);
  std::vector<Polyline> lines;
  for (std::size_t start = 0; start < segments.size(); ++start) {
    if (used[start]) continue;
    used[start] = true;
    std::vector<Key> chain{segments[start].a, segments[start].b};
    // Extend forward from the back, then backward from the front.
    for (int direction = 0; direction < 2; ++direction) {
      while (true) {
        const Key& end = chain.back();
        std::size_t next = segments.size();
        for (std::size_t s : incident[end]) {
          if (!used[s]) {
            next = s;
            break;
          }
        }
        if (next == segments.size()) break;
        used[next] = true;
        chain.push_back(segments[next].a == end ? segments[next].b : segments[next].a);
      }
      std::reverse(chain.begin(), chain.end());
    }
    Polyline line;
    for (const auto& key : chain) {
      Point2 p = to_point(key);
      if (line.empty() || line.back().x != p.x || line.back().y != p.y) line.push_back(p);
    }
    lines.push_back(std::move(line));
  }
  return lines;
}

double distance_to_boundary(const std::vector<Polyline>& boundary, Point2 point) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& line : boundary) {
    for (std::size_t k = 0; k < line.size(); ++k) {
      const Point2 a = line[k];
      const Point2 b = k + 1 < line.size() ? line[k + 1] : line[k];
      const double dx = b.x - a.x, dy = b.y - a.y;
      const double length2 = dx * dx + dy * dy;
      double t = length2 > 0.0 ? ((point.x - a.x) * dx + (point.y - a.y) * dy) / length2 : 0.0;
      t = std::clamp(t, 0.0, 1.0);
      best = std::min(best, std::hypot(point.x - (a.x + t * dx), point.y - (a.y + t * dy)));
    }
  }
  return best;
}

template <class T>
void write_grid_csv(std::ostream& out, const RegionGrid<T>& grid) {
  for (std::size_t j = 0; j < grid.num_goods(); ++j) out << "price_" << (j + 1) << ',';
  out << "feasible,max_revenue\n";
  for (std::size_t index = 0; index < grid.size(); ++index) {
    for (const auto& p : grid.price(index)) out << format_number(to_double(p)) << ',';
    out << static_cast<int>(grid.feasible[index]) << ','
        << (grid.feasible[index] ? format_number(to_double(grid.revenue[index])) : std::string("nan")) << '\n';
  }
}

void write_boundary_csv(std::ostream& out, const std::vector<Polyline>& boundary) {
  out << "x,y,segment_id\n";
  for (std::size_t s = 0; s < boundary.size(); ++s) {
    for (const auto& p : boundary[s]) out << format_number(p.x) << ',' << format_number(p.y) << ',' << s << '\n';
  }
}

#define QFM_INSTANTIATE(T)                                                                              \
  template struct RegionGrid<T>;                                                                        \
  template RegionGrid<T> grid_scan<T>(const BasicMarket<T>&, const std::vector<PriceWindow>&,          \
                                      std::size_t, const T&, unsigned);                                \
  template PriceVector<T> oracle_min_price<T>(const RegionGrid<T>&);                                    \
  template std::pair<PriceVector<T>, T> oracle_max_revenue<T>(const RegionGrid<T>&);                    \
  template std::vector<Polyline> region_boundary_2d<T>(const RegionGrid<T>&);                           \
  template void write_grid_csv<T>(std::ostream&, const RegionGrid<T>&);

QFM_INSTANTIATE(double)
QFM_INSTANTIATE(Rational)

#undef QFM_INSTANTIATE

}  // namespace qfm
