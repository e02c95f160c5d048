#pragma once

// Brute-force ground truth over a rectangular price grid. Grid coordinates
// are exact rationals lo + k (hi - lo) / (resolution - 1), so a window like
// [0.1, 5] at resolution 491 hits 3/5 exactly.

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <utility>
#include <vector>

#include "qfm/market.hpp"

namespace qfm {

struct PriceWindow {
  Rational lo;
  Rational hi;
};

inline constexpr std::size_t kMaxGridPoints = 10'000'000;

template <class T>
struct RegionGrid {
  std::vector<PriceWindow> bounds;  // one per good
  std::size_t resolution = 0;       // points per axis
  std::vector<std::uint8_t> feasible;
  std::vector<T> revenue;  // max-extension revenue; zero where infeasible
  std::vector<T> welfare;  // welfare of the revenue-maximal allocation
  T tol{};

  std::size_t num_goods() const { return bounds.size(); }
  std::size_t size() const { return feasible.size(); }
  // Good 0 varies fastest.
  std::vector<std::size_t> coordinates(std::size_t index) const;
  std::size_t index_of(const std::vector<std::size_t>& coordinates) const;
  Rational exact_coordinate(std::size_t good, std::size_t k) const;
  PriceVector<T> price(std::size_t index) const;
  Rational step(std::size_t good) const;
};

// Evaluates check_feasible at every grid point. `threads` = 0 picks the
// hardware concurrency; results do not depend on it. Throws
// PreconditionError on nonpositive bounds, resolution < 2, or more than
// kMaxGridPoints points.
template <class T>
RegionGrid<T> grid_scan(const BasicMarket<T>& market, const std::vector<PriceWindow>& bounds,
                        std::size_t resolution, const T& tol, unsigned threads = 0);

// Elementwise minimum of the feasible points. Throws PreconditionError
// ("widen bounds") when nothing in the window is feasible.
template <class T>
PriceVector<T> oracle_min_price(const RegionGrid<T>& grid);

// First feasible point (in index order) of maximal revenue.
template <class T>
std::pair<PriceVector<T>, T> oracle_max_revenue(const RegionGrid<T>& grid);

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};
using Polyline = std::vector<Point2>;

// Marching squares on the membership bitmap, with everything outside the
// window treated as infeasible and the contour clamped to the window, so a
// fully feasible window yields its frame. Throws PreconditionError unless
// the grid has two goods.
template <class T>
std::vector<Polyline> region_boundary_2d(const RegionGrid<T>& grid);

// Distance from a point to the nearest segment of any polyline.
double distance_to_boundary(const std::vector<Polyline>& boundary, Point2 point);

// Header: price_1,...,price_n,feasible,max_revenue. Infeasible points
// report "nan" revenue.
template <class T>
void write_grid_csv(std::ostream& out, const RegionGrid<T>& grid);

// Header: x,y,segment_id.
void write_boundary_csv(std::ostream& out, const std::vector<Polyline>& boundary);

}  // namespace qfm
