#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <shared_mutex>
#include <string>
#include <tuple>
#include <vector>

#include "pack/error.hpp"
#include "pack/geometry.hpp"
#include "pack/grid.hpp"
#include "pack/mesh.hpp"

namespace pack {

struct FootprintCell {
  int u = 0, v = 0;
  double bottom = 0, top = 0;
};

// Object-side height profiles for one orientation.  The grid covers the
// rotated AABB rounded up to whole cells; its origin (cell 0,0 lower corner)
// is the AABB minimum in x/y and heights are measured from the object's
// lowest point.
struct HeightfieldPair {
  HeightGrid top;
  HeightGrid bottom;
  Grid<std::uint8_t> footprint;
  double cell_size = 0;
  double theta = 0;
  int orientation = 0;          // index into axis_rotations()
  Vec3 extent{};                // rotated AABB size
  Vec3 com{};                   // center of mass in grid-local coordinates
  double max_top = 0;
  int umin = 0, umax = -1, vmin = 0, vmax = -1;  // footprint bounds in cells
  std::vector<FootprintCell> cells;              // footprint cells, bottom ascending

  std::size_t rows() const { return top.rows(); }
  std::size_t cols() const { return top.cols(); }
};

namespace detail {

struct HullPlane {
  Vec3 n;
  double d;
};

// Vertical extent of the convex hull along the ray through (x, y).
// Returns false when the ray misses (or only grazes numerically).
inline bool ray_extent(const std::vector<HullPlane>& planes, double x, double y, double& lo, double& hi) {
  lo = -std::numeric_limits<double>::infinity();
  hi = std::numeric_limits<double>::infinity();
  for (const auto& p : planes) {
    const double rhs = p.d - p.n.x * x - p.n.y * y;
    if (p.n.z > 1e-12) hi = std::min(hi, rhs / p.n.z);
    else if (p.n.z < -1e-12) lo = std::max(lo, rhs / p.n.z);
  }
  return std::isfinite(lo) && std::isfinite(hi) && lo <= hi;
}

inline long cells_for(double extent, double cell) {
  return std::max<long>(1, static_cast<long>(std::ceil(extent / cell - 1e-7)));
}

}  // namespace detail

namespace detail {

// Fills cells, bounds and max_top from the footprint/bottom/top grids.
inline void index_footprint(HeightfieldPair& hp) {
  const std::size_t nu = hp.rows(), nv = hp.cols();
  hp.cells.clear();
  hp.max_top = 0;
  hp.umax = hp.vmax = -1;
  hp.umin = static_cast<int>(nu);
  hp.vmin = static_cast<int>(nv);
  for (std::size_t u = 0; u < nu; ++u)
    for (std::size_t v = 0; v < nv; ++v)
      if (hp.footprint(u, v)) {
        hp.cells.push_back({static_cast<int>(u), static_cast<int>(v), hp.bottom(u, v), hp.top(u, v)});
        hp.max_top = std::max(hp.max_top, hp.top(u, v));
        hp.umin = std::min(hp.umin, static_cast<int>(u));
        hp.umax = std::max(hp.umax, static_cast<int>(u));
        hp.vmin = std::min(hp.vmin, static_cast<int>(v));
        hp.vmax = std::max(hp.vmax, static_cast<int>(v));
      }
  // Low cells first: drop-height scans reach the binding constraint sooner.
  std::stable_sort(hp.cells.begin(), hp.cells.end(),
                   [](const FootprintCell& a, const FootprintCell& b) { return a.bottom < b.bottom; });
}

}  // namespace detail

// Profile built directly from grids (cells with footprint != 0 take part).
inline HeightfieldPair make_profile(HeightGrid top, HeightGrid bottom, Grid<std::uint8_t> footprint, double cell_size) {
  if (top.rows() != bottom.rows() || top.cols() != bottom.cols() || top.rows() != footprint.rows() ||
      top.cols() != footprint.cols())
    throw Error("profile grids differ in shape");
  HeightfieldPair hp;
  hp.cell_size = cell_size;
  hp.top = std::move(top);
  hp.bottom = std::move(bottom);
  hp.footprint = std::move(footprint);
  detail::index_footprint(hp);
  if (hp.cells.empty()) throw DegenerateGeometryError("profile has an empty footprint");
  hp.extent = {static_cast<double>(hp.rows()) * cell_size, static_cast<double>(hp.cols()) * cell_size, hp.max_top};
  hp.com = {hp.extent.x / 2, hp.extent.y / 2, hp.max_top / 2};
  return hp;
}

// Rasterize the hull at yaw `theta` (applied after the axis-aligned
// re-orientation `orientation`) onto a grid of `cell_size` cells.
//
// A cell belongs to the footprint when its center lies in the projected hull
// polygon.  Its bottom/top are the hull's vertical extent along the vertical
// ray through that center.  Centers that sit on the silhouette and miss the
// ray numerically are nudged toward the polygon centroid.
inline HeightfieldPair rasterize(const ObjectModel& model, double theta, double cell_size, int orientation = 0) {
  if (!(cell_size > 0)) throw Error("cell_size must be positive");
  if (orientation < 0 || orientation >= 24) throw Error("orientation index out of range");

  const Mat3 r = yaw_rotation(theta) * axis_rotations()[orientation];
  const TriMesh mesh = transformed(model.mesh, r);
  const Aabb box = bounds(mesh.vertices);

  HeightfieldPair hp;
  hp.cell_size = cell_size;
  hp.theta = theta;
  hp.orientation = orientation;
  hp.extent = box.extent();
  const auto nu = static_cast<std::size_t>(detail::cells_for(hp.extent.x, cell_size));
  const auto nv = static_cast<std::size_t>(detail::cells_for(hp.extent.y, cell_size));
  const Vec3 origin = box.lo;
  hp.com = r * model.centroid - origin;
  hp.top = HeightGrid(nu, nv, 0.0);
  hp.bottom = HeightGrid(nu, nv, 0.0);
  hp.footprint = Grid<std::uint8_t>(nu, nv, 0);

  std::vector<detail::HullPlane> planes;
  planes.reserve(mesh.faces.size());
  for (const auto& f : mesh.faces) {
    const Vec3 a = mesh.vertices[f[0]] - origin;
    Vec3 n = cross(mesh.vertices[f[1]] - mesh.vertices[f[0]], mesh.vertices[f[2]] - mesh.vertices[f[0]]);
    n = n * (1.0 / norm(n));
    planes.push_back({n, dot(n, a)});
  }
  std::vector<Vec2> proj;
  proj.reserve(mesh.vertices.size());
  for (const auto& v : mesh.vertices) proj.push_back({v.x - origin.x, v.y - origin.y});
  const auto poly = convex_hull_2d(std::move(proj));
  Vec2 centroid{};
  for (const auto& p : poly) centroid = centroid + p * (1.0 / static_cast<double>(poly.size()));
  const double height = hp.extent.z;

  auto fill_cell = [&](std::size_t u, std::size_t v) {
    Vec2 p{(static_cast<double>(u) + 0.5) * cell_size, (static_cast<double>(v) + 0.5) * cell_size};
    double lo = 0, hi = 0;
    bool hit = detail::ray_extent(planes, p.x, p.y, lo, hi);
    for (int k = 0; !hit && k < 40; ++k) {
      p = p + (centroid - p) * 1e-3;
      hit = detail::ray_extent(planes, p.x, p.y, lo, hi);
    }
    if (!hit) lo = 0, hi = height;
    const double b = std::clamp(lo, 0.0, height);
    const double t = std::clamp(hi, b, height);
    hp.bottom(u, v) = b;
    hp.top(u, v) = t;
    hp.footprint(u, v) = 1;
  };

  // Centers exactly on an edge are decided by a fixed sub-cell offset, so
  // edges shared by neighboring objects claim each center once.
  const Vec2 jitter{cell_size * 1e-6, cell_size * 1e-6 * std::numbers::phi};
  auto covers = [&](Vec2 c) {
    if (poly.size() < 3) return false;
    for (std::size_t i = 0; i < poly.size(); ++i)
      if (cross2(poly[i], poly[(i + 1) % poly.size()], c + jitter) <= 0) return false;
    return true;
  };
  for (std::size_t u = 0; u < nu; ++u)
    for (std::size_t v = 0; v < nv; ++v) {
      const Vec2 c{(static_cast<double>(u) + 0.5) * cell_size, (static_cast<double>(v) + 0.5) * cell_size};
      if (covers(c)) fill_cell(u, v);
    }

  // Slivers thinner than a cell still occupy the cell holding their centroid.
  bool any = std::any_of(hp.footprint.values().begin(), hp.footprint.values().end(),
                         [](std::uint8_t f) { return f != 0; });
  if (!any) {
    const auto u = std::min(nu - 1, static_cast<std::size_t>(std::max(0.0, centroid.x / cell_size)));
    const auto v = std::min(nv - 1, static_cast<std::size_t>(std::max(0.0, centroid.y / cell_size)));
    fill_cell(u, v);
  }

  detail::index_footprint(hp);
  return hp;
}

// Shared, thread-safe memo of rasterizations keyed by
// (object id, orientation, yaw, cell size).  Yaw and cell size are keyed by
// exact bit pattern; the cache is flushed wholesale once it grows past
// `max_entries`, which keeps continuous-yaw episodes bounded.
class RasterCache {
 public:
  explicit RasterCache(std::size_t max_entries = 4096) : max_entries_(max_entries) {}

  std::shared_ptr<const HeightfieldPair> get(const ObjectModel& model, double theta, double cell_size,
                                             int orientation = 0) {
    const Key key{model.id, orientation, std::bit_cast<std::uint64_t>(theta),
                  std::bit_cast<std::uint64_t>(cell_size)};
    {
      std::shared_lock lock(mutex_);
      if (auto it = entries_.find(key); it != entries_.end()) return it->second;
    }
    auto hp = std::make_shared<const HeightfieldPair>(rasterize(model, theta, cell_size, orientation));
    std::unique_lock lock(mutex_);
    if (entries_.size() >= max_entries_) entries_.clear();
    return entries_.try_emplace(key, std::move(hp)).first->second;
  }

  std::size_t size() const {
    std::shared_lock lock(mutex_);
    return entries_.size();
  }

 private:
  using Key = std::tuple<std::string, int, std::uint64_t, std::uint64_t>;
  std::size_t max_entries_;
  mutable std::shared_mutex mutex_;
  std::map<Key, std::shared_ptr<const HeightfieldPair>> entries_;
};

}  // namespace pack
