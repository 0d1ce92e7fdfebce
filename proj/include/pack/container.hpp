#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "pack/error.hpp"
#include "pack/grid.hpp"
#include "pack/heightfield.hpp"
#include "pack/mesh.hpp"

namespace pack {

// Box geometry.  The success ceiling is the wall height plus a vertical
// allowance for objects taller than the box.
struct ContainerSpec {
  double length = 0.40;            // x extent, m
  double width = 0.30;             // y extent, m
  double wall_height = 0.164;      // m
  double vertical_margin = 0.13;   // m
  double cell_size = 0.0;          // m; 0 selects max(length, width) / 200

  double cell() const { return cell_size > 0 ? cell_size : std::max(length, width) / 200.0; }
  double ceiling() const { return wall_height + vertical_margin; }
  std::size_t rows() const { return static_cast<std::size_t>(std::lround(length / cell())); }
  std::size_t cols() const { return static_cast<std::size_t>(std::lround(width / cell())); }

  void validate() const {
    if (!(length > 0 && width > 0 && wall_height > 0 && vertical_margin > 0 && cell_size >= 0))
      throw Error("container dimensions must be positive");
    if (rows() == 0 || cols() == 0) throw ResolutionError("cell size larger than the box");
  }
};

// Planar pose plus the estimated drop height.  (x, y) locate the center of
// the rotated footprint AABB; `orientation` selects an axis-aligned
// re-orientation applied before the yaw (0 = as authored).
struct Pose {
  double x = 0, y = 0, theta = 0, z = 0;
  int orientation = 0;
  friend bool operator==(const Pose&, const Pose&) = default;
};

struct Placement {
  std::string object_id;
  Pose pose;
  double volume = 0;
  std::shared_ptr<const HeightfieldPair> profile;
  long row0 = 0, col0 = 0;   // grid cell of the profile origin
  double tilt = 0;           // degrees
  bool stable = true;
};

struct ContainerState {
  HeightGrid heightmap;
  ContainerSpec spec;
  std::vector<Placement> placements;
  double cumulative_volume = 0;
};

inline ContainerState make_container(const ContainerSpec& spec) {
  spec.validate();
  return {HeightGrid(spec.rows(), spec.cols(), 0.0), spec, {}, 0.0};
}

struct GridOffset {
  long row = 0, col = 0;
  friend bool operator==(const GridOffset&, const GridOffset&) = default;
};

// Cell of the profile origin when the footprint AABB is centered at (x, y):
// the AABB minimum snapped to the nearest cell boundary.
inline GridOffset footprint_offset(const ContainerSpec& spec, const HeightfieldPair& hp, double x, double y) {
  const double c = spec.cell();
  return {static_cast<long>(std::floor((x - hp.extent.x / 2.0) / c + 0.5)),
          static_cast<long>(std::floor((y - hp.extent.y / 2.0) / c + 0.5))};
}

// Inverse of footprint_offset: the AABB center for a given origin cell.
inline std::pair<double, double> offset_center(const ContainerSpec& spec, const HeightfieldPair& hp, GridOffset o) {
  const double c = spec.cell();
  return {static_cast<double>(o.row) * c + hp.extent.x / 2.0, static_cast<double>(o.col) * c + hp.extent.y / 2.0};
}

inline bool footprint_inside(const HeightGrid& hm, const HeightfieldPair& hp, GridOffset o) {
  return o.row + hp.umin >= 0 && o.col + hp.vmin >= 0 &&
         o.row + hp.umax < static_cast<long>(hm.rows()) && o.col + hp.vmax < static_cast<long>(hm.cols());
}

// max over footprint cells of heightmap - bottom, before floor clamping.
// The caller guarantees the footprint is inside the grid.
inline double raw_drop(const HeightGrid& hm, const HeightfieldPair& hp, GridOffset o) {
  double z = -std::numeric_limits<double>::infinity();
  for (const auto& cell : hp.cells)
    z = std::max(z, hm(static_cast<std::size_t>(o.row + cell.u), static_cast<std::size_t>(o.col + cell.v)) - cell.bottom);
  return z;
}

// Same as raw_drop but stops as soon as the running maximum reaches `bound`;
// the returned value is then only known to be >= bound.
inline double raw_drop_bounded(const HeightGrid& hm, const HeightfieldPair& hp, GridOffset o, double bound) {
  double z = -std::numeric_limits<double>::infinity();
  const std::size_t cols = hm.cols();
  const double* base = hm.values().data();
  for (const auto& cell : hp.cells) {
    const double h = base[static_cast<std::size_t>(o.row + cell.u) * cols + static_cast<std::size_t>(o.col + cell.v)];
    z = std::max(z, h - cell.bottom);
    if (z >= bound) return z;
  }
  return z;
}

inline double drop_z_at(const ContainerState& state, const HeightfieldPair& hp, GridOffset o) {
  if (!footprint_inside(state.heightmap, hp, o)) throw OutOfBoundsError("footprint leaves the box");
  return std::max(0.0, raw_drop(state.heightmap, hp, o));
}

// Lowest z at which the object's underside rests on the heightmap without
// interpenetration; negative values clamp to the floor.
inline double drop_z(const ContainerState& state, const HeightfieldPair& hp, double x, double y) {
  return drop_z_at(state, hp, footprint_offset(state.spec, hp, x, y));
}

inline void stamp(HeightGrid& hm, const HeightfieldPair& hp, GridOffset o, double z) {
  for (const auto& cell : hp.cells) {
    double& h = hm(static_cast<std::size_t>(o.row + cell.u), static_cast<std::size_t>(o.col + cell.v));
    h = std::max(h, z + cell.top);
  }
}

// In-place commit for callers holding exclusive access to the state.
inline void commit_in_place(ContainerState& state, const ObjectModel& model,
                            std::shared_ptr<const HeightfieldPair> hp, const Pose& pose,
                            double tilt = 0.0, bool stable = true) {
  const GridOffset o = footprint_offset(state.spec, *hp, pose.x, pose.y);
  if (!footprint_inside(state.heightmap, *hp, o)) throw OutOfBoundsError("commit outside the box");
  stamp(state.heightmap, *hp, o, pose.z);
  state.cumulative_volume += model.volume;
  state.placements.push_back({model.id, pose, model.volume, std::move(hp), o.row, o.col, tilt, stable});
}

inline ContainerState commit(ContainerState state, const ObjectModel& model,
                             std::shared_ptr<const HeightfieldPair> hp, const Pose& pose) {
  commit_in_place(state, model, std::move(hp), pose);
  return state;
}

// Heightmap recomputed from scratch out of the placement log.
inline HeightGrid rebuild_heightmap(const ContainerSpec& spec, const std::vector<Placement>& placements) {
  HeightGrid hm(spec.rows(), spec.cols(), 0.0);
  for (const auto& p : placements) stamp(hm, *p.profile, {p.row0, p.col0}, p.pose.z);
  return hm;
}

enum class Bounds { inside, outside_footprint, over_ceiling };

inline const char* to_string(Bounds b) {
  switch (b) {
    case Bounds::inside: return "inside";
    case Bounds::outside_footprint: return "outside_footprint";
    case Bounds::over_ceiling: return "over_ceiling";
  }
  return "?";
}

inline Bounds check_bounds(const ContainerState& state, const HeightfieldPair& hp, const Pose& pose) {
  if (!footprint_inside(state.heightmap, hp, footprint_offset(state.spec, hp, pose.x, pose.y)))
    return Bounds::outside_footprint;
  if (pose.z + hp.max_top > state.spec.ceiling() + 1e-12) return Bounds::over_ceiling;
  return Bounds::inside;
}

// ---------------------------------------------------------------------------
// Observation
// ---------------------------------------------------------------------------

inline constexpr std::size_t kObservationSize = 224;
inline constexpr std::size_t kObservationGutter = 2;

struct Rect {
  std::size_t row = 0, col = 0, rows = 0, cols = 0;
};

// Fixed layout: box heightmap anchored at (0, 0); the next object's top
// profile starts two columns to its right, both normalized by the ceiling.
// Everything else is zero.  Objects wider than the remaining strip are
// max-pooled by the smallest integer factor that fits (`object_pool`).
struct Observation {
  Grid<double> image{kObservationSize, kObservationSize, 0.0};
  Rect box;
  Rect object;
  std::size_t object_pool = 1;
};

inline Observation render_observation(const ContainerState& state, const HeightfieldPair* next) {
  const auto& hm = state.heightmap;
  const std::size_t obj_col = hm.cols() + kObservationGutter;
  if (hm.rows() > kObservationSize || obj_col + 1 > kObservationSize)
    throw ResolutionError("box grid " + std::to_string(hm.rows()) + "x" + std::to_string(hm.cols()) +
                          " leaves no room in the 224x224 observation");
  const double norm = state.spec.ceiling();

  Observation obs;
  obs.box = {0, 0, hm.rows(), hm.cols()};
  for (std::size_t r = 0; r < hm.rows(); ++r)
    for (std::size_t c = 0; c < hm.cols(); ++c) obs.image(r, c) = std::clamp(hm(r, c) / norm, 0.0, 1.0);

  if (next) {
    const std::size_t avail_cols = kObservationSize - obj_col;
    std::size_t k = 1;
    while ((next->rows() + k - 1) / k > kObservationSize || (next->cols() + k - 1) / k > avail_cols) ++k;
    const std::size_t pr = (next->rows() + k - 1) / k, pc = (next->cols() + k - 1) / k;
    obs.object = {0, obj_col, pr, pc};
    obs.object_pool = k;
    for (const auto& cell : next->cells) {
      double& px = obs.image(static_cast<std::size_t>(cell.u) / k, obj_col + static_cast<std::size_t>(cell.v) / k);
      px = std::max(px, std::clamp(cell.top / norm, 0.0, 1.0));
    }
  }
  return obs;
}

}  // namespace pack
