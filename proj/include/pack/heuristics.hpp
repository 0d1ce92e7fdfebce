#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <span>
#include <vector>

#include "pack/container.hpp"
#include "pack/error.hpp"
#include "pack/heightfield.hpp"
#include "pack/mesh.hpp"

namespace pack {

enum class RotationMode { SO2, SO3 };

struct HeuristicConfig {
  RotationMode mode = RotationMode::SO2;
  std::vector<double> yaw_candidates{0.0, std::numbers::pi / 2};
  int scan_stride = 1;  // cells

  void validate() const {
    if (yaw_candidates.empty()) throw Error("yaw_candidates must not be empty");
    if (scan_stride < 1) throw Error("scan_stride must be >= 1");
  }
};

// Largest volume first; equal volumes by id.
inline std::vector<ObjectModel> order_by_volume(std::vector<ObjectModel> objects) {
  std::stable_sort(objects.begin(), objects.end(), [](const ObjectModel& a, const ObjectModel& b) {
    if (a.volume != b.volume) return a.volume > b.volume;
    return a.id < b.id;
  });
  return objects;
}

struct Orientation {
  int index = 0;     // axis_rotations() entry
  double yaw = 0.0;
  friend bool operator==(const Orientation&, const Orientation&) = default;
};

namespace detail {
inline Vec3 rotated_extent(const ObjectModel& m, const Mat3& r) {
  Aabb b{r * m.mesh.vertices.front(), r * m.mesh.vertices.front()};
  for (const auto& v : m.mesh.vertices) {
    const Vec3 p = r * v;
    b.lo = {std::min(b.lo.x, p.x), std::min(b.lo.y, p.y), std::min(b.lo.z, p.z)};
    b.hi = {std::max(b.hi.x, p.x), std::max(b.hi.y, p.y), std::max(b.hi.z, p.z)};
  }
  return b.extent();
}
inline double along_long_side(const ContainerSpec& box, Vec3 e) { return box.length >= box.width ? e.x : e.y; }
}  // namespace detail

// Orientation that lays the object's longest dimension along the box's
// longest side.  SO2 only chooses among the yaw candidates (earliest wins
// ties).  SO3 searches the 24 axis-aligned orientations for one whose
// longest AABB dimension is horizontal and along the long side, preferring
// the lowest resulting height and then the lowest index.
inline Orientation align_rotation(const ObjectModel& model, const ContainerSpec& box, RotationMode mode,
                                  std::span<const double> yaw_candidates = std::array{0.0, std::numbers::pi / 2}) {
  const double tol = 1e-9 * std::max({model.aabb.x, model.aabb.y, model.aabb.z});
  if (mode == RotationMode::SO2) {
    if (yaw_candidates.empty()) throw Error("yaw_candidates must not be empty");
    Orientation best{0, yaw_candidates.front()};
    double best_len = -1;
    for (double yaw : yaw_candidates) {
      const double len = detail::along_long_side(box, detail::rotated_extent(model, yaw_rotation(yaw)));
      if (len > best_len + tol) best_len = len, best = {0, yaw};
    }
    return best;
  }
  const auto& rots = axis_rotations();
  int best = -1;
  double best_h = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 24; ++i) {
    const Vec3 e = detail::rotated_extent(model, rots[i]);
    const double longest = std::max({e.x, e.y, e.z});
    if (detail::along_long_side(box, e) < longest - tol) continue;
    if (e.z < best_h - tol) best_h = e.z, best = i;
  }
  return {best < 0 ? 0 : best, 0.0};
}

// Orientations BLBF may use, in tie-break order.  SO2: the aligned yaw, then
// the other yaw candidates.  SO3: the aligned orientation first, then the
// remaining 23, each crossed with the yaw candidates (aligned yaw first), so
// the SO3 set always contains the SO2 set.
inline std::vector<Orientation> candidate_orientations(const ObjectModel& model, const ContainerSpec& box,
                                                       const HeuristicConfig& cfg) {
  cfg.validate();
  std::vector<Orientation> out;
  const Orientation so2 = align_rotation(model, box, RotationMode::SO2, cfg.yaw_candidates);
  auto yaws_for = [&](int) {
    std::vector<double> ys{so2.yaw};
    for (double y : cfg.yaw_candidates)
      if (y != so2.yaw) ys.push_back(y);
    return ys;
  };
  if (cfg.mode == RotationMode::SO2) {
    for (double y : yaws_for(0)) out.push_back({0, y});
    return out;
  }
  const Orientation so3 = align_rotation(model, box, RotationMode::SO3, cfg.yaw_candidates);
  std::vector<double> ys{0.0};
  for (double y : cfg.yaw_candidates)
    if (y != 0.0) ys.push_back(y);
  for (double y : ys) out.push_back({so3.index, y});
  for (int i = 0; i < 24; ++i)
    if (i != so3.index)
      for (double y : ys) out.push_back({i, y});
  return out;
}

struct BlbfResult {
  Pose pose;
  std::size_t candidate = 0;   // index into the candidate list
  GridOffset offset;
  bool feasible = false;       // top within the ceiling
};

// Bottom-Left-Back fill: over every stride-lattice offset whose footprint is
// inside the box and every candidate profile, take the lowest drop height
// whose top stays under the ceiling; ties go to the smallest footprint back
// edge (y), then left edge (x), then candidate index.
//
// Positions are visited in (y, x, candidate) order so a later position only
// wins with a strictly lower z; each drop-height scan stops as soon as it
// cannot win.  When nothing fits under the ceiling and `allow_infeasible` is
// set, the lowest in-box placement is returned with feasible = false;
// otherwise NoFeasiblePlacementError is thrown.
inline BlbfResult blbf_place(const ContainerState& state,
                             std::span<const std::shared_ptr<const HeightfieldPair>> candidates, int stride = 1,
                             bool allow_infeasible = false) {
  if (stride < 1) throw Error("scan_stride must be >= 1");
  const auto& hm = state.heightmap;
  const long rows = static_cast<long>(hm.rows()), cols = static_cast<long>(hm.cols());
  const double ceiling = state.spec.ceiling() + 1e-12;

  auto scan = [&](bool enforce_ceiling) {
    BlbfResult best;
    double best_z = std::numeric_limits<double>::infinity();
    bool found = false;
    // Footprint back/left edge cell as the scan key.
    for (long yk = 0; yk < cols; ++yk)
      for (long xk = 0; xk < rows; ++xk)
        for (std::size_t k = 0; k < candidates.size(); ++k) {
          const auto& hp = *candidates[k];
          if (hp.cells.empty()) continue;
          const long col0 = yk - hp.vmin, row0 = xk - hp.umin;
          // Stride lattice anchored at the first in-box offset.
          if ((yk % stride) != 0 || (xk % stride) != 0) continue;
          if (xk + (hp.umax - hp.umin) >= rows || yk + (hp.vmax - hp.vmin) >= cols) continue;
          const double limit = enforce_ceiling ? ceiling - hp.max_top : std::numeric_limits<double>::infinity();
          if (limit < 0) continue;
          const double bound = std::min(best_z, std::nextafter(limit, std::numeric_limits<double>::infinity()));
          const double raw = raw_drop_bounded(hm, hp, {row0, col0}, bound);
          if (raw >= bound) continue;
          const double z = std::max(0.0, raw);
          if (z < best_z && z <= limit) {
            best_z = z;
            found = true;
            best.candidate = k;
            best.offset = {row0, col0};
            const auto [x, y] = offset_center(state.spec, hp, best.offset);
            best.pose = {x, y, hp.theta, z, hp.orientation};
            if (z == 0.0) return std::pair{best, found};
          }
        }
    return std::pair{best, found};
  };

  auto [best, found] = scan(true);
  if (found) {
    best.feasible = true;
    return best;
  }
  if (allow_infeasible) {
    auto [fallback, any] = scan(false);
    if (any) return fallback;
  }
  throw NoFeasiblePlacementError("no in-bounds placement keeps the object under the ceiling");
}

}  // namespace pack
