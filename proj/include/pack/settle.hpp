#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "pack/container.hpp"
#include "pack/error.hpp"
#include "pack/geometry.hpp"
#include "pack/heightfield.hpp"

namespace pack {

inline constexpr double kTiltThresholdDeg = 10.0;

inline bool is_stable(double tilt_deg) { return tilt_deg <= kTiltThresholdDeg; }

struct SettleResult {
  Pose settled_pose;
  double tilt = 0;              // degrees, in [0, 90]
  bool stable = true;
  double support_fraction = 0;  // contact cells / footprint cells
  std::size_t contact_cells = 0;
};

// Quasi-static settling.
//
// Contact cells are footprint cells whose gap (z + bottom - heightmap) is
// within `contact_tol` of the smallest gap; with an unclamped drop height the
// smallest gap is zero, and on the floor it is the clearance of the lowest
// sampled point.  The support polygon is the 2D hull of contact cell centers.
// If the center of mass projects inside it the tilt is zero; otherwise the
// tilt is the angle, about the nearest support boundary, between the vertical
// and the line to the center of mass: atan(d / h) with d the horizontal
// overhang and h the COM height above the object's lowest point.
//
// The pose is not modified; the tilt only feeds the stability flag.
inline SettleResult settle(const ContainerState& state, const HeightfieldPair& hp, const Pose& pose,
                           double contact_tol = -1.0) {
  if (hp.cells.empty()) throw InternalError("settle: empty footprint");
  const double cell = state.spec.cell();
  if (contact_tol < 0) contact_tol = cell / 4.0;
  const GridOffset o = footprint_offset(state.spec, hp, pose.x, pose.y);
  if (!footprint_inside(state.heightmap, hp, o)) throw OutOfBoundsError("settle: footprint leaves the box");

  std::vector<double> gaps;
  gaps.reserve(hp.cells.size());
  double min_gap = std::numeric_limits<double>::infinity();
  for (const auto& c : hp.cells) {
    const double h = state.heightmap(static_cast<std::size_t>(o.row + c.u), static_cast<std::size_t>(o.col + c.v));
    gaps.push_back(pose.z + c.bottom - h);
    min_gap = std::min(min_gap, gaps.back());
  }
  const double limit = std::max(min_gap, 0.0) + contact_tol;

  std::vector<Vec2> contacts;
  for (std::size_t i = 0; i < hp.cells.size(); ++i)
    if (gaps[i] <= limit)
      contacts.push_back({(hp.cells[i].u + 0.5) * cell, (hp.cells[i].v + 0.5) * cell});
  if (contacts.empty()) throw InternalError("settle: no contact cells");

  SettleResult r;
  r.settled_pose = pose;
  r.contact_cells = contacts.size();
  r.support_fraction = static_cast<double>(contacts.size()) / static_cast<double>(hp.cells.size());

  const auto support = convex_hull_2d(std::move(contacts));
  const double overhang = distance_to_convex_polygon({hp.com.x, hp.com.y}, support, 1e-12);
  if (overhang > 0) {
    const double h = std::max(hp.com.z, 1e-12);
    r.tilt = std::min(90.0, std::atan2(overhang, h) * 180.0 / std::numbers::pi);
  }
  r.stable = is_stable(r.tilt);
  return r;
}

}  // namespace pack
