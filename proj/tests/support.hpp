#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "pack/pack.hpp"

namespace testkit {

struct Gen {
  explicit Gen(std::uint64_t seed) : rng(seed) {}
  double uniform(double lo = 0, double hi = 1) { return lo + (hi - lo) * pack::unit_uniform(rng); }
  long integer(long lo, long hi) { return lo + static_cast<long>(pack::unit_uniform(rng) * static_cast<double>(hi - lo + 1)); }
  bool coin(double p = 0.5) { return uniform() < p; }
  std::mt19937_64 rng;
};

// Heights quantized to multiples of 1/64 so ties are common.
inline pack::HeightGrid random_heightmap(Gen& g, std::size_t rows, std::size_t cols, double hmax) {
  pack::HeightGrid hm(rows, cols, 0.0);
  const int blobs = static_cast<int>(g.integer(0, 12));
  for (int b = 0; b < blobs; ++b) {
    const long r0 = g.integer(0, static_cast<long>(rows) - 1), c0 = g.integer(0, static_cast<long>(cols) - 1);
    const long r1 = std::min<long>(static_cast<long>(rows), r0 + g.integer(1, 24));
    const long c1 = std::min<long>(static_cast<long>(cols), c0 + g.integer(1, 24));
    const double h = std::floor(g.uniform(0, hmax) * 64) / 64;
    for (long r = r0; r < r1; ++r)
      for (long c = c0; c < c1; ++c) hm(r, c) = std::max(hm(r, c), h);
  }
  if (g.coin(0.3))
    for (auto& v : hm.values()) v += std::floor(g.uniform(0, 0.05) * 64) / 64;
  return hm;
}

// Random (not necessarily convex) profile with a connected-ish footprint.
inline pack::HeightfieldPair random_profile(Gen& g, std::size_t max_side, double cell) {
  const auto nu = static_cast<std::size_t>(g.integer(1, static_cast<long>(max_side)));
  const auto nv = static_cast<std::size_t>(g.integer(1, static_cast<long>(max_side)));
  pack::HeightGrid top(nu, nv, 0.0), bottom(nu, nv, 0.0);
  pack::Grid<std::uint8_t> fp(nu, nv, 0);
  const double fill = g.uniform(0.3, 1.0);
  bool any = false;
  for (std::size_t u = 0; u < nu; ++u)
    for (std::size_t v = 0; v < nv; ++v) {
      if (!g.coin(fill)) continue;
      const double b = g.coin(0.5) ? 0.0 : std::floor(g.uniform(0, 0.1) * 64) / 64;
      bottom(u, v) = b;
      top(u, v) = b + std::floor(g.uniform(1, 16)) / 64;
      fp(u, v) = 1;
      any = true;
    }
  if (!any) {
    fp(0, 0) = 1;
    top(0, 0) = 1.0 / 64;
  }
  return pack::make_profile(std::move(top), std::move(bottom), std::move(fp), cell);
}

inline pack::ContainerState state_with(const pack::ContainerSpec& spec, pack::HeightGrid hm) {
  auto s = pack::make_container(spec);
  s.heightmap = std::move(hm);
  return s;
}

inline pack::ObjectModel box_object(const std::string& id, double lx, double ly, double lz,
                                    const std::string& category = "box") {
  return pack::make_object(id, category, pack::make_box_mesh(lx, ly, lz));
}

inline pack::ObjectModel cylinder_object(const std::string& id, double r, double h, const std::string& category = "bottle") {
  return pack::make_object(id, category, pack::make_cylinder_points(r, h, 24));
}

}  // namespace testkit
