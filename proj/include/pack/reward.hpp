#pragma once

#include <algorithm>
#include <span>
#include <string>

#include "pack/container.hpp"
#include "pack/error.hpp"

namespace pack {

enum class RewardKind { Simple, C, CS };

struct RewardConfig {
  RewardKind kind = RewardKind::CS;
  double alpha = 0.6;

  static RewardConfig simple() { return {RewardKind::Simple, 0.0}; }
  static RewardConfig compactness() { return {RewardKind::C, 1.0}; }
  static RewardConfig cs(double alpha) {
    if (!(alpha >= 0 && alpha <= 1)) throw Error("alpha must lie in [0, 1]");
    return {RewardKind::CS, alpha};
  }
};

// Accepts "simple", "c", "cs0.6", "cs0.9", "cs<alpha>".
inline RewardConfig parse_reward(std::string name) {
  std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::tolower(c); });
  if (name == "simple") return RewardConfig::simple();
  if (name == "c" || name == "compactness") return RewardConfig::compactness();
  if (name.rfind("cs", 0) == 0) {
    const std::string a = name.substr(2);
    if (a.empty()) return RewardConfig::cs(0.6);
    try {
      return RewardConfig::cs(std::stod(a));
    } catch (const std::invalid_argument&) {
    }
  }
  throw Error("unknown reward '" + name + "'");
}

// Placed volume over the volume of the container-axis-aligned box that
// encloses every placed footprint (in whole cells) from the floor up to the
// highest rasterized top.  Clamped to 1: cell quantization can shave a
// fraction of a cell off the enclosing box.
inline double compactness(const ContainerSpec& spec, std::span<const Placement> placements) {
  if (placements.empty()) throw UndefinedMetricError("compactness needs at least one placement");
  long r0 = std::numeric_limits<long>::max(), c0 = r0, r1 = std::numeric_limits<long>::min(), c1 = r1;
  double ztop = 0, vol = 0;
  for (const auto& p : placements) {
    const auto& hp = *p.profile;
    r0 = std::min(r0, p.row0 + hp.umin);
    r1 = std::max(r1, p.row0 + hp.umax + 1);
    c0 = std::min(c0, p.col0 + hp.vmin);
    c1 = std::max(c1, p.col0 + hp.vmax + 1);
    ztop = std::max(ztop, p.pose.z + hp.max_top);
    vol += p.volume;
  }
  const double cell = spec.cell();
  const double box = static_cast<double>(r1 - r0) * cell * static_cast<double>(c1 - c0) * cell * ztop;
  if (!(box > 0)) throw UndefinedMetricError("enclosing box has zero volume");
  return std::min(1.0, vol / box);
}

inline double compactness(const ContainerState& state) { return compactness(state.spec, state.placements); }

// Per-step reward: -1 for any placement outside the success volume,
// otherwise 1 (Simple), C, or alpha * C + (1 - alpha) * S.
inline double step_reward(const RewardConfig& cfg, bool inside, double c, bool stable) {
  if (!inside) return -1.0;
  switch (cfg.kind) {
    case RewardKind::Simple: return 1.0;
    case RewardKind::C: return c;
    case RewardKind::CS: return cfg.alpha * c + (1.0 - cfg.alpha) * (stable ? 1.0 : 0.0);
  }
  return -1.0;
}

inline std::string to_string(const RewardConfig& cfg) {
  switch (cfg.kind) {
    case RewardKind::Simple: return "simple";
    case RewardKind::C: return "c";
    case RewardKind::CS: return "cs" + std::to_string(cfg.alpha);
  }
  return "?";
}

}  // namespace pack
