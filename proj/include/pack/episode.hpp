#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "pack/container.hpp"
#include "pack/error.hpp"
#include "pack/heightfield.hpp"
#include "pack/mesh.hpp"
#include "pack/reward.hpp"
#include "pack/settle.hpp"

namespace pack {

// Normalized action.  x, y and theta are clamped to [-1, 1] and mapped
// affinely onto [0, length], [0, width] and [-pi, pi].  `orientation` is an
// axis-aligned re-orientation index used only by the SO(3) baseline; learned
// policies leave it at 0.
struct Action {
  double x = 0, y = 0, theta = 0;
  int orientation = 0;
  friend bool operator==(const Action&, const Action&) = default;
};

struct PlanarPose {
  double x, y, theta;
};

inline PlanarPose denormalize(const ContainerSpec& spec, const Action& a) {
  auto c = [](double v) { return std::clamp(v, -1.0, 1.0); };
  return {(c(a.x) + 1.0) / 2.0 * spec.length, (c(a.y) + 1.0) / 2.0 * spec.width, c(a.theta) * std::numbers::pi};
}

inline Action normalize(const ContainerSpec& spec, double x, double y, double theta, int orientation = 0) {
  return {2.0 * x / spec.length - 1.0, 2.0 * y / spec.width - 1.0, theta / std::numbers::pi, orientation};
}

enum class Outcome { placed, out_of_bounds, over_ceiling };
enum class Termination { none, all_placed, out_of_bounds, over_ceiling };

inline const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::placed: return "placed";
    case Outcome::out_of_bounds: return "out_of_bounds";
    case Outcome::over_ceiling: return "over_ceiling";
  }
  return "?";
}

inline const char* to_string(Termination t) {
  switch (t) {
    case Termination::none: return "none";
    case Termination::all_placed: return "all_placed";
    case Termination::out_of_bounds: return "out_of_bounds";
    case Termination::over_ceiling: return "over_ceiling";
  }
  return "?";
}

struct StepRecord {
  std::size_t index = 0;
  std::string object_id;
  Action action;
  Pose pose;
  double reward = 0;
  Outcome outcome = Outcome::placed;
  double compactness = 0;      // pack compactness after the step (0 before any placement)
  bool stable = false;
  double tilt = 0;
  double support_fraction = 0;
  std::int64_t latency_ns = 0; // policy decision + drop-height estimate
  bool terminated = false;
};

struct StepResult {
  Observation observation;
  double reward = 0;
  bool terminated = false;
  Outcome outcome = Outcome::placed;
  StepRecord record;
};

struct EnvConfig {
  ContainerSpec spec;
  RewardConfig reward;
};

// One packing session: a fixed object list, one object per step, ending
// after the last object or on the first failed placement.  Each environment
// owns its state; share only the raster cache between environments.
class PackingEnv {
 public:
  explicit PackingEnv(EnvConfig cfg, std::shared_ptr<RasterCache> cache = std::make_shared<RasterCache>())
      : cfg_(std::move(cfg)), cache_(std::move(cache)) {
    cfg_.spec.validate();
  }

  Observation reset(std::vector<ObjectModel> objects, std::uint64_t seed) {
    if (objects.empty()) throw Error("reset needs at least one object");
    objects_ = std::move(objects);
    state_ = make_container(cfg_.spec);
    rng_.seed(seed);
    step_ = 0;
    termination_ = Termination::none;
    last_estimate_ns_ = 0;
    return observe();
  }

  StepResult step(const Action& action) {
    if (objects_.empty()) throw ProtocolError("step before reset");
    if (termination_ != Termination::none) throw ProtocolError("step after episode termination");

    const ObjectModel& obj = objects_[step_];
    const PlanarPose pp = denormalize(cfg_.spec, action);
    const auto hp = cache_->get(obj, pp.theta, cfg_.spec.cell(), action.orientation);

    StepResult res;
    StepRecord& rec = res.record;
    rec.index = step_;
    rec.object_id = obj.id;
    rec.action = action;
    rec.pose = {pp.x, pp.y, pp.theta, 0.0, action.orientation};

    const GridOffset off = footprint_offset(cfg_.spec, *hp, pp.x, pp.y);
    const auto t0 = std::chrono::steady_clock::now();
    const bool in_box = footprint_inside(state_.heightmap, *hp, off);
    if (in_box) rec.pose.z = drop_z_at(state_, *hp, off);
    last_estimate_ns_ = std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - t0).count();

    const Bounds b = in_box ? check_bounds(state_, *hp, rec.pose) : Bounds::outside_footprint;
    if (b != Bounds::inside) {
      rec.outcome = b == Bounds::outside_footprint ? Outcome::out_of_bounds : Outcome::over_ceiling;
      rec.reward = step_reward(cfg_.reward, false, 0.0, false);
      rec.compactness = state_.placements.empty() ? 0.0 : compactness(state_);
      termination_ = rec.outcome == Outcome::out_of_bounds ? Termination::out_of_bounds : Termination::over_ceiling;
    } else {
      const SettleResult s = settle(state_, *hp, rec.pose);
      commit_in_place(state_, obj, hp, s.settled_pose, s.tilt, s.stable);
      rec.pose = s.settled_pose;
      rec.stable = s.stable;
      rec.tilt = s.tilt;
      rec.support_fraction = s.support_fraction;
      rec.compactness = compactness(state_);
      rec.reward = step_reward(cfg_.reward, true, rec.compactness, s.stable);
      rec.outcome = Outcome::placed;
      ++step_;
      if (step_ == objects_.size()) termination_ = Termination::all_placed;
    }
    rec.terminated = termination_ != Termination::none;
    res.reward = rec.reward;
    res.terminated = rec.terminated;
    res.outcome = rec.outcome;
    res.observation = observe();
    return res;
  }

  // Box heightmap plus the canonical (theta = 0) projection of the object
  // to be placed next, if any.
  Observation observe() const {
    if (termination_ == Termination::none && step_ < objects_.size()) {
      const auto hp = cache_->get(objects_[step_], 0.0, cfg_.spec.cell(), 0);
      return render_observation(state_, hp.get());
    }
    return render_observation(state_, nullptr);
  }

  const ContainerState& state() const { return state_; }
  const EnvConfig& config() const { return cfg_; }
  const std::vector<ObjectModel>& objects() const { return objects_; }
  const ObjectModel* current_object() const {
    return termination_ == Termination::none && step_ < objects_.size() ? &objects_[step_] : nullptr;
  }
  std::size_t placed() const { return state_.placements.size(); }
  bool terminated() const { return termination_ != Termination::none; }
  Termination termination() const { return termination_; }
  std::mt19937_64& rng() { return rng_; }
  RasterCache& cache() const { return *cache_; }
  std::shared_ptr<RasterCache> shared_cache() const { return cache_; }
  std::int64_t last_estimate_ns() const { return last_estimate_ns_; }

 private:
  EnvConfig cfg_;
  std::shared_ptr<RasterCache> cache_;
  std::vector<ObjectModel> objects_;
  ContainerState state_ = make_container(cfg_.spec);
  std::mt19937_64 rng_;
  std::size_t step_ = 0;
  Termination termination_ = Termination::none;
  std::int64_t last_estimate_ns_ = 0;
};

}  // namespace pack
