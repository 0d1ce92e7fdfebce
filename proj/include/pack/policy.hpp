#pragma once

#include <chrono>
#include <cstdint>
#include <istream>
#include <memory>
#include <ostream>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "pack/episode.hpp"
#include "pack/heuristics.hpp"
#include "pack/manifest.hpp"
#include "pack/sequence.hpp"

namespace pack {

// observe -> action.  Implementations may read the full environment state;
// a learned policy would use only the observation.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string name() const = 0;
  virtual void reset(std::uint64_t /*seed*/) {}
  virtual Action act(const PackingEnv& env, const Observation& obs) = 0;
};

// Uniform [0, 1) from the top 53 bits; identical across standard libraries.
inline double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

class RandomPolicy final : public Policy {
 public:
  std::string name() const override { return "random"; }
  void reset(std::uint64_t seed) override { rng_.seed(seed ^ 0x9e3779b97f4a7c15ULL); }
  Action act(const PackingEnv&, const Observation&) override {
    const double x = 2 * unit_uniform(rng_) - 1, y = 2 * unit_uniform(rng_) - 1, t = 2 * unit_uniform(rng_) - 1;
    return {x, y, t, 0};
  }

 private:
  std::mt19937_64 rng_;
};

// Replays a fixed action list.
class ScriptedPolicy final : public Policy {
 public:
  explicit ScriptedPolicy(std::vector<Action> actions) : actions_(std::move(actions)) {}
  std::string name() const override { return "scripted"; }
  void reset(std::uint64_t) override { next_ = 0; }
  Action act(const PackingEnv&, const Observation&) override {
    if (next_ >= actions_.size()) throw ProtocolError("scripted policy ran out of actions");
    return actions_[next_++];
  }

 private:
  std::vector<Action> actions_;
  std::size_t next_ = 0;
};

// Rotation alignment + Bottom-Left-Back fill.  When nothing fits under the
// ceiling it still proposes the lowest in-box pose (the step then fails on
// the ceiling); when nothing fits in the box at all it aims at the origin.
class HeuristicPolicy final : public Policy {
 public:
  explicit HeuristicPolicy(HeuristicConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }
  std::string name() const override { return cfg_.mode == RotationMode::SO2 ? "blbf-so2" : "blbf-so3"; }
  const HeuristicConfig& config() const { return cfg_; }

  Action act(const PackingEnv& env, const Observation&) override {
    const ObjectModel* obj = env.current_object();
    if (!obj) throw ProtocolError("no object to place");
    const ContainerSpec& spec = env.state().spec;
    std::vector<std::shared_ptr<const HeightfieldPair>> profiles;
    for (const auto& o : candidate_orientations(*obj, spec, cfg_))
      profiles.push_back(env.cache().get(*obj, o.yaw, spec.cell(), o.index));
    try {
      const BlbfResult r = blbf_place(env.state(), profiles, cfg_.scan_stride, true);
      return normalize(spec, r.pose.x, r.pose.y, r.pose.theta, r.pose.orientation);
    } catch (const NoFeasiblePlacementError&) {
      return {-1.0, -1.0, 0.0, 0};
    }
  }

 private:
  HeuristicConfig cfg_;
};

// --- sequencing --------------------------------------------------------------

enum class Planner { given, beam3, greedy, volume, random };

inline Planner parse_planner(const std::string& s) {
  if (s == "given") return Planner::given;
  if (s == "beam3") return Planner::beam3;
  if (s == "greedy") return Planner::greedy;
  if (s == "volume") return Planner::volume;
  if (s == "random") return Planner::random;
  throw Error("unknown planner '" + s + "'");
}

inline const char* to_string(Planner p) {
  switch (p) {
    case Planner::given: return "given";
    case Planner::beam3: return "beam3";
    case Planner::greedy: return "greedy";
    case Planner::volume: return "volume";
    case Planner::random: return "random";
  }
  return "?";
}

inline std::vector<ObjectModel> plan_order(Planner planner, std::vector<ObjectModel> objects,
                                           const TransitionMatrix* matrix, std::uint64_t seed) {
  switch (planner) {
    case Planner::given: return objects;
    case Planner::volume: return order_by_volume(std::move(objects));
    case Planner::random: {
      std::mt19937_64 rng(seed ^ 0x5bd1e995ULL);
      for (std::size_t i = objects.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(unit_uniform(rng) * static_cast<double>(i));
        std::swap(objects[i - 1], objects[std::min(j, i - 1)]);
      }
      return objects;
    }
    case Planner::beam3:
    case Planner::greedy: {
      if (!matrix) throw Error(std::string("planner '") + to_string(planner) + "' needs a transition matrix");
      std::vector<PlanItem> items;
      for (const auto& o : objects) items.push_back({o.id, o.category});
      const SequencePlan plan = planner == Planner::beam3 ? beam3_plan(*matrix, items) : greedy_plan(*matrix, items);
      std::map<std::string, const ObjectModel*> by_id;
      for (const auto& o : objects) by_id.emplace(o.id, &o);
      std::vector<ObjectModel> out;
      for (const auto& id : plan.ids) out.push_back(*by_id.at(id));
      return out;
    }
  }
  return objects;
}

// --- episode traces ----------------------------------------------------------

struct EpisodeTrace {
  std::string episode_id;
  std::string method;
  std::uint64_t seed = 0;
  std::vector<std::string> sequence;   // planned order
  std::vector<StepRecord> steps;
  Termination termination = Termination::none;
  std::size_t placed = 0;
  double final_compactness = 0;        // 0 when nothing was placed
  double stability_rate = 0;           // stable placements / placements

  bool success() const { return termination == Termination::all_placed; }
  double episode_return() const {
    double r = 0;
    for (const auto& s : steps) r += s.reward;
    return r;
  }
};

inline EpisodeTrace run_policy(const EnvConfig& cfg, Policy& policy, std::vector<ObjectModel> objects,
                               Planner planner, std::uint64_t seed, const TransitionMatrix* matrix = nullptr,
                               std::shared_ptr<RasterCache> cache = std::make_shared<RasterCache>(),
                               std::string episode_id = {}) {
  PackingEnv env(cfg, std::move(cache));
  auto ordered = plan_order(planner, std::move(objects), matrix, seed);

  EpisodeTrace trace;
  trace.episode_id = std::move(episode_id);
  trace.method = std::string(to_string(planner)) + "+" + policy.name();
  trace.seed = seed;
  for (const auto& o : ordered) trace.sequence.push_back(o.id);

  Observation obs = env.reset(std::move(ordered), seed);
  policy.reset(seed);
  while (!env.terminated()) {
    const auto t0 = std::chrono::steady_clock::now();
    const Action a = policy.act(env, obs);
    const auto t1 = std::chrono::steady_clock::now();
    StepResult r = env.step(a);
    r.record.latency_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count() + env.last_estimate_ns();
    trace.steps.push_back(r.record);
    obs = std::move(r.observation);
  }
  trace.termination = env.termination();
  trace.placed = env.placed();
  if (trace.placed > 0) {
    trace.final_compactness = compactness(env.state());
    std::size_t stable = 0;
    for (const auto& p : env.state().placements) stable += p.stable ? 1 : 0;
    trace.stability_rate = static_cast<double>(stable) / static_cast<double>(trace.placed);
  }
  return trace;
}

// One JSON object per step:
//   {"episode","method","seed","step","object","action":[x,y,theta],
//    "orientation","pose":{x,y,theta,z},"reward","outcome","compactness",
//    "stable","tilt","support_fraction","latency_ns","terminated"}
inline nlohmann::json step_to_json(const EpisodeTrace& t, const StepRecord& s) {
  return {{"episode", t.episode_id},
          {"method", t.method},
          {"seed", t.seed},
          {"step", s.index},
          {"object", s.object_id},
          {"action", {s.action.x, s.action.y, s.action.theta}},
          {"orientation", s.action.orientation},
          {"pose", {{"x", s.pose.x}, {"y", s.pose.y}, {"theta", s.pose.theta}, {"z", s.pose.z}}},
          {"reward", s.reward},
          {"outcome", to_string(s.outcome)},
          {"compactness", s.compactness},
          {"stable", s.stable},
          {"tilt", s.tilt},
          {"support_fraction", s.support_fraction},
          {"latency_ns", s.latency_ns},
          {"terminated", s.terminated}};
}

inline void write_trace_jsonl(std::ostream& out, const EpisodeTrace& t) {
  for (const auto& s : t.steps) out << step_to_json(t, s).dump() << '\n';
}

inline Outcome parse_outcome(const std::string& s) {
  if (s == "placed") return Outcome::placed;
  if (s == "out_of_bounds") return Outcome::out_of_bounds;
  if (s == "over_ceiling") return Outcome::over_ceiling;
  throw Error("unknown outcome '" + s + "'");
}

// Rebuilds traces from step lines; consecutive lines with the same
// (episode, method, seed) form one trace.
inline std::vector<EpisodeTrace> read_traces_jsonl(std::istream& in) {
  std::vector<EpisodeTrace> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error("trace line " + std::to_string(lineno) + ": " + e.what());
    }
    const std::string ep = j.at("episode"), method = j.at("method");
    const std::uint64_t seed = j.at("seed");
    if (out.empty() || out.back().episode_id != ep || out.back().method != method || out.back().seed != seed ||
        j.at("step").get<std::size_t>() == 0) {
      out.emplace_back();
      out.back().episode_id = ep;
      out.back().method = method;
      out.back().seed = seed;
    }
    StepRecord s;
    s.index = j.at("step");
    s.object_id = j.at("object");
    const auto a = j.at("action");
    s.action = {a.at(0), a.at(1), a.at(2), j.at("orientation")};
    const auto& p = j.at("pose");
    s.pose = {p.at("x"), p.at("y"), p.at("theta"), p.at("z"), s.action.orientation};
    s.reward = j.at("reward");
    s.outcome = parse_outcome(j.at("outcome"));
    s.compactness = j.at("compactness");
    s.stable = j.at("stable");
    s.tilt = j.at("tilt");
    s.support_fraction = j.at("support_fraction");
    s.latency_ns = j.at("latency_ns");
    s.terminated = j.at("terminated");
    auto& t = out.back();
    t.steps.push_back(s);
    if (s.outcome == Outcome::placed) {
      ++t.placed;
      t.sequence.push_back(s.object_id);
    }
    if (s.terminated)
      t.termination = s.outcome == Outcome::placed        ? Termination::all_placed
                      : s.outcome == Outcome::out_of_bounds ? Termination::out_of_bounds
                                                            : Termination::over_ceiling;
  }
  for (auto& t : out) {
    std::size_t stable = 0;
    for (const auto& s : t.steps) stable += s.outcome == Outcome::placed && s.stable ? 1 : 0;
    t.stability_rate = t.placed ? static_cast<double>(stable) / static_cast<double>(t.placed) : 0.0;
    for (auto it = t.steps.rbegin(); it != t.steps.rend(); ++it)
      if (it->outcome == Outcome::placed) {
        t.final_compactness = it->compactness;
        break;
      }
  }
  return out;
}

// Re-executes a trace's actions against the same objects.
inline std::pair<EpisodeTrace, HeightGrid> replay(const EnvConfig& cfg, const ObjectLibrary& lib,
                                                  const EpisodeTrace& trace) {
  std::vector<std::string> ids;
  std::vector<Action> actions;
  for (const auto& s : trace.steps) {
    ids.push_back(s.object_id);
    actions.push_back(s.action);
  }
  ScriptedPolicy policy(actions);
  PackingEnv env(cfg);
  Observation obs = env.reset(lib.resolve(ids), trace.seed);
  EpisodeTrace out;
  out.episode_id = trace.episode_id;
  out.method = trace.method;
  out.seed = trace.seed;
  out.sequence = ids;
  while (!env.terminated()) {
    StepResult r = env.step(policy.act(env, obs));
    out.steps.push_back(r.record);
    obs = std::move(r.observation);
  }
  out.termination = env.termination();
  out.placed = env.placed();
  if (out.placed) out.final_compactness = compactness(env.state());
  return {std::move(out), env.state().heightmap};
}

}  // namespace pack
