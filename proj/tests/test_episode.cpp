#include <gtest/gtest.h>

#include <cstring>
#include <sstream>

#include "pack/pack.hpp"
#include "support.hpp"

using namespace pack;

namespace {

std::vector<ObjectModel> random_objects(testkit::Gen& g, std::size_t n) {
  std::vector<ObjectModel> out;
  for (std::size_t i = 0; i < n; ++i) {
    const std::string id = "o" + std::to_string(i);
    if (g.coin(0.7))
      out.push_back(testkit::box_object(id, g.uniform(0.03, 0.2), g.uniform(0.03, 0.15), g.uniform(0.02, 0.12),
                                        g.coin() ? "box" : "crate"));
    else
      out.push_back(testkit::cylinder_object(id, g.uniform(0.02, 0.05), g.uniform(0.04, 0.2)));
  }
  return out;
}

ObjectLibrary library_of(const std::vector<ObjectModel>& objs) {
  ObjectLibrary lib;
  for (const auto& o : objs) lib.add(o);
  return lib;
}

bool same_bits(const Grid<double>& a, const Grid<double>& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.values().data(), b.values().data(), a.values().size() * sizeof(double)) == 0;
}

void expect_same_step(const StepRecord& a, const StepRecord& b) {
  EXPECT_EQ(a.index, b.index);
  EXPECT_EQ(a.object_id, b.object_id);
  EXPECT_EQ(a.action, b.action);
  EXPECT_EQ(a.pose, b.pose);
  EXPECT_EQ(a.reward, b.reward);
  EXPECT_EQ(a.outcome, b.outcome);
  EXPECT_EQ(a.compactness, b.compactness);
  EXPECT_EQ(a.stable, b.stable);
  EXPECT_EQ(a.tilt, b.tilt);
  EXPECT_EQ(a.support_fraction, b.support_fraction);
  EXPECT_EQ(a.terminated, b.terminated);
}

}  // namespace

TEST(Env, ResetShowsEmptyBoxAndFirstObject) {
  PackingEnv env({});
  const auto obs = env.reset({testkit::box_object("a", 0.1, 0.06, 0.05)}, 3);
  EXPECT_EQ(obs.box.rows, 200u);
  EXPECT_EQ(obs.box.cols, 150u);
  for (std::size_t r = 0; r < 200; ++r)
    for (std::size_t c = 0; c < 150; ++c) ASSERT_EQ(obs.image(r, c), 0.0);
  EXPECT_EQ(obs.object.rows, 50u);
  EXPECT_EQ(obs.object.cols, 30u);
  EXPECT_NEAR(obs.image(obs.object.row + 10, obs.object.col + 10), 0.05 / 0.294, 1e-12);
  EXPECT_EQ(env.placed(), 0u);
  EXPECT_FALSE(env.terminated());
}

TEST(Env, SameSeedSameObservationBytes) {
  const auto objs = std::vector<ObjectModel>{testkit::box_object("a", 0.1, 0.1, 0.1)};
  PackingEnv a({}), b({});
  EXPECT_TRUE(same_bits(a.reset(objs, 7).image, b.reset(objs, 7).image));
}

TEST(Env, ResetClearsPreviousEpisode) {
  PackingEnv env({});
  const auto objs = std::vector<ObjectModel>{testkit::box_object("a", 0.1, 0.1, 0.1)};
  env.reset(objs, 1);
  env.step(normalize(env.config().spec, 0.2, 0.15, 0));
  ASSERT_TRUE(env.terminated());
  env.reset(objs, 1);
  EXPECT_EQ(env.placed(), 0u);
  EXPECT_FALSE(env.terminated());
  for (double h : env.state().heightmap.values()) ASSERT_EQ(h, 0.0);
  EXPECT_THROW(env.reset({}, 1), Error);
}

TEST(Env, CleanPlacementEarnsOne) {
  EnvConfig cfg;
  cfg.reward = RewardConfig::simple();
  PackingEnv env(cfg);
  env.reset({testkit::box_object("a", 0.1, 0.1, 0.1), testkit::box_object("b", 0.1, 0.1, 0.1)}, 0);
  const auto r = env.step(normalize(cfg.spec, 0.05, 0.05, 0));
  EXPECT_EQ(r.outcome, Outcome::placed);
  EXPECT_EQ(r.reward, 1.0);
  EXPECT_FALSE(r.terminated);
  EXPECT_TRUE(r.record.stable);
  EXPECT_EQ(r.record.pose.z, 0.0);
  EXPECT_NEAR(r.observation.image(10, 10), 0.1 / 0.294, 1e-12);
}

TEST(Env, BeyondWallFailsAndTerminates) {
  PackingEnv env({});
  env.reset({testkit::box_object("a", 0.1, 0.1, 0.1), testkit::box_object("b", 0.1, 0.1, 0.1)}, 0);
  const auto r = env.step(normalize(env.config().spec, 0.39, 0.15, 0));
  EXPECT_EQ(r.outcome, Outcome::out_of_bounds);
  EXPECT_EQ(r.reward, -1.0);
  EXPECT_TRUE(r.terminated);
  EXPECT_EQ(env.termination(), Termination::out_of_bounds);
  EXPECT_EQ(env.placed(), 0u);
  EXPECT_THROW(env.step({}), ProtocolError);
}

TEST(Env, OverCeilingFailsAndTerminates) {
  PackingEnv env({});
  const auto tall = testkit::box_object("t", 0.1, 0.1, 0.2);
  env.reset({tall, tall}, 0);
  ASSERT_EQ(env.step(normalize(env.config().spec, 0.05, 0.05, 0)).outcome, Outcome::placed);
  const auto r = env.step(normalize(env.config().spec, 0.05, 0.05, 0));
  EXPECT_EQ(r.outcome, Outcome::over_ceiling);
  EXPECT_EQ(env.termination(), Termination::over_ceiling);
  EXPECT_EQ(env.placed(), 1u);
}

TEST(Env, AllPlacedTerminates) {
  PackingEnv env({});
  env.reset({testkit::box_object("a", 0.1, 0.1, 0.1)}, 0);
  const auto r = env.step(normalize(env.config().spec, 0.2, 0.15, 0));
  EXPECT_TRUE(r.terminated);
  EXPECT_EQ(env.termination(), Termination::all_placed);
  EXPECT_EQ(r.observation.object.rows, 0u);
}

TEST(Env, StepBeforeResetIsProtocolError) {
  PackingEnv env({});
  EXPECT_THROW(env.step({}), ProtocolError);
}

TEST(Env, ActionsAreClampedAndDenormalized) {
  const ContainerSpec spec;
  const auto p = denormalize(spec, {2.0, -3.0, 0.5, 0});
  EXPECT_EQ(p.x, 0.4);
  EXPECT_EQ(p.y, 0.0);
  EXPECT_DOUBLE_EQ(p.theta, std::numbers::pi / 2);
  const Action a = normalize(spec, 0.1, 0.2, -1.0);
  const auto q = denormalize(spec, a);
  EXPECT_NEAR(q.x, 0.1, 1e-15);
  EXPECT_NEAR(q.y, 0.2, 1e-15);
  EXPECT_NEAR(q.theta, -1.0, 1e-15);
}

TEST(RunPolicy, BlbfTilesEightBricks) {
  std::vector<ObjectModel> bricks;
  for (int i = 0; i < 8; ++i) bricks.push_back(testkit::box_object("b" + std::to_string(i), 0.2, 0.15, 0.082));
  HeuristicPolicy policy({});
  const auto t = run_policy({}, policy, bricks, Planner::given, 0);
  EXPECT_TRUE(t.success());
  EXPECT_EQ(t.placed, 8u);
  EXPECT_NEAR(t.final_compactness, 1.0, 1e-9);
  EXPECT_EQ(t.stability_rate, 1.0);
}

TEST(RunPolicy, RandomPolicyDeterministicPerSeed) {
  testkit::Gen g(81);
  const auto objs = random_objects(g, 6);
  RandomPolicy p1, p2;
  const auto a = run_policy({}, p1, objs, Planner::random, 11), b = run_policy({}, p2, objs, Planner::random, 11);
  ASSERT_EQ(a.steps.size(), b.steps.size());
  EXPECT_EQ(a.sequence, b.sequence);
  for (std::size_t i = 0; i < a.steps.size(); ++i) expect_same_step(a.steps[i], b.steps[i]);
}

TEST(RunPolicy, VolumePlannerOrder) {
  const std::vector<ObjectModel> objs{testkit::box_object("small", 0.05, 0.05, 0.05),
                                      testkit::box_object("big", 0.2, 0.15, 0.1),
                                      testkit::box_object("mid", 0.1, 0.1, 0.1)};
  HeuristicPolicy policy({});
  const auto t = run_policy({}, policy, objs, Planner::volume, 0);
  EXPECT_EQ(t.sequence, (std::vector<std::string>{"big", "mid", "small"}));
  EXPECT_EQ(t.method, "volume+blbf-so2");
  EXPECT_THROW(run_policy({}, policy, objs, Planner::beam3, 0), Error);
}

TEST(Replay, ByteIdenticalThroughJsonl) {
  testkit::Gen g(82);
  for (int trial = 0; trial < 20; ++trial) {
    const auto objs = random_objects(g, static_cast<std::size_t>(g.integer(1, 8)));
    const auto lib = library_of(objs);
    EnvConfig cfg;
    cfg.reward = RewardConfig::cs(0.6);
    std::unique_ptr<Policy> policy;
    if (g.coin()) policy = std::make_unique<RandomPolicy>();
    else policy = std::make_unique<HeuristicPolicy>(HeuristicConfig{});
    const std::uint64_t seed = static_cast<std::uint64_t>(g.integer(0, 1000));

    PackingEnv env(cfg);
    auto ordered = plan_order(Planner::random, objs, nullptr, seed);
    Observation obs = env.reset(ordered, seed);
    policy->reset(seed);
    EpisodeTrace t;
    t.episode_id = "ep" + std::to_string(trial);
    t.method = "random+" + policy->name();
    t.seed = seed;
    while (!env.terminated()) {
      auto r = env.step(policy->act(env, obs));
      t.steps.push_back(r.record);
      obs = std::move(r.observation);
    }
    std::stringstream io;
    write_trace_jsonl(io, t);
    const auto back = read_traces_jsonl(io);
    ASSERT_EQ(back.size(), 1u);
    const auto [rt, hm] = replay(cfg, lib, back[0]);
    ASSERT_EQ(rt.steps.size(), t.steps.size());
    for (std::size_t i = 0; i < t.steps.size(); ++i) expect_same_step(rt.steps[i], t.steps[i]);
    EXPECT_TRUE(same_bits(hm, env.state().heightmap));
    EXPECT_EQ(rt.termination, env.termination());
  }
}

TEST(Termination, SoundUnderRandomActions) {
  testkit::Gen g(83);
  EnvConfig cfg;
  cfg.reward = RewardConfig::simple();
  for (int trial = 0; trial < 200; ++trial) {
    const auto objs = random_objects(g, static_cast<std::size_t>(g.integer(1, 6)));
    PackingEnv env(cfg);
    env.reset(objs, static_cast<std::uint64_t>(trial));
    double ret = 0;
    std::size_t steps = 0;
    while (!env.terminated()) {
      const Action a{g.uniform(-1.2, 1.2), g.uniform(-1.2, 1.2), g.uniform(-1, 1), 0};
      const auto r = env.step(a);
      ++steps;
      ret += r.reward;
      ASSERT_LE(steps, objs.size());
      EXPECT_EQ(r.terminated, env.terminated());
      if (r.outcome != Outcome::placed) {
        ASSERT_TRUE(r.terminated);
      }
    }
    EXPECT_THROW(env.step({}), ProtocolError);
    const double placed = static_cast<double>(env.placed());
    if (env.termination() == Termination::all_placed) {
      EXPECT_EQ(env.placed(), objs.size());
      EXPECT_EQ(ret, placed);
    } else {
      EXPECT_EQ(ret, placed - 1.0);
      EXPECT_EQ(steps, env.placed() + 1);
    }
    for (double h : env.state().heightmap.values()) ASSERT_LE(h, cfg.spec.ceiling() + 1e-12);
  }
}
