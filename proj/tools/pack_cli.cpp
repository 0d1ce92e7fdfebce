#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "pack/pack.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) out.push_back(item);
  return out;
}

std::vector<std::uint64_t> parse_seeds(const std::string& s) {
  std::vector<std::uint64_t> out;
  for (const auto& tok : split_list(s)) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size() || tok.front() == '-') throw pack::Error("bad seed '" + tok + "'");
    out.push_back(v);
  }
  if (out.empty()) throw pack::Error("no seeds given");
  return out;
}

pack::TransitionMatrix load_matrix(const fs::path& demos, double smoothing) {
  std::ifstream in(demos);
  if (!in) throw pack::Error("cannot open demos file " + demos.string());
  return pack::build_transition_matrix(pack::read_demos(in), smoothing);
}

struct BoxOptions {
  double length = 0.40, width = 0.30, wall = 0.164, margin = 0.13, cell = 0.0;

  void add_to(CLI::App* app) {
    app->add_option("--box-length", length, "box x extent (m)")->capture_default_str();
    app->add_option("--box-width", width, "box y extent (m)")->capture_default_str();
    app->add_option("--wall-height", wall, "wall height (m)")->capture_default_str();
    app->add_option("--margin", margin, "vertical margin above the walls (m)")->capture_default_str();
    app->add_option("--cell", cell, "grid cell size (m); 0 = longer side / 200")->capture_default_str();
  }

  pack::ContainerSpec spec() const {
    pack::ContainerSpec s;
    s.length = length;
    s.width = width;
    s.wall_height = wall;
    s.vertical_margin = margin;
    s.cell_size = cell;
    s.validate();
    return s;
  }
};

pack::HeuristicConfig heuristic_for(const std::string& method, int stride) {
  const pack::MethodSpec m = pack::parse_method(method);
  pack::HeuristicConfig cfg;
  cfg.mode = m.placer == "blbf-so3" ? pack::RotationMode::SO3 : pack::RotationMode::SO2;
  cfg.scan_stride = stride;
  if (m.placer != "blbf-so2" && m.placer != "blbf-so3" && m.placer != "policy")
    throw pack::Error("place needs a BLBF placer, got '" + m.placer + "'");
  return cfg;
}

int run_bench(const fs::path& manifest, const fs::path& episodes, const std::string& methods,
              const std::string& seeds, const fs::path& out, const std::string& demos, double smoothing,
              const std::string& reward, const BoxOptions& box, int stride, std::size_t threads) {
  const auto lib = pack::ObjectLibrary::from_manifest(manifest);
  const auto eps = pack::ingest_episodes(episodes, lib);
  std::optional<pack::TransitionMatrix> matrix;
  if (!demos.empty()) matrix = load_matrix(demos, smoothing);

  pack::SuiteConfig cfg;
  cfg.env.spec = box.spec();
  cfg.env.reward = pack::parse_reward(reward);
  cfg.heuristic.scan_stride = stride;
  cfg.methods = split_list(methods);
  cfg.seeds = parse_seeds(seeds);
  cfg.matrix = matrix ? &*matrix : nullptr;
  cfg.threads = threads;
  if (cfg.methods.empty()) throw pack::Error("no methods given");

  const auto report = pack::run_suite(lib, eps, cfg);
  pack::write_suite_outputs(out, report);
  std::cout << "episodes " << eps.size() << ", methods " << cfg.methods.size() << ", seeds " << cfg.seeds.size()
            << " -> " << (out / "report.csv").string() << '\n';
  for (const auto& m : report.methods)
    std::cout << "  " << m.method << ": success " << m.success_rate << "%, objects " << m.objects.mean << " +- "
              << m.objects.std << ", C " << m.final_compactness.mean << ", stable " << m.stability.mean
              << ", latency " << m.latency_ms.mean << " ms\n";
  return 0;
}

int run_plan(const fs::path& demos, const std::string& objects, const std::string& manifest, double smoothing,
             const std::string& planner) {
  const auto matrix = load_matrix(demos, smoothing);
  std::optional<pack::ObjectLibrary> lib;
  if (!manifest.empty()) lib = pack::ObjectLibrary::from_manifest(manifest);
  // Items are object ids (categories from the manifest) or id:category pairs;
  // without a manifest a bare item is its own category.
  std::vector<pack::PlanItem> items;
  for (const auto& tok : split_list(objects)) {
    const auto colon = tok.find(':');
    if (colon != std::string::npos) items.push_back({tok.substr(0, colon), tok.substr(colon + 1)});
    else if (lib) items.push_back({tok, lib->at(tok).category});
    else items.push_back({tok, tok});
  }
  if (items.empty()) throw pack::Error("no objects given");
  std::map<std::string, int> seen;
  for (auto& it : items)
    if (seen[it.id]++) it.id += "#" + std::to_string(seen[it.id] - 1);

  const pack::SequencePlan beam = pack::beam3_plan(matrix, items), greedy = pack::greedy_plan(matrix, items);
  const pack::SequencePlan& chosen = planner == "greedy" ? greedy : beam;
  if (planner != "beam3" && planner != "greedy") throw pack::Error("unknown planner '" + planner + "'");
  json out{{"planner", planner}, {"sequence", chosen.ids}, {"log_prob", chosen.score},
           {"greedy_log_prob", greedy.score}};
  std::cout << out.dump(2) << '\n';
  return 0;
}

int run_place(const fs::path& state_path, const std::string& object, const fs::path& manifest,
              const std::string& method, const BoxOptions& box, int stride) {
  const auto lib = pack::ObjectLibrary::from_manifest(manifest);
  const pack::ObjectModel& obj = lib.at(object);
  std::ifstream in(state_path);
  if (!in) throw pack::Error("cannot open heightmap " + state_path.string());
  auto state = pack::make_container(box.spec());
  pack::HeightGrid hm = pack::read_heightmap_csv(in);
  if (hm.rows() != state.heightmap.rows() || hm.cols() != state.heightmap.cols())
    throw pack::ResolutionError("heightmap is " + std::to_string(hm.rows()) + "x" + std::to_string(hm.cols()) +
                                ", box grid is " + std::to_string(state.heightmap.rows()) + "x" +
                                std::to_string(state.heightmap.cols()));
  state.heightmap = std::move(hm);

  const auto cfg = heuristic_for(method, stride);
  pack::RasterCache cache;
  std::vector<std::shared_ptr<const pack::HeightfieldPair>> profiles;
  for (const auto& o : pack::candidate_orientations(obj, state.spec, cfg))
    profiles.push_back(cache.get(obj, o.yaw, state.spec.cell(), o.index));
  const pack::BlbfResult r = pack::blbf_place(state, profiles, cfg.scan_stride, true);
  const auto& hp = *profiles[r.candidate];
  const pack::SettleResult s = pack::settle(state, hp, r.pose);
  const pack::Action a = pack::normalize(state.spec, r.pose.x, r.pose.y, r.pose.theta, r.pose.orientation);
  json out{{"object", object},
           {"method", method},
           {"feasible", r.feasible},
           {"bounds", pack::to_string(pack::check_bounds(state, hp, r.pose))},
           {"pose", {{"x", r.pose.x}, {"y", r.pose.y}, {"z", r.pose.z}, {"theta", r.pose.theta},
                     {"orientation", r.pose.orientation}}},
           {"action", {a.x, a.y, a.theta}},
           {"offset", {r.offset.row, r.offset.col}},
           {"stable", s.stable},
           {"tilt_deg", s.tilt},
           {"support_fraction", s.support_fraction}};
  std::cout << out.dump(2) << '\n';
  return r.feasible ? 0 : 3;
}

int run_serve(const fs::path& manifest, const std::string& reward, const BoxOptions& box) {
  const auto lib = pack::ObjectLibrary::from_manifest(manifest);
  pack::EnvConfig cfg;
  cfg.spec = box.spec();
  cfg.reward = pack::parse_reward(reward);
  pack::WireSession session(lib, cfg);
  std::ios::sync_with_stdio(false);
  session.serve(std::cin, std::cout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Heightmap packing engine: BLBF placement, sequence planning, benchmarks"};
  app.require_subcommand(1);

  BoxOptions box;
  int stride = 1;
  std::string reward = "cs0.6";

  auto* bench = app.add_subcommand("bench", "run methods x episodes x seeds and write report.csv, traces and plots");
  std::string manifest, episodes, methods = "blbf-so2,blbf-so3", seeds = "0", out = "bench_out", demos;
  double smoothing = 0.5;
  std::size_t threads = 0;
  bench->add_option("--manifest", manifest, "object manifest (JSON)")->required()->check(CLI::ExistingFile);
  bench->add_option("--episodes", episodes, "episodes (JSON lines)")->required()->check(CLI::ExistingFile);
  bench->add_option("--methods", methods, "comma-separated [planner+]placer list")->capture_default_str();
  bench->add_option("--seeds", seeds, "comma-separated seeds")->capture_default_str();
  bench->add_option("--out", out, "output directory")->capture_default_str();
  bench->add_option("--demos", demos, "demonstration sequences for beam3/greedy planners")->check(CLI::ExistingFile);
  bench->add_option("--smoothing", smoothing, "additive smoothing for the transition matrix")->capture_default_str();
  bench->add_option("--reward", reward, "simple | C | cs<alpha>")->capture_default_str();
  bench->add_option("--stride", stride, "BLBF scan stride (cells)")->capture_default_str();
  bench->add_option("--threads", threads, "worker threads (0: PACK_THREADS or all cores)")->capture_default_str();
  box.add_to(bench);

  auto* plan = app.add_subcommand("plan", "order objects with the learned category transitions");
  std::string plan_demos, objects, plan_manifest, planner = "beam3";
  plan->add_option("--demos", plan_demos, "demonstration sequences (JSON lines)")->required()->check(CLI::ExistingFile);
  plan->add_option("--objects", objects, "comma-separated ids, or id:category pairs")->required();
  plan->add_option("--manifest", plan_manifest, "manifest for id -> category lookup")->check(CLI::ExistingFile);
  plan->add_option("--smoothing", smoothing, "additive smoothing")->capture_default_str();
  plan->add_option("--planner", planner, "beam3 | greedy")->capture_default_str();

  auto* place = app.add_subcommand("place", "BLBF placement of one object on a heightmap");
  std::string state, object, place_manifest, method = "blbf-so2";
  place->add_option("--state", state, "heightmap CSV, one row per x cell")->required()->check(CLI::ExistingFile);
  place->add_option("--object", object, "object id")->required();
  place->add_option("--manifest", place_manifest, "object manifest")->required()->check(CLI::ExistingFile);
  place->add_option("--method", method, "blbf-so2 | blbf-so3")->capture_default_str();
  place->add_option("--stride", stride, "scan stride (cells)")->capture_default_str();
  box.add_to(place);

  auto* serve = app.add_subcommand("serve", "newline-delimited JSON reset/step session on stdin/stdout");
  std::string serve_manifest;
  serve->add_option("--manifest", serve_manifest, "object manifest")->required()->check(CLI::ExistingFile);
  serve->add_option("--reward", reward, "simple | C | cs<alpha>")->capture_default_str();
  box.add_to(serve);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*bench)
      return run_bench(manifest, episodes, methods, seeds, out, demos, smoothing, reward, box, stride, threads);
    if (*plan) return run_plan(plan_demos, objects, plan_manifest, smoothing, planner);
    if (*place) return run_place(state, object, place_manifest, method, box, stride);
    if (*serve) return run_serve(serve_manifest, reward, box);
  } catch (const pack::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
