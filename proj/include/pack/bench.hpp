#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>
#include <numeric>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "pack/image_io.hpp"
#include "pack/manifest.hpp"
#include "pack/policy.hpp"

namespace pack {

struct EpisodeDef {
  std::string episode_id;
  std::vector<std::string> objects;
};

// JSON lines, each {"episode_id": ..., "objects": [ids in packing order]}.
// Ids are validated against the library; repeats are separate instances.
inline std::vector<EpisodeDef> ingest_episodes(std::istream& in, const ObjectLibrary& lib) {
  std::vector<EpisodeDef> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "episodes line " + std::to_string(lineno) + ": ";
    EpisodeDef e;
    try {
      const auto j = nlohmann::json::parse(line);
      e.episode_id = j.at("episode_id").is_string() ? j.at("episode_id").get<std::string>()
                                                    : j.at("episode_id").dump();
      e.objects = j.at("objects").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& ex) {
      throw ManifestError(where + ex.what());
    }
    if (e.objects.empty()) throw ManifestError(where + "episode has no objects");
    for (const auto& id : e.objects)
      if (!lib.contains(id)) throw ManifestError(where + "unknown object id '" + id + "'");
    out.push_back(std::move(e));
  }
  return out;
}

inline std::vector<EpisodeDef> ingest_episodes(const std::filesystem::path& path, const ObjectLibrary& lib) {
  std::ifstream in(path);
  if (!in) throw ManifestError("cannot open episodes file " + path.string());
  return ingest_episodes(in, lib);
}

// --- methods -----------------------------------------------------------------

// "[planner+]placer".  Bare "blbf-so2"/"blbf-so3" are the heuristic
// baselines (largest volume first).  Placers: blbf-so2, blbf-so3, random,
// policy.  "policy" is the pluggable placement-policy slot; unless a factory
// is supplied it is bound to BLBF-SO2.
struct MethodSpec {
  std::string name;
  Planner planner = Planner::volume;
  std::string placer;
};

inline MethodSpec parse_method(const std::string& name) {
  MethodSpec m;
  m.name = name;
  const auto plus = name.find('+');
  if (plus == std::string::npos) {
    m.placer = name;
    m.planner = name == "random" ? Planner::random : Planner::volume;
  } else {
    m.planner = parse_planner(name.substr(0, plus));
    m.placer = name.substr(plus + 1);
  }
  if (m.placer != "blbf-so2" && m.placer != "blbf-so3" && m.placer != "random" && m.placer != "policy")
    throw Error("unknown placer '" + m.placer + "' in method '" + name + "'");
  return m;
}

using PolicyFactory = std::function<std::unique_ptr<Policy>()>;

inline std::unique_ptr<Policy> make_policy(const MethodSpec& m, const HeuristicConfig& base,
                                           const PolicyFactory& learned = {}) {
  if (m.placer == "random") return std::make_unique<RandomPolicy>();
  if (m.placer == "policy" && learned) return learned();
  HeuristicConfig cfg = base;
  cfg.mode = m.placer == "blbf-so3" ? RotationMode::SO3 : RotationMode::SO2;
  return std::make_unique<HeuristicPolicy>(cfg);
}

// --- statistics --------------------------------------------------------------

struct Stats {
  double mean = 0, std = 0;
  std::size_t n = 0;
};

// Sample standard deviation (n - 1); zero for fewer than two values.
inline Stats stats_of(const std::vector<double>& v) {
  Stats s;
  s.n = v.size();
  if (v.empty()) return s;
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return s;
}

struct MethodSummary {
  std::string method;
  std::size_t episodes = 0;
  double success_rate = 0;  // percent
  Stats objects;            // placed objects per episode
  Stats latency_ms;         // per decision
  Stats final_compactness;  // over episodes with at least one placement
  Stats stability;          // per-episode stable fraction, same episodes
};

struct BenchmarkReport {
  std::vector<EpisodeTrace> traces;  // sorted by (method, episode_id, seed)
  std::vector<MethodSummary> methods;
  Stats reference_objects;           // objects to pack per episode definition
};

inline std::vector<MethodSummary> summarize(const std::vector<EpisodeTrace>& traces) {
  std::map<std::string, std::vector<const EpisodeTrace*>> by_method;
  for (const auto& t : traces) by_method[t.method].push_back(&t);
  std::vector<MethodSummary> out;
  for (const auto& [name, ts] : by_method) {
    MethodSummary m;
    m.method = name;
    m.episodes = ts.size();
    std::vector<double> objects, latency, comp, stab;
    std::size_t ok = 0;
    for (const auto* t : ts) {
      ok += t->success() ? 1 : 0;
      objects.push_back(static_cast<double>(t->placed));
      for (const auto& s : t->steps) latency.push_back(static_cast<double>(s.latency_ns) * 1e-6);
      if (t->placed > 0) {
        comp.push_back(t->final_compactness);
        stab.push_back(t->stability_rate);
      }
    }
    m.success_rate = 100.0 * static_cast<double>(ok) / static_cast<double>(ts.size());
    m.objects = stats_of(objects);
    m.latency_ms = stats_of(latency);
    m.final_compactness = stats_of(comp);
    m.stability = stats_of(stab);
    out.push_back(m);
  }
  return out;
}

// Per-step means over the traces of one method; an episode contributes to
// step i only if it placed an object at step i.
inline std::pair<std::vector<double>, std::vector<double>> per_step_series(const std::vector<const EpisodeTrace*>& ts) {
  std::vector<double> c_sum, s_sum, n;
  for (const auto* t : ts)
    for (const auto& s : t->steps) {
      if (s.outcome != Outcome::placed) continue;
      if (s.index >= n.size()) c_sum.resize(s.index + 1), s_sum.resize(s.index + 1), n.resize(s.index + 1);
      c_sum[s.index] += s.compactness;
      s_sum[s.index] += s.stable ? 1.0 : 0.0;
      n[s.index] += 1.0;
    }
  for (std::size_t i = 0; i < n.size(); ++i)
    if (n[i] > 0) c_sum[i] /= n[i], s_sum[i] /= n[i];
  return {c_sum, s_sum};
}

// --- suite -------------------------------------------------------------------

struct SuiteConfig {
  EnvConfig env;
  HeuristicConfig heuristic;
  std::vector<std::string> methods;
  std::vector<std::uint64_t> seeds{0};
  const TransitionMatrix* matrix = nullptr;
  std::size_t threads = 0;  // 0: PACK_THREADS or hardware concurrency
  PolicyFactory learned_policy;
};

inline std::size_t pool_size(std::size_t requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("PACK_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

inline BenchmarkReport run_suite(const ObjectLibrary& lib, const std::vector<EpisodeDef>& episodes,
                                 const SuiteConfig& cfg) {
  struct Job {
    MethodSpec method;
    const EpisodeDef* episode;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (const auto& name : cfg.methods) {
    const MethodSpec m = parse_method(name);
    if ((m.planner == Planner::beam3 || m.planner == Planner::greedy) && !cfg.matrix)
      throw Error("method '" + name + "' needs demonstrations (transition matrix)");
    for (const auto& e : episodes)
      for (auto seed : cfg.seeds) jobs.push_back({m, &e, seed});
  }

  auto cache = std::make_shared<RasterCache>(1 << 16);
  std::vector<EpisodeTrace> results(jobs.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        const Job& j = jobs[i];
        auto policy = make_policy(j.method, cfg.heuristic, cfg.learned_policy);
        results[i] = run_policy(cfg.env, *policy, lib.resolve(j.episode->objects), j.method.planner, j.seed,
                                cfg.matrix, cache, j.episode->episode_id);
        results[i].method = j.method.name;
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const std::size_t n = std::min(pool_size(cfg.threads), std::max<std::size_t>(1, jobs.size()));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  std::stable_sort(results.begin(), results.end(), [](const EpisodeTrace& a, const EpisodeTrace& b) {
    return std::tie(a.method, a.episode_id, a.seed) < std::tie(b.method, b.episode_id, b.seed);
  });

  BenchmarkReport report;
  report.traces = std::move(results);
  report.methods = summarize(report.traces);
  std::vector<double> ref;
  for (const auto& e : episodes) ref.push_back(static_cast<double>(e.objects.size()));
  report.reference_objects = stats_of(ref);
  return report;
}

// report.csv: one row per (method, episode, seed), a blank line, then the
// per-method summary block.  Timing columns are latency_*; everything else
// is deterministic for fixed inputs and seeds.
inline void write_report_csv(std::ostream& out, const BenchmarkReport& r, bool include_timing = true) {
  out.precision(10);
  out << "method,episode_id,seed,success,placed,total,termination,final_compactness,stability_rate,return";
  if (include_timing) out << ",latency_mean_ms";
  out << '\n';
  for (const auto& t : r.traces) {
    std::vector<double> lat;
    for (const auto& s : t.steps) lat.push_back(static_cast<double>(s.latency_ns) * 1e-6);
    out << t.method << ',' << t.episode_id << ',' << t.seed << ',' << (t.success() ? 1 : 0) << ',' << t.placed
        << ',' << t.sequence.size() << ',' << to_string(t.termination) << ',' << t.final_compactness << ','
        << t.stability_rate << ',' << t.episode_return();
    if (include_timing) out << ',' << stats_of(lat).mean;
    out << '\n';
  }
  out << '\n';
  out << "summary_method,episodes,success_rate,objects_mean,objects_std,final_compactness_mean,stability_mean";
  if (include_timing) out << ",latency_mean_ms,latency_std_ms";
  out << '\n';
  out << "reference," << r.reference_objects.n << ",100," << r.reference_objects.mean << ','
      << r.reference_objects.std << ",,";
  if (include_timing) out << ",,";
  out << '\n';
  for (const auto& m : r.methods) {
    out << m.method << ',' << m.episodes << ',' << m.success_rate << ',' << m.objects.mean << ',' << m.objects.std
        << ',' << m.final_compactness.mean << ',' << m.stability.mean;
    if (include_timing) out << ',' << m.latency_ms.mean << ',' << m.latency_ms.std;
    out << '\n';
  }
}

inline std::string sanitize_filename(std::string s) {
  for (char& c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_' && c != '.') c = '_';
  return s;
}

// report.csv, traces/<method>.jsonl, plots/{final_compactness,step_compactness,
// step_stability}.png and plots/legend.csv (series index -> method).
inline void write_suite_outputs(const std::filesystem::path& dir, const BenchmarkReport& r) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "traces");
  fs::create_directories(dir / "plots");
  {
    std::ofstream csv(dir / "report.csv");
    write_report_csv(csv, r);
  }
  std::map<std::string, std::vector<const EpisodeTrace*>> by_method;
  for (const auto& t : r.traces) by_method[t.method].push_back(&t);

  std::vector<std::vector<double>> final_c, step_c, step_s;
  std::ofstream legend(dir / "plots" / "legend.csv");
  legend << "series,method,rgb\n";
  std::size_t idx = 0;
  for (const auto& [method, ts] : by_method) {
    std::ofstream tf(dir / "traces" / (sanitize_filename(method) + ".jsonl"));
    std::vector<double> fc;
    for (const auto* t : ts) {
      write_trace_jsonl(tf, *t);
      if (t->placed) fc.push_back(t->final_compactness);
    }
    final_c.push_back(fc);
    auto [c, s] = per_step_series(ts);
    step_c.push_back(c);
    step_s.push_back(s);
    const Rgb col = series_color(idx);
    legend << idx++ << ',' << method << ',' << int(col[0]) << ' ' << int(col[1]) << ' ' << int(col[2]) << '\n';
  }
  plot_histograms(dir / "plots" / "final_compactness.png", final_c);
  plot_lines(dir / "plots" / "step_compactness.png", step_c);
  plot_lines(dir / "plots" / "step_stability.png", step_s);
}

// --- latency -----------------------------------------------------------------

struct LatencyProfile {
  Stats ms;                               // per placement decision
  std::vector<std::vector<Action>> decisions;  // per measured repetition, all episodes concatenated
};

// Wall-clock per placement decision (policy + drop-height estimate) over
// `repetitions` passes through the episodes after `warmup` discarded passes.
inline LatencyProfile latency_profile(const ObjectLibrary& lib, const std::vector<EpisodeDef>& episodes,
                                      const std::string& method, const EnvConfig& env,
                                      const HeuristicConfig& heuristic, std::size_t repetitions,
                                      std::size_t warmup = 3, std::uint64_t seed = 0,
                                      const TransitionMatrix* matrix = nullptr) {
  const MethodSpec m = parse_method(method);
  auto cache = std::make_shared<RasterCache>(1 << 16);
  LatencyProfile out;
  std::vector<double> samples;
  for (std::size_t rep = 0; rep < warmup + repetitions; ++rep) {
    std::vector<Action> actions;
    for (const auto& e : episodes) {
      auto policy = make_policy(m, heuristic);
      const auto t = run_policy(env, *policy, lib.resolve(e.objects), m.planner, seed, matrix, cache, e.episode_id);
      for (const auto& s : t.steps) {
        actions.push_back(s.action);
        if (rep >= warmup) samples.push_back(static_cast<double>(s.latency_ns) * 1e-6);
      }
    }
    if (rep >= warmup) out.decisions.push_back(std::move(actions));
  }
  out.ms = stats_of(samples);
  return out;
}

}  // namespace pack
