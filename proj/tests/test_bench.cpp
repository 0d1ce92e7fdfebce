#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "pack/pack.hpp"
#include "support.hpp"

using namespace pack;
namespace fs = std::filesystem;

namespace {

const fs::path kData = PACK_DATA_DIR;

const ObjectLibrary& sample_library() {
  static const ObjectLibrary lib = ObjectLibrary::from_manifest(kData / "manifest.json");
  return lib;
}

ObjectLibrary tiny_library() {
  ObjectLibrary lib;
  lib.add(testkit::box_object("brick", 0.2, 0.15, 0.082, "brick"));
  lib.add(testkit::box_object("slab", 0.38, 0.28, 0.2, "slab"));
  lib.add(testkit::box_object("cube", 0.1, 0.1, 0.1, "cube"));
  return lib;
}

std::string csv_of(const BenchmarkReport& r) {
  std::ostringstream out;
  write_report_csv(out, r, false);
  return out.str();
}

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("pack_test_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST(Manifest, SampleLibraryLoads) {
  const auto& lib = sample_library();
  EXPECT_EQ(lib.all().size(), 11u);
  EXPECT_EQ(lib.at("bottle").category, "bottle");
  EXPECT_NEAR(lib.at("brick").volume, 0.2 * 0.15 * 0.082, 1e-9);
  EXPECT_THROW(lib.at("anvil"), ManifestError);
}

TEST(Manifest, ErrorsNameTheObject) {
  const auto dir = scratch_dir("manifest");
  std::ofstream(dir / "m.json") << R"({"ghost": {"mesh_path": "missing.obj", "category": "x"}})";
  try {
    ObjectLibrary::from_manifest(dir / "m.json");
    FAIL() << "expected ManifestError";
  } catch (const ManifestError& e) {
    EXPECT_NE(std::string(e.what()).find("ghost"), std::string::npos);
  }
  EXPECT_THROW(parse_manifest(nlohmann::json::array(), dir), ManifestError);
  EXPECT_THROW(parse_manifest({{"a", {{"mesh_path", "a.obj"}, {"scale", 0}}}}, dir), ManifestError);
  fs::remove_all(dir);
}

TEST(Ingest, SampleEpisodes) {
  const auto eps = ingest_episodes(kData / "episodes.jsonl", sample_library());
  ASSERT_EQ(eps.size(), 10u);
  EXPECT_EQ(eps[1].objects.size(), 8u);
  EXPECT_EQ(eps[0].episode_id, "ep00");
}

TEST(Ingest, DuplicatesAcceptedUnknownIdNamesLine) {
  const auto lib = tiny_library();
  std::istringstream ok(R"({"episode_id": "a", "objects": ["cube", "cube", "brick"]})"
                        "\n\n"
                        R"({"episode_id": 7, "objects": ["slab"]})"
                        "\n");
  const auto eps = ingest_episodes(ok, lib);
  ASSERT_EQ(eps.size(), 2u);
  EXPECT_EQ(eps[0].objects, (std::vector<std::string>{"cube", "cube", "brick"}));
  EXPECT_EQ(eps[1].episode_id, "7");

  std::istringstream bad(R"({"episode_id": "a", "objects": ["cube"]})"
                         "\n"
                         R"({"episode_id": "b", "objects": ["cube", "anvil"]})"
                         "\n");
  try {
    ingest_episodes(bad, lib);
    FAIL() << "expected ManifestError";
  } catch (const ManifestError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("line 2"), std::string::npos) << msg;
    EXPECT_NE(msg.find("anvil"), std::string::npos) << msg;
  }
  std::istringstream empty(R"({"episode_id": "a", "objects": []})");
  EXPECT_THROW(ingest_episodes(empty, lib), ManifestError);
  std::istringstream junk("{nope");
  EXPECT_THROW(ingest_episodes(junk, lib), ManifestError);
}

TEST(Methods, ParseNames) {
  EXPECT_EQ(parse_method("blbf-so2").planner, Planner::volume);
  EXPECT_EQ(parse_method("blbf-so3").placer, "blbf-so3");
  const auto m = parse_method("beam3+policy");
  EXPECT_EQ(m.planner, Planner::beam3);
  EXPECT_EQ(m.placer, "policy");
  EXPECT_EQ(make_policy(m, {})->name(), "blbf-so2");
  EXPECT_EQ(parse_method("random").planner, Planner::random);
  EXPECT_THROW(parse_method("beam3+teleport"), Error);
  EXPECT_THROW(parse_method("magic+blbf-so2"), Error);
}

TEST(Stats, SampleStandardDeviation) {
  const Stats s = stats_of({2, 4, 4, 4, 5, 5, 7, 9});
  EXPECT_DOUBLE_EQ(s.mean, 5.0);
  EXPECT_NEAR(s.std, std::sqrt(32.0 / 7.0), 1e-12);
  EXPECT_EQ(stats_of({3}).std, 0.0);
  EXPECT_EQ(stats_of({}).n, 0u);
}

TEST(Suite, TwoOfFourSucceedIsFiftyPercent) {
  const auto lib = tiny_library();
  // slab + slab cannot share the box; a lone cube or brick always fits.
  const std::vector<EpisodeDef> eps{{"e1", {"cube"}}, {"e2", {"slab", "slab"}}, {"e3", {"brick"}},
                                    {"e4", {"slab", "slab", "cube"}}};
  SuiteConfig cfg;
  cfg.methods = {"blbf-so2"};
  cfg.threads = 2;
  const auto r = run_suite(lib, eps, cfg);
  ASSERT_EQ(r.methods.size(), 1u);
  EXPECT_DOUBLE_EQ(r.methods[0].success_rate, 50.0);
  EXPECT_EQ(r.methods[0].episodes, 4u);
}

TEST(Suite, CsvDeterministicAcrossThreadCounts) {
  const auto& lib = sample_library();
  const auto eps = ingest_episodes(kData / "episodes.jsonl", lib);
  std::ifstream demos(kData / "demos.jsonl");
  const auto matrix = build_transition_matrix(read_demos(demos), 0.5);
  SuiteConfig cfg;
  cfg.methods = {"blbf-so2", "beam3+policy", "random"};
  cfg.seeds = {0, 1};
  cfg.matrix = &matrix;
  cfg.threads = 1;
  const auto a = run_suite(lib, eps, cfg);
  cfg.threads = 3;
  const auto b = run_suite(lib, eps, cfg);
  EXPECT_EQ(csv_of(a), csv_of(b));
  EXPECT_EQ(a.traces.size(), 3u * 10u * 2u);
  cfg.matrix = nullptr;
  EXPECT_THROW(run_suite(lib, eps, cfg), Error);
}

TEST(Suite, AggregatesRecomputeFromTraces) {
  const auto& lib = sample_library();
  const auto eps = ingest_episodes(kData / "episodes.jsonl", lib);
  SuiteConfig cfg;
  cfg.methods = {"blbf-so2", "blbf-so3"};
  cfg.seeds = {0, 1, 2};
  cfg.threads = 2;
  const auto r = run_suite(lib, eps, cfg);
  const auto dir = scratch_dir("suite");
  write_suite_outputs(dir, r);
  for (const auto* f : {"report.csv", "plots/final_compactness.png", "plots/step_compactness.png",
                        "plots/step_stability.png", "plots/legend.csv"})
    EXPECT_TRUE(fs::exists(dir / f)) << f;

  for (const auto& m : r.methods) {
    std::ifstream in(dir / "traces" / (sanitize_filename(m.method) + ".jsonl"));
    const auto traces = read_traces_jsonl(in);
    ASSERT_EQ(traces.size(), eps.size() * 3);
    const auto again = summarize(traces);
    ASSERT_EQ(again.size(), 1u);
    EXPECT_NEAR(again[0].success_rate, m.success_rate, 1e-12);
    EXPECT_NEAR(again[0].objects.mean, m.objects.mean, 1e-12);
    EXPECT_NEAR(again[0].objects.std, m.objects.std, 1e-12);
    EXPECT_NEAR(again[0].final_compactness.mean, m.final_compactness.mean, 1e-12);
    EXPECT_NEAR(again[0].stability.mean, m.stability.mean, 1e-12);
    EXPECT_NEAR(again[0].latency_ms.mean, m.latency_ms.mean, 1e-12);
  }
  fs::remove_all(dir);
}

TEST(Suite, ReferenceRowCountsEpisodeObjects) {
  const auto lib = tiny_library();
  const std::vector<EpisodeDef> eps{{"a", {"cube"}}, {"b", {"cube", "cube", "cube"}}};
  SuiteConfig cfg;
  cfg.methods = {"blbf-so2"};
  const auto r = run_suite(lib, eps, cfg);
  EXPECT_DOUBLE_EQ(r.reference_objects.mean, 2.0);
  EXPECT_NEAR(r.reference_objects.std, std::sqrt(2.0), 1e-12);
  EXPECT_NE(csv_of(r).find("reference,2,100,2,"), std::string::npos) << csv_of(r);
}

TEST(Latency, PositiveAndSo3NotCheaper) {
  const auto& lib = sample_library();
  const auto eps = ingest_episodes(kData / "episodes.jsonl", lib);
  const std::vector<EpisodeDef> some(eps.begin(), eps.begin() + 3);
  const auto so2 = latency_profile(lib, some, "blbf-so2", {}, {}, 2, 1);
  const auto so3 = latency_profile(lib, some, "blbf-so3", {}, {}, 2, 1);
  EXPECT_GT(so2.ms.mean, 0.0);
  EXPECT_GE(so3.ms.mean, so2.ms.mean);
  ASSERT_EQ(so2.decisions.size(), 2u);
  EXPECT_EQ(so2.decisions[0], so2.decisions[1]);
}

TEST(Pool, ThreadsEnvironmentOverride) {
  ::setenv("PACK_THREADS", "3", 1);
  EXPECT_EQ(pool_size(0), 3u);
  EXPECT_EQ(pool_size(5), 5u);
  ::setenv("PACK_THREADS", "junk", 1);
  EXPECT_GE(pool_size(0), 1u);
  ::unsetenv("PACK_THREADS");
}
