#include "doctest.h"

#include "spinedrill/cli.hpp"
#include "spinedrill/serialize.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace spinedrill;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Fresh scratch directory holding a small phantom spec, candidate space, batch and
// curved trajectory.
struct Scratch {
  fs::path dir;

  explicit Scratch(const std::string& name) : dir(fs::temp_directory_path() / ("spinedrill_cli_" + name)) {
    fs::remove_all(dir);
    fs::create_directories(dir);
    save_json(Json{{"size_mm", {28, 14, 16}},
                   {"cortical_thickness_mm", 1.0},
                   {"low_density", {{"center_mm", {17, 7, 8}}, {"radii_mm", {5, 4, 3}}, {"hu", 150}}}},
              dir / "phantom_spec.json");
    save_json(Json{{"curvatures_per_mm", {0.0, 0.014388}},
                   {"straight_lengths_mm", {8.0}},
                   {"screw", {{"diameter_mm", 2.5}, {"length_mm", 20.0}}},
                   {"entry_mm", {0, 7, 8}},
                   {"bend_plane_normal", {0, -1, 0}}},
              dir / "space.json");
    DrillBatch b = reference_drill_batch();
    b.travel = 30.0;
    b.sample_interval = 0.2;
    save_json(to_json(b), dir / "batch.json");
    Trajectory t;
    t.curvature = 0.014388;
    t.straight_length = 10.0;
    save_json(to_json(t), dir / "trajectory.json");
  }
  ~Scratch() { fs::remove_all(dir); }

  std::string at(const std::string& name) const { return (dir / name).string(); }
};

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("usage errors exit 2") {
  CHECK(run({}).code == kExitValidation);
  CHECK(run({"frobnicate"}).code == kExitValidation);
  CHECK(run({"plan"}).code == kExitValidation);
  CHECK(run({"--threads", "0", "phantom"}).code == kExitValidation);
  CHECK(run({"--help"}).code == kExitOk);
}

TEST_CASE("phantom is deterministic and validates its spec") {
  Scratch s("phantom");
  Run r = run({"--out-dir", s.at("a"), "phantom", s.at("phantom_spec.json")});
  REQUIRE(r.code == kExitOk);
  CHECK(r.out.find("dims 28 x 14 x 16") != std::string::npos);
  CHECK(run({"--out-dir", s.at("b"), "phantom", s.at("phantom_spec.json")}).code == kExitOk);
  CHECK(slurp(s.dir / "a/phantom.f32raw") == slurp(s.dir / "b/phantom.f32raw"));
  CHECK(slurp(s.dir / "a/phantom.json") == slurp(s.dir / "b/phantom.json"));
  CHECK(fs::file_size(s.dir / "a/phantom.f32raw") == 28 * 14 * 16 * 4);

  Json bad = load_json(s.dir / "phantom_spec.json");
  bad["spacing_mm"] = Json::array({1, -1, 1});
  save_json(bad, s.dir / "bad.json");
  r = run({"--out-dir", s.at("c"), "phantom", s.at("bad.json")});
  CHECK(r.code == kExitValidation);
  CHECK(r.err.find("spacing_mm") != std::string::npos);
  CHECK(run({"phantom", s.at("missing.json")}).code == kExitValidation);
}

TEST_CASE("plan writes its artifacts and maps failures to exit codes") {
  Scratch s("plan");
  REQUIRE(run({"--out-dir", s.at("vol"), "phantom", s.at("phantom_spec.json")}).code == kExitOk);
  const std::string vol = s.at("vol/phantom.f32raw");
  const Run r = run({"--out-dir", s.at("out"), "plan", vol, s.at("space.json")});
  REQUIRE(r.code == kExitOk);
  for (const char* f : {"plan.json", "candidates.csv", "fe_T1.json", "fe_T2.json", "stress_T1.svg",
                        "winner_trajectory.json"})
    CHECK(fs::is_regular_file(s.dir / "out" / f));
  const Json plan = load_json(s.dir / "out/plan.json");
  CHECK(plan["ranked"].size() == 2);
  CHECK(r.out.find("winner " + plan["winner"].get<std::string>()) != std::string::npos);
  const Json w = load_json(s.dir / "out/winner_trajectory.json");
  CHECK(w["id"] == plan["winner"]);
  CHECK_NOTHROW(trajectory_from_json(w));

  Json space = load_json(s.dir / "space.json");
  space["curvatures_per_mm"] = Json::array();
  save_json(space, s.dir / "empty.json");
  CHECK(run({"--out-dir", s.at("x"), "plan", vol, s.at("empty.json")}).code == kExitValidation);

  space["curvatures_per_mm"] = {0.05};
  save_json(space, s.dir / "tight.json");
  CHECK(run({"--out-dir", s.at("x"), "plan", vol, s.at("tight.json")}).code == kExitInfeasible);

  CHECK(run({"--out-dir", s.at("x"), "--tol", "1e-30", "plan", vol, s.at("space.json")}).code == kExitSolver);
  CHECK(run({"--out-dir", s.at("x"), "plan", vol, s.at("space.json"), "--load", "-3"}).code ==
        kExitValidation);
}

TEST_CASE("drill trial batch") {
  Scratch s("drill");
  Run r = run({"--out-dir", s.at("out"), "drill", s.at("trajectory.json"), s.at("batch.json")});
  REQUIRE(r.code == kExitOk);
  std::istringstream trials(slurp(s.dir / "out/trials.csv"));
  std::string line;
  int rows = -1;
  while (std::getline(trials, line)) ++rows;
  CHECK(rows == 30);
  const Json summary = load_json(s.dir / "out/drill_summary.json");
  CHECK(summary["trials"] == 30);
  CHECK(summary["max_deviation_std_mm"].get<double>() < 0.75);

  // noiseless: every trial lands on the guide, 100 sb / (1 - sb) above the plan
  r = run({"--out-dir", s.at("clean"), "drill", s.at("trajectory.json"), s.at("batch.json"), "--noise", "0"});
  REQUIRE(r.code == kExitOk);
  const Json clean = load_json(s.dir / "clean/drill_summary.json");
  const double sb = default_springback_ratio();
  const double expect = 100.0 * sb / (1.0 - sb);
  CHECK(expect == doctest::Approx(2.296).epsilon(1e-3));
  CHECK(clean["radius_error_vs_planned_pct"]["min"].get<double>() == doctest::Approx(expect).epsilon(1e-7));
  CHECK(clean["radius_error_vs_planned_pct"]["max"].get<double>() == doctest::Approx(expect).epsilon(1e-7));
  CHECK(clean["radius_error_vs_guide_pct"]["max"].get<double>() < 1e-7);

  Trajectory straight;
  save_json(to_json(straight), s.dir / "straight.json");
  CHECK(run({"--out-dir", s.at("x"), "drill", s.at("straight.json"), s.at("batch.json")}).code == kExitValidation);
  CHECK(run({"--out-dir", s.at("x"), "drill", s.at("trajectory.json"), s.at("batch.json"), "--noise", "-1"})
            .code == kExitValidation);
}

TEST_CASE("report") {
  Scratch s("report");
  fs::create_directories(s.dir / "empty");
  CHECK(run({"report", s.at("empty")}).code == kExitValidation);
  REQUIRE(run({"--out-dir", s.at("res"), "drill", s.at("trajectory.json"), s.at("batch.json")}).code == kExitOk);
  REQUIRE(run({"report", s.at("res")}).code == kExitOk);
  CHECK(fs::is_regular_file(s.dir / "res/report.md"));
  CHECK(fs::is_regular_file(s.dir / "res/error_histogram.svg"));
  CHECK(fs::is_regular_file(s.dir / "res/arcs.svg"));
}

}
