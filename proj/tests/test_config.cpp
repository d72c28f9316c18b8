#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "finsler/config.hpp"
#include "finsler/runner.hpp"
#include "finsler/svg.hpp"

using namespace finsler;
namespace fs = std::filesystem;

namespace {

std::string read(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("finsler_test_" + name);
  fs::remove_all(p);
  return p;
}

const char* kEuclidNormCheck = R"(name: tiny
structure:
  family: euclidean
domain: {shape: square, center: [0, 0], radius: 1}
h: 1/8
experiments:
  - type: norm-check
    samples: 50
  - type: solve
    boundary: "2 + x"
)";

}  // namespace

TEST(Config, BundledScenariosParse) {
  int count = 0;
  for (const auto& e : fs::directory_iterator(FINSLER_SCENARIO_DIR)) {
    if (e.path().extension() != ".yaml") continue;
    const auto c = load_scenario(e.path().string());
    EXPECT_FALSE(c.description.empty()) << e.path();
    EXPECT_FALSE(c.experiments.empty()) << e.path();
    ++count;
  }
  EXPECT_GE(count, 5);
}

TEST(Config, UnknownKeyReportsPosition) {
  try {
    load_scenario_string("structure:\n  family: euclidean\nkapa: 1\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.line(), 3);
    EXPECT_EQ(e.column(), 1);
    EXPECT_NE(std::string(e.what()).find("kapa"), std::string::npos);
  }
  try {
    load_scenario_string("structure:\n  family: euclidean\n  epsilom: 0.1\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.line(), 3);
    EXPECT_EQ(e.column(), 3);
  }
  EXPECT_THROW(load_scenario_string("structure: {family: euclidean}\nexperiments:\n  - {type: solve, radii: [1]}\n"),
               ConfigError);
  EXPECT_THROW(load_scenario_string("structure: {family: euclidean}\nexperiments:\n  - {type: heat}\n"), ConfigError);
}

TEST(Config, ValuesAndErrors) {
  const auto c = load_scenario_string(
      "structure: {family: euclidean}\nh: 1/64\nn_list: [2, 4, inf]\nexperiments:\n  - {type: solve}\n  - {type: solve}\n");
  EXPECT_DOUBLE_EQ(c.h, 1.0 / 64);
  ASSERT_EQ(c.n_list.size(), 3u);
  EXPECT_TRUE(std::isinf(c.n_list[2]));
  EXPECT_EQ(c.experiments[1].name, "solve-2");
  EXPECT_THROW(load_scenario_string("structure: {family: euclidean}\nh: abc\n"), ConfigError);
  EXPECT_THROW(load_scenario_string("structure: {family: euclidean}\nn_list: [1]\n"), ConfigError);
  EXPECT_THROW(load_scenario_string("structure: {family: randers, drift: [1.5, 0]}\n"), ConfigError);
  EXPECT_THROW(load_scenario_string("structure: {family: finsler}\n"), ConfigError);
  EXPECT_THROW(load_scenario_string("structure: [1, 2\n"), ConfigError);
  try {
    load_scenario_string("structure:\n  family: euclidean\n  density: \"x + * y\"\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.line(), 3);
    EXPECT_GT(e.column(), 12);
  }
}

TEST(Config, StructureRoundTrip) {
  const auto c = load_scenario(std::string(FINSLER_SCENARIO_DIR) + "/sphere-patch.yaml");
  const std::string once = emit_structure(c.structure);
  const auto again = parse_structure(YAML::Load(once));
  EXPECT_EQ(emit_structure(again), once);
  const FinslerStructure<2> a(c.structure), b(again);
  const Point2 x(0.3, -0.4);
  const Vector2 v(0.7, 0.2);
  EXPECT_EQ(a.at(x)(v), b.at(x)(v));
  EXPECT_EQ(a.chart().lo, b.chart().lo);
}

TEST(Svg, RendersSeriesAndEscapes) {
  svg::Plot p;
  p.title = "a < b & c";
  p.log_y = true;
  p.series.push_back({"pts", {{1, 1}, {2, 10}, {3, -1}}, true});
  const auto text = p.render();
  EXPECT_NE(text.find("<svg"), std::string::npos);
  EXPECT_NE(text.find("a &lt; b &amp; c"), std::string::npos);
  EXPECT_NE(text.find("<polyline"), std::string::npos);
  EXPECT_EQ(text.find("nan"), std::string::npos);
}

TEST(Runner, CleanRunWritesArtifacts) {
  const auto dir = scratch("clean");
  RunOptions opt;
  opt.out = dir.string();
  const auto r = run_scenario(load_scenario_string(kEuclidNormCheck), opt);
  EXPECT_EQ(r.exit_code, 0);
  for (const char* f : {"norm-check.csv", "solve_solution.csv", "solve.json", "solve_residual.svg", "summary.txt",
                        "manifest.json"})
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  const auto m = nlohmann::json::parse(read(dir / "manifest.json"));
  EXPECT_DOUBLE_EQ(m["measured"]["rho"].get<double>(), 1.0);
  EXPECT_TRUE(m["measured"].contains("K_hat"));
  EXPECT_FALSE(m.contains("generated_at"));
}

TEST(Runner, CsvOutputsAreByteIdentical) {
  const auto a = scratch("det_a"), b = scratch("det_b");
  const std::string cfg = std::string(kEuclidNormCheck) + "  - {type: gradient, radii: [0.3], samples: 2}\n";
  RunOptions opt;
  opt.out = a.string();
  run_scenario(load_scenario_string(cfg), opt);
  opt.out = b.string();
  opt.threads = 2;
  run_scenario(load_scenario_string(cfg), opt);
  int compared = 0;
  for (const auto& e : fs::directory_iterator(a)) {
    if (e.path().extension() != ".csv") continue;
    EXPECT_EQ(read(e.path()), read(b / e.path().filename())) << e.path();
    ++compared;
  }
  EXPECT_GE(compared, 4);
}

TEST(Runner, RedFlagsExitTwo) {
  const std::string cfg = std::string(kEuclidNormCheck) + "  - {type: harnack, radii: [0.3], samples: 1, tolerance: -10}\n";
  RunOptions opt;
  opt.out = scratch("flag").string();
  EXPECT_EQ(run_scenario(load_scenario_string(cfg), opt).exit_code, 2);
}

TEST(Runner, ExecutionErrorExitsOne) {
  // Liouville trends need a flat structure.
  const std::string cfg =
      "structure: {family: euclidean, density: \"-(x^2+y^2)/2\"}\nexperiments:\n  - {type: liouville}\n";
  RunOptions opt;
  opt.out = scratch("error").string();
  const auto r = run_scenario(load_scenario_string(cfg), opt);
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_FALSE(r.outcomes[0].error.empty());
}
