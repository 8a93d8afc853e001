#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <json.hpp>
#include <string>

#include "gridmap/evaluation.hpp"
#include "gridmap/labels.hpp"
#include "gridmap/pipeline.hpp"
#include "synthetic.hpp"

using namespace gridmap;
using gridmap::testing::read_file;
using gridmap::testing::TempDir;
using gridmap::testing::write_file;

namespace {

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

CliResult run(const TempDir& dir, const std::string& args) {
  const auto out = dir / "stdout.txt";
  const auto err = dir / "stderr.txt";
  const std::string cmd =
      std::string("\"") + GRIDMAP_CLI + "\" " + args + " >\"" + out.string() + "\" 2>\"" + err.string() + "\"";
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = read_file(out);
  r.err = read_file(err);
  return r;
}

std::string q(const std::filesystem::path& p) { return "\"" + p.string() + "\""; }

const char* kGt =
    "Car 0.00 0 -1.58 587.01 150.00 614.12 200.12 1.65 1.67 3.64 -0.65 1.71 26.70 -1.59\n"
    "Car 0.00 0 1.85 387.63 150.00 423.81 203.12 1.67 1.87 3.69 -6.53 2.39 38.49 1.57\n"
    "Pedestrian 0.00 0 0.21 712.40 143.00 810.73 307.92 1.89 0.48 1.20 1.84 1.47 8.41 0.01\n";

const char* kDet =
    "Car -1 -1 -10 587.01 150.00 614.12 200.12 1.65 1.67 3.64 -0.65 1.71 26.70 -1.59 0.95\n"
    "Car -1 -1 -10 0 0 10 10 1.65 1.67 3.64 5.00 1.71 16.00 0.30 0.80\n"
    "Pedestrian -1 -1 -10 712.40 143.00 810.73 307.92 1.89 0.48 1.20 1.80 1.47 8.40 0.01 0.70\n";

}  // namespace

TEST(Cli, HelpListsSubcommands) {
  TempDir dir("cli");
  const CliResult r = run(dir, "--help");
  EXPECT_EQ(r.code, 0);
  for (const char* sub : {"rasterize", "ground", "augment", "encode-check", "evaluate", "bench"})
    EXPECT_NE(r.out.find(sub), std::string::npos) << sub;
}

TEST(Cli, RasterizeMatchesLibrary) {
  TempDir dir("cli");
  for (int i = 0; i < 3; ++i)
    write_point_cloud(gridmap::testing::make_scan(std::uint64_t(i), {16, 500}).cloud,
                      dir / ("00000" + std::to_string(i) + ".bin"));
  const std::string scans = q(dir / "000000.bin") + " " + q(dir / "000001.bin") + " " + q(dir / "000002.bin");
  CliResult r = run(dir, "rasterize --no-fov-filter --feature-config F2 --cell-size 0.10 --jobs 2 -o " + q(dir / "a") +
                       " " + scans);
  ASSERT_EQ(r.code, 0) << r.err;
  r = run(dir, "rasterize --no-fov-filter --feature-config F2 --cell-size 0.10 --threads 3 -o " + q(dir / "b") +
                   " " + scans);
  ASSERT_EQ(r.code, 0) << r.err;

  PipelineConfig cfg;
  cfg.camera_fov.enabled = false;
  cfg.feature_config = FeatureConfig::F2;
  cfg.grid.cell_size = 0.10;
  for (int i = 0; i < 3; ++i) {
    const std::string stem = "00000" + std::to_string(i);
    const auto expected = build_grid_map(read_point_cloud(dir / (stem + ".bin")), cfg);
    EXPECT_EQ(read_grid_map(dir / "a" / (stem + ".gmap")), expected);
    EXPECT_EQ(read_file(dir / "a" / (stem + ".gmap")), read_file(dir / "b" / (stem + ".gmap")));
  }
}

TEST(Cli, StarConfigWithoutGroundRemovalIsAConfigError) {
  TempDir dir("cli");
  write_point_cloud(gridmap::testing::make_scan(1, {8, 100}).cloud, dir / "s.bin");
  const CliResult r = run(dir, "rasterize --feature-config F1* -o " + q(dir / "o") + " " + q(dir / "s.bin"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("F1* requires ground removal"), std::string::npos) << r.err;
  const CliResult ok = run(dir, "rasterize --no-fov-filter --feature-config F1* --ground-removal -o " + q(dir / "o") + " " +
                             q(dir / "s.bin"));
  EXPECT_EQ(ok.code, 0) << ok.err;
}

TEST(Cli, EvaluateMatchesLibrary) {
  TempDir dir("cli");
  std::filesystem::create_directories(dir / "gt");
  std::filesystem::create_directories(dir / "det");
  std::vector<EvalFrame> frames;
  for (int i = 0; i < 4; ++i) {
    const std::string id = "00000" + std::to_string(i);
    write_file(dir / "gt" / (id + ".txt"), kGt);
    // Frame 2 has an empty result file: no detections.
    write_file(dir / "det" / (id + ".txt"), i == 2 ? "" : kDet);
    EvalFrame f;
    f.gt = read_labels(dir / "gt" / (id + ".txt"));
    f.dets = read_detections(dir / "det" / (id + ".txt"));
    frames.push_back(f);
  }
  for (const char* mode : {"11", "40"}) {
    const CliResult r = run(dir, std::string("evaluate --ap-mode ") + mode + " --gt-dir " + q(dir / "gt") + " --det-dir " +
                               q(dir / "det") + " --json-out " + q(dir / "ap.json"));
    ASSERT_EQ(r.code, 0) << r.err;
    EvalOptions opts;
    opts.ap_mode = std::string(mode) == "11" ? ApMode::ElevenPoint : ApMode::FortyPoint;
    const auto expected = evaluate_dataset(frames, opts);
    EXPECT_EQ(nlohmann::json::parse(read_file(dir / "ap.json")), nlohmann::json::parse(ap_results_json(expected)));
    EXPECT_EQ(r.out, format_ap_table(expected));
  }
}

TEST(Cli, EvaluateReportsFrameMismatch) {
  TempDir dir("cli");
  std::filesystem::create_directories(dir / "gt");
  std::filesystem::create_directories(dir / "det");
  write_file(dir / "gt" / "000001.txt", kGt);
  write_file(dir / "det" / "000001.txt", kDet);
  write_file(dir / "det" / "000009.txt", kDet);
  const CliResult r = run(dir, "evaluate --gt-dir " + q(dir / "gt") + " --det-dir " + q(dir / "det"));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("000009"), std::string::npos) << r.err;

  write_file(dir / "split.txt", "000001\n000004\n");
  const CliResult s = run(dir, "evaluate --gt-dir " + q(dir / "gt") + " --det-dir " + q(dir / "det") + " --split " +
                             q(dir / "split.txt"));
  EXPECT_EQ(s.code, 1);
  EXPECT_NE(s.err.find("000004"), std::string::npos) << s.err;
}

TEST(Cli, AugmentIsReproducible) {
  TempDir dir("cli");
  std::filesystem::create_directories(dir / "labels");
  write_point_cloud(gridmap::testing::make_scan(2, {8, 200}).cloud, dir / "000003.bin");
  write_file(dir / "labels" / "000003.txt", kGt);
  write_file(dir / "calib.txt", gridmap::testing::kSampleCalibration);
  const std::string args = "augment --seed 21 --index 5 --calib " + q(dir / "calib.txt") + " --label-dir " +
                           q(dir / "labels") + " " + q(dir / "000003.bin") + " -o ";
  ASSERT_EQ(run(dir, args + q(dir / "x")).code, 0);
  ASSERT_EQ(run(dir, args + q(dir / "y")).code, 0);
  for (const char* f : {"000003.bin", "000003.txt", "000003_transform.json"}) {
    EXPECT_EQ(read_file(dir / "x" / f), read_file(dir / "y" / f)) << f;
    EXPECT_FALSE(read_file(dir / "x" / f).empty()) << f;
  }
  const auto t = nlohmann::json::parse(read_file(dir / "x" / "000003_transform.json"));
  EXPECT_EQ(t["seed"].get<std::uint64_t>(), 21u);
  EXPECT_EQ(t["draw_index"].get<std::uint64_t>(), 5u);
  const auto drawn = draw_transform(AugmentConfig{0.5, 0.2617993877991494, 21}, 5);
  EXPECT_EQ(t["angle_rad"].get<double>(), drawn.angle);
  EXPECT_EQ(t["flipped"].get<bool>(), drawn.flipped);
}

TEST(Cli, GroundEncodeCheckAndBench) {
  TempDir dir("cli");
  write_point_cloud(gridmap::testing::make_scan(4, {16, 300}).cloud, dir / "g.bin");
  CliResult r = run(dir, "ground --no-fov-filter -o " + q(dir / "ng") + " " + q(dir / "g.bin"));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto report = nlohmann::json::parse(r.out);
  EXPECT_NEAR(report["offset"].get<double>(), 1.73, 0.02);
  EXPECT_LT(read_point_cloud(dir / "ng" / "g.bin").size(), read_point_cloud(dir / "g.bin").size());

  write_file(dir / "l.txt", kGt);
  for (const char* enc : {"B1", "B2", "B3"}) {
    r = run(dir, std::string("encode-check --box-encoding ") + enc + " " + q(dir / "l.txt"));
    EXPECT_EQ(r.code, 0) << enc << r.err;
  }

  r = run(dir, "bench --no-fov-filter --repeat 2 " + q(dir / "g.bin"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("ray_cast"), std::string::npos);

  r = run(dir, "rasterize --cell-size 0.2 -o " + q(dir / "o") + " " + q(dir / "g.bin"));
  EXPECT_EQ(r.code, 2);
  r = run(dir, "rasterize --no-fov-filter -o " + q(dir / "o") + " " + q(dir / "g.bin") + " --set grid.bogus=1");
  EXPECT_EQ(r.code, 2);
}
