#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <sstream>

#include "pseudolidar/cli.hpp"
#include "pseudolidar/error.hpp"
#include "pseudolidar/fusion_net.hpp"
#include "pseudolidar/kitti_io.hpp"
#include "pseudolidar/synth.hpp"
#include "test_support.hpp"

namespace pseudolidar {
namespace {

struct CliRun {
  int code;
  std::string out, err;
};

CliRun cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string path(const testing::TempDir& d, const std::string& name) { return (d / name).string(); }

TEST(Cli, UsageErrors) {
  CliRun r = cli({});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_EQ(r.err.rfind("error: ", 0), 0u);
  EXPECT_EQ(cli({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(cli({"synth-gen", "--out", "/tmp/x"}).code, kExitUsage);
  EXPECT_EQ(cli({"synth-gen", "--scenes", "2", "--out", "/tmp/x", "--bogus"}).code, kExitUsage);
  EXPECT_EQ(cli({"synth-gen", "--scenes", "abc", "--out", "/tmp/x"}).code, kExitUsage);
  EXPECT_EQ(cli({"synth-gen", "--scenes", "0", "--out", "/tmp/x"}).code, kExitUsage);
  EXPECT_EQ(cli({"synth-gen", "--config"}).code, kExitUsage);
}

TEST(Cli, HelpExitsZero) {
  const CliRun r = cli({"synth-gen", "--help"});
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_NE(r.out.find("--scenes"), std::string::npos);
}

TEST(Cli, SynthGenRefusesNonEmptyDirectoryWithoutForce) {
  testing::TempDir d("cli_synth");
  const std::string out = path(d, "ds");
  ASSERT_EQ(cli({"synth-gen", "--scenes", "1", "--out", out}).code, kExitOk);
  EXPECT_TRUE(std::filesystem::exists(d / "ds/image_2/000000.ppm"));
  EXPECT_TRUE(std::filesystem::exists(d / "ds/velodyne/000000.bin"));
  const CliRun again = cli({"synth-gen", "--scenes", "1", "--out", out});
  EXPECT_EQ(again.code, kExitFailure);
  EXPECT_NE(again.err.find("--force"), std::string::npos);
  EXPECT_EQ(cli({"synth-gen", "--scenes", "1", "--out", out, "--force"}).code, kExitOk);
}

TEST(Cli, ConfigFileIsOverriddenByCommandLine) {
  testing::TempDir d("cli_config");
  write_file_text(d / "run.cfg", "# defaults\nscenes = 1\nseed=5\n");
  ASSERT_EQ(cli({"synth-gen", "--config", path(d, "run.cfg"), "--seed", "6", "--out", path(d, "a")}).code, kExitOk);
  ASSERT_EQ(cli({"synth-gen", "--scenes", "1", "--seed", "6", "--out", path(d, "b")}).code, kExitOk);
  ASSERT_EQ(cli({"synth-gen", "--scenes", "1", "--seed", "5", "--out", path(d, "c")}).code, kExitOk);
  const auto a = read_file_bytes(d / "a/image_2/000000.ppm");
  EXPECT_EQ(a, read_file_bytes(d / "b/image_2/000000.ppm"));
  EXPECT_NE(a, read_file_bytes(d / "c/image_2/000000.ppm"));
  write_file_text(d / "bad.cfg", "scenes\n");
  EXPECT_EQ(cli({"synth-gen", "--config", path(d, "bad.cfg"), "--out", path(d, "e")}).code, kExitUsage);
}

TEST(Cli, EvalDepthExitCodes) {
  testing::TempDir d("cli_eval");
  DepthMap gt(4, 4), pred = DepthMap::filled(4, 4, 10.1);
  write_depth_image(gt, d / "empty.pgm");
  write_depth_image(pred, d / "pred.pgm");
  EXPECT_EQ(cli({"eval-depth", "--pred", path(d, "pred.pgm"), "--gt", path(d, "empty.pgm")}).code, kExitEmptySet);
  gt.set(1, 1, 10.0);
  write_depth_image(gt, d / "gt.pgm");
  const CliRun r = cli({"eval-depth", "--pred", path(d, "pred.pgm"), "--gt", path(d, "gt.pgm")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("rmse"), std::string::npos);
  EXPECT_EQ(cli({"eval-depth", "--pred", path(d, "nope.pgm"), "--gt", path(d, "gt.pgm")}).code, kExitFailure);
}

TEST(Cli, EvalDetectFixture) {
  testing::TempDir d("cli_detect");
  const auto f = testing::three_frame_fixture();
  std::filesystem::create_directories(d / "dets");
  std::filesystem::create_directories(d / "gts");
  for (std::size_t i = 0; i < f.ground_truth.size(); ++i) {
    write_file_text(d / ("gts/" + sample_name(static_cast<int>(i)) + ".txt"), format_labels(f.ground_truth[i]));
    write_file_text(d / ("dets/" + sample_name(static_cast<int>(i)) + ".txt"), format_labels(f.detections[i]));
  }
  const CliRun r = cli({"eval-detect", "--dets", path(d, "dets"), "--gts", path(d, "gts"), "--json", path(d, "ap.json")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const std::string json = read_file_text(d / "ap.json");
  EXPECT_NE(json.find("\"AP\": 0.545454545454545"), std::string::npos) << json;
  EXPECT_EQ(cli({"eval-detect", "--dets", path(d, "dets"), "--gts", path(d, "gts"), "--class", "Cyclist"}).code,
            kExitEmptySet);
  EXPECT_EQ(cli({"eval-detect", "--dets", path(d, "dets"), "--gts", path(d, "gts"), "--task", "2d"}).code,
            kExitUsage);
}

TEST(Cli, RenderBevCornerPositions) {
  LabelRecord l = testing::car_label(0.0, 40.0, 0.0);
  l.l = 4.0;
  l.w = 2.0;
  // corners x = +-2, z = 40 +- 1 -> sx = (x + 40) * 6, sy = (80 - z) * 6
  const std::string svg = render_bev_svg({Point3(1.0, 0.0, 20.0)}, {l});
  for (const char* corner : {"228,234", "252,234", "252,246", "228,246"})
    EXPECT_NE(svg.find(corner), std::string::npos) << corner;
  EXPECT_NE(svg.find("cx=\"246\" cy=\"360\""), std::string::npos);
  EXPECT_THROW(render_bev_svg({}, {}, {0.0, 6.0}), DomainError);
}

TEST(Cli, PipelineIsByteDeterministic) {
  testing::TempDir d("cli_pipeline");
  NetParams::initialize(testing::toy_architecture(), 3).save(d / "net.ckpt");
  std::vector<std::vector<std::uint8_t>> first;
  for (int rep = 0; rep < 2; ++rep) {
    const std::string root = path(d, "run" + std::to_string(rep));
    ASSERT_EQ(cli({"synth-gen", "--scenes", "2", "--seed", "4", "--out", root}).code, kExitOk);
    const CliRun p = cli({"predict-depth", "--sample", root, "--index", "1", "--checkpoint", path(d, "net.ckpt"),
                       "--out", root + "/pred.pgm"});
    ASSERT_EQ(p.code, kExitOk) << p.err;
    ASSERT_EQ(cli({"pseudo-cloud", "--depth", root + "/pred.pgm", "--calib", root + "/calib/000001.txt", "--out",
                   root + "/cloud.ply", "--bin", root + "/cloud.bin"})
                  .code,
              kExitOk);
    ASSERT_EQ(cli({"eval-depth", "--pred", root + "/pred.pgm", "--gt", root + "/depth/000001.pgm", "--json",
                   root + "/metrics.json"})
                  .code,
              kExitOk);
    std::vector<std::vector<std::uint8_t>> files;
    for (const char* f : {"/pred.pgm", "/cloud.ply", "/cloud.bin", "/metrics.json", "/velodyne/000001.bin"})
      files.push_back(read_file_bytes(root + f));
    if (rep == 0) first = files;
    else EXPECT_EQ(files, first);
  }
}

TEST(Cli, PredictRejectsArchitectureMismatch) {
  testing::TempDir d("cli_arch");
  NetParams::initialize(testing::toy_architecture(), 3).save(d / "net.ckpt");
  ASSERT_EQ(cli({"synth-gen", "--scenes", "1", "--out", path(d, "ds")}).code, kExitOk);
  const CliRun r = cli({"predict-depth", "--sample", path(d, "ds"), "--checkpoint", path(d, "net.ckpt"), "--out",
                     path(d, "p.pgm"), "--base-channels", "16"});
  EXPECT_EQ(r.code, kExitFailure);
  EXPECT_EQ(cli({"predict-depth", "--sample", path(d, "ds"), "--checkpoint", path(d, "net.ckpt"), "--out",
                 path(d, "p.png")})
                .code,
            kExitUsage);
}

TEST(Cli, ExecutableReportsExitStatus) {
  const std::string bin = PSEUDOLIDAR_CLI_PATH;
  const int status = std::system((bin + " nonsense > /dev/null 2>&1").c_str());
  ASSERT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), kExitUsage);
  const int ok = std::system((bin + " --help > /dev/null 2>&1").c_str());
  EXPECT_EQ(WEXITSTATUS(ok), kExitOk);
}

}  // namespace
}  // namespace pseudolidar
