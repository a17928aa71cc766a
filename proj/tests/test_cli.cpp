#include <gtest/gtest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <string>

#include <json.hpp>

#include "temp_files.hpp"

namespace fs = std::filesystem;
using artic::test::read_file;
using artic::test::TempDir;
using artic::test::write_file;
using nlohmann::json;

namespace {

struct RunResult {
  int code;
  std::string out;
  std::string err;
};

RunResult run(const std::string& args) {
  static TempDir logs("artic_cli_logs");
  const fs::path out = logs / "stdout.txt";
  const fs::path err = logs / "stderr.txt";
  const std::string cmd = std::string("\"") + ARTIC_CLI_PATH + "\" " + args + " >\"" +
                          out.string() + "\" 2>\"" + err.string() + "\"";
  const int status = std::system(cmd.c_str());
  const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return {code, read_file(out), read_file(err)};
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

// Relative path to file contents for every regular file below root.
std::map<std::string, std::string> snapshot(const fs::path& root, bool with_manifests) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    const std::string name = e.path().filename().string();
    if (!with_manifests && name.find("manifest") != std::string::npos) continue;
    files[fs::relative(e.path(), root).string()] = read_file(e.path());
  }
  return files;
}

const std::string kTinyOptim =
    " --iterations 12 --warmup 4 --restarts 2 --finalists 1 --threads 1";

// Two small scenes (one per type) shared by the tests.
const fs::path& scenes() {
  static TempDir dir("artic_cli_scenes");
  static const bool made = [] {
    const RunResult r = run("synth --scenes 2 --type mixed --seed 11 --frames 5 "
                            "--resolution 40 --out-dir " + q(dir.path()));
    EXPECT_EQ(r.code, 0) << r.err;
    return true;
  }();
  (void)made;
  return dir.path();
}

fs::path scene_of_type(const std::string& type) {
  for (const auto& e : fs::directory_iterator(scenes())) {
    if (!e.is_directory()) continue;
    const json gt = json::parse(read_file(e.path() / "gt.json"));
    if (gt.dump().find("\"" + type + "\"") != std::string::npos) return e.path();
  }
  return {};
}

std::string bundle_args(const fs::path& scene) {
  return " --base " + q(scene / "base.obj") + " --movable " + q(scene / "movable.obj") +
         " --camera " + q(scene / "camera.json");
}

}  // namespace

TEST(Cli, HelpAndVersion) {
  const RunResult help = run("--help");
  EXPECT_EQ(help.code, 0);
  for (const char* cmd : {"segment", "synth", "estimate", "render", "eval"}) {
    EXPECT_NE(help.out.find(cmd), std::string::npos) << cmd;
  }
  const RunResult version = run("--version");
  EXPECT_EQ(version.code, 0);
  EXPECT_FALSE(version.out.empty());
  const RunResult sub = run("estimate --help");
  EXPECT_EQ(sub.code, 0);
  EXPECT_NE(sub.out.find("--restarts"), std::string::npos);
}

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("frobnicate").code, 2);
  TempDir dir;
  EXPECT_EQ(run("synth --scenes 0 --out-dir " + q(dir.path())).code, 2);
  EXPECT_EQ(run("synth --type hinge --out-dir " + q(dir.path())).code, 2);
  EXPECT_EQ(run("estimate --base a.obj").code, 2);
}

TEST(Cli, SynthIsDeterministic) {
  TempDir a, b;
  const std::string args = "synth --scenes 1 --seed 7 --frames 3 --resolution 32 --out-dir ";
  ASSERT_EQ(run(args + q(a.path())).code, 0);
  ASSERT_EQ(run(args + q(b.path())).code, 0);
  const auto sa = snapshot(a.path(), false);
  EXPECT_GE(sa.size(), 9u);
  EXPECT_EQ(sa, snapshot(b.path(), false));

  const json m = json::parse(read_file(a / "manifest.json"));
  EXPECT_EQ(m["command"], "synth");
  EXPECT_EQ(m["seed"], 7);
  EXPECT_TRUE(m.contains("version"));
  EXPECT_TRUE(m.contains("duration_seconds"));
  EXPECT_EQ(m["config"]["scenes"], 1);
}

TEST(Cli, SynthMixedBalancesTypes) {
  TempDir dir;
  ASSERT_EQ(run("synth --scenes 40 --type mixed --seed 3 --frames 2 --resolution 8 --out-dir " +
                q(dir.path()))
                .code,
            0);
  int revolute = 0;
  for (int i = 0; i < 40; ++i) {
    char name[16];
    std::snprintf(name, sizeof(name), "scene_%03d", i);
    const std::string gt = read_file(dir / name / "gt.json");
    ASSERT_FALSE(gt.empty()) << name;
    revolute += gt.find("\"revolute\"") != std::string::npos;
  }
  // Binomial(40, 0.5) lies in [10, 30] with probability above 0.998.
  EXPECT_GE(revolute, 10);
  EXPECT_LE(revolute, 30);
}

TEST(Cli, SegmentWritesPartitionAndManifest) {
  const fs::path scene = scene_of_type("prismatic");
  ASSERT_FALSE(scene.empty());
  TempDir a, b, c;
  const std::string base = "segment --mesh " + q(scene / "whole.obj") + " --camera " +
                           q(scene / "camera.json") + " --mask " + q(scene / "mask.pgm");
  const std::string with_features = base + " --features " + q(scene / "features.bin");
  ASSERT_EQ(run(with_features + " --out-dir " + q(a.path())).code, 0);
  ASSERT_EQ(run(with_features + " --out-dir " + q(b.path())).code, 0);
  EXPECT_EQ(snapshot(a.path(), false), snapshot(b.path(), false));

  const json m = json::parse(read_file(a / "manifest.json"));
  EXPECT_EQ(m["feature_source"], "file");
  const std::size_t faces = m["result"]["faces"];
  const std::size_t movable = m["result"]["movable_faces"];
  const std::string labels = read_file(a / "labels.csv");
  EXPECT_EQ(labels.rfind("face_id,label\n", 0), 0u);
  EXPECT_EQ(static_cast<std::size_t>(std::count(labels.begin(), labels.end(), '\n')), faces + 1);
  auto count_faces = [](const std::string& obj) {
    std::size_t n = 0;
    for (std::size_t p = obj.find("\nf "); p != std::string::npos; p = obj.find("\nf ", p + 1)) ++n;
    return n;
  };
  EXPECT_EQ(count_faces(read_file(a / "movable.obj")), movable);
  EXPECT_EQ(count_faces(read_file(a / "movable.obj")) + count_faces(read_file(a / "base.obj")),
            faces);
  EXPECT_EQ(count_faces(read_file(scene / "movable.obj")), movable);

  ASSERT_EQ(run(base + " --out-dir " + q(c.path())).code, 0);
  EXPECT_EQ(json::parse(read_file(c / "manifest.json"))["feature_source"],
            "geometric_fallback");
}

TEST(Cli, SegmentMissingMaskExitsTwo) {
  const fs::path scene = scene_of_type("prismatic");
  TempDir out;
  const RunResult r = run("segment --mesh " + q(scene / "whole.obj") + " --camera " +
                          q(scene / "camera.json") + " --mask " + q(scene / "nope.pgm") +
                          " --out-dir " + q(out.path()));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("input not found"), std::string::npos) << r.err;
}

TEST(Cli, EstimateIsDeterministicAndWritesSchema) {
  const fs::path scene = scene_of_type("prismatic");
  TempDir a, b;
  const std::string args = "estimate" + bundle_args(scene) + " --frames-dir " +
                           q(scene / "frames") + " --seed 4" + kTinyOptim + " --out ";
  ASSERT_EQ(run(args + q(a / "joint.json")).code, 0);
  ASSERT_EQ(run(args + q(b / "joint.json")).code, 0);
  EXPECT_EQ(snapshot(a.path(), false), snapshot(b.path(), false));

  const json joint = json::parse(read_file(a / "joint.json"));
  ASSERT_TRUE(joint.is_object());
  const std::string loss = read_file(a / "joint_loss.csv");
  EXPECT_EQ(loss.rfind("iteration,loss\n", 0), 0u);
  EXPECT_EQ(std::count(loss.begin(), loss.end(), '\n'), 13);
  const json m = json::parse(read_file(a / "joint_manifest.json"));
  EXPECT_EQ(m["command"], "estimate");
  EXPECT_EQ(m["seed"], 4);
  EXPECT_EQ(m["result"]["frames"], 5);
  EXPECT_TRUE(m["result"].contains("final_loss"));

  // The written joint must be loadable by render.
  TempDir frames;
  EXPECT_EQ(run("render" + bundle_args(scene) + " --joint " + q(a / "joint.json") +
                " --frames 5 --out-dir " + q(frames.path()))
                .code,
            0);
}

TEST(Cli, EstimateForcedTypeOnOtherDataSucceeds) {
  const fs::path scene = scene_of_type("revolute");
  ASSERT_FALSE(scene.empty());
  TempDir out;
  const RunResult r = run("estimate" + bundle_args(scene) + " --frames-dir " +
                          q(scene / "frames") + " --type prismatic" + kTinyOptim + " --out " +
                          q(out / "joint.json"));
  ASSERT_EQ(r.code, 0) << r.err;
  const json m = json::parse(read_file(out / "joint_manifest.json"));
  EXPECT_EQ(m["result"]["type"], "prismatic");
  EXPECT_TRUE(m["result"]["final_loss"].is_number());
}

TEST(Cli, RenderReproducesBundleFrames) {
  const fs::path scene = scene_of_type("revolute");
  TempDir full, one, again;
  const std::string args = "render" + bundle_args(scene) + " --joint " + q(scene / "gt.json");
  ASSERT_EQ(run(args + " --frames 5 --out-dir " + q(full.path())).code, 0);
  ASSERT_EQ(run(args + " --frames 5 --out-dir " + q(again.path())).code, 0);
  EXPECT_EQ(snapshot(full.path(), false), snapshot(again.path(), false));
  for (int t = 1; t <= 5; ++t) {
    const std::string name = "frame_00" + std::to_string(t) + ".ppm";
    EXPECT_EQ(read_file(full / name), read_file(scene / "frames" / name)) << name;
  }

  ASSERT_EQ(run(args + " --frames 1 --out-dir " + q(one.path())).code, 0);
  const auto files = snapshot(one.path(), false);
  ASSERT_EQ(files.size(), 1u);
  EXPECT_EQ(files.begin()->second, read_file(scene / "frames" / "frame_001.ppm"));
}

TEST(Cli, RenderInvalidJointExitsTwo) {
  const fs::path scene = scene_of_type("revolute");
  TempDir dir;
  write_file(dir / "bad.json", "{\"type\": \"revolute\", \"axis_dir\": [0, 0]}");
  const RunResult r = run("render" + bundle_args(scene) + " --joint " + q(dir / "bad.json") +
                          " --frames 3 --out-dir " + q(dir / "out"));
  EXPECT_EQ(r.code, 2);
  EXPECT_FALSE(r.err.empty());
}

TEST(Cli, EvalReportsEveryScene) {
  TempDir a, b;
  const std::string args = "eval --scene-dir " + q(scenes()) + " --seed 2" + kTinyOptim +
                           " --report ";
  const RunResult r = run(args + q(a / "report.csv"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_FALSE(r.out.empty());
  ASSERT_EQ(run(args + q(b / "report.csv")).code, 0);
  const std::string csv = read_file(a / "report.csv");
  EXPECT_EQ(csv, read_file(b / "report.csv"));
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
  const json m = json::parse(read_file(a / "report_manifest.json"));
  EXPECT_EQ(m["result"]["scenes"], 2);
  EXPECT_EQ(m["result"]["failed"], 0);
}

TEST(Cli, EvalMarksCorruptSceneFailed) {
  TempDir dir;
  fs::copy(scenes(), dir.path(), fs::copy_options::recursive);
  fs::remove(dir / "manifest.json");
  write_file(dir / "scene_001" / "camera.json", "{ not json");
  const RunResult r = run("eval --scene-dir " + q(dir.path()) + kTinyOptim + " --report " +
                          q(dir / "report.csv"));
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string csv = read_file(dir / "report.csv");
  EXPECT_NE(csv.find("scene_001,failed"), std::string::npos) << csv;
  EXPECT_NE(csv.find("scene_000,ok"), std::string::npos) << csv;
}

TEST(Cli, EvalMissingDirectoryExitsTwo) {
  TempDir dir;
  const RunResult r = run("eval --scene-dir " + q(dir / "missing") + " --report " +
                          q(dir / "r.csv"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("input not found"), std::string::npos);
}
