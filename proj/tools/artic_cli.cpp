#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "artic/artic.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct CliError {
  int code;
  std::string message;
};

int exit_code(artic_status status) {
  switch (status) {
    case ARTIC_ERR_INVALID_ARGUMENT:
    case ARTIC_ERR_VALIDATION:
    case ARTIC_ERR_PARSE:
      return kExitUsage;
    default:
      return kExitRuntime;
  }
}

void check(artic_status status, const std::string& context) {
  if (status == ARTIC_OK) return;
  throw CliError{exit_code(status), context + ": " + artic_last_error()};
}

void require_input(const std::string& path) {
  if (!fs::exists(path)) throw CliError{kExitUsage, "input not found: " + path};
}

template <class T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
template <class T, void (*Free)(T*)>
using Handle = std::unique_ptr<T, Deleter<T, Free>>;

using Mesh = Handle<artic_mesh, artic_mesh_free>;
using CameraH = Handle<artic_camera, artic_camera_free>;
using ImageH = Handle<artic_image, artic_image_free>;
using Frames = Handle<artic_frames, artic_frames_free>;
using Features = Handle<artic_features, artic_features_free>;
using Seg = Handle<artic_segmentation, artic_segmentation_free>;
using Joint = Handle<artic_joint, artic_joint_free>;
using Estimate = Handle<artic_estimate, artic_estimate_free>;
using Bench = Handle<artic_benchmark, artic_benchmark_free>;

Mesh load_mesh(const std::string& path) {
  require_input(path);
  artic_mesh* m = nullptr;
  check(artic_mesh_load(path.c_str(), &m), "loading " + path);
  return Mesh(m);
}

CameraH load_camera(const std::string& path) {
  require_input(path);
  artic_camera* c = nullptr;
  check(artic_camera_load(path.c_str(), &c), "loading " + path);
  return CameraH(c);
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw CliError{kExitRuntime, "cannot write " + path.string()};
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw CliError{kExitRuntime, "cannot create " + dir.string() + ": " + ec.message()};
}

fs::path parent_dir(const fs::path& file) {
  return file.has_parent_path() ? file.parent_path() : fs::path(".");
}

// Stem-based sibling path: out/joint.json -> out/joint<suffix>
fs::path sibling(const fs::path& file, const std::string& suffix) {
  return parent_dir(file) / (file.stem().string() + suffix);
}

class Manifest {
 public:
  explicit Manifest(std::string command) : start_(std::chrono::steady_clock::now()) {
    doc_["command"] = std::move(command);
    doc_["version"] = artic_version();
  }
  json& operator[](const char* key) { return doc_[key]; }
  void write(const fs::path& path) {
    doc_["duration_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    write_file(path, doc_.dump(2) + "\n");
  }

 private:
  json doc_;
  std::chrono::steady_clock::time_point start_;
};

json optim_json(const artic_optim_config& c) {
  return {{"iterations", c.iterations},
          {"warmup_iterations", c.warmup_iterations},
          {"restarts", c.restarts},
          {"finalists", c.finalists},
          {"lr_axis_dir", c.lr_axis_dir},
          {"lr_axis_pos", c.lr_axis_pos},
          {"lr_mlp", c.lr_mlp},
          {"beta", c.beta},
          {"seed", c.seed},
          {"threads", c.threads},
          {"edge_gradients", c.edge_gradients != 0},
          {"background", {c.background[0], c.background[1], c.background[2]}}};
}

void add_optim_flags(CLI::App* cmd, artic_optim_config& c) {
  cmd->add_option("--iterations", c.iterations, "Iterations per finalist")
      ->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--warmup", c.warmup_iterations, "Warm-up iterations per restart")
      ->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--restarts", c.restarts, "Random restarts")
      ->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--finalists", c.finalists, "Restarts continued after warm-up")
      ->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--lr-axis-dir", c.lr_axis_dir, "Adam learning rate for the axis direction")
      ->capture_default_str();
  cmd->add_option("--lr-axis-pos", c.lr_axis_pos, "Adam learning rate for the axis position")
      ->capture_default_str();
  cmd->add_option("--lr-mlp", c.lr_mlp, "Adam learning rate for the motion network")
      ->capture_default_str();
  cmd->add_option("--beta", c.beta, "Soft depth blend sharpness")->capture_default_str();
  cmd->add_option("--threads", c.threads, "Worker threads (0: all cores)")
      ->capture_default_str()->check(CLI::NonNegativeNumber);
}

// Commands -----------------------------------------------------------------

struct SegmentArgs {
  std::string mesh, features, camera, mask, out_dir;
  int max_iters = 100;
  double fallback_scale = 1.0;
  std::uint64_t seed = 0;
};

void cmd_segment(const SegmentArgs& a) {
  Manifest manifest("segment");
  Mesh mesh = load_mesh(a.mesh);
  CameraH camera = load_camera(a.camera);
  require_input(a.mask);
  artic_image* mask_raw = nullptr;
  check(artic_image_load(a.mask.c_str(), &mask_raw), "loading " + a.mask);
  ImageH mask(mask_raw);

  artic_features* feat_raw = nullptr;
  std::string source;
  if (!a.features.empty()) {
    require_input(a.features);
    check(artic_features_load(a.features.c_str(), &feat_raw), "loading " + a.features);
    source = "file";
  } else {
    check(artic_features_geometric(mesh.get(), a.fallback_scale, &feat_raw),
          "computing features");
    source = "geometric_fallback";
  }
  Features features(feat_raw);

  artic_segmentation* seg_raw = nullptr;
  check(artic_segment(mesh.get(), features.get(), camera.get(), mask.get(), a.max_iters,
                      &seg_raw),
        "segmentation");
  Seg seg(seg_raw);

  const fs::path out(a.out_dir);
  ensure_dir(out);
  check(artic_mesh_save(artic_segmentation_movable(seg.get()), (out / "movable.obj").c_str()),
        "writing movable.obj");
  check(artic_mesh_save(artic_segmentation_base(seg.get()), (out / "base.obj").c_str()),
        "writing base.obj");
  std::size_t n = 0;
  const std::int32_t* labels = artic_segmentation_labels(seg.get(), &n);
  std::string csv = "face_id,label\n";
  std::size_t movable = 0;
  for (std::size_t f = 0; f < n; ++f) {
    csv += std::to_string(f) + (labels[f] == 1 ? ",movable\n" : ",base\n");
    movable += labels[f] == 1;
  }
  write_file(out / "labels.csv", csv);

  manifest["seed"] = a.seed;
  manifest["feature_source"] = source;
  manifest["config"] = {{"max_iters", a.max_iters}, {"fallback_scale", a.fallback_scale}};
  manifest["inputs"] = {{"mesh", a.mesh}, {"features", a.features},
                        {"camera", a.camera}, {"mask", a.mask}};
  manifest["outputs"] = {"movable.obj", "base.obj", "labels.csv"};
  manifest["result"] = {{"faces", n},
                        {"movable_faces", movable},
                        {"mask_faces", artic_segmentation_mask_face_count(seg.get())}};
  manifest.write(out / "manifest.json");
  std::printf("segmented %zu faces: %zu movable, %zu base (features: %s)\n", n, movable,
              n - movable, source.c_str());
}

struct SynthArgs {
  int scenes = 20;
  std::string type = "mixed";
  std::uint64_t seed = 0;
  std::string out_dir;
  int frames = 16;
  int resolution = 256;
};

void cmd_synth(const SynthArgs& a) {
  Manifest manifest("synth");
  artic_synth_config c;
  artic_synth_config_default(&c);
  c.scenes = a.scenes;
  c.seed = a.seed;
  c.frames = a.frames;
  c.resolution = a.resolution;
  c.type = a.type == "prismatic"   ? ARTIC_SYNTH_PRISMATIC
           : a.type == "revolute" ? ARTIC_SYNTH_REVOLUTE
                                  : ARTIC_SYNTH_MIXED;
  ensure_dir(a.out_dir);
  check(artic_synth(&c, a.out_dir.c_str()), "synthesizing scenes");
  manifest["seed"] = a.seed;
  manifest["config"] = {{"scenes", a.scenes}, {"type", a.type},
                        {"frames", a.frames}, {"resolution", a.resolution}};
  manifest["inputs"] = json::object();
  manifest["outputs"] = {{"out_dir", a.out_dir}};
  manifest.write(fs::path(a.out_dir) / "manifest.json");
  std::printf("wrote %d scene(s) to %s\n", a.scenes, a.out_dir.c_str());
}

struct EstimateArgs {
  std::string base, movable, frames_dir, camera, type = "auto", out;
  artic_optim_config optim{};
};

void cmd_estimate(EstimateArgs a) {
  Manifest manifest("estimate");
  Mesh base = load_mesh(a.base);
  Mesh movable = load_mesh(a.movable);
  CameraH camera = load_camera(a.camera);
  require_input(a.frames_dir);
  artic_frames* frames_raw = nullptr;
  check(artic_frames_load_dir(a.frames_dir.c_str(), &frames_raw), "loading frames");
  Frames frames(frames_raw);

  const artic_joint_type type = a.type == "prismatic" ? ARTIC_JOINT_PRISMATIC
                                : a.type == "revolute" ? ARTIC_JOINT_REVOLUTE
                                                       : ARTIC_JOINT_AUTO;
  artic_estimate* est_raw = nullptr;
  check(artic_estimate_run(base.get(), movable.get(), frames.get(), camera.get(), type,
                           &a.optim, &est_raw),
        "estimation");
  Estimate est(est_raw);

  const fs::path out(a.out);
  ensure_dir(parent_dir(out));
  const artic_joint* joint = artic_estimate_joint(est.get());
  check(artic_joint_save(joint, out.c_str()), "writing " + a.out);

  std::size_t n = 0;
  const double* history = artic_estimate_loss_history(est.get(), &n);
  std::string csv = "iteration,loss\n";
  char buf[64];
  for (std::size_t i = 0; i < n; ++i) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", i, history[i]);
    csv += buf;
  }
  const fs::path loss_path = sibling(out, "_loss.csv");
  const fs::path mlp_path = sibling(out, "_mlp.json");
  write_file(loss_path, csv);
  write_file(mlp_path, artic_estimate_mlp_json(est.get()));

  const char* chosen = artic_joint_get_type(joint) == ARTIC_JOINT_PRISMATIC ? "prismatic"
                                                                           : "revolute";
  manifest["seed"] = a.optim.seed;
  manifest["config"] = optim_json(a.optim);
  manifest["config"]["type"] = a.type;
  manifest["inputs"] = {{"base", a.base}, {"movable", a.movable},
                        {"frames_dir", a.frames_dir}, {"camera", a.camera}};
  manifest["outputs"] = {{"joint", a.out},
                         {"loss_csv", loss_path.string()},
                         {"mlp", mlp_path.string()}};
  manifest["result"] = {{"type", chosen},
                        {"final_loss", artic_estimate_final_loss(est.get())},
                        {"restart_index", artic_estimate_restart_index(est.get())},
                        {"frames", artic_frames_count(frames.get())}};
  manifest.write(sibling(out, "_manifest.json"));
  std::printf("%s joint, final loss %.6g\n", chosen, artic_estimate_final_loss(est.get()));
}

struct RenderArgs {
  std::string base, movable, joint, camera, out_dir;
  int frames = 16;
  std::uint64_t seed = 0;
  std::vector<double> background{1.0, 1.0, 1.0};
};

void cmd_render(const RenderArgs& a) {
  Manifest manifest("render");
  Mesh base = load_mesh(a.base);
  Mesh movable = load_mesh(a.movable);
  CameraH camera = load_camera(a.camera);
  require_input(a.joint);
  artic_joint* joint_raw = nullptr;
  check(artic_joint_load(a.joint.c_str(), &joint_raw), "loading " + a.joint);
  Joint joint(joint_raw);

  artic_frames* frames_raw = nullptr;
  check(artic_render(base.get(), movable.get(), camera.get(), joint.get(), a.frames,
                     a.background.data(), &frames_raw),
        "rendering");
  Frames frames(frames_raw);
  ensure_dir(a.out_dir);
  check(artic_frames_save_dir(frames.get(), a.out_dir.c_str()), "writing frames");

  manifest["seed"] = a.seed;
  manifest["config"] = {{"frames", a.frames}, {"background", a.background}};
  manifest["inputs"] = {{"base", a.base}, {"movable", a.movable},
                        {"joint", a.joint}, {"camera", a.camera}};
  manifest["outputs"] = {{"out_dir", a.out_dir}};
  manifest.write(fs::path(a.out_dir) / "manifest.json");
  std::printf("wrote %d frame(s) to %s\n", a.frames, a.out_dir.c_str());
}

struct EvalArgs {
  std::string scene_dir, report;
  bool seed_with_gt = false;
  artic_optim_config optim{};
};

void cmd_eval(EvalArgs a) {
  Manifest manifest("eval");
  require_input(a.scene_dir);
  artic_benchmark* bench_raw = nullptr;
  check(artic_benchmark_run(a.scene_dir.c_str(), &a.optim, a.seed_with_gt ? 1 : 0,
                            &bench_raw),
        "benchmark");
  Bench bench(bench_raw);
  const fs::path report(a.report);
  ensure_dir(parent_dir(report));
  write_file(report, artic_benchmark_csv(bench.get()));
  if (artic_benchmark_scene_count(bench.get()) == 0) {
    std::fprintf(stderr, "warning: no scenes found in %s\n", a.scene_dir.c_str());
  }
  std::printf("%s", artic_benchmark_summary(bench.get()));

  manifest["seed"] = a.optim.seed;
  manifest["config"] = optim_json(a.optim);
  manifest["config"]["seed_with_gt"] = a.seed_with_gt;
  manifest["inputs"] = {{"scene_dir", a.scene_dir}};
  manifest["outputs"] = {{"report", a.report}};
  manifest["result"] = {{"scenes", artic_benchmark_scene_count(bench.get())},
                        {"failed", artic_benchmark_failed_count(bench.get())}};
  manifest.write(sibling(report, "_manifest.json"));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mask-prompted articulation: segment, synthesize, estimate, render, evaluate"};
  app.set_version_flag("--version", std::string(artic_version()));
  app.require_subcommand(1);

  SegmentArgs seg;
  auto* segment = app.add_subcommand("segment", "Split a mesh into base and movable parts");
  segment->add_option("--mesh", seg.mesh, "Input OBJ mesh")->required();
  segment->add_option("--features", seg.features,
                      "Per-face features (binary); geometric features if omitted");
  segment->add_option("--camera", seg.camera, "Camera JSON")->required();
  segment->add_option("--mask", seg.mask, "Movable-part mask (PGM)")->required();
  segment->add_option("--out-dir", seg.out_dir, "Output directory")->required();
  segment->add_option("--max-iters", seg.max_iters, "k-means iteration cap")
      ->capture_default_str()->check(CLI::NonNegativeNumber);
  segment->add_option("--fallback-scale", seg.fallback_scale,
                      "Centroid weight of the geometric features")->capture_default_str();
  segment->add_option("--seed", seg.seed, "Random seed")->capture_default_str();

  SynthArgs syn;
  auto* synth = app.add_subcommand("synth", "Generate synthetic scene bundles");
  synth->add_option("--scenes", syn.scenes, "Number of scenes")
      ->capture_default_str()->check(CLI::PositiveNumber);
  synth->add_option("--type", syn.type, "Joint type")
      ->capture_default_str()->check(CLI::IsMember({"prismatic", "revolute", "mixed"}));
  synth->add_option("--seed", syn.seed, "Random seed")->capture_default_str();
  synth->add_option("--out-dir", syn.out_dir, "Output directory")->required();
  synth->add_option("--frames", syn.frames, "Frames per scene")
      ->capture_default_str()->check(CLI::Range(2, 100000));
  synth->add_option("--resolution", syn.resolution, "Square image size")
      ->capture_default_str()->check(CLI::Range(8, 8192));

  EstimateArgs est;
  artic_optim_config_default(&est.optim);
  auto* estimate = app.add_subcommand("estimate", "Fit a joint to a frame sequence");
  estimate->add_option("--base", est.base, "Base part OBJ")->required();
  estimate->add_option("--movable", est.movable, "Movable part OBJ")->required();
  estimate->add_option("--frames-dir", est.frames_dir, "Directory of frame_*.ppm")
      ->required();
  estimate->add_option("--camera", est.camera, "Camera JSON")->required();
  estimate->add_option("--type", est.type, "Joint type")
      ->capture_default_str()->check(CLI::IsMember({"auto", "prismatic", "revolute"}));
  estimate->add_option("--seed", est.optim.seed, "Random seed")->capture_default_str();
  estimate->add_option("--out", est.out, "Output joint JSON")->required();
  add_optim_flags(estimate, est.optim);

  RenderArgs ren;
  auto* render = app.add_subcommand("render", "Render an articulation sequence");
  render->add_option("--base", ren.base, "Base part OBJ")->required();
  render->add_option("--movable", ren.movable, "Movable part OBJ")->required();
  render->add_option("--joint", ren.joint, "Joint JSON with thetas")->required();
  render->add_option("--camera", ren.camera, "Camera JSON")->required();
  render->add_option("--frames", ren.frames, "Number of frames")
      ->capture_default_str()->check(CLI::PositiveNumber);
  render->add_option("--out-dir", ren.out_dir, "Output directory")->required();
  render->add_option("--background", ren.background, "Background RGB in [0,1]")
      ->expected(3)->capture_default_str();
  render->add_option("--seed", ren.seed, "Random seed")->capture_default_str();

  EvalArgs ev;
  artic_optim_config_default(&ev.optim);
  auto* eval = app.add_subcommand("eval", "Benchmark joint estimation on scene bundles");
  eval->add_option("--scene-dir", ev.scene_dir, "Directory of scene bundles")->required();
  eval->add_option("--seed", ev.optim.seed, "Random seed")->capture_default_str();
  eval->add_option("--report", ev.report, "Output CSV report")->required();
  eval->add_flag("--seed-with-gt", ev.seed_with_gt,
                 "Add the ground-truth joint as the first restart");
  add_optim_flags(eval, ev.optim);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*segment) cmd_segment(seg);
    if (*synth) cmd_synth(syn);
    if (*estimate) cmd_estimate(est);
    if (*render) cmd_render(ren);
    if (*eval) cmd_eval(ev);
  } catch (const CliError& e) {
    std::fprintf(stderr, "error: %s\n", e.message.c_str());
    return e.code;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  return 0;
}
