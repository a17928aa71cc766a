#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "artic/articulation.hpp"
#include "artic/geometry.hpp"
#include "artic/joint_optimizer.hpp"
#include "artic/random.hpp"

namespace artic {

struct SynthConfig {
  int frames = 16;
  int resolution = 256;
  double min_revolute_deg = 30.0;
  double max_revolute_deg = 100.0;
  double min_prismatic_fraction = 0.25;  // of the movable extent along the axis
  double max_prismatic_fraction = 0.6;
  bool smoothstep = true;
  Rgb background = Rgb::Ones();
};

// Candidate joint axis for a template. `outward` picks the sign of the motion:
// positive theta moves the movable part's center along it.
struct AxisHint {
  JointSpec joint;
  Vec3 outward = Vec3::Zero();
};

// Two-part object with a camera looking at it.
struct ArticulatedAsset {
  std::string kind;  // drawer, slider, door, lid, flap
  TriMesh base;
  TriMesh movable;
  Camera camera;
  std::vector<AxisHint> hints;  // empty: any bbox edge / face normal
};

ArticulatedAsset make_asset(Rng& rng, JointType type, int resolution);

struct GroundTruthArticulation {
  JointSpec joint;
  std::vector<double> thetas;
  TriMesh base;
  TriMesh movable;
  Camera camera;
};

// Smoothstep (or linear) ramp from 0 to theta_end over n frames.
std::vector<double> motion_schedule(double theta_end, int n, bool smoothstep);

GroundTruthArticulation sample_articulation(Rng& rng, JointType type,
                                            const ArticulatedAsset& asset,
                                            const SynthConfig& config);

std::vector<Image> render_sequence(const GroundTruthArticulation& gt,
                                   const Rgb& background);

// Renders the movable part posed by each theta over the fixed base.
std::vector<Image> render_articulation(const TriMesh& base,
                                       const TriMesh& movable,
                                       const Camera& camera,
                                       const JointSpec& joint,
                                       std::span<const double> thetas,
                                       const Rgb& background);

struct AxisErrors {
  double angle_deg = 0.0;
  double position = 0.0;  // fraction of bbox diagonal, 0 for prismatic
};

// Throws kInvalidArgument when the joint types differ.
AxisErrors axis_errors(const JointSpec& est, const JointSpec& gt,
                       double bbox_diag);

// Sign-invariant RMSE divided by max|gt|.
double motion_rmse(std::span<const double> est, std::span<const double> gt);

double psnr(const Image& pred, const Image& ref);
// Mean SSIM over non-overlapping 8x8 luminance windows.
double ssim(const Image& pred, const Image& ref);

// Scene bundle on disk: base.obj, movable.obj, camera.json, gt.json,
// frames/frame_%03d.ppm, plus whole.obj, mask.pgm and features.bin for the
// segmentation entry point.
void write_scene(const GroundTruthArticulation& gt, const std::string& kind,
                 const std::filesystem::path& dir, const Rgb& background,
                 std::uint64_t feature_seed);
GroundTruthArticulation load_scene(const std::filesystem::path& dir);

// Frames named frame_%03d.ppm in ascending order.
std::vector<Image> load_frames(const std::filesystem::path& dir);

struct EvalReport {
  std::string scene;
  bool failed = false;
  std::string error;
  JointType gt_type = JointType::kRevolute;
  JointType est_type = JointType::kRevolute;
  bool type_correct = false;
  double axis_angle_error = 0.0;
  double axis_position_error = 0.0;
  double motion_rmse = 0.0;
  double psnr = 0.0;
  double ssim = 0.0;
  double final_loss = 0.0;
  double seconds = 0.0;
};

struct BenchmarkConfig {
  OptimConfig optim;
  Rgb background = Rgb::Ones();
  bool seed_with_gt = false;  // injects the GT joint as the first restart
};

struct BenchmarkSummary {
  std::vector<EvalReport> reports;
  int scored = 0;
  int failed = 0;
  double median_axis_angle = 0.0;
  double median_axis_position = 0.0;  // revolute scenes only
  double median_motion_rmse = 0.0;
  double median_psnr = 0.0;
  double median_ssim = 0.0;
  double mean_axis_angle = 0.0;
  double mean_motion_rmse = 0.0;
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
  double type_accuracy = 0.0;
};

EvalReport evaluate_scene(const GroundTruthArticulation& gt,
                          const std::string& name,
                          const BenchmarkConfig& config);

// Scores every subdirectory of scene_dir in name order. Scenes that fail to
// load or evaluate are recorded and skipped.
BenchmarkSummary run_benchmark(const std::filesystem::path& scene_dir,
                               const BenchmarkConfig& config);

BenchmarkSummary summarize(std::vector<EvalReport> reports);
std::string report_csv(const BenchmarkSummary& summary);
std::string summary_text(const BenchmarkSummary& summary);

}  // namespace artic
