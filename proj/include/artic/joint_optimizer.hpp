#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "artic/articulation.hpp"
#include "artic/geometry.hpp"
#include "artic/random.hpp"
#include "artic/soft_renderer.hpp"

namespace artic {

// A starting point injected ahead of the random restarts.
struct InitialGuess {
  JointSpec joint;
  std::vector<double> thetas;  // one per frame, thetas[0] == 0
};

struct OptimConfig {
  int iterations = 600;
  double lr_axis_dir = 1e-2;
  double lr_axis_pos = 1e-2;
  double lr_mlp = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int restarts = 16;
  int warmup_iterations = 60;
  int finalists = 2;
  double beta = kDefaultBeta;
  std::uint64_t seed = 0;
  std::vector<int> supervised_frames;  // 1-based; empty means all
  Rgb background = Rgb::Ones();
  bool edge_gradients = true;
  int threads = 0;  // 0: hardware concurrency
  std::vector<InitialGuess> initial_guesses;

  void validate() const;
};

struct OptimResult {
  JointSpec joint;
  MotionProfile profile;
  MotionMLP mlp;
  std::vector<double> loss_history;  // lowest loss reached up to each iteration
  double final_loss = 0.0;
  int restart_index = 0;
};

// Optimizer moments for one flat parameter block.
struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long step = 0;
};

// Bias-corrected Adam update in place. Throws kNumeric on a non-finite
// gradient.
void adam_step(std::span<double> params, std::span<const double> grads,
               AdamState& state, double lr, double beta1, double beta2,
               double eps);

struct JointParameters {
  JointSpec joint;
  MotionMLP mlp;
};

struct JointGradient {
  Vec3 axis_pos = Vec3::Zero();
  Vec3 axis_dir = Vec3::Zero();  // tangent to the unit sphere
  std::vector<double> mlp;
};

// Adam over the three parameter groups; axis_dir is renormalized after every
// step.
class JointAdam {
 public:
  explicit JointAdam(const OptimConfig& config);
  void step(JointParameters& params, const JointGradient& grad);

 private:
  const OptimConfig* config_;
  AdamState pos_;
  AdamState dir_;
  AdamState mlp_;
};

JointParameters init_restart(Rng& rng, JointType type,
                             const Bounds& movable_bbox);

// Rendering loss summed over supervised frames, with gradients through the
// motion network, the dual-quaternion joint and the soft blend.
class ArticulationObjective {
 public:
  ArticulationObjective(const TriMesh& base, const TriMesh& movable,
                        std::span<const Image> frames, const Camera& camera,
                        const OptimConfig& config);

  int frame_count() const { return frame_count_; }
  const std::vector<int>& supervised() const { return supervised_; }

  double evaluate(const JointParameters& params, JointGradient* grad,
                  bool edge_terms);

  // Loss for explicit per-frame thetas (index 0 is frame 1).
  double evaluate_thetas(const JointSpec& joint,
                         std::span<const double> thetas);

 private:
  TriMesh movable_;
  BlendLossEvaluator evaluator_;
  std::vector<BlendLossEvaluator::Frame> frames_;
  std::vector<int> supervised_;
  int frame_count_;
  TriMesh posed_;
  std::vector<Vec3> vertex_grad_;
};

OptimResult estimate_joint(const TriMesh& base, const TriMesh& movable,
                           std::span<const Image> frames, const Camera& camera,
                           JointType type, const OptimConfig& config);

std::pair<OptimResult, JointType> select_joint_type(
    const TriMesh& base, const TriMesh& movable, std::span<const Image> frames,
    const Camera& camera, const OptimConfig& config);

// Flips axis_dir so its largest-magnitude component is positive, negating
// thetas and the network output so every frame's transform is unchanged.
void canonicalize(OptimResult& result);

// Fits network weights so motion_at reproduces the given thetas.
MotionMLP fit_motion_mlp(std::span<const double> thetas, MotionOutput output,
                         Rng& rng, int iterations = 2000);

}  // namespace artic
