#include "artic/joint_optimizer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <numeric>
#include <thread>

#include <Eigen/QR>

namespace artic {
namespace {

// Runs fn(index, worker) for index in [0, count) on up to `threads` workers.
// Each worker owns the state it creates, so results do not depend on the
// schedule.
template <class MakeState, class Fn>
void parallel_for(std::size_t count, int threads, MakeState&& make_state, Fn&& fn) {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads) : hw;
  workers = std::max<std::size_t>(1, std::min(workers, count));
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(workers);
  auto body = [&](std::size_t w) {
    try {
      auto state = make_state();
      for (std::size_t i = next++; i < count; i = next++) fn(i, state);
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  if (workers == 1) {
    body(0);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(body, w);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

MotionOutput output_for(JointType type) {
  return type == JointType::kRevolute ? MotionOutput::kBoundedPi
                                      : MotionOutput::kLinear;
}

}  // namespace

void OptimConfig::validate() const {
  if (!(lr_axis_dir > 0.0) || !(lr_axis_pos > 0.0) || !(lr_mlp > 0.0)) {
    fail(ErrorCode::kValidation, "learning rates must be positive");
  }
  if (restarts < 1) fail(ErrorCode::kValidation, "restarts must be at least 1");
  if (warmup_iterations < 1 || iterations < warmup_iterations) {
    fail(ErrorCode::kValidation, "iterations must be >= warmup_iterations >= 1");
  }
  if (finalists < 1) fail(ErrorCode::kValidation, "finalists must be at least 1");
  if (!(beta > 0.0)) fail(ErrorCode::kValidation, "beta must be positive");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) ||
      !(adam_beta2 >= 0.0 && adam_beta2 < 1.0) || !(adam_eps > 0.0)) {
    fail(ErrorCode::kValidation, "invalid Adam hyperparameters");
  }
}

void adam_step(std::span<double> params, std::span<const double> grads,
               AdamState& state, double lr, double beta1, double beta2,
               double eps) {
  if (params.size() != grads.size()) {
    fail(ErrorCode::kInvalidArgument, "parameter/gradient size mismatch");
  }
  for (double g : grads) {
    if (!std::isfinite(g)) fail(ErrorCode::kNumeric, "non-finite gradient");
  }
  if (state.m.size() != params.size()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
    state.step = 0;
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * grads[i];
    state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * grads[i] * grads[i];
    const double mhat = state.m[i] / c1;
    const double vhat = state.v[i] / c2;
    params[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

JointAdam::JointAdam(const OptimConfig& config) : config_(&config) {}

void JointAdam::step(JointParameters& params, const JointGradient& grad) {
  const auto& c = *config_;
  adam_step({params.joint.axis_pos.data(), 3}, {grad.axis_pos.data(), 3}, pos_,
            c.lr_axis_pos, c.adam_beta1, c.adam_beta2, c.adam_eps);
  adam_step({params.joint.axis_dir.data(), 3}, {grad.axis_dir.data(), 3}, dir_,
            c.lr_axis_dir, c.adam_beta1, c.adam_beta2, c.adam_eps);
  params.joint.axis_dir.normalize();
  adam_step(params.mlp.parameters(), grad.mlp, mlp_, c.lr_mlp, c.adam_beta1,
            c.adam_beta2, c.adam_eps);
}

JointParameters init_restart(Rng& rng, JointType type,
                             const Bounds& movable_bbox) {
  JointParameters p;
  p.joint.type = type;
  Vec3 dir;
  do {
    dir = Vec3(rng.normal(), rng.normal(), rng.normal());
  } while (dir.norm() < 1e-6);
  p.joint.axis_dir = dir.normalized();
  if (type == JointType::kRevolute) {
    for (int k = 0; k < 3; ++k) {
      p.joint.axis_pos[k] = rng.uniform(movable_bbox.min[k], movable_bbox.max[k]);
    }
  } else {
    p.joint.axis_pos = movable_bbox.center();
  }
  p.mlp = MotionMLP::random(rng, output_for(type));
  return p;
}

// ---------------------------------------------------------------------------

ArticulationObjective::ArticulationObjective(const TriMesh& base,
                                             const TriMesh& movable,
                                             std::span<const Image> frames,
                                             const Camera& camera,
                                             const OptimConfig& config)
    : movable_(movable),
      evaluator_(base, camera, config.beta, config.background),
      frame_count_(static_cast<int>(frames.size())),
      posed_(movable) {
  if (frames.size() < 2) {
    fail(ErrorCode::kInvalidArgument, "joint estimation needs at least 2 frames");
  }
  base.validate();
  movable.validate();
  for (const auto& f : frames) {
    if (f.width() != camera.width() || f.height() != camera.height() ||
        f.channels() != 3) {
      fail(ErrorCode::kInvalidArgument,
           "frame resolution does not match the camera");
    }
  }
  if (config.supervised_frames.empty()) {
    supervised_.resize(frames.size());
    std::iota(supervised_.begin(), supervised_.end(), 1);
  } else {
    supervised_ = config.supervised_frames;
    for (int t : supervised_) {
      if (t < 1 || t > frame_count_) {
        fail(ErrorCode::kInvalidArgument, "supervised frame out of range");
      }
    }
  }
  frames_.resize(frames.size());
  for (int t : supervised_) {
    frames_[static_cast<std::size_t>(t - 1)] =
        evaluator_.prepare(frames[static_cast<std::size_t>(t - 1)]);
  }
}

double ArticulationObjective::evaluate(const JointParameters& params,
                                       JointGradient* grad, bool edge_terms) {
  const BlendLossEvaluator::Options options{edge_terms};
  if (grad != nullptr) {
    grad->axis_pos.setZero();
    grad->axis_dir.setZero();
    grad->mlp.assign(MotionMLP::parameter_count(), 0.0);
  }
  double total = 0.0;
  for (int t : supervised_) {
    const double theta = motion_at(params.mlp, t, frame_count_);
    const RigidTransform rt = joint_transform(params.joint, theta);
    for (std::size_t i = 0; i < movable_.vertices.size(); ++i) {
      posed_.vertices[i] = rt.apply(movable_.vertices[i]);
    }
    const auto& frame = frames_[static_cast<std::size_t>(t - 1)];
    total += evaluator_.evaluate(posed_, frame,
                                 grad != nullptr ? &vertex_grad_ : nullptr,
                                 options);
    if (grad == nullptr) continue;

    Mat3 dL_dR = Mat3::Zero();
    Vec3 dL_dt = Vec3::Zero();
    for (std::size_t i = 0; i < movable_.vertices.size(); ++i) {
      dL_dR += vertex_grad_[i] * movable_.vertices[i].transpose();
      dL_dt += vertex_grad_[i];
    }
    const JointParamGrad g =
        chain_joint_grad(joint_pose_grads(params.joint, theta), dL_dR, dL_dt);
    grad->axis_pos += g.axis_pos;
    grad->axis_dir += g.axis_dir;
    if (g.theta != 0.0 && t > 1) {
      motion_at_with_grad(params.mlp, t, frame_count_, g.theta, grad->mlp);
    }
  }
  return total;
}

double ArticulationObjective::evaluate_thetas(const JointSpec& joint,
                                              std::span<const double> thetas) {
  if (thetas.size() != static_cast<std::size_t>(frame_count_)) {
    fail(ErrorCode::kInvalidArgument, "theta count does not match frames");
  }
  double total = 0.0;
  for (int t : supervised_) {
    const RigidTransform rt =
        joint_transform(joint, thetas[static_cast<std::size_t>(t - 1)]);
    for (std::size_t i = 0; i < movable_.vertices.size(); ++i) {
      posed_.vertices[i] = rt.apply(movable_.vertices[i]);
    }
    total += evaluator_.evaluate(posed_, frames_[static_cast<std::size_t>(t - 1)],
                                 nullptr);
  }
  return total;
}

// ---------------------------------------------------------------------------

MotionMLP fit_motion_mlp(std::span<const double> thetas, MotionOutput output,
                         Rng& rng, int iterations) {
  const int n = static_cast<int>(thetas.size());
  MotionMLP mlp = MotionMLP::random(rng, output);
  if (n < 2) return mlp;
  AdamState state;
  std::vector<double> grad(MotionMLP::parameter_count());
  for (int it = 0; it < iterations; ++it) {
    std::fill(grad.begin(), grad.end(), 0.0);
    for (int t = 2; t <= n; ++t) {
      const double pred = motion_at(mlp, t, n);
      const double err = pred - thetas[static_cast<std::size_t>(t - 1)];
      motion_at_with_grad(mlp, t, n, 2.0 * err / n, grad);
    }
    const double lr = it < iterations / 2 ? 3e-3 : 1e-3;
    adam_step(mlp.parameters(), grad, state, lr, 0.9, 0.999, 1e-8);
  }
  // Output weights enter g(s) - g(0) linearly; a minimum-norm correction of
  // W3 interpolates the targets to rounding error.
  const auto last = MotionMLP::layers()[2];
  const auto width = static_cast<Eigen::Index>(last.in);
  Eigen::MatrixXd h(n - 1, width);
  Eigen::VectorXd residual(n - 1);
  for (int t = 2; t <= n; ++t) {
    std::fill(grad.begin(), grad.end(), 0.0);
    mlp.evaluate_with_grad((static_cast<double>(t - 1) / (n - 1)), 1.0, grad);
    mlp.evaluate_with_grad(0.0, -1.0, grad);
    for (Eigen::Index j = 0; j < width; ++j) {
      h(t - 2, j) = grad[last.weight_offset + static_cast<std::size_t>(j)];
    }
    double target = thetas[static_cast<std::size_t>(t - 1)];
    if (output == MotionOutput::kBoundedPi) {
      target = std::atanh(std::clamp(target / std::numbers::pi, -0.999999, 0.999999));
    }
    residual[t - 2] = target - (mlp.evaluate((static_cast<double>(t - 1) / (n - 1))) - mlp.evaluate(0.0));
  }
  const Eigen::VectorXd delta = h.completeOrthogonalDecomposition().solve(residual);
  auto params = mlp.parameters();
  for (Eigen::Index j = 0; j < width; ++j) {
    params[last.weight_offset + static_cast<std::size_t>(j)] += delta[j];
  }
  return mlp;
}

void canonicalize(OptimResult& result) {
  const Vec3& d = result.joint.axis_dir;
  Eigen::Index largest = 0;
  d.cwiseAbs().maxCoeff(&largest);
  if (d[largest] >= 0.0) return;
  result.joint.axis_dir = -d;
  for (double& t : result.profile.thetas) t = -t;
  // Negating the output layer negates g(s) - g(0) exactly.
  const auto last = MotionMLP::layers()[2];
  auto params = result.mlp.parameters();
  for (int i = 0; i < last.in; ++i) params[last.weight_offset + static_cast<std::size_t>(i)] *= -1.0;
  params[last.bias_offset] *= -1.0;
}

namespace {

struct Run {
  JointParameters params;
  JointParameters best;
  JointAdam adam;
  std::vector<double> history;
};

}  // namespace

OptimResult estimate_joint(const TriMesh& base, const TriMesh& movable,
                           std::span<const Image> frames, const Camera& camera,
                           JointType type, const OptimConfig& config) {
  config.validate();
  if (frames.size() < 2) {
    fail(ErrorCode::kInvalidArgument, "joint estimation needs at least 2 frames");
  }
  const int n = static_cast<int>(frames.size());
  const Bounds box = bounding_box(movable);
  const std::size_t total = std::max<std::size_t>(
      static_cast<std::size_t>(config.restarts), config.initial_guesses.size());

  std::vector<Run> runs;
  runs.reserve(total);
  const char* stream = type == JointType::kRevolute ? "restart/revolute"
                                                    : "restart/prismatic";
  for (std::size_t r = 0; r < total; ++r) {
    Rng rng = Rng::stream(config.seed, stream, r);
    JointParameters p;
    if (r < config.initial_guesses.size()) {
      const InitialGuess& guess = config.initial_guesses[r];
      if (guess.thetas.size() != frames.size()) {
        fail(ErrorCode::kInvalidArgument, "initial guess theta count mismatch");
      }
      p.joint = guess.joint;
      p.joint.type = type;
      p.joint.validate();
      p.mlp = fit_motion_mlp(guess.thetas, output_for(type), rng);
    } else {
      p = init_restart(rng, type, box);
    }
    runs.push_back(Run{p, std::move(p), JointAdam(config), {}});
  }

  auto make_objective = [&] {
    return ArticulationObjective(base, movable, frames, camera, config);
  };
  auto advance = [&](Run& run, ArticulationObjective& objective, int from,
                     int to) {
    JointGradient grad;
    for (int it = from; it < to; ++it) {
      const double loss =
          objective.evaluate(run.params, &grad, config.edge_gradients);
      if (run.history.empty() || loss < run.history.back()) {
        run.best = run.params;
        run.history.push_back(loss);
      } else {
        run.history.push_back(run.history.back());
      }
      if (it + 1 < config.iterations) run.adam.step(run.params, grad);
    }
  };

  parallel_for(total, config.threads, make_objective,
               [&](std::size_t r, ArticulationObjective& objective) {
                 advance(runs[r], objective, 0, config.warmup_iterations);
               });

  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return runs[a].history.back() < runs[b].history.back();
  });
  order.resize(std::min<std::size_t>(order.size(),
                                     static_cast<std::size_t>(config.finalists)));
  std::sort(order.begin(), order.end());

  parallel_for(order.size(), config.threads, make_objective,
               [&](std::size_t k, ArticulationObjective& objective) {
                 advance(runs[order[k]], objective, config.warmup_iterations,
                         config.iterations);
               });

  std::size_t best = order.front();
  for (std::size_t r : order) {
    if (runs[r].history.back() < runs[best].history.back()) best = r;
  }

  OptimResult result;
  result.joint = runs[best].best.joint;
  result.mlp = runs[best].best.mlp;
  result.profile = motion_profile(result.mlp, n);
  result.loss_history = runs[best].history;
  result.final_loss = result.loss_history.back();
  result.restart_index = static_cast<int>(best);
  canonicalize(result);
  return result;
}

std::pair<OptimResult, JointType> select_joint_type(
    const TriMesh& base, const TriMesh& movable, std::span<const Image> frames,
    const Camera& camera, const OptimConfig& config) {
  OptimResult prismatic =
      estimate_joint(base, movable, frames, camera, JointType::kPrismatic, config);
  OptimResult revolute =
      estimate_joint(base, movable, frames, camera, JointType::kRevolute, config);
  if (revolute.final_loss < prismatic.final_loss) {
    return {std::move(revolute), JointType::kRevolute};
  }
  return {std::move(prismatic), JointType::kPrismatic};
}

}  // namespace artic
