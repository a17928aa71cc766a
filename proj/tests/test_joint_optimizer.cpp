#include <gtest/gtest.h>

#include "artic/joint_optimizer.hpp"
#include "artic/synth_eval.hpp"
#include "test_util.hpp"

using namespace artic;

namespace {

const Rgb kWhite(1, 1, 1);

OptimConfig small_config() {
  OptimConfig c;
  c.restarts = 8;
  c.iterations = 300;
  c.warmup_iterations = 40;
  c.seed = 3;
  return c;
}

// Synthetic scene of a given template kind, rendered at low resolution.
GroundTruthArticulation find_scene(const std::string& kind, JointType type, int seed,
                                   int resolution = 96, int frames = 8) {
  for (int s = seed;; ++s) {
    Rng rng = Rng::stream(7, "t", static_cast<std::uint64_t>(s));
    const ArticulatedAsset asset = make_asset(rng, type, resolution);
    if (asset.kind != kind) continue;
    SynthConfig sc;
    sc.frames = frames;
    sc.resolution = resolution;
    return sample_articulation(rng, type, asset, sc);
  }
}

// Movable plane covering the whole view slightly in front of a base plane;
// small motions keep full coverage so the gradient is smooth.
struct PlaneScene {
  TriMesh base = test::quad(-4, -4, 4, 4, 2.008, Rgb(0.5, 0.5, 0.5));
  TriMesh movable = test::quad(-4, -4, 4, 4, 2.0, Rgb(0.9, 0.8, 0.7));
  Camera camera = test::simple_camera(32, 40.0);
  std::vector<Image> frames;

  explicit PlaneScene(Rng& rng) {
    for (auto& v : movable.vertices) v.z() = 2.0 + 0.005 * v.x() - 0.004 * v.y();
    movable.face_colors[1] = Rgb(0.8, 0.9, 0.6);
    for (int f = 0; f < 4; ++f) {
      Image img(32, 32, 3);
      for (std::size_t p = 0; p < img.pixel_count(); ++p) {
        img.data()[p * 3 + 0] = 0.0;
        img.data()[p * 3 + 1] = 1.0;
        img.data()[p * 3 + 2] = rng.uniform() < 0.5 ? 0.0 : 1.0;
      }
      frames.push_back(std::move(img));
    }
  }
};

JointParameters plane_params(Rng& rng, JointType type) {
  JointParameters p;
  p.joint.type = type;
  if (type == JointType::kPrismatic) {
    p.joint.axis_dir = Vec3(rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3), 1.0).normalized();
    p.joint.axis_pos = Vec3(rng.normal(), rng.normal(), 2.0);
  } else {
    p.joint.axis_dir = Vec3(rng.uniform(-0.2, 0.2), 1.0, rng.uniform(-0.2, 0.2)).normalized();
    p.joint.axis_pos = Vec3(rng.uniform(-0.5, 0.5), 0.0, 2.0 + rng.uniform(-0.01, 0.01));
  }
  p.mlp = MotionMLP::random(rng, type == JointType::kRevolute ? MotionOutput::kBoundedPi
                                                               : MotionOutput::kLinear);
  for (double& w : p.mlp.parameters()) w *= 0.2;
  return p;
}

bool same_result(const OptimResult& a, const OptimResult& b) {
  return a.joint.axis_dir == b.joint.axis_dir && a.joint.axis_pos == b.joint.axis_pos &&
         a.profile.thetas == b.profile.thetas && a.loss_history == b.loss_history &&
         a.final_loss == b.final_loss && a.restart_index == b.restart_index &&
         std::equal(a.mlp.parameters().begin(), a.mlp.parameters().end(),
                    b.mlp.parameters().begin());
}

}  // namespace

TEST(OptimConfig, Validation) {
  EXPECT_NO_THROW(OptimConfig{}.validate());
  OptimConfig c;
  c.restarts = 0;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.lr_mlp = 0.0;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.iterations = 10;
  c.warmup_iterations = 20;
  EXPECT_THROW(c.validate(), Error);
}

TEST(AdamStep, ZeroGradientLeavesParametersUnchanged) {
  std::vector<double> p{0.5, -1.0, 2.0};
  const std::vector<double> before = p;
  AdamState s;
  for (int i = 0; i < 10; ++i) adam_step(p, std::vector<double>(3, 0.0), s, 1e-2, 0.9, 0.999, 1e-8);
  EXPECT_EQ(p, before);
}

TEST(AdamStep, ConstantGradientStepApproachesLearningRate) {
  std::vector<double> p{0.0, 0.0};
  const std::vector<double> g{3.0, -0.02};
  AdamState s;
  std::vector<double> prev = p;
  for (int i = 0; i < 500; ++i) {
    prev = p;
    adam_step(p, g, s, 1e-3, 0.9, 0.999, 1e-8);
  }
  EXPECT_NEAR(p[0] - prev[0], -1e-3, 1e-8);
  EXPECT_NEAR(p[1] - prev[1], 1e-3, 1e-6);
}

TEST(AdamStep, Errors) {
  std::vector<double> p{0.0, 0.0};
  AdamState s;
  try {
    adam_step(p, std::vector<double>{1.0, std::nan("")}, s, 1e-3, 0.9, 0.999, 1e-8);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNumeric);
  }
  EXPECT_THROW(adam_step(p, std::vector<double>{1.0}, s, 1e-3, 0.9, 0.999, 1e-8), Error);
}

TEST(JointAdam, DirectionStaysUnit) {
  Rng rng(4);
  OptimConfig config;
  config.lr_axis_dir = 0.3;
  JointAdam adam(config);
  JointParameters p = plane_params(rng, JointType::kRevolute);
  for (int i = 0; i < 200; ++i) {
    JointGradient g;
    g.axis_dir = Vec3(rng.normal(), rng.normal(), rng.normal());
    g.axis_pos = Vec3(rng.normal(), rng.normal(), rng.normal());
    g.mlp.assign(MotionMLP::parameter_count(), rng.normal());
    adam.step(p, g);
    EXPECT_NEAR(p.joint.axis_dir.norm(), 1.0, 1e-12);
  }
}

TEST(InitRestart, DeterministicAndPrismaticCentered) {
  const Bounds box{Vec3(-1, 0, 2), Vec3(1, 3, 2.5)};
  for (JointType type : {JointType::kPrismatic, JointType::kRevolute}) {
    Rng a(9);
    Rng b(9);
    const JointParameters pa = init_restart(a, type, box);
    const JointParameters pb = init_restart(b, type, box);
    EXPECT_EQ(pa.joint.axis_dir, pb.joint.axis_dir);
    EXPECT_EQ(pa.joint.axis_pos, pb.joint.axis_pos);
    EXPECT_TRUE(std::equal(pa.mlp.parameters().begin(), pa.mlp.parameters().end(),
                           pb.mlp.parameters().begin()));
  }
  Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    const JointParameters p = init_restart(rng, JointType::kPrismatic, box);
    EXPECT_EQ(p.joint.axis_pos, box.center());
    EXPECT_EQ(p.mlp.output(), MotionOutput::kLinear);
    const JointParameters r = init_restart(rng, JointType::kRevolute, box);
    EXPECT_EQ(r.mlp.output(), MotionOutput::kBoundedPi);
    for (int k = 0; k < 3; ++k) {
      EXPECT_GE(r.joint.axis_pos[k], box.min[k]);
      EXPECT_LE(r.joint.axis_pos[k], box.max[k]);
    }
  }
}

TEST(InitRestart, DirectionsUniformOnSphere) {
  Rng rng(2024);
  const Bounds box{Vec3::Zero(), Vec3::Ones()};
  Vec3 mean = Vec3::Zero();
  double norm = 0.0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const Vec3 d = init_restart(rng, JointType::kRevolute, box).joint.axis_dir;
    mean += d;
    norm += d.norm();
  }
  mean /= n;
  EXPECT_NEAR(norm / n, 1.0, 1e-12);
  for (int k = 0; k < 3; ++k) EXPECT_LT(std::abs(mean[k]), 0.05);
}

TEST(ArticulationObjective, Preconditions) {
  Rng rng(1);
  PlaneScene s(rng);
  const OptimConfig config;
  EXPECT_THROW(ArticulationObjective(s.base, s.movable, std::span(s.frames).first(1), s.camera,
                                     config),
               Error);
  std::vector<Image> wrong = s.frames;
  wrong[2] = Image(16, 16, 3);
  EXPECT_THROW(ArticulationObjective(s.base, s.movable, wrong, s.camera, config), Error);
  OptimConfig bad = config;
  bad.supervised_frames = {0};
  EXPECT_THROW(ArticulationObjective(s.base, s.movable, s.frames, s.camera, bad), Error);
  bad.supervised_frames = {5};
  EXPECT_THROW(ArticulationObjective(s.base, s.movable, s.frames, s.camera, bad), Error);
  EXPECT_THROW(estimate_joint(s.base, s.movable, std::span(s.frames).first(1), s.camera,
                              JointType::kPrismatic, small_config()),
               Error);
}

TEST(ArticulationObjective, GradientMatchesCentralDifferences) {
  Rng rng(5);
  const double h = 1e-6;
  for (JointType type : {JointType::kPrismatic, JointType::kRevolute}) {
    for (int trial = 0; trial < 3; ++trial) {
      PlaneScene s(rng);
      ArticulationObjective obj(s.base, s.movable, s.frames, s.camera, OptimConfig{});
      const JointParameters p = plane_params(rng, type);
      JointGradient g;
      const double loss = obj.evaluate(p, &g, false);
      EXPECT_GT(loss, 0.0);
      std::vector<double> an;
      std::vector<double> fd;
      for (int k = 0; k < 3; ++k) {
        JointParameters up = p, down = p;
        up.joint.axis_pos[k] += h;
        down.joint.axis_pos[k] -= h;
        fd.push_back((obj.evaluate(up, nullptr, false) - obj.evaluate(down, nullptr, false)) / (2 * h));
        an.push_back(g.axis_pos[k]);
        up = p;
        down = p;
        up.joint.axis_dir[k] += h;
        down.joint.axis_dir[k] -= h;
        up.joint.axis_dir.normalize();
        down.joint.axis_dir.normalize();
        fd.push_back((obj.evaluate(up, nullptr, false) - obj.evaluate(down, nullptr, false)) / (2 * h));
        an.push_back(g.axis_dir[k]);
      }
      EXPECT_NEAR(g.axis_dir.dot(p.joint.axis_dir), 0.0, 1e-12);
      // A spread of network parameters from every layer.
      for (std::size_t i = 0; i < MotionMLP::parameter_count(); i += 97) {
        JointParameters up = p, down = p;
        up.mlp.parameters()[i] += h;
        down.mlp.parameters()[i] -= h;
        fd.push_back((obj.evaluate(up, nullptr, false) - obj.evaluate(down, nullptr, false)) / (2 * h));
        an.push_back(g.mlp[i]);
      }
      const Eigen::Map<Eigen::VectorXd> a(an.data(), static_cast<Eigen::Index>(an.size()));
      const Eigen::Map<Eigen::VectorXd> f(fd.data(), static_cast<Eigen::Index>(fd.size()));
      EXPECT_LT((a - f).norm() / f.norm(), 1e-3) << to_string(type);
    }
  }
}

TEST(ArticulationObjective, ThetaEvaluationMatchesNetworkEvaluation) {
  Rng rng(6);
  PlaneScene s(rng);
  ArticulationObjective obj(s.base, s.movable, s.frames, s.camera, OptimConfig{});
  const JointParameters p = plane_params(rng, JointType::kRevolute);
  const MotionProfile prof = motion_profile(p.mlp, 4);
  EXPECT_EQ(obj.evaluate_thetas(p.joint, prof.thetas), obj.evaluate(p, nullptr, false));
}

TEST(Canonicalize, PreservesPerFrameTransforms) {
  Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const JointType type = trial % 2 ? JointType::kRevolute : JointType::kPrismatic;
    OptimResult r;
    r.joint = test::random_joint(rng, type);
    r.mlp = MotionMLP::random(rng, type == JointType::kRevolute ? MotionOutput::kBoundedPi
                                                                : MotionOutput::kLinear);
    for (double& w : r.mlp.parameters()) w *= 5.0;
    r.profile = motion_profile(r.mlp, 9);
    const OptimResult before = r;
    canonicalize(r);
    Eigen::Index arg = 0;
    r.joint.axis_dir.cwiseAbs().maxCoeff(&arg);
    EXPECT_GT(r.joint.axis_dir[arg], 0.0);
    for (int t = 1; t <= 9; ++t) {
      EXPECT_EQ(r.profile.thetas[t - 1], motion_at(r.mlp, t, 9));
      const RigidTransform a = joint_transform(before.joint, before.profile.thetas[t - 1]);
      const RigidTransform b = joint_transform(r.joint, r.profile.thetas[t - 1]);
      EXPECT_LE((a.rotation - b.rotation).norm(), 1e-9);
      EXPECT_LE((a.translation - b.translation).norm(), 1e-9);
    }
  }
}

TEST(FitMotionMlp, ReproducesSchedule) {
  Rng rng(3);
  const std::vector<double> thetas = motion_schedule(1.2, 10, true);
  const MotionMLP mlp = fit_motion_mlp(thetas, MotionOutput::kBoundedPi, rng);
  for (int t = 1; t <= 10; ++t) EXPECT_NEAR(motion_at(mlp, t, 10), thetas[t - 1], 1e-9);
}

TEST(FitMotionMlp, LinearOutputInterpolates) {
  Rng rng(4);
  const std::vector<double> thetas{0.0, 0.3, -0.2, 0.9, 1.7};
  const MotionMLP mlp = fit_motion_mlp(thetas, MotionOutput::kLinear, rng);
  for (int t = 1; t <= 5; ++t) EXPECT_NEAR(motion_at(mlp, t, 5), thetas[t - 1], 1e-9);
}

TEST(EstimateJoint, HistoryIsRunningMinimum) {
  const GroundTruthArticulation gt = find_scene("drawer", JointType::kPrismatic, 1);
  const std::vector<Image> frames = render_sequence(gt, kWhite);
  OptimConfig config = small_config();
  config.restarts = 2;
  config.iterations = 60;
  config.warmup_iterations = 20;
  const OptimResult r =
      estimate_joint(gt.base, gt.movable, frames, gt.camera, JointType::kPrismatic, config);
  for (std::size_t i = 1; i < r.loss_history.size(); ++i) {
    EXPECT_LE(r.loss_history[i], r.loss_history[i - 1]);
  }
  ArticulationObjective objective(gt.base, gt.movable, frames, gt.camera, config);
  JointParameters p{r.joint, r.mlp};
  EXPECT_NEAR(objective.evaluate(p, nullptr, false), r.final_loss, 1e-12);
}

TEST(EstimateJoint, RecoversDrawer) {
  const GroundTruthArticulation gt = find_scene("drawer", JointType::kPrismatic, 1);
  const std::vector<Image> frames = render_sequence(gt, kWhite);
  OptimResult r =
      estimate_joint(gt.base, gt.movable, frames, gt.camera, JointType::kPrismatic, small_config());
  canonicalize(r);
  EXPECT_LT(axis_errors(r.joint, gt.joint, 1.0).angle_deg, 5.0);
  EXPECT_LT(motion_rmse(r.profile.thetas, gt.thetas), 0.05);
}

TEST(EstimateJoint, RecoversLid) {
  const GroundTruthArticulation gt = find_scene("lid", JointType::kRevolute, 29);
  const std::vector<Image> frames = render_sequence(gt, kWhite);
  OptimResult r =
      estimate_joint(gt.base, gt.movable, frames, gt.camera, JointType::kRevolute, small_config());
  canonicalize(r);
  EXPECT_LT(axis_errors(r.joint, gt.joint, 1.0).angle_deg, 5.0);
  EXPECT_LT(motion_rmse(r.profile.thetas, gt.thetas), 0.05);
}

TEST(EstimateJoint, ResultInvariants) {
  const GroundTruthArticulation gt = find_scene("drawer", JointType::kPrismatic, 1, 64, 5);
  const std::vector<Image> frames = render_sequence(gt, kWhite);
  OptimConfig config = small_config();
  config.iterations = 80;
  config.warmup_iterations = 20;
  config.restarts = 5;
  const OptimResult r =
      estimate_joint(gt.base, gt.movable, frames, gt.camera, JointType::kPrismatic, config);
  ASSERT_EQ(r.loss_history.size(), 80u);
  EXPECT_EQ(r.final_loss, r.loss_history.back());
  EXPECT_EQ(r.profile.thetas, motion_profile(r.mlp, 5).thetas);
  EXPECT_GE(r.restart_index, 0);
  EXPECT_LT(r.restart_index, 5);
  EXPECT_NEAR(r.joint.axis_dir.norm(), 1.0, 1e-12);

  // Finalist sets are nested, so keeping more can only lower the winner.
  double prev = std::numeric_limits<double>::infinity();
  for (int finalists : {1, 2, 5}) {
    config.finalists = finalists;
    const double loss =
        estimate_joint(gt.base, gt.movable, frames, gt.camera, JointType::kPrismatic, config)
            .final_loss;
    EXPECT_LE(loss, prev);
    prev = loss;
  }
}

TEST(EstimateJoint, DeterministicAcrossThreadCounts) {
  const GroundTruthArticulation gt = find_scene("lid", JointType::kRevolute, 29, 48, 4);
  const std::vector<Image> frames = render_sequence(gt, kWhite);
  OptimConfig config = small_config();
  config.iterations = 40;
  config.warmup_iterations = 10;
  config.restarts = 4;
  config.threads = 1;
  const OptimResult a =
      estimate_joint(gt.base, gt.movable, frames, gt.camera, JointType::kRevolute, config);
  const OptimResult b =
      estimate_joint(gt.base, gt.movable, frames, gt.camera, JointType::kRevolute, config);
  config.threads = 3;
  const OptimResult c =
      estimate_joint(gt.base, gt.movable, frames, gt.camera, JointType::kRevolute, config);
  EXPECT_TRUE(same_result(a, b));
  EXPECT_TRUE(same_result(a, c));
  config.seed = 4;
  const OptimResult d =
      estimate_joint(gt.base, gt.movable, frames, gt.camera, JointType::kRevolute, config);
  EXPECT_FALSE(same_result(a, d));
}

TEST(EstimateJoint, GroundTruthLossBelowRandomInitializations) {
  Rng rng(12);
  for (const auto& [kind, type] : {std::pair{"drawer", JointType::kPrismatic},
                                   std::pair{"door", JointType::kRevolute},
                                   std::pair{"lid", JointType::kRevolute}}) {
    const GroundTruthArticulation gt = find_scene(kind, type, 0, 64, 6);
    const std::vector<Image> frames = render_sequence(gt, kWhite);
    ArticulationObjective obj(gt.base, gt.movable, frames, gt.camera, OptimConfig{});
    const double at_gt = obj.evaluate_thetas(gt.joint, gt.thetas);
    EXPECT_LT(at_gt, 1e-9) << kind;
    const Bounds box = bounding_box(gt.movable);
    for (int i = 0; i < 30; ++i) {
      EXPECT_LE(at_gt, obj.evaluate(init_restart(rng, type, box), nullptr, false)) << kind;
    }
  }
}

TEST(EstimateJoint, ZeroMotionIsExplainedByZeroMotion) {
  GroundTruthArticulation gt = find_scene("drawer", JointType::kPrismatic, 1, 64, 6);
  std::fill(gt.thetas.begin(), gt.thetas.end(), 0.0);
  const std::vector<Image> frames = render_sequence(gt, kWhite);
  OptimConfig config = small_config();
  config.iterations = 200;
  const auto [r, type] = select_joint_type(gt.base, gt.movable, frames, gt.camera, config);
  const double diag = bbox_diagonal(merge_meshes(gt.base, gt.movable));
  double sq = 0.0;
  for (std::size_t t = 0; t < r.profile.thetas.size(); ++t) {
    const RigidTransform rt = joint_transform(r.joint, r.profile.thetas[t]);
    double worst = 0.0;
    for (const Vec3& v : gt.movable.vertices) worst = std::max(worst, (rt.apply(v) - v).norm());
    sq += worst * worst;
  }
  EXPECT_LT(std::sqrt(sq / static_cast<double>(r.profile.thetas.size())), 0.01 * diag)
      << to_string(type);
}

TEST(SelectJointType, PicksGroundTruthType) {
  const GroundTruthArticulation drawer = find_scene("drawer", JointType::kPrismatic, 1);
  const auto [rd, td] = select_joint_type(drawer.base, drawer.movable,
                                          render_sequence(drawer, kWhite), drawer.camera,
                                          small_config());
  EXPECT_EQ(td, JointType::kPrismatic);
  EXPECT_EQ(rd.joint.type, JointType::kPrismatic);
  const GroundTruthArticulation lid = find_scene("lid", JointType::kRevolute, 29);
  const auto [rl, tl] = select_joint_type(lid.base, lid.movable, render_sequence(lid, kWhite),
                                          lid.camera, small_config());
  EXPECT_EQ(tl, JointType::kRevolute);
  EXPECT_EQ(rl.joint.type, JointType::kRevolute);
}
