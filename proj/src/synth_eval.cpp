#include "artic/synth_eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "artic/part_segmentation.hpp"
#include "artic/serialization.hpp"
#include "artic/soft_renderer.hpp"

namespace artic {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

const Vec3 kLight = Vec3(0.35, 0.85, 0.55).normalized();

// Axis-aligned box split into a k x k grid on each side, with flat shading and
// a faint checker so interior edges are visible.
void add_box(TriMesh& mesh, const Vec3& lo, const Vec3& hi, const Rgb& albedo,
             int k) {
  for (int axis = 0; axis < 3; ++axis) {
    const int u = (axis + 1) % 3;
    const int v = (axis + 2) % 3;
    for (int side = 0; side < 2; ++side) {
      Vec3 normal = Vec3::Zero();
      normal[axis] = side == 0 ? -1.0 : 1.0;
      const double shade = 0.45 + 0.55 * std::max(0.0, normal.dot(kLight));
      const auto base = static_cast<std::uint32_t>(mesh.vertices.size());
      for (int j = 0; j <= k; ++j) {
        for (int i = 0; i <= k; ++i) {
          Vec3 p;
          p[axis] = side == 0 ? lo[axis] : hi[axis];
          p[u] = lo[u] + (hi[u] - lo[u]) * i / k;
          p[v] = lo[v] + (hi[v] - lo[v]) * j / k;
          mesh.vertices.push_back(p);
        }
      }
      const auto id = [&](int i, int j) {
        return base + static_cast<std::uint32_t>(j * (k + 1) + i);
      };
      for (int j = 0; j < k; ++j) {
        for (int i = 0; i < k; ++i) {
          const double checker = (i + j) % 2 == 0 ? 1.0 : 0.82;
          const Rgb c = (albedo * shade * checker).cwiseMin(1.0);
          // Counter-clockwise seen from outside.
          if (side == 1) {
            mesh.faces.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
            mesh.faces.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
          } else {
            mesh.faces.push_back({id(i, j), id(i + 1, j + 1), id(i + 1, j)});
            mesh.faces.push_back({id(i, j), id(i, j + 1), id(i + 1, j + 1)});
          }
          mesh.face_colors.push_back(c);
          mesh.face_colors.push_back(c);
        }
      }
    }
  }
}

Rgb random_albedo(Rng& rng, double lo, double hi) {
  return {rng.uniform(lo, hi), rng.uniform(lo, hi), rng.uniform(lo, hi)};
}

Camera look_at(const Vec3& eye, const Vec3& target, double fov_deg,
               int resolution) {
  const Vec3 forward = (target - eye).normalized();
  const Vec3 right = forward.cross(Vec3::UnitY()).normalized();
  const Vec3 down = forward.cross(right);
  RigidTransform pose;
  pose.rotation.row(0) = right;
  pose.rotation.row(1) = down;
  pose.rotation.row(2) = forward;
  pose.translation = -(pose.rotation * eye);
  const double f = 0.5 * resolution / std::tan(0.5 * fov_deg * kDeg);
  const double c = 0.5 * resolution;
  return Camera({f, f}, {c, c}, pose, resolution, resolution);
}

// Applies the sign rule of a hint: positive theta moves the movable center
// along `outward`.
JointSpec orient(const JointSpec& joint, const Vec3& outward, const Vec3& center) {
  JointSpec j = joint;
  const Vec3 moved = joint_transform(j, 1e-3).apply(center);
  if ((moved - center).dot(outward) < 0.0) j.axis_dir = -j.axis_dir;
  return j;
}

std::vector<AxisHint> default_hints(JointType type, const Bounds& box) {
  std::vector<AxisHint> hints;
  if (type == JointType::kPrismatic) {
    for (int axis = 0; axis < 3; ++axis) {
      for (double s : {-1.0, 1.0}) {
        AxisHint h;
        h.joint.type = type;
        h.joint.axis_pos = box.center();
        h.joint.axis_dir = Vec3::Unit(axis) * s;
        h.outward = h.joint.axis_dir;
        hints.push_back(h);
      }
    }
    return hints;
  }
  for (int axis = 0; axis < 3; ++axis) {
    const int u = (axis + 1) % 3;
    const int v = (axis + 2) % 3;
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) {
        AxisHint h;
        h.joint.type = type;
        h.joint.axis_dir = Vec3::Unit(axis);
        h.joint.axis_pos = box.center();
        h.joint.axis_pos[u] = a == 0 ? box.min[u] : box.max[u];
        h.joint.axis_pos[v] = b == 0 ? box.min[v] : box.max[v];
        h.outward = Vec3::Zero();
        hints.push_back(h);
      }
    }
  }
  return hints;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

std::vector<double> luminance(const Image& img) {
  std::vector<double> y(img.pixel_count());
  if (img.channels() == 1) return img.data();
  if (img.channels() != 3) {
    fail(ErrorCode::kInvalidArgument, "luminance needs 1 or 3 channels");
  }
  for (std::size_t p = 0; p < y.size(); ++p) {
    const double* px = img.data().data() + p * 3;
    y[p] = 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2];
  }
  return y;
}

}  // namespace

ArticulatedAsset make_asset(Rng& rng, JointType type, int resolution) {
  const double w = rng.uniform(0.8, 1.2);
  const double h = rng.uniform(0.8, 1.3);
  const double d = rng.uniform(0.5, 0.8);
  const double zf = 0.5 * d;
  const Rgb body = random_albedo(rng, 0.35, 0.75);
  Rgb part = random_albedo(rng, 0.35, 0.9);
  if ((part - body).norm() < 0.25) part = (Rgb::Ones() - body).cwiseMax(0.2);
  const int k = 4;

  ArticulatedAsset asset{"", {}, {}, Camera({1, 1}, {0, 0}, {}, 1, 1), {}};
  AxisHint hint;
  hint.joint.type = type;
  const double variant = rng.uniform();

  if (type == JointType::kPrismatic) {
    add_box(asset.base, Vec3(-0.5 * w, 0.0, -zf), Vec3(0.5 * w, h, zf), body, k);
    if (variant < 0.6) {
      asset.kind = "drawer";
      const int rows = 2 + static_cast<int>(rng.index(2));
      const int row = static_cast<int>(rng.index(static_cast<std::uint64_t>(rows)));
      const double m = 0.05;
      const double band = (h - 2 * m) / rows;
      const double y0 = m + band * row + 0.02;
      const double y1 = m + band * (row + 1) - 0.02;
      add_box(asset.movable, Vec3(-0.5 * w + m, y0, zf - 0.8 * d),
              Vec3(0.5 * w - m, y1, zf + 0.04), part, k);
      hint.joint.axis_dir = Vec3::UnitZ();
      hint.outward = Vec3::UnitZ();
    } else {
      asset.kind = "slider";
      const bool left = rng.uniform() < 0.5;
      const double m = 0.04;
      const double x0 = left ? -0.5 * w + m : 0.0;
      const double x1 = left ? 0.0 : 0.5 * w - m;
      add_box(asset.movable, Vec3(x0, m, zf + 0.01), Vec3(x1, h - m, zf + 0.04),
              part, k);
      hint.joint.axis_dir = left ? Vec3::UnitX() : Vec3(-Vec3::UnitX());
      hint.outward = hint.joint.axis_dir;
    }
    hint.joint.axis_pos = bounding_box(asset.movable).center();
  } else if (variant < 0.5) {
    asset.kind = "door";
    add_box(asset.base, Vec3(-0.5 * w, 0.0, -zf), Vec3(0.5 * w, h, zf), body, k);
    const double m = 0.03;
    const double z0 = zf + 0.005;
    add_box(asset.movable, Vec3(-0.5 * w + m, m, z0), Vec3(0.5 * w - m, h - m, z0 + 0.04),
            part, k);
    const bool left = rng.uniform() < 0.5;
    hint.joint.axis_dir = Vec3::UnitY();
    hint.joint.axis_pos = Vec3(left ? -0.5 * w + m : 0.5 * w - m, 0.5 * h, z0);
    hint.outward = Vec3::UnitZ();
  } else if (variant < 0.8) {
    asset.kind = "lid";
    add_box(asset.base, Vec3(-0.5 * w, 0.0, -zf), Vec3(0.5 * w, h, zf), body, k);
    add_box(asset.movable, Vec3(-0.5 * w, h, -zf), Vec3(0.5 * w, h + 0.05, zf), part, k);
    hint.joint.axis_dir = Vec3::UnitX();
    hint.joint.axis_pos = Vec3(0.0, h, -zf);
    hint.outward = Vec3::UnitY();
  } else {
    asset.kind = "flap";
    add_box(asset.base, Vec3(-0.5 * w, 0.0, -zf), Vec3(0.5 * w, h, zf), body, k);
    const double m = 0.03;
    const double z0 = zf + 0.005;
    const double y1 = h - m;
    const double y0 = std::max(m, y1 - rng.uniform(0.35, 0.6) * h);
    add_box(asset.movable, Vec3(-0.5 * w + m, y0, z0), Vec3(0.5 * w - m, y1, z0 + 0.04),
            part, k);
    hint.joint.axis_dir = Vec3::UnitX();
    hint.joint.axis_pos = Vec3(0.0, y0, z0);
    hint.outward = Vec3::UnitZ();
  }
  asset.hints.push_back(hint);

  const Bounds box = bounding_box(merge_meshes(asset.base, asset.movable));
  const double radius = 0.5 * box.extent().norm();
  const double azimuth = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(20.0, 45.0);
  const double elevation = rng.uniform(18.0, 35.0);
  const double fov = 40.0;
  const double dist = 1.6 * radius / std::sin(0.5 * fov * kDeg);
  const Vec3 dir(std::sin(azimuth * kDeg) * std::cos(elevation * kDeg),
                 std::sin(elevation * kDeg),
                 std::cos(azimuth * kDeg) * std::cos(elevation * kDeg));
  const Vec3 target = box.center() + Vec3(0.0, 0.0, 0.1 * d);
  asset.camera = look_at(target + dist * dir, target, fov, resolution);
  return asset;
}

std::vector<double> motion_schedule(double theta_end, int n, bool smoothstep) {
  if (n < 1) fail(ErrorCode::kInvalidArgument, "schedule needs at least 1 frame");
  std::vector<double> thetas(static_cast<std::size_t>(n), 0.0);
  if (n == 1) return thetas;
  for (int t = 1; t < n; ++t) {
    const double s = static_cast<double>(t) / (n - 1);
    const double e = smoothstep ? s * s * (3.0 - 2.0 * s) : s;
    thetas[static_cast<std::size_t>(t)] = t == n - 1 ? theta_end : theta_end * e;
  }
  return thetas;
}

GroundTruthArticulation sample_articulation(Rng& rng, JointType type,
                                            const ArticulatedAsset& asset,
                                            const SynthConfig& config) {
  if (config.frames < 2) fail(ErrorCode::kInvalidArgument, "need at least 2 frames");
  const Bounds box = bounding_box(asset.movable);
  std::vector<AxisHint> hints;
  for (const auto& h : asset.hints) {
    if (h.joint.type == type) hints.push_back(h);
  }
  if (hints.empty()) hints = default_hints(type, box);
  const AxisHint& hint = hints[rng.index(hints.size())];

  JointSpec joint = hint.joint;
  double sign = 1.0;
  if (hint.outward.squaredNorm() > 0.0) {
    joint = orient(joint, hint.outward, box.center());
  } else {
    sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
  }
  double magnitude = 0.0;
  if (type == JointType::kRevolute) {
    magnitude = rng.uniform(config.min_revolute_deg, config.max_revolute_deg) * kDeg;
  } else {
    const double extent = std::abs(box.extent().dot(joint.axis_dir));
    magnitude = extent * rng.uniform(config.min_prismatic_fraction,
                                     config.max_prismatic_fraction);
  }
  GroundTruthArticulation gt{joint,
                             motion_schedule(sign * magnitude, config.frames,
                                             config.smoothstep),
                             asset.base, asset.movable, asset.camera};
  return gt;
}

std::vector<Image> render_articulation(const TriMesh& base,
                                       const TriMesh& movable,
                                       const Camera& camera,
                                       const JointSpec& joint,
                                       std::span<const double> thetas,
                                       const Rgb& background) {
  const RenderTarget base_target = rasterize(base, camera, background);
  std::vector<Image> frames;
  frames.reserve(thetas.size());
  for (double theta : thetas) {
    const TriMesh posed = deform_mesh(movable, joint_transform(joint, theta));
    frames.push_back(
        soft_blend(rasterize(posed, camera, background), base_target, kDefaultBeta)
            .image);
  }
  return frames;
}

std::vector<Image> render_sequence(const GroundTruthArticulation& gt,
                                   const Rgb& background) {
  return render_articulation(gt.base, gt.movable, gt.camera, gt.joint, gt.thetas,
                             background);
}

AxisErrors axis_errors(const JointSpec& est, const JointSpec& gt,
                       double bbox_diag) {
  if (est.type != gt.type) {
    fail(ErrorCode::kInvalidArgument, "axis_errors needs matching joint types");
  }
  if (!(bbox_diag > 0.0)) fail(ErrorCode::kInvalidArgument, "bbox_diag must be positive");
  const Vec3 a = est.axis_dir.normalized();
  const Vec3 b = gt.axis_dir.normalized();
  AxisErrors e;
  e.angle_deg = std::acos(std::clamp(std::abs(a.dot(b)), 0.0, 1.0)) / kDeg;
  if (gt.type == JointType::kRevolute) {
    const Vec3 r = est.axis_pos - gt.axis_pos;
    e.position = (r - r.dot(b) * b).norm() / bbox_diag;
  }
  return e;
}

double motion_rmse(std::span<const double> est, std::span<const double> gt) {
  if (est.size() != gt.size() || gt.empty()) {
    fail(ErrorCode::kInvalidArgument, "motion profiles differ in length");
  }
  double range = 0.0;
  for (double g : gt) range = std::max(range, std::abs(g));
  if (range == 0.0) {
    for (double e : est) {
      if (e != 0.0) {
        fail(ErrorCode::kInvalidArgument, "ground truth has zero motion range");
      }
    }
    return 0.0;
  }
  double best = INFINITY;
  for (double sign : {1.0, -1.0}) {
    double s = 0.0;
    for (std::size_t i = 0; i < gt.size(); ++i) {
      const double d = est[i] - sign * gt[i];
      s += d * d;
    }
    best = std::min(best, std::sqrt(s / static_cast<double>(gt.size())));
  }
  return best / range;
}

double psnr(const Image& pred, const Image& ref) {
  if (!pred.same_shape(ref)) fail(ErrorCode::kInvalidArgument, "PSNR inputs differ in shape");
  if (pred.data().empty()) fail(ErrorCode::kInvalidArgument, "PSNR of an empty image");
  double mse = 0.0;
  for (std::size_t i = 0; i < pred.data().size(); ++i) {
    const double d = pred.data()[i] - ref.data()[i];
    mse += d * d;
  }
  mse /= static_cast<double>(pred.data().size());
  if (mse < 1e-10) return 99.0;
  return std::min(99.0, 10.0 * std::log10(1.0 / mse));
}

double ssim(const Image& pred, const Image& ref) {
  if (!pred.same_shape(ref)) fail(ErrorCode::kInvalidArgument, "SSIM inputs differ in shape");
  constexpr int kWin = 8;
  const int wx = pred.width() / kWin;
  const int wy = pred.height() / kWin;
  if (wx == 0 || wy == 0) {
    fail(ErrorCode::kInvalidArgument, "image smaller than one SSIM window");
  }
  const std::vector<double> x = luminance(pred);
  const std::vector<double> y = luminance(ref);
  constexpr double c1 = 0.01 * 0.01;
  constexpr double c2 = 0.03 * 0.03;
  constexpr double n = kWin * kWin;
  double total = 0.0;
  for (int by = 0; by < wy; ++by) {
    for (int bx = 0; bx < wx; ++bx) {
      double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
      for (int j = 0; j < kWin; ++j) {
        for (int i = 0; i < kWin; ++i) {
          const std::size_t p = static_cast<std::size_t>(by * kWin + j) *
                                    static_cast<std::size_t>(pred.width()) +
                                static_cast<std::size_t>(bx * kWin + i);
          sx += x[p];
          sy += y[p];
          sxx += x[p] * x[p];
          syy += y[p] * y[p];
          sxy += x[p] * y[p];
        }
      }
      const double mx = sx / n;
      const double my = sy / n;
      const double vx = std::max(0.0, sxx / n - mx * mx);
      const double vy = std::max(0.0, syy / n - my * my);
      const double cxy = sxy / n - mx * my;
      total += ((2 * mx * my + c1) * (2 * cxy + c2)) /
               ((mx * mx + my * my + c1) * (vx + vy + c2));
    }
  }
  return total / (wx * wy);
}

// ---------------------------------------------------------------------------

void write_scene(const GroundTruthArticulation& gt, const std::string& kind,
                 const std::filesystem::path& dir, const Rgb& background,
                 std::uint64_t feature_seed) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "frames");
  save_mesh(gt.base, dir / "base.obj");
  save_mesh(gt.movable, dir / "movable.obj");
  save_camera(gt.camera, dir / "camera.json");
  save_joint({gt.joint, gt.thetas}, dir / "gt.json");

  const std::vector<Image> frames = render_sequence(gt, background);
  char name[32];
  for (std::size_t t = 0; t < frames.size(); ++t) {
    std::snprintf(name, sizeof(name), "frame_%03zu.ppm", t + 1);
    save_image(frames[t], dir / "frames" / name);
  }

  const TriMesh whole = merge_meshes(gt.base, gt.movable);
  save_mesh(whole, dir / "whole.obj");

  const RenderTarget mov = rasterize(gt.movable, gt.camera, background);
  const RenderTarget base = rasterize(gt.base, gt.camera, background);
  Image mask(gt.camera.width(), gt.camera.height(), 1);
  for (std::size_t p = 0; p < mask.pixel_count(); ++p) {
    mask.data()[p] = mov.covered(p) && mov.proximity[p] >= base.proximity[p] ? 1.0 : 0.0;
  }
  save_image(mask, dir / "mask.pgm");

  // Stand-in for learned per-face features: one well-separated cluster per part.
  Rng rng(feature_seed);
  constexpr std::size_t kDim = 8;
  std::array<std::vector<double>, 2> centers;
  for (auto& c : centers) {
    c.resize(kDim);
    for (double& v : c) v = rng.normal();
  }
  std::vector<double> values;
  values.reserve(whole.faces.size() * kDim);
  for (std::size_t f = 0; f < whole.faces.size(); ++f) {
    const auto& c = centers[f < gt.base.faces.size() ? 0 : 1];
    for (std::size_t k = 0; k < kDim; ++k) values.push_back(c[k] + 0.05 * rng.normal());
  }
  save_features(FaceFeatureSet(kDim, std::move(values)), dir / "features.bin");

  nlohmann::json info;
  info["kind"] = kind;
  info["type"] = to_string(gt.joint.type);
  info["frames"] = gt.thetas.size();
  info["resolution"] = {gt.camera.width(), gt.camera.height()};
  write_text_file(dir / "scene.json", info.dump(2) + "\n");
}

GroundTruthArticulation load_scene(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    fail(ErrorCode::kIo, "scene directory not found: " + dir.string());
  }
  TriMesh base = load_mesh(dir / "base.obj");
  TriMesh movable = load_mesh(dir / "movable.obj");
  base.validate();
  movable.validate();
  if (base.faces.empty() || movable.faces.empty()) {
    fail(ErrorCode::kValidation, "scene parts must not be empty");
  }
  const Camera camera = load_camera(dir / "camera.json");
  const JointRecord record = load_joint(dir / "gt.json");
  if (record.thetas.size() < 2) {
    fail(ErrorCode::kValidation, "ground truth needs at least 2 thetas");
  }
  return {record.joint, record.thetas, std::move(base), std::move(movable), camera};
}

std::vector<Image> load_frames(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    fail(ErrorCode::kIo, "frames directory not found: " + dir.string());
  }
  std::vector<std::filesystem::path> paths;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_regular_file() && name.rfind("frame_", 0) == 0 &&
        entry.path().extension() == ".ppm") {
      paths.push_back(entry.path());
    }
  }
  std::sort(paths.begin(), paths.end());
  std::vector<Image> frames;
  for (const auto& p : paths) frames.push_back(load_image(p));
  return frames;
}

EvalReport evaluate_scene(const GroundTruthArticulation& gt,
                          const std::string& name,
                          const BenchmarkConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  EvalReport r;
  r.scene = name;
  r.gt_type = gt.joint.type;
  const std::vector<Image> frames = render_sequence(gt, config.background);

  OptimConfig optim = config.optim;
  optim.background = config.background;
  if (config.seed_with_gt) {
    optim.initial_guesses.insert(optim.initial_guesses.begin(),
                                 InitialGuess{gt.joint, gt.thetas});
  }
  auto [result, type] = select_joint_type(gt.base, gt.movable, frames, gt.camera, optim);
  r.est_type = type;
  r.type_correct = type == gt.joint.type;
  r.final_loss = result.final_loss;

  JointSpec compared = result.joint;
  compared.type = gt.joint.type;
  const double diag = bbox_diagonal(merge_meshes(gt.base, gt.movable));
  const AxisErrors e = axis_errors(compared, gt.joint, diag);
  r.axis_angle_error = e.angle_deg;
  r.axis_position_error = e.position;
  r.motion_rmse = motion_rmse(result.profile.thetas, gt.thetas);

  const std::vector<Image> rendered =
      render_articulation(gt.base, gt.movable, gt.camera, result.joint,
                          result.profile.thetas, config.background);
  double p = 0.0;
  double s = 0.0;
  for (std::size_t t = 0; t < frames.size(); ++t) {
    p += psnr(rendered[t], frames[t]);
    s += ssim(rendered[t], frames[t]);
  }
  r.psnr = p / static_cast<double>(frames.size());
  r.ssim = s / static_cast<double>(frames.size());
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

BenchmarkSummary summarize(std::vector<EvalReport> reports) {
  BenchmarkSummary s;
  std::vector<double> angle, position, rmse, ps, ss;
  int correct = 0;
  for (const auto& r : reports) {
    if (r.failed) {
      ++s.failed;
      continue;
    }
    ++s.scored;
    correct += r.type_correct;
    angle.push_back(r.axis_angle_error);
    if (r.gt_type == JointType::kRevolute) position.push_back(r.axis_position_error);
    rmse.push_back(r.motion_rmse);
    ps.push_back(r.psnr);
    ss.push_back(r.ssim);
  }
  s.median_axis_angle = median(angle);
  s.median_axis_position = median(position);
  s.median_motion_rmse = median(rmse);
  s.median_psnr = median(ps);
  s.median_ssim = median(ss);
  s.mean_axis_angle = mean(angle);
  s.mean_motion_rmse = mean(rmse);
  s.mean_psnr = mean(ps);
  s.mean_ssim = mean(ss);
  s.type_accuracy = reports.empty() ? 0.0 : static_cast<double>(correct) / reports.size();
  s.reports = std::move(reports);
  return s;
}

BenchmarkSummary run_benchmark(const std::filesystem::path& scene_dir,
                               const BenchmarkConfig& config) {
  if (!std::filesystem::is_directory(scene_dir)) {
    fail(ErrorCode::kIo, "scene directory not found: " + scene_dir.string());
  }
  std::vector<std::filesystem::path> scenes;
  for (const auto& entry : std::filesystem::directory_iterator(scene_dir)) {
    if (entry.is_directory()) scenes.push_back(entry.path());
  }
  std::sort(scenes.begin(), scenes.end());
  std::vector<EvalReport> reports;
  for (const auto& dir : scenes) {
    const std::string name = dir.filename().string();
    try {
      reports.push_back(evaluate_scene(load_scene(dir), name, config));
    } catch (const std::exception& e) {
      EvalReport r;
      r.scene = name;
      r.failed = true;
      r.error = e.what();
      reports.push_back(r);
    }
  }
  return summarize(std::move(reports));
}

std::string report_csv(const BenchmarkSummary& summary) {
  std::ostringstream out;
  out << "scene,status,gt_type,est_type,type_correct,axis_angle_error,"
         "axis_position_error,motion_rmse,psnr,ssim,final_loss\n";
  char buf[256];
  for (const auto& r : summary.reports) {
    if (r.failed) {
      out << r.scene << ",failed,,,,,,,,,\n";
      continue;
    }
    std::snprintf(buf, sizeof(buf), "%.6f,%.6f,%.6f,%.4f,%.6f,%.9g",
                  r.axis_angle_error, r.axis_position_error, r.motion_rmse,
                  r.psnr, r.ssim, r.final_loss);
    out << r.scene << ",ok," << to_string(r.gt_type) << ','
        << to_string(r.est_type) << ',' << (r.type_correct ? 1 : 0) << ','
        << buf << '\n';
  }
  return out.str();
}

std::string summary_text(const BenchmarkSummary& summary) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "scenes: %zu scored: %d failed: %d\n"
                "median axis angle error (deg): %.4f\n"
                "median axis position error (revolute, frac diag): %.4f\n"
                "median motion rmse (frac range): %.4f\n"
                "median psnr (dB): %.3f\n"
                "median ssim: %.4f\n"
                "type accuracy: %.3f\n",
                summary.reports.size(), summary.scored, summary.failed,
                summary.median_axis_angle, summary.median_axis_position,
                summary.median_motion_rmse, summary.median_psnr,
                summary.median_ssim, summary.type_accuracy);
  return buf;
}

}  // namespace artic
