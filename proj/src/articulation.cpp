#include "artic/articulation.hpp"

#include <cmath>
#include <numbers>

namespace artic {
namespace {

using Vec4 = Eigen::Vector4d;
using Mat4 = Eigen::Matrix4d;
using Mat43 = Eigen::Matrix<double, 4, 3>;

// a ⊗ b = left(a) * b
Mat4 left_mul(const Quaternion& a) {
  Mat4 m;
  m << a.w, -a.x, -a.y, -a.z,
       a.x,  a.w, -a.z,  a.y,
       a.y,  a.z,  a.w, -a.x,
       a.z, -a.y,  a.x,  a.w;
  return m;
}

// a ⊗ b = right(b) * a
Mat4 right_mul(const Quaternion& b) {
  Mat4 m;
  m << b.w, -b.x, -b.y, -b.z,
       b.x,  b.w,  b.z, -b.y,
       b.y, -b.z,  b.w,  b.x,
       b.z,  b.y, -b.x,  b.w;
  return m;
}

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

Mat3 rotation_of(const Quaternion& q) {
  const Vec3 v = q.vec();
  return (q.w * q.w - v.dot(v)) * Mat3::Identity() + 2.0 * v * v.transpose() +
         2.0 * q.w * skew(v);
}

// dR/dq_k for the quadratic form used by rotation_of.
std::array<Mat3, 4> rotation_partials(const Quaternion& q) {
  const Vec3 v = q.vec();
  std::array<Mat3, 4> d;
  d[0] = 2.0 * q.w * Mat3::Identity() + 2.0 * skew(v);
  for (int k = 0; k < 3; ++k) {
    const Vec3 e = Vec3::Unit(k);
    d[k + 1] = -2.0 * v[k] * Mat3::Identity() +
               2.0 * (e * v.transpose() + v * e.transpose()) +
               2.0 * q.w * skew(e);
  }
  return d;
}

struct QuatParts {
  Quaternion real;
  Quaternion dual;
  Vec4 dreal_dtheta = Vec4::Zero();
  Mat43 dreal_ddir = Mat43::Zero();
  Vec4 ddual_dtheta = Vec4::Zero();
  Mat43 ddual_ddir = Mat43::Zero();
  Mat43 ddual_dpos = Mat43::Zero();
};

QuatParts joint_quaternions(const JointSpec& joint, double theta) {
  QuatParts out;
  const Vec3& dir = joint.axis_dir;
  Mat43 embed = Mat43::Zero();
  embed.bottomRows<3>() = Mat3::Identity();

  if (joint.type == JointType::kPrismatic) {
    const Quaternion t = Quaternion::pure(theta * dir);
    out.real = Quaternion{};
    out.dual = quat_mul(t, out.real) * 0.5;
    // dual = 0.5 * right(real) * T, with real constant
    const Mat4 r = right_mul(out.real);
    Vec4 dt_dtheta = Vec4::Zero();
    dt_dtheta.tail<3>() = dir;
    out.ddual_dtheta = 0.5 * r * dt_dtheta;
    out.ddual_ddir = 0.5 * r * (theta * embed);
    return out;
  }

  const double c = std::cos(0.5 * theta);
  const double s = std::sin(0.5 * theta);
  out.real = {c, s * dir.x(), s * dir.y(), s * dir.z()};
  const Quaternion t = Quaternion::pure(joint.axis_pos);
  out.dual = (quat_mul(t, out.real) - quat_mul(out.real, t)) * 0.5;

  out.dreal_dtheta << -0.5 * s, 0.5 * c * dir;
  out.dreal_ddir = s * embed;
  // dual = 0.5 (left(T) - right(T)) real = 0.5 (right(real) - left(real)) T
  const Mat4 commutator_t = left_mul(t) - right_mul(t);
  const Mat4 commutator_r = right_mul(out.real) - left_mul(out.real);
  out.ddual_dtheta = 0.5 * commutator_t * out.dreal_dtheta;
  out.ddual_ddir = 0.5 * commutator_t * out.dreal_ddir;
  out.ddual_dpos = 0.5 * commutator_r * embed;
  return out;
}

}  // namespace

Quaternion quat_mul(const Quaternion& a, const Quaternion& b) {
  return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
          a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
          a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
          a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

std::string to_string(JointType type) {
  return type == JointType::kPrismatic ? "prismatic" : "revolute";
}

JointType joint_type_from_string(const std::string& name) {
  if (name == "prismatic") return JointType::kPrismatic;
  if (name == "revolute") return JointType::kRevolute;
  fail(ErrorCode::kValidation, "unknown joint type '" + name + "'");
}

void JointSpec::validate() const {
  if (!axis_dir.allFinite() || std::abs(axis_dir.norm() - 1.0) > 1e-9) {
    fail(ErrorCode::kValidation, "joint axis direction must be unit length");
  }
  if (!axis_pos.allFinite()) {
    fail(ErrorCode::kValidation, "joint axis position must be finite");
  }
}

DualQuaternion dual_quat_from_joint(const JointSpec& joint, double theta) {
  joint.validate();
  const QuatParts parts = joint_quaternions(joint, theta);
  return {parts.real, parts.dual};
}

RigidTransform dual_quat_to_rt(const DualQuaternion& dq) {
  if (std::abs(dq.real.norm() - 1.0) > 1e-9) {
    fail(ErrorCode::kValidation, "dual quaternion real part is not unit");
  }
  RigidTransform rt;
  rt.rotation = rotation_of(dq.real);
  rt.translation = quat_mul(dq.dual * 2.0, dq.real.conjugate()).vec();
  return rt;
}

RigidTransform joint_transform(const JointSpec& joint, double theta) {
  return dual_quat_to_rt(dual_quat_from_joint(joint, theta));
}

TriMesh deform_mesh(const TriMesh& mesh, const Mat3& rotation,
                    const Vec3& translation) {
  TriMesh out = mesh;
  for (auto& v : out.vertices) v = rotation * v + translation;
  return out;
}

JointPoseJacobian joint_pose_grads(const JointSpec& joint, double theta) {
  joint.validate();
  const QuatParts p = joint_quaternions(joint, theta);
  JointPoseJacobian jac;

  // R depends on the real part only.
  const auto dR_dq = rotation_partials(p.real);
  auto contract_r = [&](const Vec4& dq) {
    Mat3 m = Mat3::Zero();
    for (int k = 0; k < 4; ++k) m += dR_dq[k] * dq[k];
    return m;
  };

  // t = vec(2 dual ⊗ conj(real))
  Mat4 conj = Mat4::Identity();
  conj.diagonal() << 1.0, -1.0, -1.0, -1.0;
  const Mat4 dt_ddual = 2.0 * right_mul(p.real.conjugate());
  const Mat4 dt_dreal = 2.0 * left_mul(p.dual) * conj;
  auto contract_t = [&](const Vec4& dreal, const Vec4& ddual) -> Vec3 {
    return (dt_ddual * ddual + dt_dreal * dreal).tail<3>();
  };

  jac.dR_dtheta = contract_r(p.dreal_dtheta);
  jac.dt_dtheta = contract_t(p.dreal_dtheta, p.ddual_dtheta);

  std::array<Mat3, 3> dR_ddir_raw;
  Mat3 dt_ddir_raw;
  for (int k = 0; k < 3; ++k) {
    dR_ddir_raw[k] = contract_r(p.dreal_ddir.col(k));
    dt_ddir_raw.col(k) = contract_t(p.dreal_ddir.col(k), p.ddual_ddir.col(k));
    jac.dt_daxis_pos.col(k) = contract_t(Vec4::Zero(), p.ddual_dpos.col(k));
  }

  const Vec3& d = joint.axis_dir;
  const Mat3 tangent = Mat3::Identity() - d * d.transpose();
  jac.dt_daxis_dir = dt_ddir_raw * tangent;
  for (int j = 0; j < 3; ++j) {
    jac.dR_daxis_dir[j].setZero();
    for (int k = 0; k < 3; ++k) {
      jac.dR_daxis_dir[j] += dR_ddir_raw[k] * tangent(k, j);
    }
  }
  return jac;
}

JointParamGrad chain_joint_grad(const JointPoseJacobian& jac,
                                const Mat3& dL_dR, const Vec3& dL_dt) {
  JointParamGrad g;
  g.theta = (dL_dR.cwiseProduct(jac.dR_dtheta)).sum() +
            dL_dt.dot(jac.dt_dtheta);
  for (int k = 0; k < 3; ++k) {
    g.axis_dir[k] = (dL_dR.cwiseProduct(jac.dR_daxis_dir[k])).sum() +
                    dL_dt.dot(jac.dt_daxis_dir.col(k));
    g.axis_pos[k] = (dL_dR.cwiseProduct(jac.dR_daxis_pos[k])).sum() +
                    dL_dt.dot(jac.dt_daxis_pos.col(k));
  }
  return g;
}

// ---------------------------------------------------------------------------
// MotionMLP

std::array<MotionMLP::LayerView, 3> MotionMLP::layers() {
  std::array<LayerView, 3> out{};
  std::size_t offset = 0;
  for (int l = 0; l < 3; ++l) {
    const int in = kLayerSizes[l];
    const int n = kLayerSizes[l + 1];
    out[l] = {in, n, offset, offset + static_cast<std::size_t>(in * n)};
    offset += static_cast<std::size_t>(in * n + n);
  }
  return out;
}

std::size_t MotionMLP::parameter_count() {
  const auto l = layers();
  return l[2].bias_offset + static_cast<std::size_t>(l[2].out);
}

MotionMLP::MotionMLP(MotionOutput output)
    : output_(output), params_(parameter_count(), 0.0) {}

MotionMLP MotionMLP::random(Rng& rng, MotionOutput output) {
  MotionMLP mlp(output);
  const auto ls = layers();
  for (int l = 0; l < 3; ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(ls[l].in));
    const double scale = l == 2 ? 0.1 : 1.0;
    const std::size_t count = static_cast<std::size_t>(ls[l].in * ls[l].out + ls[l].out);
    for (std::size_t i = 0; i < count; ++i) {
      mlp.params_[ls[l].weight_offset + i] = scale * rng.uniform(-bound, bound);
    }
  }
  return mlp;
}

double MotionMLP::evaluate(double s) const {
  const auto ls = layers();
  std::array<double, 64> h1{};
  std::array<double, 64> h2{};
  for (int i = 0; i < ls[0].out; ++i) {
    h1[i] = std::tanh(params_[ls[0].weight_offset + i] * s +
                      params_[ls[0].bias_offset + i]);
  }
  for (int i = 0; i < ls[1].out; ++i) {
    double acc = params_[ls[1].bias_offset + i];
    const double* w = &params_[ls[1].weight_offset + static_cast<std::size_t>(i) * ls[1].in];
    for (int j = 0; j < ls[1].in; ++j) acc += w[j] * h1[j];
    h2[i] = std::tanh(acc);
  }
  double out = params_[ls[2].bias_offset];
  for (int j = 0; j < ls[2].in; ++j) out += params_[ls[2].weight_offset + j] * h2[j];
  return out;
}

double MotionMLP::evaluate_with_grad(double s, double scale,
                                     std::span<double> grad) const {
  const auto ls = layers();
  std::array<double, 64> h1{};
  std::array<double, 64> h2{};
  for (int i = 0; i < ls[0].out; ++i) {
    h1[i] = std::tanh(params_[ls[0].weight_offset + i] * s +
                      params_[ls[0].bias_offset + i]);
  }
  for (int i = 0; i < ls[1].out; ++i) {
    double acc = params_[ls[1].bias_offset + i];
    const double* w = &params_[ls[1].weight_offset + static_cast<std::size_t>(i) * ls[1].in];
    for (int j = 0; j < ls[1].in; ++j) acc += w[j] * h1[j];
    h2[i] = std::tanh(acc);
  }
  double out = params_[ls[2].bias_offset];
  for (int j = 0; j < ls[2].in; ++j) out += params_[ls[2].weight_offset + j] * h2[j];

  // Backward.
  grad[ls[2].bias_offset] += scale;
  std::array<double, 64> d2{};
  for (int j = 0; j < ls[2].in; ++j) {
    grad[ls[2].weight_offset + j] += scale * h2[j];
    d2[j] = scale * params_[ls[2].weight_offset + j] * (1.0 - h2[j] * h2[j]);
  }
  std::array<double, 64> d1{};
  for (int i = 0; i < ls[1].out; ++i) {
    grad[ls[1].bias_offset + i] += d2[i];
    const std::size_t row = ls[1].weight_offset + static_cast<std::size_t>(i) * ls[1].in;
    for (int j = 0; j < ls[1].in; ++j) {
      grad[row + j] += d2[i] * h1[j];
      d1[j] += d2[i] * params_[row + j];
    }
  }
  for (int i = 0; i < ls[0].out; ++i) {
    const double pre = d1[i] * (1.0 - h1[i] * h1[i]);
    grad[ls[0].weight_offset + i] += pre * s;
    grad[ls[0].bias_offset + i] += pre;
  }
  return out;
}

void MotionProfile::validate() const {
  if (thetas.size() < 2) {
    fail(ErrorCode::kValidation, "motion profile needs at least two frames");
  }
  if (thetas.front() != 0.0) {
    fail(ErrorCode::kValidation, "motion profile must start at zero");
  }
}

namespace {

double normalized_time(int t, int n) {
  if (n < 2 || t < 1 || t > n) {
    fail(ErrorCode::kInvalidArgument,
         "frame " + std::to_string(t) + " outside [1, " + std::to_string(n) +
             "]");
  }
  return static_cast<double>(t - 1) / static_cast<double>(n - 1);
}

}  // namespace

double motion_at(const MotionMLP& mlp, int t, int n) {
  const double s = normalized_time(t, n);
  if (t == 1) return 0.0;
  const double raw = mlp.evaluate(s) - mlp.evaluate(0.0);
  return mlp.output() == MotionOutput::kBoundedPi
             ? std::numbers::pi * std::tanh(raw)
             : raw;
}

double motion_at_with_grad(const MotionMLP& mlp, int t, int n, double scale,
                           std::span<double> grad) {
  const double s = normalized_time(t, n);
  if (t == 1) return 0.0;
  const double raw = mlp.evaluate(s) - mlp.evaluate(0.0);
  double theta = raw;
  double slope = 1.0;
  if (mlp.output() == MotionOutput::kBoundedPi) {
    const double th = std::tanh(raw);
    theta = std::numbers::pi * th;
    slope = std::numbers::pi * (1.0 - th * th);
  }
  mlp.evaluate_with_grad(s, scale * slope, grad);
  mlp.evaluate_with_grad(0.0, -scale * slope, grad);
  return theta;
}

std::vector<double> motion_grad(const MotionMLP& mlp, int t, int n) {
  std::vector<double> grad(MotionMLP::parameter_count(), 0.0);
  motion_at_with_grad(mlp, t, n, 1.0, grad);
  return grad;
}

MotionProfile motion_profile(const MotionMLP& mlp, int n) {
  MotionProfile p;
  p.thetas.reserve(static_cast<std::size_t>(n));
  for (int t = 1; t <= n; ++t) p.thetas.push_back(motion_at(mlp, t, n));
  return p;
}

}  // namespace artic
