#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "artic/geometry.hpp"
#include "artic/random.hpp"

namespace artic {

// Scalar-first Hamilton quaternion.
struct Quaternion {
  double w = 1.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  static Quaternion pure(const Vec3& v) { return {0.0, v.x(), v.y(), v.z()}; }
  static Quaternion from_vector(const Eigen::Vector4d& v) {
    return {v[0], v[1], v[2], v[3]};
  }

  Vec3 vec() const { return {x, y, z}; }
  Eigen::Vector4d as_vector() const { return {w, x, y, z}; }
  Quaternion conjugate() const { return {w, -x, -y, -z}; }
  double dot(const Quaternion& o) const {
    return w * o.w + x * o.x + y * o.y + z * o.z;
  }
  double norm() const { return std::sqrt(dot(*this)); }

  Quaternion operator+(const Quaternion& o) const {
    return {w + o.w, x + o.x, y + o.y, z + o.z};
  }
  Quaternion operator-(const Quaternion& o) const {
    return {w - o.w, x - o.x, y - o.y, z - o.z};
  }
  Quaternion operator*(double s) const { return {w * s, x * s, y * s, z * s}; }
  bool operator==(const Quaternion&) const = default;
};

Quaternion quat_mul(const Quaternion& a, const Quaternion& b);

struct DualQuaternion {
  Quaternion real;
  Quaternion dual{0.0, 0.0, 0.0, 0.0};
};

enum class JointType { kPrismatic, kRevolute };

std::string to_string(JointType type);
JointType joint_type_from_string(const std::string& name);

struct JointSpec {
  JointType type = JointType::kRevolute;
  Vec3 axis_pos = Vec3::Zero();
  Vec3 axis_dir = Vec3::UnitZ();

  // Throws kValidation for a non-unit direction or non-finite position.
  void validate() const;
};

DualQuaternion dual_quat_from_joint(const JointSpec& joint, double theta);

// Throws kValidation when the real part is not unit length.
RigidTransform dual_quat_to_rt(const DualQuaternion& dq);

// dual_quat_to_rt(dual_quat_from_joint(joint, theta))
RigidTransform joint_transform(const JointSpec& joint, double theta);

TriMesh deform_mesh(const TriMesh& mesh, const Mat3& rotation,
                    const Vec3& translation);
inline TriMesh deform_mesh(const TriMesh& mesh, const RigidTransform& rt) {
  return deform_mesh(mesh, rt.rotation, rt.translation);
}

// Partial derivatives of the joint transform (R, t). Entry k of an array or
// column k of a matrix is the derivative with respect to component k of the
// parameter. Direction derivatives are projected onto the tangent plane of
// the unit sphere at axis_dir.
struct JointPoseJacobian {
  Mat3 dR_dtheta = Mat3::Zero();
  std::array<Mat3, 3> dR_daxis_dir{Mat3::Zero(), Mat3::Zero(), Mat3::Zero()};
  std::array<Mat3, 3> dR_daxis_pos{Mat3::Zero(), Mat3::Zero(), Mat3::Zero()};
  Vec3 dt_dtheta = Vec3::Zero();
  Mat3 dt_daxis_dir = Mat3::Zero();
  Mat3 dt_daxis_pos = Mat3::Zero();
};

JointPoseJacobian joint_pose_grads(const JointSpec& joint, double theta);

struct JointParamGrad {
  Vec3 axis_pos = Vec3::Zero();
  Vec3 axis_dir = Vec3::Zero();
  double theta = 0.0;
};

// Chains upstream gradients dL/dR and dL/dt through the joint Jacobian.
JointParamGrad chain_joint_grad(const JointPoseJacobian& jac, const Mat3& dL_dR,
                                const Vec3& dL_dt);

// How the raw network output maps to a joint coordinate. Revolute joints use
// pi * tanh(raw) so the angle stays inside (-pi, pi).
enum class MotionOutput { kLinear, kBoundedPi };

// 1 -> 64 -> 64 -> 1 perceptron with tanh hidden activations. Parameters are
// stored flat: W1, b1, W2, b2, W3, b3, each weight matrix row-major
// (out x in).
class MotionMLP {
 public:
  static constexpr std::array<int, 4> kLayerSizes{1, 64, 64, 1};

  explicit MotionMLP(MotionOutput output = MotionOutput::kLinear);

  // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and biases; the output
  // layer is scaled by 0.1.
  static MotionMLP random(Rng& rng, MotionOutput output);

  static std::size_t parameter_count();

  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }
  MotionOutput output() const { return output_; }
  void set_output(MotionOutput output) { output_ = output; }

  // Raw network value g(s).
  double evaluate(double s) const;
  // g(s); accumulates scale * dg/dparams into grad.
  double evaluate_with_grad(double s, double scale,
                            std::span<double> grad) const;

  // Per-layer (weight rows, bias) views for checkpoint I/O.
  struct LayerView {
    int in;
    int out;
    std::size_t weight_offset;
    std::size_t bias_offset;
  };
  static std::array<LayerView, 3> layers();

 private:
  MotionOutput output_;
  std::vector<double> params_;
};

struct MotionProfile {
  std::vector<double> thetas;
  void validate() const;
};

// theta_t for 1-based frame t of n: s = (t-1)/(n-1), raw = g(s) - g(0), then
// the output mapping. Frame 1 is exactly 0.
double motion_at(const MotionMLP& mlp, int t, int n);

// d theta_t / d params, same layout as MotionMLP::parameters().
std::vector<double> motion_grad(const MotionMLP& mlp, int t, int n);

// Accumulates scale * d theta_t / d params into grad; returns theta_t.
double motion_at_with_grad(const MotionMLP& mlp, int t, int n, double scale,
                           std::span<double> grad);

MotionProfile motion_profile(const MotionMLP& mlp, int n);

}  // namespace artic
