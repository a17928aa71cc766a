#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "artic/error.hpp"

namespace artic {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Rgb = Eigen::Vector3d;
using Face = std::array<std::uint32_t, 3>;

// Indexed triangle mesh with optional flat per-face colors in [0,1].
struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<Face> faces;
  std::vector<Rgb> face_colors;  // empty, or one per face

  bool has_colors() const { return !face_colors.empty(); }
  Rgb face_color(std::size_t f) const {
    return has_colors() ? face_colors[f] : Rgb(0.7, 0.7, 0.7);
  }

  // Throws kValidation on out-of-range indices, degenerate index triples or a
  // color list of the wrong length.
  void validate() const;
};

struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  RigidTransform inverse() const {
    return {rotation.transpose(), -(rotation.transpose() * translation)};
  }
  // (this ∘ rhs)(p) = this(rhs(p))
  RigidTransform compose(const RigidTransform& rhs) const {
    return {rotation * rhs.rotation, rotation * rhs.translation + translation};
  }
};

// Pinhole camera. `pose` maps world points into camera space, where +z is the
// viewing direction, +x points right and +y points down in the image.
class Camera {
 public:
  Camera(Vec2 focal, Vec2 principal, RigidTransform pose, int width,
         int height);

  const Vec2& focal() const { return focal_; }
  const Vec2& principal() const { return principal_; }
  const RigidTransform& pose() const { return pose_; }
  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }

  Vec3 to_camera(const Vec3& world) const { return pose_.apply(world); }

  // Camera rescaled to a different resolution; intrinsics scale with it.
  Camera resized(int width, int height) const;

 private:
  Vec2 focal_;
  Vec2 principal_;
  RigidTransform pose_;
  int width_;
  int height_;
};

// Proximity is the negated camera-space axial distance, so larger is closer.
struct Projection {
  Vec2 pixel = Vec2::Zero();
  double proximity = 0.0;
  bool behind = false;
};

// Throws kInvalidArgument when the point lies on the camera plane
// (|z| <= 1e-9). Points behind the camera come back flagged.
Projection project(const Camera& camera, const Vec3& world);

// Row-major, channel-interleaved image with values in [0,1].
class Image {
 public:
  Image() = default;
  Image(int width, int height, int channels, double fill = 0.0);
  Image(int width, int height, int channels, std::vector<double> data);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }

  double& at(int x, int y, int c = 0) {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }
  double at(int x, int y, int c = 0) const {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool same_shape(const Image& other) const {
    return width_ == other.width_ && height_ == other.height_ &&
           channels_ == other.channels_;
  }
  bool same_resolution(const Image& other) const {
    return width_ == other.width_ && height_ == other.height_;
  }

  void validate() const;

  bool operator==(const Image& other) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 1;
  std::vector<double> data_;
};

TriMesh load_mesh(const std::filesystem::path& path);
void save_mesh(const TriMesh& mesh, const std::filesystem::path& path);

// Binary PPM (P6) and PGM (P5), maxval 255.
Image load_image(const std::filesystem::path& path);
void save_image(const Image& image, const std::filesystem::path& path);

double bbox_diagonal(const TriMesh& mesh);

struct Bounds {
  Vec3 min;
  Vec3 max;
  Vec3 center() const { return 0.5 * (min + max); }
  Vec3 extent() const { return max - min; }
};
Bounds bounding_box(const TriMesh& mesh);

// Concatenates meshes; faces of `b` are re-indexed after those of `a`.
TriMesh merge_meshes(const TriMesh& a, const TriMesh& b);

// Faces selected by `keep`, with the referenced vertices compacted in their
// original order.
TriMesh extract_faces(const TriMesh& mesh, const std::vector<bool>& keep);

}  // namespace artic
