#include "artic/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace artic {

void TriMesh::validate() const {
  const auto n = vertices.size();
  for (std::size_t f = 0; f < faces.size(); ++f) {
    const Face& tri = faces[f];
    for (auto idx : tri) {
      if (idx >= n) {
        fail(ErrorCode::kValidation,
             "face " + std::to_string(f) + " references vertex " +
                 std::to_string(idx) + " of " + std::to_string(n));
      }
    }
    if (tri[0] == tri[1] && tri[1] == tri[2]) {
      fail(ErrorCode::kValidation,
           "face " + std::to_string(f) + " is degenerate");
    }
  }
  if (has_colors() && face_colors.size() != faces.size()) {
    fail(ErrorCode::kValidation, "face color count does not match face count");
  }
  for (const auto& v : vertices) {
    if (!v.allFinite()) fail(ErrorCode::kValidation, "non-finite vertex");
  }
}

Camera::Camera(Vec2 focal, Vec2 principal, RigidTransform pose, int width,
               int height)
    : focal_(std::move(focal)),
      principal_(std::move(principal)),
      pose_(std::move(pose)),
      width_(width),
      height_(height) {
  if (!(focal_.x() > 0.0) || !(focal_.y() > 0.0)) {
    fail(ErrorCode::kValidation, "camera focal lengths must be positive");
  }
  if (width_ < 1 || height_ < 1) {
    fail(ErrorCode::kValidation, "camera resolution must be at least 1x1");
  }
  const Mat3 gram = pose_.rotation.transpose() * pose_.rotation;
  if ((gram - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-9 ||
      pose_.rotation.determinant() < 0.0) {
    fail(ErrorCode::kValidation, "camera pose rotation is not orthonormal");
  }
  if (!pose_.translation.allFinite() || !principal_.allFinite()) {
    fail(ErrorCode::kValidation, "camera parameters must be finite");
  }
}

Camera Camera::resized(int width, int height) const {
  const double sx = static_cast<double>(width) / width_;
  const double sy = static_cast<double>(height) / height_;
  return Camera(Vec2(focal_.x() * sx, focal_.y() * sy),
                Vec2(principal_.x() * sx, principal_.y() * sy), pose_, width,
                height);
}

Projection project(const Camera& camera, const Vec3& world) {
  const Vec3 pc = camera.to_camera(world);
  if (std::abs(pc.z()) <= 1e-9) {
    fail(ErrorCode::kInvalidArgument, "point lies on the camera plane");
  }
  Projection out;
  out.pixel = Vec2(camera.focal().x() * pc.x() / pc.z() + camera.principal().x(),
                   camera.focal().y() * pc.y() / pc.z() + camera.principal().y());
  out.proximity = -pc.z();
  out.behind = pc.z() < 0.0;
  return out;
}

Image::Image(int width, int height, int channels, double fill)
    : width_(width), height_(height), channels_(channels) {
  if (width < 0 || height < 0 || (channels != 1 && channels != 3)) {
    fail(ErrorCode::kInvalidArgument, "invalid image shape");
  }
  data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

Image::Image(int width, int height, int channels, std::vector<double> data)
    : width_(width), height_(height), channels_(channels),
      data_(std::move(data)) {
  validate();
}

void Image::validate() const {
  if (channels_ != 1 && channels_ != 3) {
    fail(ErrorCode::kValidation, "image must have 1 or 3 channels");
  }
  if (data_.size() != static_cast<std::size_t>(width_) * height_ * channels_) {
    fail(ErrorCode::kValidation, "image data length does not match shape");
  }
  for (double v : data_) {
    if (!(v >= 0.0 && v <= 1.0)) {
      fail(ErrorCode::kValidation, "image value outside [0,1]");
    }
  }
}

double bbox_diagonal(const TriMesh& mesh) {
  if (mesh.vertices.empty()) {
    fail(ErrorCode::kInvalidArgument, "bounding box of an empty mesh");
  }
  return bounding_box(mesh).extent().norm();
}

Bounds bounding_box(const TriMesh& mesh) {
  if (mesh.vertices.empty()) {
    fail(ErrorCode::kInvalidArgument, "bounding box of an empty mesh");
  }
  Bounds b{mesh.vertices.front(), mesh.vertices.front()};
  for (const auto& v : mesh.vertices) {
    b.min = b.min.cwiseMin(v);
    b.max = b.max.cwiseMax(v);
  }
  return b;
}

TriMesh merge_meshes(const TriMesh& a, const TriMesh& b) {
  TriMesh out = a;
  const auto offset = static_cast<std::uint32_t>(a.vertices.size());
  out.vertices.insert(out.vertices.end(), b.vertices.begin(), b.vertices.end());
  for (const Face& f : b.faces) {
    out.faces.push_back({f[0] + offset, f[1] + offset, f[2] + offset});
  }
  if (a.has_colors() || b.has_colors()) {
    out.face_colors.clear();
    for (std::size_t f = 0; f < a.faces.size(); ++f) {
      out.face_colors.push_back(a.face_color(f));
    }
    for (std::size_t f = 0; f < b.faces.size(); ++f) {
      out.face_colors.push_back(b.face_color(f));
    }
  }
  return out;
}

TriMesh extract_faces(const TriMesh& mesh, const std::vector<bool>& keep) {
  if (keep.size() != mesh.faces.size()) {
    fail(ErrorCode::kInvalidArgument, "face selection length mismatch");
  }
  std::vector<std::int64_t> remap(mesh.vertices.size(), -1);
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    if (!keep[f]) continue;
    for (auto idx : mesh.faces[f]) remap[idx] = 0;
  }
  TriMesh out;
  for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
    if (remap[v] < 0) continue;
    remap[v] = static_cast<std::int64_t>(out.vertices.size());
    out.vertices.push_back(mesh.vertices[v]);
  }
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    if (!keep[f]) continue;
    const Face& tri = mesh.faces[f];
    out.faces.push_back({static_cast<std::uint32_t>(remap[tri[0]]),
                         static_cast<std::uint32_t>(remap[tri[1]]),
                         static_cast<std::uint32_t>(remap[tri[2]])});
    if (mesh.has_colors()) out.face_colors.push_back(mesh.face_colors[f]);
  }
  return out;
}

}  // namespace artic
