#include "artic/part_segmentation.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "artic/soft_renderer.hpp"

namespace artic {
namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double t = a[k] - b[k];
    d += t * t;
  }
  return d;
}

std::uint32_t read_u32(const std::string& buf, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) {
    v = (v << 8) | static_cast<unsigned char>(buf[at + static_cast<std::size_t>(i)]);
  }
  return v;
}

void write_u32(std::ostream& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xffu));
}

}  // namespace

FaceFeatureSet::FaceFeatureSet(std::size_t dim, std::vector<double> values)
    : dim_(dim), values_(std::move(values)) {
  if (dim_ == 0 || values_.size() % dim_ != 0) {
    fail(ErrorCode::kValidation, "feature values do not form whole rows");
  }
}

void FaceFeatureSet::validate(std::size_t face_count) const {
  if (size() != face_count) {
    fail(ErrorCode::kValidation,
         "feature count " + std::to_string(size()) + " does not match " +
             std::to_string(face_count) + " faces");
  }
  for (double v : values_) {
    if (!std::isfinite(v)) fail(ErrorCode::kValidation, "non-finite feature");
  }
}

FaceFeatureSet load_features(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open features " + path.string());
  const std::string buf((std::istreambuf_iterator<char>(in)),
                        std::istreambuf_iterator<char>());
  if (buf.size() < 8) fail(ErrorCode::kParse, path.string() + ": truncated header");
  const std::uint32_t count = read_u32(buf, 0);
  const std::uint32_t dim = read_u32(buf, 4);
  const std::size_t n = static_cast<std::size_t>(count) * dim;
  if (dim == 0 || buf.size() != 8 + 4 * n) {
    fail(ErrorCode::kParse, path.string() + ": payload size mismatch");
  }
  std::vector<double> values(n);
  for (std::size_t i = 0; i < n; ++i) {
    values[i] = static_cast<double>(std::bit_cast<float>(read_u32(buf, 8 + 4 * i)));
  }
  return FaceFeatureSet(dim, std::move(values));
}

void save_features(const FaceFeatureSet& features,
                   const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot write features " + path.string());
  write_u32(out, static_cast<std::uint32_t>(features.size()));
  write_u32(out, static_cast<std::uint32_t>(features.dim()));
  for (double v : features.values()) {
    write_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  if (!out) fail(ErrorCode::kIo, "failed writing features " + path.string());
}

FaceSet backproject_mask(const TriMesh& mesh, const Camera& camera,
                         const Image& mask) {
  if (mesh.faces.empty()) fail(ErrorCode::kInvalidArgument, "empty mesh");
  if (mask.channels() != 1 || mask.width() != camera.width() ||
      mask.height() != camera.height()) {
    fail(ErrorCode::kInvalidArgument,
         "mask must be single-channel at the camera resolution");
  }
  const RenderTarget target = rasterize(mesh, camera, Rgb::Zero());
  std::vector<std::size_t> visible(mesh.faces.size(), 0);
  std::vector<std::size_t> inside(mesh.faces.size(), 0);
  for (std::size_t p = 0; p < target.face_id.size(); ++p) {
    const std::int32_t f = target.face_id[p];
    if (f == kNoFace) continue;
    ++visible[static_cast<std::size_t>(f)];
    if (mask.data()[p] > 0.5) ++inside[static_cast<std::size_t>(f)];
  }
  FaceSet selected;
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    if (visible[f] > 0 && 2 * inside[f] >= visible[f]) {
      selected.push_back(static_cast<std::uint32_t>(f));
    }
  }
  if (selected.empty()) {
    fail(ErrorCode::kSegmentation, "no visible face falls inside the mask");
  }
  return selected;
}

std::vector<double> mean_feature(const FaceFeatureSet& features,
                                 const FaceSet& selected) {
  if (selected.empty()) {
    fail(ErrorCode::kInvalidArgument, "mean of an empty face set");
  }
  std::vector<double> mean(features.dim(), 0.0);
  for (auto f : selected) {
    const auto row = features.row(f);
    for (std::size_t k = 0; k < mean.size(); ++k) mean[k] += row[k];
  }
  for (double& m : mean) m /= static_cast<double>(selected.size());
  return mean;
}

PartLabels threshold_assign(const FaceFeatureSet& features,
                            const FaceSet& selected) {
  const std::vector<double> center = mean_feature(features, selected);
  double radius = 0.0;
  for (auto f : selected) {
    radius = std::max(radius, squared_distance(features.row(f), center));
  }
  PartLabels labels(features.size(), PartLabel::kBase);
  for (std::size_t f = 0; f < features.size(); ++f) {
    if (squared_distance(features.row(f), center) <= radius) {
      labels[f] = PartLabel::kMovable;
    }
  }
  return labels;
}

namespace {

std::array<std::vector<double>, 2> centroids(const FaceFeatureSet& features,
                                             const PartLabels& labels,
                                             std::array<std::size_t, 2>& counts) {
  std::array<std::vector<double>, 2> c{std::vector<double>(features.dim(), 0.0),
                                       std::vector<double>(features.dim(), 0.0)};
  counts = {0, 0};
  for (std::size_t f = 0; f < labels.size(); ++f) {
    const int k = static_cast<int>(labels[f]);
    ++counts[k];
    const auto row = features.row(f);
    for (std::size_t d = 0; d < features.dim(); ++d) c[k][d] += row[d];
  }
  for (int k = 0; k < 2; ++k) {
    if (counts[k] == 0) continue;
    for (double& v : c[k]) v /= static_cast<double>(counts[k]);
  }
  return c;
}

}  // namespace

double within_cluster_cost(const FaceFeatureSet& features,
                           const PartLabels& labels) {
  std::array<std::size_t, 2> counts{};
  const auto c = centroids(features, labels, counts);
  double cost = 0.0;
  for (std::size_t f = 0; f < labels.size(); ++f) {
    cost += squared_distance(features.row(f), c[static_cast<int>(labels[f])]);
  }
  return cost;
}

PartLabels kmeans_refine(const FaceFeatureSet& features,
                         const PartLabels& initial, int max_iters,
                         const FaceSet* selected) {
  if (initial.size() != features.size()) {
    fail(ErrorCode::kInvalidArgument, "label count does not match features");
  }
  PartLabels labels = initial;
  std::array<std::size_t, 2> counts{};
  auto c = centroids(features, labels, counts);
  if (counts[0] == 0 || counts[1] == 0) {
    fail(ErrorCode::kInvalidArgument, "k-means needs both labels present");
  }

  for (int iter = 0; iter < max_iters; ++iter) {
    PartLabels next = labels;
    bool changed = false;
    for (std::size_t f = 0; f < labels.size(); ++f) {
      const auto row = features.row(f);
      const double d_base = squared_distance(row, c[0]);
      const double d_mov = squared_distance(row, c[1]);
      if (d_mov < d_base) {
        next[f] = PartLabel::kMovable;
      } else if (d_base < d_mov) {
        next[f] = PartLabel::kBase;
      }
      changed = changed || next[f] != labels[f];
    }
    if (!changed) break;
    std::array<std::size_t, 2> next_counts{};
    auto next_c = centroids(features, next, next_counts);
    if (next_counts[0] == 0 || next_counts[1] == 0) break;
    labels = std::move(next);
    c = std::move(next_c);
  }

  if (selected != nullptr) {
    std::size_t in_movable = 0;
    for (auto f : *selected) in_movable += labels[f] == PartLabel::kMovable;
    if (2 * in_movable < selected->size()) {
      for (auto& l : labels) {
        l = l == PartLabel::kMovable ? PartLabel::kBase : PartLabel::kMovable;
      }
    }
  }
  return labels;
}

Segmentation segment_movable(const TriMesh& mesh,
                             const FaceFeatureSet& features,
                             const Camera& camera, const Image& mask,
                             int max_iters) {
  mesh.validate();
  features.validate(mesh.faces.size());
  Segmentation out;
  out.mask_faces = backproject_mask(mesh, camera, mask);
  const PartLabels initial = threshold_assign(features, out.mask_faces);
  const bool has_base =
      std::any_of(initial.begin(), initial.end(),
                  [](PartLabel l) { return l == PartLabel::kBase; });
  if (!has_base) {
    fail(ErrorCode::kSegmentation, "every face was assigned to the movable part");
  }
  out.labels = kmeans_refine(features, initial, max_iters, &out.mask_faces);

  std::vector<bool> movable(mesh.faces.size());
  std::size_t n_mov = 0;
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    movable[f] = out.labels[f] == PartLabel::kMovable;
    n_mov += movable[f];
  }
  if (n_mov == 0 || n_mov == mesh.faces.size()) {
    fail(ErrorCode::kSegmentation, "segmentation left one part empty");
  }
  std::vector<bool> base(movable.size());
  for (std::size_t f = 0; f < movable.size(); ++f) base[f] = !movable[f];
  out.movable = extract_faces(mesh, movable);
  out.base = extract_faces(mesh, base);
  return out;
}

FaceFeatureSet geometric_fallback_features(const TriMesh& mesh, double scale) {
  if (mesh.faces.empty()) fail(ErrorCode::kInvalidArgument, "empty mesh");
  const double diag = bbox_diagonal(mesh);
  const double inv = diag > 0.0 ? scale / diag : scale;
  std::vector<double> values;
  values.reserve(mesh.faces.size() * 6);
  for (const Face& f : mesh.faces) {
    const Vec3& a = mesh.vertices[f[0]];
    const Vec3& b = mesh.vertices[f[1]];
    const Vec3& c = mesh.vertices[f[2]];
    const Vec3 centroid = (a + b + c) / 3.0 * inv;
    Vec3 normal = (b - a).cross(c - a);
    const double len = normal.norm();
    normal = len > 0.0 ? Vec3(normal / len) : Vec3::Zero();
    for (int k = 0; k < 3; ++k) values.push_back(centroid[k]);
    for (int k = 0; k < 3; ++k) values.push_back(normal[k]);
  }
  return FaceFeatureSet(6, std::move(values));
}

AmodalInputs prepare_amodal_inputs(const Image& image, const Image& mask,
                                   const Image& part_silhouette) {
  if (!image.same_resolution(mask) || !image.same_resolution(part_silhouette)) {
    fail(ErrorCode::kInvalidArgument, "amodal inputs differ in resolution");
  }
  if (mask.channels() != 1 || part_silhouette.channels() != 1) {
    fail(ErrorCode::kInvalidArgument, "mask and silhouette must be single-channel");
  }
  AmodalInputs out{Image(image.width(), image.height(), image.channels()),
                   Image(image.width(), image.height(), 1)};
  const int ch = image.channels();
  for (std::size_t p = 0; p < mask.pixel_count(); ++p) {
    const double m = mask.data()[p];
    for (int c = 0; c < ch; ++c) {
      out.visible.data()[p * ch + c] = image.data()[p * ch + c] * m;
    }
    const bool fill = part_silhouette.data()[p] > 0.5 && !(m > 0.5);
    out.inpaint_mask.data()[p] = fill ? 1.0 : 0.0;
  }
  return out;
}

}  // namespace artic
