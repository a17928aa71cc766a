#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "artic/geometry.hpp"

namespace artic {

// One d-dimensional feature vector per face, stored row-major.
class FaceFeatureSet {
 public:
  FaceFeatureSet() = default;
  FaceFeatureSet(std::size_t dim, std::vector<double> values);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return dim_ == 0 ? 0 : values_.size() / dim_; }
  std::span<const double> row(std::size_t face) const {
    return {values_.data() + face * dim_, dim_};
  }
  const std::vector<double>& values() const { return values_; }

  // Throws kValidation unless there is exactly one finite row per face.
  void validate(std::size_t face_count) const;

 private:
  std::size_t dim_ = 0;
  std::vector<double> values_;
};

// Little-endian: face_count u32, dim u32, then face_count*dim float32.
FaceFeatureSet load_features(const std::filesystem::path& path);
void save_features(const FaceFeatureSet& features,
                   const std::filesystem::path& path);

enum class PartLabel : std::uint8_t { kBase = 0, kMovable = 1 };

using PartLabels = std::vector<PartLabel>;
using FaceSet = std::vector<std::uint32_t>;  // sorted face ids

// Faces with at least one z-buffer-visible pixel and at least half of their
// visible pixels inside the mask (value > 0.5). Throws kSegmentation when no
// face qualifies.
FaceSet backproject_mask(const TriMesh& mesh, const Camera& camera,
                         const Image& mask);

std::vector<double> mean_feature(const FaceFeatureSet& features,
                                 const FaceSet& selected);

// Movable iff ||F_i - F_m||^2 <= max_{j in S} ||F_j - F_m||^2.
PartLabels threshold_assign(const FaceFeatureSet& features,
                            const FaceSet& selected);

// Two-means from the centroids of the initial label groups. Exact distance
// ties keep the current label. If a cluster would empty, the previous
// assignment is kept and iteration stops. When `selected` is given, the
// cluster holding most of it is labeled movable.
PartLabels kmeans_refine(const FaceFeatureSet& features,
                         const PartLabels& initial, int max_iters = 100,
                         const FaceSet* selected = nullptr);

// Sum of squared distances of every face to its label's centroid.
double within_cluster_cost(const FaceFeatureSet& features,
                           const PartLabels& labels);

struct Segmentation {
  PartLabels labels;
  FaceSet mask_faces;
  TriMesh movable;
  TriMesh base;
};

Segmentation segment_movable(const TriMesh& mesh,
                             const FaceFeatureSet& features,
                             const Camera& camera, const Image& mask,
                             int max_iters = 100);

// Per-face (centroid / bbox_diagonal * scale, unit normal); zero normal for
// zero-area faces.
FaceFeatureSet geometric_fallback_features(const TriMesh& mesh,
                                           double scale = 1.0);

struct AmodalInputs {
  Image visible;       // image * mask
  Image inpaint_mask;  // silhouette and not mask
};

AmodalInputs prepare_amodal_inputs(const Image& image, const Image& mask,
                                   const Image& part_silhouette);

}  // namespace artic
