#pragma once

#include <cstdint>
#include <vector>

#include "artic/geometry.hpp"

namespace artic {

inline constexpr double kEmptyProximity = -1e6;
inline constexpr std::int32_t kNoFace = -1;
inline constexpr double kDefaultBeta = 500.0;

// Per-pixel buffers of one rendered part.
struct RenderTarget {
  Image color;                      // 3 channels
  std::vector<double> proximity;    // kEmptyProximity where uncovered
  std::vector<std::int32_t> face_id;
  std::vector<Vec3> barycentrics;   // perspective-correct, zero if uncovered

  int width() const { return color.width(); }
  int height() const { return color.height(); }
  bool covered(std::size_t pixel) const { return face_id[pixel] != kNoFace; }
};

struct BlendOutput {
  Image image;
  std::vector<double> weights;
};

// sigmoid with its argument clamped to [-60, 60]
double blend_sigmoid(double x);

// (sigmoid(x), sigmoid(-x)), computed so that negating x swaps the pair
// exactly.
struct BlendPair {
  double mov;
  double base;
};
BlendPair blend_pair(double x);

// Hard z-buffer at pixel centers. Faces with a vertex at or behind the camera
// plane are skipped. Largest proximity wins; ties go to the lower face index.
RenderTarget rasterize(const TriMesh& mesh, const Camera& camera,
                       const Rgb& background);

// w = sigmoid(beta * (D_mov - D_base)); I = w * I_mov + (1 - w) * I_base.
BlendOutput soft_blend(const RenderTarget& mov, const RenderTarget& base,
                       double beta = kDefaultBeta);

BlendOutput render_pred(const TriMesh& base_mesh, const TriMesh& mov_mesh,
                        const Camera& camera, double beta,
                        const Rgb& background);

// Per-pixel hard selection of the nearer part (movable wins ties).
Image hard_composite(const RenderTarget& mov, const RenderTarget& base);

// Mean absolute difference over all pixels and channels.
double image_loss(const Image& pred, const Image& ref);

// Gradient of image_loss(render_pred(...), ref) with respect to each movable
// vertex position (world frame). Coverage is held fixed: only depth
// interpolation inside covered pixels contributes.
std::vector<Vec3> backward(const TriMesh& base_mesh, const TriMesh& mov_mesh,
                           const Camera& camera, double beta, const Image& ref,
                           const Rgb& background);

// Affine normalization of covered proximities to [0,1] (uncovered -> 0).
Image proximity_image(const RenderTarget& target);
Image weight_image(const BlendOutput& blend);

// Evaluates the blended-render loss for a fixed base part against many
// movable-part poses. The base render is computed once. Losses agree with
// image_loss(render_pred(...).image, ref).
class BlendLossEvaluator {
 public:
  struct Options {
    // Adds boundary terms: for each pair of neighbouring pixels separated by
    // a movable-part edge, the loss change of shifting that edge by one pixel
    // is attributed to the edge's vertices. This is a pseudo-gradient of the
    // piecewise-constant coverage, not an exact derivative.
    bool edge_terms = false;
  };

  // Reference frame with cached statistics.
  struct Frame {
    Image ref;
    double base_only_loss_sum = 0.0;  // sum of |base-only composite - ref|
  };

  BlendLossEvaluator(const TriMesh& base_mesh, const Camera& camera,
                     double beta, const Rgb& background);

  Frame prepare(const Image& ref) const;

  // Returns the loss; when grad is non-null it is resized to the vertex count
  // and filled with dLoss/dVertex (world frame).
  double evaluate(const TriMesh& mov_posed, const Frame& frame,
                  std::vector<Vec3>* grad, const Options& options);
  double evaluate(const TriMesh& mov_posed, const Frame& frame,
                  std::vector<Vec3>* grad) {
    return evaluate(mov_posed, frame, grad, Options{});
  }

  const Camera& camera() const { return camera_; }
  const RenderTarget& base_target() const { return base_; }

 private:
  Camera camera_;
  double beta_;
  Rgb background_;
  RenderTarget base_;
  Image base_only_;  // composite with the movable part absent

  // Scratch buffers for the movable layer.
  std::vector<std::int32_t> mov_face_;
  std::vector<double> mov_prox_;
  std::vector<Vec3> cam_vertices_;
  std::vector<Vec2> screen_;
  std::vector<std::uint8_t> face_ok_;
  int box_x0_ = 0;
  int box_y0_ = 0;
  int box_x1_ = -1;
  int box_y1_ = -1;
};

}  // namespace artic
