#include <gtest/gtest.h>

#include "artic/soft_renderer.hpp"
#include "test_util.hpp"

using namespace artic;
using test::quad;
using test::simple_camera;

namespace {

const Rgb kWhite(1, 1, 1);
const Rgb kBlack(0, 0, 0);

double sigmoid_ref(double x) { return 1.0 / (1.0 + std::exp(-x)); }

TriMesh big_triangle(double depth, const Rgb& color) {
  TriMesh m;
  m.vertices = {{-10 * depth, -10 * depth, depth},
                {30 * depth, -10 * depth, depth},
                {-10 * depth, 30 * depth, depth}};
  m.faces = {{0, 1, 2}};
  m.face_colors = {color};
  return m;
}

RenderTarget flat_target(int size, double proximity, const Rgb& color, bool covered) {
  RenderTarget t;
  t.color = Image(size, size, 3);
  for (std::size_t p = 0; p < t.color.pixel_count(); ++p) {
    for (int c = 0; c < 3; ++c) t.color.data()[p * 3 + c] = color[c];
  }
  t.proximity.assign(t.color.pixel_count(), covered ? proximity : kEmptyProximity);
  t.face_id.assign(t.color.pixel_count(), covered ? 0 : kNoFace);
  t.barycentrics.assign(t.color.pixel_count(), Vec3::Zero());
  return t;
}

TriMesh random_part(Rng& rng, int triangles, double z0, double z1) {
  TriMesh m;
  for (int i = 0; i < triangles; ++i) {
    const double z = rng.uniform(z0, z1);
    const Vec3 c(rng.uniform(-0.6, 0.6), rng.uniform(-0.6, 0.6), z);
    for (int k = 0; k < 3; ++k) {
      m.vertices.push_back(c + Vec3(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5),
                                    rng.uniform(-0.2, 0.2)));
    }
    const auto b = static_cast<std::uint32_t>(3 * i);
    m.faces.push_back({b, b + 1, b + 2});
    m.face_colors.emplace_back(rng.uniform(), rng.uniform(), rng.uniform());
  }
  return m;
}

// Tilted movable quad covering the whole view, in front of and behind a
// fronto-parallel base plane depending on the pixel.
struct SmoothScene {
  TriMesh base;
  TriMesh mov;
  Camera camera = simple_camera(32, 40.0);
  Image ref;
};

SmoothScene smooth_scene(Rng& rng) {
  SmoothScene s;
  s.base = quad(-3, -3, 3, 3, 2.03, Rgb(0.2, 0.3, 0.25));
  s.mov = quad(-3, -3, 3, 3, 2.0, Rgb(0.9, 0.8, 0.7));
  for (auto& v : s.mov.vertices) v.z() = 2.0 + rng.uniform(0.0, 0.04);
  s.mov.face_colors[1] = Rgb(0.7, 0.9, 0.6);
  const Image pred = render_pred(s.base, s.mov, s.camera, kDefaultBeta, kWhite).image;
  s.ref = pred;
  for (double& v : s.ref.data()) {
    v = std::clamp(v + (rng.uniform() < 0.5 ? -0.25 : 0.25), 0.0, 1.0);
  }
  return s;
}

double loss_of(const SmoothScene& s, const TriMesh& mov) {
  return image_loss(render_pred(s.base, mov, s.camera, kDefaultBeta, kWhite).image, s.ref);
}

}  // namespace

TEST(Rasterize, EmptyMeshIsBackground) {
  const RenderTarget t = rasterize(TriMesh{}, simple_camera(8, 10), Rgb(0.1, 0.2, 0.3));
  for (std::size_t p = 0; p < 64; ++p) {
    EXPECT_FALSE(t.covered(p));
    EXPECT_EQ(t.proximity[p], kEmptyProximity);
    EXPECT_EQ(t.color.data()[p * 3 + 0], 0.1);
    EXPECT_EQ(t.color.data()[p * 3 + 2], 0.3);
  }
}

TEST(Rasterize, FullScreenTriangleProximity) {
  const RenderTarget t = rasterize(big_triangle(2.0, Rgb(0.5, 0.5, 0.5)), simple_camera(16, 20), kWhite);
  for (std::size_t p = 0; p < t.proximity.size(); ++p) {
    ASSERT_TRUE(t.covered(p));
    EXPECT_NEAR(t.proximity[p], -2.0, 1e-12);
    EXPECT_NEAR(t.barycentrics[p].sum(), 1.0, 1e-12);
  }
}

TEST(Rasterize, NearerTriangleWins) {
  TriMesh m = merge_meshes(big_triangle(2.0, kBlack), big_triangle(1.0, kWhite));
  const RenderTarget t = rasterize(m, simple_camera(16, 20), Rgb(0.5, 0.5, 0.5));
  for (std::size_t p = 0; p < t.proximity.size(); ++p) {
    EXPECT_EQ(t.face_id[p], 1);
    EXPECT_NEAR(t.proximity[p], -1.0, 1e-12);
    EXPECT_EQ(t.color.data()[p * 3], 1.0);
  }
}

TEST(Rasterize, MatchesBruteForceDepthOrder) {
  Rng rng(31);
  const Camera cam = simple_camera(24, 30);
  for (int trial = 0; trial < 10; ++trial) {
    const TriMesh m = random_part(rng, 6, 1.5, 3.0);
    const RenderTarget t = rasterize(m, cam, kWhite);
    for (int y = 0; y < 24; ++y) {
      for (int x = 0; x < 24; ++x) {
        // Ray through the pixel center hits plane n.p = d at depth z.
        const Vec3 ray((x + 0.5 - 12) / 30.0, (y + 0.5 - 12) / 30.0, 1.0);
        double strict = kEmptyProximity;
        double loose = kEmptyProximity;
        for (const Face& f : m.faces) {
          const Vec3 a = m.vertices[f[0]], b = m.vertices[f[1]], c = m.vertices[f[2]];
          const Vec3 n = (b - a).cross(c - a);
          const double z = n.dot(a) / n.dot(ray);
          const Vec3 q = z * ray;
          const double s0 = n.dot((b - a).cross(q - a));
          const double s1 = n.dot((c - b).cross(q - b));
          const double s2 = n.dot((a - c).cross(q - c));
          const double margin = 1e-9 * n.squaredNorm();
          if (std::min({s0, s1, s2}) > margin) strict = std::max(strict, -z);
          if (std::min({s0, s1, s2}) > -margin) loose = std::max(loose, -z);
        }
        const std::size_t p = static_cast<std::size_t>(y) * 24 + x;
        if (strict != kEmptyProximity) {
          ASSERT_TRUE(t.covered(p));
          EXPECT_GE(t.proximity[p], strict - 1e-9);
        }
        if (loose == kEmptyProximity) EXPECT_FALSE(t.covered(p));
        if (t.covered(p)) EXPECT_LE(t.proximity[p], loose + 1e-9);
      }
    }
  }
}

TEST(Rasterize, Deterministic) {
  Rng rng(2);
  const TriMesh m = random_part(rng, 20, 1.5, 3.0);
  const Camera cam = simple_camera(40, 50);
  const RenderTarget a = rasterize(m, cam, kWhite);
  const RenderTarget b = rasterize(m, cam, kWhite);
  EXPECT_EQ(a.color, b.color);
  EXPECT_EQ(a.proximity, b.proximity);
  EXPECT_EQ(a.face_id, b.face_id);
}

TEST(SoftBlend, Examples) {
  const BlendOutput equal = soft_blend(flat_target(2, -2.0, kWhite, true),
                                       flat_target(2, -2.0, kBlack, true));
  for (double v : equal.image.data()) EXPECT_EQ(v, 0.5);

  const BlendOutput ahead = soft_blend(flat_target(2, -1.98, kWhite, true),
                                       flat_target(2, -2.0, kBlack, true), 500.0);
  for (double w : ahead.weights) EXPECT_NEAR(w, sigmoid_ref(10.0), 1e-9);
  EXPECT_NEAR(ahead.weights[0], 0.9999546, 1e-7);

  const Rgb base_color(0.3, 0.6, 0.9);
  const BlendOutput hidden = soft_blend(flat_target(2, 0.0, kWhite, false),
                                        flat_target(2, -2.0, base_color, true));
  for (std::size_t p = 0; p < 4; ++p) {
    for (int c = 0; c < 3; ++c) EXPECT_NEAR(hidden.image.data()[p * 3 + c], base_color[c], 1e-15);
  }
}

TEST(SoftBlend, Errors) {
  EXPECT_THROW(soft_blend(flat_target(2, -1, kWhite, true), flat_target(3, -1, kWhite, true)),
               Error);
  EXPECT_THROW(soft_blend(flat_target(2, -1, kWhite, true), flat_target(2, -1, kWhite, true), 0.0),
               Error);
}

TEST(BlendSigmoid, StrictlyInsideUnitIntervalAndMonotone) {
  double prev = 0.0;
  for (double x = -100.0; x <= 100.0; x += 0.01) {
    const double w = blend_sigmoid(x);
    EXPECT_GT(w, 0.0);
    EXPECT_LT(w, 1.0);
    EXPECT_GE(w, prev);
    prev = w;
    const BlendPair a = blend_pair(x);
    const BlendPair b = blend_pair(-x);
    EXPECT_EQ(a.mov, b.base);
    EXPECT_EQ(a.base, b.mov);
  }
  EXPECT_NEAR(blend_sigmoid(3.0), sigmoid_ref(3.0), 1e-15);
}

TEST(RenderPred, EmptyMovableMatchesBase) {
  const Camera cam = simple_camera(32, 40);
  const TriMesh base = quad(-0.4, -0.4, 0.4, 0.4, 2.0, Rgb(0.1, 0.5, 0.9));
  const BlendOutput out = render_pred(base, TriMesh{}, cam, kDefaultBeta, kWhite);
  const Image hard = rasterize(base, cam, kWhite).color;
  for (std::size_t i = 0; i < hard.data().size(); ++i) {
    EXPECT_NEAR(out.image.data()[i], hard.data()[i], 4.6e-5);
  }
}

TEST(RenderPred, IdenticalPartsReproduceRender) {
  Rng rng(5);
  const Camera cam = simple_camera(32, 40);
  const TriMesh part = random_part(rng, 8, 1.5, 3.0);
  const BlendOutput out = render_pred(part, part, cam, kDefaultBeta, kWhite);
  EXPECT_EQ(out.image, rasterize(part, cam, kWhite).color);
}

TEST(RenderPred, LargeBetaIsHardComposite) {
  const Camera cam = simple_camera(32, 40);
  const TriMesh base = quad(-2, -2, 2, 2, 2.0, Rgb(0.1, 0.2, 0.3));
  const TriMesh mov = quad(-0.3, -0.3, 0.5, 0.5, 1.9, Rgb(0.8, 0.7, 0.6));
  const BlendOutput out = render_pred(base, mov, cam, 1e5, kWhite);
  const Image hard = hard_composite(rasterize(mov, cam, kWhite), rasterize(base, cam, kWhite));
  for (std::size_t i = 0; i < hard.data().size(); ++i) {
    EXPECT_NEAR(out.image.data()[i], hard.data()[i], 1e-6);
  }
}

TEST(RenderPred, HardLimitSwapSymmetryOnRandomScenes) {
  Rng rng(77);
  const Camera cam = simple_camera(32, 40);
  for (int trial = 0; trial < 20; ++trial) {
    const TriMesh a = random_part(rng, 6, 1.5, 2.5);
    const TriMesh b = random_part(rng, 6, 1.5, 2.5);
    const RenderTarget ta = rasterize(a, cam, kWhite);
    const RenderTarget tb = rasterize(b, cam, kWhite);
    const BlendOutput ab = soft_blend(ta, tb, kDefaultBeta);
    const BlendOutput ba = soft_blend(tb, ta, kDefaultBeta);
    EXPECT_EQ(ab.image, ba.image);
    const Image hard = hard_composite(ta, tb);
    for (std::size_t p = 0; p < ta.proximity.size(); ++p) {
      EXPECT_GT(ab.weights[p], 0.0);
      EXPECT_LT(ab.weights[p], 1.0);
      if (std::abs(ta.proximity[p] - tb.proximity[p]) < 0.02) continue;
      for (int c = 0; c < 3; ++c) {
        EXPECT_NEAR(ab.image.data()[p * 3 + c], hard.data()[p * 3 + c], 1e-3);
      }
    }
  }
}

TEST(ImageLoss, Examples) {
  const Image zeros(4, 4, 3, 0.0);
  const Image ones(4, 4, 3, 1.0);
  EXPECT_EQ(image_loss(ones, ones), 0.0);
  EXPECT_EQ(image_loss(zeros, ones), 1.0);
  Image half = zeros;
  for (int y = 0; y < 2; ++y)
    for (int x = 0; x < 4; ++x)
      for (int c = 0; c < 3; ++c) half.at(x, y, c) = 1.0;
  EXPECT_EQ(image_loss(half, zeros), 0.5);
  EXPECT_THROW(image_loss(zeros, Image(4, 3, 3)), Error);
}

TEST(Backward, ZeroAtOptimum) {
  Rng rng(1);
  SmoothScene s = smooth_scene(rng);
  s.ref = render_pred(s.base, s.mov, s.camera, kDefaultBeta, kWhite).image;
  for (const Vec3& g : backward(s.base, s.mov, s.camera, kDefaultBeta, s.ref, kWhite)) {
    EXPECT_EQ(g, Vec3::Zero());
  }
}

TEST(Backward, PushesMovableBehindWhenReferenceShowsBase) {
  const Camera cam = simple_camera(32, 40);
  const TriMesh base = quad(-3, -3, 3, 3, 2.005, Rgb(0.1, 0.1, 0.1));
  TriMesh mov = big_triangle(2.0, Rgb(0.9, 0.9, 0.9));
  const Image ref = rasterize(base, cam, kWhite).color;
  const std::vector<Vec3> g = backward(base, mov, cam, kDefaultBeta, ref, kWhite);
  ASSERT_EQ(g.size(), 3u);
  double dz = 0.0;
  for (const Vec3& v : g) dz += v.z();
  EXPECT_LT(dz, 0.0);
  for (auto& v : mov.vertices) v.z() += 1e-3;
  const double before =
      image_loss(render_pred(base, big_triangle(2.0, Rgb(0.9, 0.9, 0.9)), cam, kDefaultBeta, kWhite).image, ref);
  EXPECT_LT(image_loss(render_pred(base, mov, cam, kDefaultBeta, kWhite).image, ref), before);
}

TEST(Backward, MatchesCentralDifferences) {
  Rng rng(2);
  const double h = 1e-4;
  for (int trial = 0; trial < 5; ++trial) {
    const SmoothScene s = smooth_scene(rng);
    const std::vector<Vec3> g = backward(s.base, s.mov, s.camera, kDefaultBeta, s.ref, kWhite);
    // Vertices 0 and 2 span the shared diagonal; moving them sideways changes
    // which face covers a pixel, so only their depth is probed.
    std::vector<double> an;
    std::vector<double> fd;
    for (std::size_t v = 0; v < g.size(); ++v) {
      for (int k = 0; k < 3; ++k) {
        if (k < 2 && (v == 0 || v == 2)) continue;
        TriMesh up = s.mov;
        TriMesh down = s.mov;
        up.vertices[v][k] += h;
        down.vertices[v][k] -= h;
        fd.push_back((loss_of(s, up) - loss_of(s, down)) / (2 * h));
        an.push_back(g[v][k]);
        if (k == 2) EXPECT_LT(test::rel_error(an.back(), fd.back(), 1e-9), 1e-3);
      }
    }
    const Eigen::Map<Eigen::VectorXd> a(an.data(), static_cast<Eigen::Index>(an.size()));
    const Eigen::Map<Eigen::VectorXd> f(fd.data(), static_cast<Eigen::Index>(fd.size()));
    EXPECT_LT((a - f).norm() / f.norm(), 1e-3);
  }
}

TEST(BlendLossEvaluator, AgreesWithRenderPredAndBackward) {
  Rng rng(9);
  for (int trial = 0; trial < 5; ++trial) {
    const SmoothScene s = smooth_scene(rng);
    BlendLossEvaluator ev(s.base, s.camera, kDefaultBeta, kWhite);
    const auto frame = ev.prepare(s.ref);
    std::vector<Vec3> grad;
    const double loss = ev.evaluate(s.mov, frame, &grad);
    EXPECT_NEAR(loss, loss_of(s, s.mov), 1e-12);
    const std::vector<Vec3> g = backward(s.base, s.mov, s.camera, kDefaultBeta, s.ref, kWhite);
    ASSERT_EQ(grad.size(), g.size());
    for (std::size_t i = 0; i < g.size(); ++i) EXPECT_LE((grad[i] - g[i]).norm(), 1e-12);
  }
  // Partially covering movable part over a random base.
  const Camera cam = simple_camera(32, 40);
  for (int trial = 0; trial < 10; ++trial) {
    const TriMesh base = random_part(rng, 5, 2.0, 3.0);
    const TriMesh mov = random_part(rng, 5, 1.5, 2.5);
    Image ref(32, 32, 3);
    for (double& v : ref.data()) v = rng.uniform();
    BlendLossEvaluator ev(base, cam, kDefaultBeta, kWhite);
    const double loss = ev.evaluate(mov, ev.prepare(ref), nullptr);
    EXPECT_NEAR(loss, image_loss(render_pred(base, mov, cam, kDefaultBeta, kWhite).image, ref), 1e-12);
  }
}

TEST(BlendLossEvaluator, EdgeTermsOnlyAddBoundaryContributions) {
  Rng rng(4);
  SmoothScene s = smooth_scene(rng);
  s.mov.face_colors[1] = s.mov.face_colors[0];
  for (auto& v : s.mov.vertices) v.z() = 2.02 + 0.003 * v.x() + 0.002 * v.y();
  BlendLossEvaluator ev(s.base, s.camera, kDefaultBeta, kWhite);
  const auto frame = ev.prepare(s.ref);
  std::vector<Vec3> plain;
  std::vector<Vec3> edged;
  const double l0 = ev.evaluate(s.mov, frame, &plain);
  const double l1 = ev.evaluate(s.mov, frame, &edged, {.edge_terms = true});
  EXPECT_EQ(l0, l1);
  // One planar, single-colored part with no silhouette in view.
  for (std::size_t i = 0; i < plain.size(); ++i) EXPECT_LE((plain[i] - edged[i]).norm(), 1e-12);
}

TEST(Visualization, ProximityAndWeightImages) {
  const Camera cam = simple_camera(16, 20);
  const TriMesh m = quad(-0.2, -0.2, 0.2, 0.2, 2.0, kWhite);
  const RenderTarget t = rasterize(m, cam, kBlack);
  const Image prox = proximity_image(t);
  for (std::size_t p = 0; p < t.proximity.size(); ++p) {
    EXPECT_EQ(prox.data()[p], t.covered(p) ? 1.0 : 0.0);
  }
  const BlendOutput out = render_pred(m, m, cam, kDefaultBeta, kBlack);
  const Image weights = weight_image(out);
  for (double v : weights.data()) EXPECT_EQ(v, 0.5);
}
