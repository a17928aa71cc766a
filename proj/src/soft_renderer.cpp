#include "artic/soft_renderer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace artic {
namespace {

constexpr double kNearZ = 1e-9;

double edge_function(const Vec2& a, const Vec2& b, double px, double py) {
  return (b.x() - a.x()) * (py - a.y()) - (b.y() - a.y()) * (px - a.x());
}

// Edges owning pixel centers that fall exactly on them.
bool top_left(const Vec2& a, const Vec2& b) {
  const double dx = b.x() - a.x();
  const double dy = b.y() - a.y();
  return dy < 0.0 || (dy == 0.0 && dx > 0.0);
}

struct ScreenTriangle {
  std::array<Vec2, 3> s;
  std::array<double, 3> z;  // camera-space axial distance, all > kNearZ
  double area = 0.0;
  double sign = 1.0;
  std::array<bool, 3> owns_ties{};
};

bool setup_triangle(const Vec2& s0, const Vec2& s1, const Vec2& s2, double z0,
                    double z1, double z2, ScreenTriangle& tri) {
  if (z0 <= kNearZ || z1 <= kNearZ || z2 <= kNearZ) return false;
  tri.s = {s0, s1, s2};
  tri.z = {z0, z1, z2};
  tri.area = edge_function(s0, s1, s2.x(), s2.y());
  if (!(std::abs(tri.area) > 1e-14) || !std::isfinite(tri.area)) return false;
  tri.sign = tri.area > 0.0 ? 1.0 : -1.0;
  for (int k = 0; k < 3; ++k) {
    const Vec2& a = tri.s[(k + 1) % 3];
    const Vec2& b = tri.s[(k + 2) % 3];
    tri.owns_ties[k] = tri.sign > 0.0 ? top_left(a, b) : top_left(b, a);
  }
  return true;
}

// Calls fn(x, y, screen barycentrics, camera z) for every covered pixel
// center.
template <class Fn>
void scan_triangle(const ScreenTriangle& tri, int width, int height, Fn&& fn) {
  const double min_x = std::min({tri.s[0].x(), tri.s[1].x(), tri.s[2].x()});
  const double max_x = std::max({tri.s[0].x(), tri.s[1].x(), tri.s[2].x()});
  const double min_y = std::min({tri.s[0].y(), tri.s[1].y(), tri.s[2].y()});
  const double max_y = std::max({tri.s[0].y(), tri.s[1].y(), tri.s[2].y()});
  const int x0 = std::max(0, static_cast<int>(std::ceil(min_x - 0.5)));
  const int x1 = std::min(width - 1, static_cast<int>(std::floor(max_x - 0.5)));
  const int y0 = std::max(0, static_cast<int>(std::ceil(min_y - 0.5)));
  const int y1 = std::min(height - 1, static_cast<int>(std::floor(max_y - 0.5)));
  if (x0 > x1 || y0 > y1) return;

  const double inv_area = 1.0 / tri.area;
  for (int y = y0; y <= y1; ++y) {
    const double py = y + 0.5;
    for (int x = x0; x <= x1; ++x) {
      const double px = x + 0.5;
      std::array<double, 3> e;
      bool inside = true;
      for (int k = 0; k < 3 && inside; ++k) {
        e[k] = edge_function(tri.s[(k + 1) % 3], tri.s[(k + 2) % 3], px, py);
        const double oriented = e[k] * tri.sign;
        inside = oriented > 0.0 || (oriented == 0.0 && tri.owns_ties[k]);
      }
      if (!inside) continue;
      const Vec3 b(e[0] * inv_area, e[1] * inv_area, e[2] * inv_area);
      const double inv_z = b[0] / tri.z[0] + b[1] / tri.z[1] + b[2] / tri.z[2];
      fn(x, y, b, 1.0 / inv_z);
    }
  }
}

// Non-strict containment of a pixel center, used for edge pairing.
bool contains(const ScreenTriangle& tri, double px, double py) {
  for (int k = 0; k < 3; ++k) {
    if (edge_function(tri.s[(k + 1) % 3], tri.s[(k + 2) % 3], px, py) *
            tri.sign < 0.0) {
      return false;
    }
  }
  return true;
}

Vec3 pixel_ray(const Camera& camera, double px, double py) {
  return {(px - camera.principal().x()) / camera.focal().x(),
          (py - camera.principal().y()) / camera.focal().y(), 1.0};
}

// Axial distance where the pixel ray meets the triangle's plane. The
// derivative with respect to vertex k is (N_k - Z * D_k) / (n . r) with
// N_k = V_{k+1} x V_{k+2} and D_k = (V_{k+1} - V_{k+2}) x r.
double plane_depth(const Vec3& v0, const Vec3& v1, const Vec3& v2,
                   const Vec3& ray) {
  const Vec3 n = (v1 - v0).cross(v2 - v0);
  const double denom = n.dot(ray);
  if (std::abs(denom) < 1e-300) return std::numeric_limits<double>::infinity();
  return n.dot(v0) / denom;
}

void plane_depth_grad(const std::array<Vec3, 3>& v, const Vec3& ray,
                      double depth, std::array<Vec3, 3>& out) {
  const Vec3 n = (v[1] - v[0]).cross(v[2] - v[0]);
  const double denom = n.dot(ray);
  for (int k = 0; k < 3; ++k) {
    const Vec3& a = v[(k + 1) % 3];
    const Vec3& b = v[(k + 2) % 3];
    out[k] = (a.cross(b) - depth * (a - b).cross(ray)) / denom;
  }
}

double abs_diff_sum(const double* color, const double* ref) {
  return std::abs(color[0] - ref[0]) + std::abs(color[1] - ref[1]) +
         std::abs(color[2] - ref[2]);
}

double sign_of(double v) { return (v > 0.0) - (v < 0.0); }

}  // namespace

BlendPair blend_pair(double x) {
  const double c = std::clamp(x, -60.0, 60.0);
  const double e = std::exp(-std::abs(c));
  const double hi = std::min(1.0 / (1.0 + e), std::nextafter(1.0, 0.0));
  const double lo = e / (1.0 + e);
  return c >= 0.0 ? BlendPair{hi, lo} : BlendPair{lo, hi};
}

double blend_sigmoid(double x) { return blend_pair(x).mov; }

RenderTarget rasterize(const TriMesh& mesh, const Camera& camera,
                       const Rgb& background) {
  const int w = camera.width();
  const int h = camera.height();
  const std::size_t n = camera.pixel_count();
  RenderTarget out;
  out.color = Image(w, h, 3);
  for (std::size_t p = 0; p < n; ++p) {
    for (int c = 0; c < 3; ++c) out.color.data()[p * 3 + c] = background[c];
  }
  out.proximity.assign(n, kEmptyProximity);
  out.face_id.assign(n, kNoFace);
  out.barycentrics.assign(n, Vec3::Zero());

  std::vector<Vec3> cam(mesh.vertices.size());
  std::vector<Vec2> screen(mesh.vertices.size());
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    cam[i] = camera.to_camera(mesh.vertices[i]);
    screen[i] = Vec2(camera.focal().x() * cam[i].x() / cam[i].z() + camera.principal().x(),
                     camera.focal().y() * cam[i].y() / cam[i].z() + camera.principal().y());
  }

  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const Face& tri = mesh.faces[f];
    ScreenTriangle st;
    if (!setup_triangle(screen[tri[0]], screen[tri[1]], screen[tri[2]],
                        cam[tri[0]].z(), cam[tri[1]].z(), cam[tri[2]].z(), st)) {
      continue;
    }
    const Rgb color = mesh.face_color(f);
    scan_triangle(st, w, h, [&](int x, int y, const Vec3& b, double z) {
      const std::size_t p = static_cast<std::size_t>(y) * w + x;
      const double prox = -z;
      if (!(prox > out.proximity[p])) return;
      out.proximity[p] = prox;
      out.face_id[p] = static_cast<std::int32_t>(f);
      out.barycentrics[p] = Vec3(b[0] * z / st.z[0], b[1] * z / st.z[1],
                                 b[2] * z / st.z[2]);
      for (int c = 0; c < 3; ++c) out.color.data()[p * 3 + c] = color[c];
    });
  }
  return out;
}

BlendOutput soft_blend(const RenderTarget& mov, const RenderTarget& base,
                       double beta) {
  if (!(beta > 0.0)) fail(ErrorCode::kInvalidArgument, "beta must be positive");
  if (!mov.color.same_resolution(base.color)) {
    fail(ErrorCode::kInvalidArgument, "blend inputs differ in resolution");
  }
  const std::size_t n = mov.color.pixel_count();
  BlendOutput out;
  out.image = Image(mov.width(), mov.height(), 3);
  out.weights.resize(n);
  for (std::size_t p = 0; p < n; ++p) {
    const BlendPair w = blend_pair((mov.proximity[p] - base.proximity[p]) * beta);
    out.weights[p] = w.mov;
    for (int c = 0; c < 3; ++c) {
      const double v = w.mov * mov.color.data()[p * 3 + c] +
                       w.base * base.color.data()[p * 3 + c];
      out.image.data()[p * 3 + c] = std::clamp(v, 0.0, 1.0);
    }
  }
  return out;
}

BlendOutput render_pred(const TriMesh& base_mesh, const TriMesh& mov_mesh,
                        const Camera& camera, double beta,
                        const Rgb& background) {
  return soft_blend(rasterize(mov_mesh, camera, background),
                    rasterize(base_mesh, camera, background), beta);
}

Image hard_composite(const RenderTarget& mov, const RenderTarget& base) {
  if (!mov.color.same_resolution(base.color)) {
    fail(ErrorCode::kInvalidArgument, "composite inputs differ in resolution");
  }
  Image out(mov.width(), mov.height(), 3);
  for (std::size_t p = 0; p < mov.color.pixel_count(); ++p) {
    const Image& src =
        mov.proximity[p] >= base.proximity[p] ? mov.color : base.color;
    for (int c = 0; c < 3; ++c) out.data()[p * 3 + c] = src.data()[p * 3 + c];
  }
  return out;
}

double image_loss(const Image& pred, const Image& ref) {
  if (!pred.same_shape(ref)) {
    fail(ErrorCode::kInvalidArgument, "loss inputs differ in shape");
  }
  if (pred.data().empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.data().size(); ++i) {
    sum += std::abs(pred.data()[i] - ref.data()[i]);
  }
  return sum / static_cast<double>(pred.data().size());
}

std::vector<Vec3> backward(const TriMesh& base_mesh, const TriMesh& mov_mesh,
                           const Camera& camera, double beta, const Image& ref,
                           const Rgb& background) {
  BlendLossEvaluator evaluator(base_mesh, camera, beta, background);
  std::vector<Vec3> grad;
  evaluator.evaluate(mov_mesh, evaluator.prepare(ref), &grad);
  return grad;
}

Image proximity_image(const RenderTarget& target) {
  Image out(target.width(), target.height(), 1);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t p = 0; p < target.proximity.size(); ++p) {
    if (!target.covered(p)) continue;
    lo = std::min(lo, target.proximity[p]);
    hi = std::max(hi, target.proximity[p]);
  }
  const double span = hi > lo ? hi - lo : 1.0;
  for (std::size_t p = 0; p < target.proximity.size(); ++p) {
    if (!target.covered(p)) continue;
    out.data()[p] = hi > lo ? (target.proximity[p] - lo) / span : 1.0;
  }
  return out;
}

Image weight_image(const BlendOutput& blend) {
  Image out(blend.image.width(), blend.image.height(), 1);
  for (std::size_t p = 0; p < blend.weights.size(); ++p) {
    out.data()[p] = std::clamp(blend.weights[p], 0.0, 1.0);
  }
  return out;
}

// ---------------------------------------------------------------------------
// BlendLossEvaluator

BlendLossEvaluator::BlendLossEvaluator(const TriMesh& base_mesh,
                                       const Camera& camera, double beta,
                                       const Rgb& background)
    : camera_(camera),
      beta_(beta),
      background_(background),
      base_(rasterize(base_mesh, camera, background)) {
  if (!(beta > 0.0)) fail(ErrorCode::kInvalidArgument, "beta must be positive");
  RenderTarget empty = rasterize(TriMesh{}, camera, background);
  base_only_ = soft_blend(empty, base_, beta).image;
  mov_face_.assign(camera.pixel_count(), kNoFace);
  mov_prox_.assign(camera.pixel_count(), kEmptyProximity);
}

BlendLossEvaluator::Frame BlendLossEvaluator::prepare(const Image& ref) const {
  if (ref.channels() != 3 || ref.width() != camera_.width() ||
      ref.height() != camera_.height()) {
    fail(ErrorCode::kInvalidArgument,
         "reference frame does not match the camera resolution");
  }
  Frame frame{ref, 0.0};
  for (std::size_t i = 0; i < ref.data().size(); ++i) {
    frame.base_only_loss_sum += std::abs(base_only_.data()[i] - ref.data()[i]);
  }
  return frame;
}

double BlendLossEvaluator::evaluate(const TriMesh& mov, const Frame& frame,
                                    std::vector<Vec3>* grad,
                                    const Options& options) {
  const int w = camera_.width();
  const int h = camera_.height();
  const std::size_t nv = mov.vertices.size();
  const double norm = 1.0 / (3.0 * static_cast<double>(camera_.pixel_count()));

  // Clear the region touched by the previous call.
  for (int y = box_y0_; y <= box_y1_; ++y) {
    for (int x = box_x0_; x <= box_x1_; ++x) {
      const std::size_t p = static_cast<std::size_t>(y) * w + x;
      mov_face_[p] = kNoFace;
      mov_prox_[p] = kEmptyProximity;
    }
  }
  box_x0_ = w;
  box_y0_ = h;
  box_x1_ = -1;
  box_y1_ = -1;

  cam_vertices_.resize(nv);
  screen_.resize(nv);
  for (std::size_t i = 0; i < nv; ++i) {
    const Vec3 pc = camera_.to_camera(mov.vertices[i]);
    cam_vertices_[i] = pc;
    screen_[i] = Vec2(camera_.focal().x() * pc.x() / pc.z() + camera_.principal().x(),
                      camera_.focal().y() * pc.y() / pc.z() + camera_.principal().y());
  }

  std::vector<ScreenTriangle> tris(mov.faces.size());
  face_ok_.assign(mov.faces.size(), 0);
  for (std::size_t f = 0; f < mov.faces.size(); ++f) {
    const Face& t = mov.faces[f];
    if (!setup_triangle(screen_[t[0]], screen_[t[1]], screen_[t[2]],
                        cam_vertices_[t[0]].z(), cam_vertices_[t[1]].z(),
                        cam_vertices_[t[2]].z(), tris[f])) {
      continue;
    }
    face_ok_[f] = 1;
    scan_triangle(tris[f], w, h, [&](int x, int y, const Vec3&, double z) {
      const std::size_t p = static_cast<std::size_t>(y) * w + x;
      if (!(-z > mov_prox_[p])) return;
      mov_prox_[p] = -z;
      mov_face_[p] = static_cast<std::int32_t>(f);
      box_x0_ = std::min(box_x0_, x);
      box_x1_ = std::max(box_x1_, x);
      box_y0_ = std::min(box_y0_, y);
      box_y1_ = std::max(box_y1_, y);
    });
  }

  const double* ref = frame.ref.data().data();
  const double* base_col = base_.color.data().data();
  const double* base_only = base_only_.data().data();

  auto composite = [&](std::size_t p, const Rgb& col, double prox, double* out) {
    const BlendPair wt = blend_pair((prox - base_.proximity[p]) * beta_);
    for (int c = 0; c < 3; ++c) {
      out[c] = std::clamp(wt.mov * col[c] + wt.base * base_col[p * 3 + c], 0.0, 1.0);
    }
    return wt;
  };

  std::vector<Vec3> grad_cam;
  if (grad != nullptr) grad_cam.assign(nv, Vec3::Zero());

  double sum = frame.base_only_loss_sum;
  for (int y = box_y0_; y <= box_y1_; ++y) {
    for (int x = box_x0_; x <= box_x1_; ++x) {
      const std::size_t p = static_cast<std::size_t>(y) * w + x;
      const std::int32_t f = mov_face_[p];
      if (f == kNoFace) continue;
      const Rgb col = mov.face_color(static_cast<std::size_t>(f));
      double pred[3];
      const BlendPair wt = composite(p, col, mov_prox_[p], pred);
      sum += abs_diff_sum(pred, ref + p * 3) - abs_diff_sum(base_only + p * 3, ref + p * 3);

      if (grad == nullptr) continue;
      const double arg = (mov_prox_[p] - base_.proximity[p]) * beta_;
      if (std::abs(arg) >= 60.0) continue;
      double dl_dw = 0.0;
      for (int c = 0; c < 3; ++c) {
        dl_dw += sign_of(pred[c] - ref[p * 3 + c]) * (col[c] - base_col[p * 3 + c]);
      }
      const double dl_dprox = norm * dl_dw * beta_ * wt.mov * wt.base;
      if (dl_dprox == 0.0) continue;
      const Face& t = mov.faces[static_cast<std::size_t>(f)];
      const std::array<Vec3, 3> v{cam_vertices_[t[0]], cam_vertices_[t[1]],
                                  cam_vertices_[t[2]]};
      std::array<Vec3, 3> dz;
      plane_depth_grad(v, pixel_ray(camera_, x + 0.5, y + 0.5), -mov_prox_[p], dz);
      for (int k = 0; k < 3; ++k) grad_cam[t[k]] -= dl_dprox * dz[k];
    }
  }

  if (grad != nullptr && options.edge_terms && box_x1_ >= box_x0_) {
    // Color a pixel would take if covered by face f, or the base-only color.
    auto color_with = [&](std::size_t p, std::int32_t f, double* out) {
      if (f != kNoFace && face_ok_[static_cast<std::size_t>(f)]) {
        const Face& t = mov.faces[static_cast<std::size_t>(f)];
        const double px = static_cast<double>(p % static_cast<std::size_t>(w)) + 0.5;
        const double py = static_cast<double>(p / static_cast<std::size_t>(w)) + 0.5;
        const double z = plane_depth(cam_vertices_[t[0]], cam_vertices_[t[1]],
                                     cam_vertices_[t[2]], pixel_ray(camera_, px, py));
        if (std::isfinite(z) && z > kNearZ) {
          composite(p, mov.face_color(static_cast<std::size_t>(f)), -z, out);
          return;
        }
      }
      for (int c = 0; c < 3; ++c) out[c] = base_only[p * 3 + c];
    };
    auto current = [&](std::size_t p, double* out) {
      if (mov_face_[p] == kNoFace) {
        for (int c = 0; c < 3; ++c) out[c] = base_only[p * 3 + c];
      } else {
        composite(p, mov.face_color(static_cast<std::size_t>(mov_face_[p])),
                  mov_prox_[p], out);
      }
    };

    auto handle_pair = [&](int xa, int ya, int xb, int yb) {
      const std::size_t pa = static_cast<std::size_t>(ya) * w + xa;
      const std::size_t pb = static_cast<std::size_t>(yb) * w + xb;
      const std::int32_t fa = mov_face_[pa];
      const std::int32_t fb = mov_face_[pb];
      if (fa == fb) return;
      const bool a_in_b = fb != kNoFace &&
                          contains(tris[static_cast<std::size_t>(fb)], xa + 0.5, ya + 0.5);
      const bool b_in_a = fa != kNoFace &&
                          contains(tris[static_cast<std::size_t>(fa)], xb + 0.5, yb + 0.5);
      // The occluding face owns the separating edge; `c` is the pixel it
      // covers and `e` the pixel it would cover next.
      std::int32_t occluder;
      std::size_t pc, pe;
      Vec2 cc, ce;
      if (fa != kNoFace && (fb == kNoFace || !b_in_a)) {
        occluder = fa;
        pc = pa;
        pe = pb;
        cc = Vec2(xa + 0.5, ya + 0.5);
        ce = Vec2(xb + 0.5, yb + 0.5);
      } else if (fb != kNoFace && (fa == kNoFace || !a_in_b)) {
        occluder = fb;
        pc = pb;
        pe = pa;
        cc = Vec2(xb + 0.5, yb + 0.5);
        ce = Vec2(xa + 0.5, ya + 0.5);
      } else {
        return;
      }

      const ScreenTriangle& tri = tris[static_cast<std::size_t>(occluder)];
      const bool horizontal = ya == yb;
      const int along = horizontal ? 0 : 1;
      const int across = 1 - along;
      const double dir = ce[along] - cc[along];  // +-1
      int edge = -1;
      double k = 0.0;
      for (int ei = 0; ei < 3; ++ei) {
        const Vec2& a = tri.s[(ei + 1) % 3];
        const Vec2& b = tri.s[(ei + 2) % 3];
        const double span = b[across] - a[across];
        if (span == 0.0) continue;
        const double kk = (cc[across] - a[across]) / span;
        if (kk < 0.0 || kk > 1.0) continue;
        const double cr = a[along] + kk * (b[along] - a[along]);
        const double s = (cr - cc[along]) * dir;
        if (s < 0.0 || s > 1.0) continue;
        edge = ei;
        k = kk;
        break;
      }
      if (edge < 0) return;

      double cur_e[3], new_e[3], cur_c[3], without_c[3];
      current(pe, cur_e);
      color_with(pe, occluder, new_e);
      current(pc, cur_c);
      color_with(pc, mov_face_[pe], without_c);
      const double* re = ref + pe * 3;
      const double* rc = ref + pc * 3;
      const double dl_ds =
          0.5 * norm *
          ((abs_diff_sum(new_e, re) - abs_diff_sum(cur_e, re)) -
           (abs_diff_sum(without_c, rc) - abs_diff_sum(cur_c, rc)));
      if (dl_ds == 0.0) return;

      // s = (cross - cc) * dir with cross = a + k (b - a) along the pair axis.
      const Face& t = mov.faces[static_cast<std::size_t>(occluder)];
      const std::uint32_t ia = t[(edge + 1) % 3];
      const std::uint32_t ib = t[(edge + 2) % 3];
      const Vec2& a = screen_[ia];
      const Vec2& b = screen_[ib];
      const double span = b[across] - a[across];
      const double slope = (b[along] - a[along]) / span;
      Vec2 ds_da, ds_db;
      ds_da[along] = (1.0 - k) * dir;
      ds_db[along] = k * dir;
      ds_da[across] = slope * (k - 1.0) * dir;
      ds_db[across] = -slope * k * dir;

      auto push = [&](std::uint32_t vi, const Vec2& ds_dscreen) {
        const Vec3& pcam = cam_vertices_[vi];
        const double iz = 1.0 / pcam.z();
        const double fx = camera_.focal().x();
        const double fy = camera_.focal().y();
        const Vec3 du(fx * iz, 0.0, -fx * pcam.x() * iz * iz);
        const Vec3 dv(0.0, fy * iz, -fy * pcam.y() * iz * iz);
        grad_cam[vi] += dl_ds * (ds_dscreen.x() * du + ds_dscreen.y() * dv);
      };
      push(ia, ds_da);
      push(ib, ds_db);
    };

    const int x0 = std::max(0, box_x0_ - 1);
    const int x1 = std::min(w - 1, box_x1_ + 1);
    const int y0 = std::max(0, box_y0_ - 1);
    const int y1 = std::min(h - 1, box_y1_ + 1);
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        if (x + 1 <= x1) handle_pair(x, y, x + 1, y);
        if (y + 1 <= y1) handle_pair(x, y, x, y + 1);
      }
    }
  }

  if (grad != nullptr) {
    grad->assign(nv, Vec3::Zero());
    const Mat3 rt = camera_.pose().rotation.transpose();
    for (std::size_t i = 0; i < nv; ++i) (*grad)[i] = rt * grad_cam[i];
  }
  return std::max(sum, 0.0) * norm;
}

}  // namespace artic
