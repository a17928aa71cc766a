#include "artic/artic.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <new>
#include <string>

#include "artic/joint_optimizer.hpp"
#include "artic/part_segmentation.hpp"
#include "artic/serialization.hpp"
#include "artic/synth_eval.hpp"

struct artic_mesh {
  artic::TriMesh mesh;
};
struct artic_camera {
  artic::Camera camera;
};
struct artic_image {
  artic::Image image;
};
struct artic_frames {
  std::vector<artic_image> frames;
};
struct artic_features {
  artic::FaceFeatureSet features;
};
struct artic_segmentation {
  artic_mesh movable;
  artic_mesh base;
  std::vector<std::int32_t> labels;
  std::size_t mask_faces = 0;
};
struct artic_joint {
  artic::JointRecord record;
};
struct artic_estimate {
  artic_joint joint;
  std::vector<double> loss_history;
  double final_loss = 0.0;
  int restart_index = 0;
  std::string mlp_json;
};
struct artic_benchmark {
  artic::BenchmarkSummary summary;
  std::string csv;
  std::string text;
};

namespace {

thread_local std::string g_last_error;

artic_status to_status(artic::ErrorCode code) {
  switch (code) {
    case artic::ErrorCode::kInvalidArgument: return ARTIC_ERR_INVALID_ARGUMENT;
    case artic::ErrorCode::kIo: return ARTIC_ERR_IO;
    case artic::ErrorCode::kParse: return ARTIC_ERR_PARSE;
    case artic::ErrorCode::kValidation: return ARTIC_ERR_VALIDATION;
    case artic::ErrorCode::kSegmentation: return ARTIC_ERR_SEGMENTATION;
    case artic::ErrorCode::kNumeric: return ARTIC_ERR_NUMERIC;
  }
  return ARTIC_ERR_INTERNAL;
}

template <class Fn>
artic_status guard(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return ARTIC_OK;
  } catch (const artic::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return ARTIC_ERR_NO_MEMORY;
  } catch (const std::filesystem::filesystem_error& e) {
    g_last_error = e.what();
    return ARTIC_ERR_IO;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return ARTIC_ERR_INTERNAL;
  }
}

void require(bool ok, const char* what) {
  if (!ok) artic::fail(artic::ErrorCode::kInvalidArgument, what);
}

artic::JointType joint_type(artic_joint_type t) {
  require(t == ARTIC_JOINT_PRISMATIC || t == ARTIC_JOINT_REVOLUTE,
          "joint type must be prismatic or revolute");
  return t == ARTIC_JOINT_PRISMATIC ? artic::JointType::kPrismatic
                                    : artic::JointType::kRevolute;
}

artic::Rgb rgb(const double c[3]) { return {c[0], c[1], c[2]}; }

artic::OptimConfig optim_config(const artic_optim_config* c) {
  artic::OptimConfig o;
  if (c == nullptr) return o;
  o.iterations = c->iterations;
  o.warmup_iterations = c->warmup_iterations;
  o.restarts = c->restarts;
  o.finalists = c->finalists;
  o.lr_axis_dir = c->lr_axis_dir;
  o.lr_axis_pos = c->lr_axis_pos;
  o.lr_mlp = c->lr_mlp;
  o.beta = c->beta;
  o.seed = c->seed;
  o.threads = c->threads;
  o.edge_gradients = c->edge_gradients != 0;
  o.background = rgb(c->background);
  o.validate();
  return o;
}

std::vector<artic::Image> images(const artic_frames* frames) {
  std::vector<artic::Image> out;
  out.reserve(frames->frames.size());
  for (const auto& f : frames->frames) out.push_back(f.image);
  return out;
}

template <class T>
T* release(T value) {
  return new T(std::move(value));
}

}  // namespace

extern "C" {

const char* artic_version(void) { return ARTIC_VERSION_STRING; }

const char* artic_last_error(void) { return g_last_error.c_str(); }

const char* artic_status_string(artic_status status) {
  switch (status) {
    case ARTIC_OK: return "ok";
    case ARTIC_ERR_INVALID_ARGUMENT: return "invalid argument";
    case ARTIC_ERR_IO: return "i/o error";
    case ARTIC_ERR_PARSE: return "parse error";
    case ARTIC_ERR_VALIDATION: return "validation error";
    case ARTIC_ERR_SEGMENTATION: return "segmentation error";
    case ARTIC_ERR_NUMERIC: return "numeric error";
    case ARTIC_ERR_NO_MEMORY: return "out of memory";
    case ARTIC_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

// Meshes -------------------------------------------------------------------

artic_status artic_mesh_load(const char* path, artic_mesh** out) {
  return guard([&] {
    require(path != nullptr && out != nullptr, "null argument");
    *out = release(artic_mesh{artic::load_mesh(path)});
  });
}

artic_status artic_mesh_save(const artic_mesh* mesh, const char* path) {
  return guard([&] {
    require(mesh != nullptr && path != nullptr, "null argument");
    artic::save_mesh(mesh->mesh, path);
  });
}

size_t artic_mesh_vertex_count(const artic_mesh* mesh) {
  return mesh != nullptr ? mesh->mesh.vertices.size() : 0;
}

size_t artic_mesh_face_count(const artic_mesh* mesh) {
  return mesh != nullptr ? mesh->mesh.faces.size() : 0;
}

void artic_mesh_free(artic_mesh* mesh) { delete mesh; }

// Cameras ------------------------------------------------------------------

artic_status artic_camera_load(const char* path, artic_camera** out) {
  return guard([&] {
    require(path != nullptr && out != nullptr, "null argument");
    *out = release(artic_camera{artic::load_camera(path)});
  });
}

artic_status artic_camera_save(const artic_camera* camera, const char* path) {
  return guard([&] {
    require(camera != nullptr && path != nullptr, "null argument");
    artic::save_camera(camera->camera, path);
  });
}

int artic_camera_width(const artic_camera* camera) {
  return camera != nullptr ? camera->camera.width() : 0;
}

int artic_camera_height(const artic_camera* camera) {
  return camera != nullptr ? camera->camera.height() : 0;
}

void artic_camera_free(artic_camera* camera) { delete camera; }

// Images -------------------------------------------------------------------

artic_status artic_image_create(int width, int height, int channels,
                                const double* data, artic_image** out) {
  return guard([&] {
    require(out != nullptr, "null argument");
    require(width > 0 && height > 0 && (channels == 1 || channels == 3),
            "invalid image shape");
    artic::Image img(width, height, channels);
    if (data != nullptr) {
      std::copy(data, data + img.data().size(), img.data().begin());
    }
    img.validate();
    *out = release(artic_image{std::move(img)});
  });
}

artic_status artic_image_load(const char* path, artic_image** out) {
  return guard([&] {
    require(path != nullptr && out != nullptr, "null argument");
    *out = release(artic_image{artic::load_image(path)});
  });
}

artic_status artic_image_save(const artic_image* image, const char* path) {
  return guard([&] {
    require(image != nullptr && path != nullptr, "null argument");
    artic::save_image(image->image, path);
  });
}

int artic_image_width(const artic_image* image) {
  return image != nullptr ? image->image.width() : 0;
}
int artic_image_height(const artic_image* image) {
  return image != nullptr ? image->image.height() : 0;
}
int artic_image_channels(const artic_image* image) {
  return image != nullptr ? image->image.channels() : 0;
}
const double* artic_image_data(const artic_image* image) {
  return image != nullptr ? image->image.data().data() : nullptr;
}

void artic_image_free(artic_image* image) { delete image; }

// Frames -------------------------------------------------------------------

artic_status artic_frames_load_dir(const char* dir, artic_frames** out) {
  return guard([&] {
    require(dir != nullptr && out != nullptr, "null argument");
    auto frames = std::make_unique<artic_frames>();
    for (auto& img : artic::load_frames(dir)) frames->frames.push_back({std::move(img)});
    *out = frames.release();
  });
}

artic_status artic_frames_save_dir(const artic_frames* frames, const char* dir) {
  return guard([&] {
    require(frames != nullptr && dir != nullptr, "null argument");
    std::filesystem::create_directories(dir);
    char name[32];
    for (std::size_t t = 0; t < frames->frames.size(); ++t) {
      std::snprintf(name, sizeof(name), "frame_%03zu.ppm", t + 1);
      artic::save_image(frames->frames[t].image, std::filesystem::path(dir) / name);
    }
  });
}

size_t artic_frames_count(const artic_frames* frames) {
  return frames != nullptr ? frames->frames.size() : 0;
}

const artic_image* artic_frames_get(const artic_frames* frames, size_t index) {
  if (frames == nullptr || index >= frames->frames.size()) return nullptr;
  return &frames->frames[index];
}

void artic_frames_free(artic_frames* frames) { delete frames; }

// Features -----------------------------------------------------------------

artic_status artic_features_load(const char* path, artic_features** out) {
  return guard([&] {
    require(path != nullptr && out != nullptr, "null argument");
    *out = release(artic_features{artic::load_features(path)});
  });
}

artic_status artic_features_geometric(const artic_mesh* mesh, double scale,
                                      artic_features** out) {
  return guard([&] {
    require(mesh != nullptr && out != nullptr, "null argument");
    *out = release(artic_features{artic::geometric_fallback_features(mesh->mesh, scale)});
  });
}

size_t artic_features_count(const artic_features* features) {
  return features != nullptr ? features->features.size() : 0;
}

size_t artic_features_dim(const artic_features* features) {
  return features != nullptr ? features->features.dim() : 0;
}

void artic_features_free(artic_features* features) { delete features; }

// Segmentation -------------------------------------------------------------

artic_status artic_segment(const artic_mesh* mesh, const artic_features* features,
                           const artic_camera* camera, const artic_image* mask,
                           int max_iters, artic_segmentation** out) {
  return guard([&] {
    require(mesh && features && camera && mask && out, "null argument");
    require(max_iters >= 0, "max_iters must be non-negative");
    artic::Segmentation seg = artic::segment_movable(
        mesh->mesh, features->features, camera->camera, mask->image, max_iters);
    auto result = std::make_unique<artic_segmentation>();
    result->movable.mesh = std::move(seg.movable);
    result->base.mesh = std::move(seg.base);
    result->mask_faces = seg.mask_faces.size();
    result->labels.reserve(seg.labels.size());
    for (auto l : seg.labels) result->labels.push_back(static_cast<std::int32_t>(l));
    *out = result.release();
  });
}

const artic_mesh* artic_segmentation_movable(const artic_segmentation* seg) {
  return seg != nullptr ? &seg->movable : nullptr;
}

const artic_mesh* artic_segmentation_base(const artic_segmentation* seg) {
  return seg != nullptr ? &seg->base : nullptr;
}

const int32_t* artic_segmentation_labels(const artic_segmentation* seg, size_t* count) {
  if (count != nullptr) *count = seg != nullptr ? seg->labels.size() : 0;
  return seg != nullptr ? seg->labels.data() : nullptr;
}

size_t artic_segmentation_mask_face_count(const artic_segmentation* seg) {
  return seg != nullptr ? seg->mask_faces : 0;
}

void artic_segmentation_free(artic_segmentation* seg) { delete seg; }

// Joints -------------------------------------------------------------------

artic_status artic_joint_create(artic_joint_type type, const double axis_pos[3],
                                const double axis_dir[3], const double* thetas,
                                size_t theta_count, artic_joint** out) {
  return guard([&] {
    require(axis_pos && axis_dir && out, "null argument");
    require(theta_count == 0 || thetas != nullptr, "null thetas");
    artic::JointRecord r;
    r.joint.type = joint_type(type);
    r.joint.axis_pos = {axis_pos[0], axis_pos[1], axis_pos[2]};
    r.joint.axis_dir = {axis_dir[0], axis_dir[1], axis_dir[2]};
    r.joint.validate();
    r.thetas.assign(thetas, thetas + theta_count);
    if (!r.thetas.empty() && r.thetas.front() != 0.0) {
      artic::fail(artic::ErrorCode::kValidation, "thetas must start at 0");
    }
    *out = release(artic_joint{std::move(r)});
  });
}

artic_status artic_joint_load(const char* path, artic_joint** out) {
  return guard([&] {
    require(path != nullptr && out != nullptr, "null argument");
    *out = release(artic_joint{artic::load_joint(path)});
  });
}

artic_status artic_joint_save(const artic_joint* joint, const char* path) {
  return guard([&] {
    require(joint != nullptr && path != nullptr, "null argument");
    artic::save_joint(joint->record, path);
  });
}

artic_joint_type artic_joint_get_type(const artic_joint* joint) {
  return joint != nullptr && joint->record.joint.type == artic::JointType::kPrismatic
             ? ARTIC_JOINT_PRISMATIC
             : ARTIC_JOINT_REVOLUTE;
}

void artic_joint_axis(const artic_joint* joint, double axis_pos[3], double axis_dir[3]) {
  if (joint == nullptr) return;
  for (int k = 0; k < 3; ++k) {
    if (axis_pos != nullptr) axis_pos[k] = joint->record.joint.axis_pos[k];
    if (axis_dir != nullptr) axis_dir[k] = joint->record.joint.axis_dir[k];
  }
}

const double* artic_joint_thetas(const artic_joint* joint, size_t* count) {
  if (count != nullptr) *count = joint != nullptr ? joint->record.thetas.size() : 0;
  return joint != nullptr ? joint->record.thetas.data() : nullptr;
}

void artic_joint_free(artic_joint* joint) { delete joint; }

// Rendering ----------------------------------------------------------------

artic_status artic_render(const artic_mesh* base, const artic_mesh* movable,
                          const artic_camera* camera, const artic_joint* joint,
                          int frame_count, const double background[3],
                          artic_frames** out) {
  return guard([&] {
    require(base && movable && camera && joint && background && out, "null argument");
    require(frame_count >= 1, "frame count must be at least 1");
    const auto& stored = joint->record.thetas;
    require(!stored.empty(), "joint has no thetas");
    std::vector<double> thetas(static_cast<std::size_t>(frame_count), 0.0);
    if (stored.size() == thetas.size()) {
      thetas = stored;
    } else if (frame_count > 1) {
      const double m = static_cast<double>(stored.size() - 1);
      for (int i = 0; i < frame_count; ++i) {
        const double x = m * i / (frame_count - 1);
        const auto lo = static_cast<std::size_t>(std::floor(x));
        const std::size_t hi = std::min(lo + 1, stored.size() - 1);
        const double a = x - static_cast<double>(lo);
        thetas[static_cast<std::size_t>(i)] = (1.0 - a) * stored[lo] + a * stored[hi];
      }
    }
    base->mesh.validate();
    movable->mesh.validate();
    auto frames = std::make_unique<artic_frames>();
    for (auto& img : artic::render_articulation(base->mesh, movable->mesh, camera->camera,
                                                joint->record.joint, thetas,
                                                rgb(background))) {
      frames->frames.push_back({std::move(img)});
    }
    *out = frames.release();
  });
}

// Estimation ---------------------------------------------------------------

void artic_optim_config_default(artic_optim_config* config) {
  if (config == nullptr) return;
  const artic::OptimConfig d;
  config->iterations = d.iterations;
  config->warmup_iterations = d.warmup_iterations;
  config->restarts = d.restarts;
  config->finalists = d.finalists;
  config->lr_axis_dir = d.lr_axis_dir;
  config->lr_axis_pos = d.lr_axis_pos;
  config->lr_mlp = d.lr_mlp;
  config->beta = d.beta;
  config->seed = d.seed;
  config->threads = d.threads;
  config->edge_gradients = d.edge_gradients ? 1 : 0;
  for (int k = 0; k < 3; ++k) config->background[k] = d.background[k];
}

artic_status artic_estimate_run(const artic_mesh* base, const artic_mesh* movable,
                                const artic_frames* frames, const artic_camera* camera,
                                artic_joint_type type, const artic_optim_config* config,
                                artic_estimate** out) {
  return guard([&] {
    require(base && movable && frames && camera && out, "null argument");
    const artic::OptimConfig o = optim_config(config);
    const std::vector<artic::Image> imgs = images(frames);
    artic::OptimResult r;
    if (type == ARTIC_JOINT_AUTO) {
      r = artic::select_joint_type(base->mesh, movable->mesh, imgs, camera->camera, o).first;
    } else {
      r = artic::estimate_joint(base->mesh, movable->mesh, imgs, camera->camera,
                                joint_type(type), o);
    }
    auto est = std::make_unique<artic_estimate>();
    est->joint.record = {r.joint, r.profile.thetas};
    est->loss_history = std::move(r.loss_history);
    est->final_loss = r.final_loss;
    est->restart_index = r.restart_index;
    est->mlp_json = artic::mlp_to_json(r.mlp);
    *out = est.release();
  });
}

const artic_joint* artic_estimate_joint(const artic_estimate* est) {
  return est != nullptr ? &est->joint : nullptr;
}

const double* artic_estimate_loss_history(const artic_estimate* est, size_t* count) {
  if (count != nullptr) *count = est != nullptr ? est->loss_history.size() : 0;
  return est != nullptr ? est->loss_history.data() : nullptr;
}

double artic_estimate_final_loss(const artic_estimate* est) {
  return est != nullptr ? est->final_loss : 0.0;
}

int artic_estimate_restart_index(const artic_estimate* est) {
  return est != nullptr ? est->restart_index : -1;
}

const char* artic_estimate_mlp_json(const artic_estimate* est) {
  return est != nullptr ? est->mlp_json.c_str() : "";
}

void artic_estimate_free(artic_estimate* est) { delete est; }

// Synthetic data and evaluation --------------------------------------------

void artic_synth_config_default(artic_synth_config* config) {
  if (config == nullptr) return;
  const artic::SynthConfig d;
  config->scenes = 20;
  config->type = ARTIC_SYNTH_MIXED;
  config->seed = 0;
  config->frames = d.frames;
  config->resolution = d.resolution;
  for (int k = 0; k < 3; ++k) config->background[k] = d.background[k];
}

artic_status artic_synth(const artic_synth_config* config, const char* out_dir) {
  return guard([&] {
    require(config != nullptr && out_dir != nullptr, "null argument");
    require(config->scenes >= 1, "scene count must be at least 1");
    require(config->frames >= 2, "frame count must be at least 2");
    require(config->resolution >= 8, "resolution must be at least 8");
    require(config->type >= ARTIC_SYNTH_PRISMATIC && config->type <= ARTIC_SYNTH_MIXED,
            "invalid synth type");
    artic::SynthConfig sc;
    sc.frames = config->frames;
    sc.resolution = config->resolution;
    sc.background = rgb(config->background);
    char name[32];
    for (int i = 0; i < config->scenes; ++i) {
      const auto index = static_cast<std::uint64_t>(i);
      artic::JointType type = config->type == ARTIC_SYNTH_PRISMATIC
                                  ? artic::JointType::kPrismatic
                                  : artic::JointType::kRevolute;
      if (config->type == ARTIC_SYNTH_MIXED) {
        artic::Rng pick = artic::Rng::stream(config->seed, "synth/type", index);
        type = pick.uniform() < 0.5 ? artic::JointType::kPrismatic
                                    : artic::JointType::kRevolute;
      }
      artic::Rng rng = artic::Rng::stream(config->seed, "synth/scene", index);
      const artic::ArticulatedAsset asset = artic::make_asset(rng, type, sc.resolution);
      const artic::GroundTruthArticulation gt =
          artic::sample_articulation(rng, type, asset, sc);
      std::snprintf(name, sizeof(name), "scene_%03d", i);
      artic::write_scene(gt, asset.kind, std::filesystem::path(out_dir) / name,
                         sc.background,
                         artic::Rng::derive_seed(config->seed, "synth/features", index));
    }
  });
}

artic_status artic_benchmark_run(const char* scene_dir, const artic_optim_config* config,
                                 int seed_with_gt, artic_benchmark** out) {
  return guard([&] {
    require(scene_dir != nullptr && out != nullptr, "null argument");
    artic::BenchmarkConfig bc;
    bc.optim = optim_config(config);
    bc.background = bc.optim.background;
    bc.seed_with_gt = seed_with_gt != 0;
    auto bench = std::make_unique<artic_benchmark>();
    bench->summary = artic::run_benchmark(scene_dir, bc);
    bench->csv = artic::report_csv(bench->summary);
    bench->text = artic::summary_text(bench->summary);
    *out = bench.release();
  });
}

size_t artic_benchmark_scene_count(const artic_benchmark* bench) {
  return bench != nullptr ? bench->summary.reports.size() : 0;
}

size_t artic_benchmark_failed_count(const artic_benchmark* bench) {
  return bench != nullptr ? static_cast<size_t>(bench->summary.failed) : 0;
}

const char* artic_benchmark_csv(const artic_benchmark* bench) {
  return bench != nullptr ? bench->csv.c_str() : "";
}

const char* artic_benchmark_summary(const artic_benchmark* bench) {
  return bench != nullptr ? bench->text.c_str() : "";
}

void artic_benchmark_free(artic_benchmark* bench) { delete bench; }

artic_status artic_psnr(const artic_image* pred, const artic_image* ref, double* out) {
  return guard([&] {
    require(pred && ref && out, "null argument");
    *out = artic::psnr(pred->image, ref->image);
  });
}

artic_status artic_ssim(const artic_image* pred, const artic_image* ref, double* out) {
  return guard([&] {
    require(pred && ref && out, "null argument");
    *out = artic::ssim(pred->image, ref->image);
  });
}

}  // extern "C"
