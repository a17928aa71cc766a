#ifndef ARTIC_ARTIC_H
#define ARTIC_ARTIC_H

#include <stddef.h>
#include <stdint.h>

#if defined(ARTIC_BUILDING_LIBRARY)
#define ARTIC_API __attribute__((visibility("default")))
#else
#define ARTIC_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum artic_status {
  ARTIC_OK = 0,
  ARTIC_ERR_INVALID_ARGUMENT = 1,
  ARTIC_ERR_IO = 2,
  ARTIC_ERR_PARSE = 3,
  ARTIC_ERR_VALIDATION = 4,
  ARTIC_ERR_SEGMENTATION = 5,
  ARTIC_ERR_NUMERIC = 6,
  ARTIC_ERR_NO_MEMORY = 7,
  ARTIC_ERR_INTERNAL = 8
} artic_status;

typedef enum artic_joint_type {
  ARTIC_JOINT_PRISMATIC = 0,
  ARTIC_JOINT_REVOLUTE = 1,
  ARTIC_JOINT_AUTO = 2 /* estimation only: pick by final loss */
} artic_joint_type;

typedef struct artic_mesh artic_mesh;
typedef struct artic_camera artic_camera;
typedef struct artic_image artic_image;
typedef struct artic_frames artic_frames;
typedef struct artic_features artic_features;
typedef struct artic_segmentation artic_segmentation;
typedef struct artic_joint artic_joint;
typedef struct artic_estimate artic_estimate;
typedef struct artic_benchmark artic_benchmark;

ARTIC_API const char* artic_version(void);
/* Message of the last failed call on this thread; "" if none. */
ARTIC_API const char* artic_last_error(void);
ARTIC_API const char* artic_status_string(artic_status status);

/* Meshes (OBJ). */
ARTIC_API artic_status artic_mesh_load(const char* path, artic_mesh** out);
ARTIC_API artic_status artic_mesh_save(const artic_mesh* mesh, const char* path);
ARTIC_API size_t artic_mesh_vertex_count(const artic_mesh* mesh);
ARTIC_API size_t artic_mesh_face_count(const artic_mesh* mesh);
ARTIC_API void artic_mesh_free(artic_mesh* mesh);

/* Cameras (JSON). */
ARTIC_API artic_status artic_camera_load(const char* path, artic_camera** out);
ARTIC_API artic_status artic_camera_save(const artic_camera* camera, const char* path);
ARTIC_API int artic_camera_width(const artic_camera* camera);
ARTIC_API int artic_camera_height(const artic_camera* camera);
ARTIC_API void artic_camera_free(artic_camera* camera);

/* Images (binary PPM/PGM), values in [0,1], row-major, channel-interleaved. */
ARTIC_API artic_status artic_image_create(int width, int height, int channels,
                                          const double* data, artic_image** out);
ARTIC_API artic_status artic_image_load(const char* path, artic_image** out);
ARTIC_API artic_status artic_image_save(const artic_image* image, const char* path);
ARTIC_API int artic_image_width(const artic_image* image);
ARTIC_API int artic_image_height(const artic_image* image);
ARTIC_API int artic_image_channels(const artic_image* image);
ARTIC_API const double* artic_image_data(const artic_image* image);
ARTIC_API void artic_image_free(artic_image* image);

/* Frame sequences. Loading reads frame_*.ppm in name order. */
ARTIC_API artic_status artic_frames_load_dir(const char* dir, artic_frames** out);
ARTIC_API artic_status artic_frames_save_dir(const artic_frames* frames, const char* dir);
ARTIC_API size_t artic_frames_count(const artic_frames* frames);
/* Borrowed; valid until the sequence is freed. */
ARTIC_API const artic_image* artic_frames_get(const artic_frames* frames, size_t index);
ARTIC_API void artic_frames_free(artic_frames* frames);

/* Per-face features. */
ARTIC_API artic_status artic_features_load(const char* path, artic_features** out);
ARTIC_API artic_status artic_features_geometric(const artic_mesh* mesh, double scale,
                                                artic_features** out);
ARTIC_API size_t artic_features_count(const artic_features* features);
ARTIC_API size_t artic_features_dim(const artic_features* features);
ARTIC_API void artic_features_free(artic_features* features);

/* Mask-prompted part segmentation. */
ARTIC_API artic_status artic_segment(const artic_mesh* mesh, const artic_features* features,
                                     const artic_camera* camera, const artic_image* mask,
                                     int max_iters, artic_segmentation** out);
ARTIC_API const artic_mesh* artic_segmentation_movable(const artic_segmentation* seg);
ARTIC_API const artic_mesh* artic_segmentation_base(const artic_segmentation* seg);
/* One label per input face: 0 base, 1 movable. */
ARTIC_API const int32_t* artic_segmentation_labels(const artic_segmentation* seg,
                                                   size_t* count);
ARTIC_API size_t artic_segmentation_mask_face_count(const artic_segmentation* seg);
ARTIC_API void artic_segmentation_free(artic_segmentation* seg);

/* Joints with a per-frame motion profile (JSON). */
ARTIC_API artic_status artic_joint_create(artic_joint_type type, const double axis_pos[3],
                                          const double axis_dir[3], const double* thetas,
                                          size_t theta_count, artic_joint** out);
ARTIC_API artic_status artic_joint_load(const char* path, artic_joint** out);
ARTIC_API artic_status artic_joint_save(const artic_joint* joint, const char* path);
ARTIC_API artic_joint_type artic_joint_get_type(const artic_joint* joint);
ARTIC_API void artic_joint_axis(const artic_joint* joint, double axis_pos[3],
                                double axis_dir[3]);
ARTIC_API const double* artic_joint_thetas(const artic_joint* joint, size_t* count);
ARTIC_API void artic_joint_free(artic_joint* joint);

/* Renders `frame_count` frames of the movable part articulated over the base.
   Stored thetas are resampled linearly when their count differs. */
ARTIC_API artic_status artic_render(const artic_mesh* base, const artic_mesh* movable,
                                    const artic_camera* camera, const artic_joint* joint,
                                    int frame_count, const double background[3],
                                    artic_frames** out);

typedef struct artic_optim_config {
  int iterations;
  int warmup_iterations;
  int restarts;
  int finalists;
  double lr_axis_dir;
  double lr_axis_pos;
  double lr_mlp;
  double beta;
  uint64_t seed;
  int threads; /* 0: hardware concurrency */
  int edge_gradients;
  double background[3];
} artic_optim_config;

ARTIC_API void artic_optim_config_default(artic_optim_config* config);

ARTIC_API artic_status artic_estimate_run(const artic_mesh* base, const artic_mesh* movable,
                                          const artic_frames* frames,
                                          const artic_camera* camera, artic_joint_type type,
                                          const artic_optim_config* config,
                                          artic_estimate** out);
/* Borrowed; the joint carries the estimated per-frame thetas. */
ARTIC_API const artic_joint* artic_estimate_joint(const artic_estimate* est);
ARTIC_API const double* artic_estimate_loss_history(const artic_estimate* est,
                                                    size_t* count);
ARTIC_API double artic_estimate_final_loss(const artic_estimate* est);
ARTIC_API int artic_estimate_restart_index(const artic_estimate* est);
ARTIC_API const char* artic_estimate_mlp_json(const artic_estimate* est);
ARTIC_API void artic_estimate_free(artic_estimate* est);

typedef enum artic_synth_type {
  ARTIC_SYNTH_PRISMATIC = 0,
  ARTIC_SYNTH_REVOLUTE = 1,
  ARTIC_SYNTH_MIXED = 2
} artic_synth_type;

typedef struct artic_synth_config {
  int scenes;
  artic_synth_type type;
  uint64_t seed;
  int frames;
  int resolution;
  double background[3];
} artic_synth_config;

ARTIC_API void artic_synth_config_default(artic_synth_config* config);
/* Writes scene_000, scene_001, ... under out_dir. */
ARTIC_API artic_status artic_synth(const artic_synth_config* config, const char* out_dir);

ARTIC_API artic_status artic_benchmark_run(const char* scene_dir,
                                           const artic_optim_config* config,
                                           int seed_with_gt, artic_benchmark** out);
ARTIC_API size_t artic_benchmark_scene_count(const artic_benchmark* bench);
ARTIC_API size_t artic_benchmark_failed_count(const artic_benchmark* bench);
ARTIC_API const char* artic_benchmark_csv(const artic_benchmark* bench);
ARTIC_API const char* artic_benchmark_summary(const artic_benchmark* bench);
ARTIC_API void artic_benchmark_free(artic_benchmark* bench);

ARTIC_API artic_status artic_psnr(const artic_image* pred, const artic_image* ref,
                                  double* out);
ARTIC_API artic_status artic_ssim(const artic_image* pred, const artic_image* ref,
                                  double* out);

#ifdef __cplusplus
}
#endif

#endif
