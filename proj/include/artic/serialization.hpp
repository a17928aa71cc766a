#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "artic/articulation.hpp"
#include "artic/geometry.hpp"

namespace artic {

// {"type": ..., "axis_pos": [x,y,z], "axis_dir": [x,y,z], "thetas": [...]}
struct JointRecord {
  JointSpec joint;
  std::vector<double> thetas;
};

std::string joint_to_json(const JointRecord& record);
// Throws kValidation on schema violations.
JointRecord joint_from_json(const std::string& text);
JointRecord load_joint(const std::filesystem::path& path);
void save_joint(const JointRecord& record, const std::filesystem::path& path);

// {"focal": [fx,fy], "principal": [cx,cy], "pose": 16 numbers row-major 4x4,
//  "resolution": [w,h]}. A nested 4x4 array is accepted for "pose".
std::string camera_to_json(const Camera& camera);
Camera camera_from_json(const std::string& text);
Camera load_camera(const std::filesystem::path& path);
void save_camera(const Camera& camera, const std::filesystem::path& path);

// JSON array with one {"weight": [[...]], "bias": [...]} object per layer.
std::string mlp_to_json(const MotionMLP& mlp);
MotionMLP mlp_from_json(const std::string& text, MotionOutput output);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace artic
