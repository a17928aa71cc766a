#include "artic/serialization.hpp"

#include <fstream>
#include <iterator>

#include <json.hpp>

namespace artic {
namespace {

using nlohmann::json;

json parse(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::kValidation, std::string("invalid JSON: ") + e.what());
  }
}

double number(const json& j, const char* what) {
  if (!j.is_number()) {
    fail(ErrorCode::kValidation, std::string(what) + " must be a number");
  }
  return j.get<double>();
}

template <int N>
Eigen::Matrix<double, N, 1> vector_field(const json& obj, const char* key) {
  if (!obj.contains(key) || !obj[key].is_array() || obj[key].size() != N) {
    fail(ErrorCode::kValidation, std::string("field '") + key + "' must be an array of " +
                                     std::to_string(N) + " numbers");
  }
  Eigen::Matrix<double, N, 1> v;
  for (int i = 0; i < N; ++i) v[i] = number(obj[key][static_cast<std::size_t>(i)], key);
  return v;
}

json vec_json(const Eigen::Ref<const Eigen::VectorXd>& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

}  // namespace

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorCode::kIo, "failed writing " + path.string());
}

std::string joint_to_json(const JointRecord& record) {
  json j;
  j["type"] = to_string(record.joint.type);
  j["axis_pos"] = vec_json(record.joint.axis_pos);
  j["axis_dir"] = vec_json(record.joint.axis_dir);
  j["thetas"] = record.thetas;
  return j.dump(2) + "\n";
}

JointRecord joint_from_json(const std::string& text) {
  const json j = parse(text);
  if (!j.is_object()) fail(ErrorCode::kValidation, "joint JSON must be an object");
  if (!j.contains("type") || !j["type"].is_string()) {
    fail(ErrorCode::kValidation, "field 'type' must be a string");
  }
  JointRecord r;
  r.joint.type = joint_type_from_string(j["type"].get<std::string>());
  r.joint.axis_pos = vector_field<3>(j, "axis_pos");
  const Vec3 dir = vector_field<3>(j, "axis_dir");
  const double len = dir.norm();
  if (!(len > 0.0) || std::abs(len - 1.0) > 1e-6) {
    fail(ErrorCode::kValidation, "field 'axis_dir' must be a unit vector");
  }
  r.joint.axis_dir = std::abs(len - 1.0) > 1e-12 ? Vec3(dir / len) : dir;
  if (!j.contains("thetas") || !j["thetas"].is_array()) {
    fail(ErrorCode::kValidation, "field 'thetas' must be an array");
  }
  for (const auto& t : j["thetas"]) r.thetas.push_back(number(t, "thetas"));
  if (!r.thetas.empty() && r.thetas.front() != 0.0) {
    fail(ErrorCode::kValidation, "thetas must start at 0");
  }
  r.joint.validate();
  return r;
}

JointRecord load_joint(const std::filesystem::path& path) {
  return joint_from_json(read_text_file(path));
}

void save_joint(const JointRecord& record, const std::filesystem::path& path) {
  write_text_file(path, joint_to_json(record));
}

std::string camera_to_json(const Camera& camera) {
  json j;
  j["focal"] = vec_json(camera.focal());
  j["principal"] = vec_json(camera.principal());
  json pose = json::array();
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      if (r == 3) {
        pose.push_back(c == 3 ? 1.0 : 0.0);
      } else if (c == 3) {
        pose.push_back(camera.pose().translation[r]);
      } else {
        pose.push_back(camera.pose().rotation(r, c));
      }
    }
  }
  j["pose"] = pose;
  j["resolution"] = {camera.width(), camera.height()};
  return j.dump(2) + "\n";
}

Camera camera_from_json(const std::string& text) {
  const json j = parse(text);
  if (!j.is_object()) fail(ErrorCode::kValidation, "camera JSON must be an object");
  const Vec2 focal = vector_field<2>(j, "focal");
  const Vec2 principal = vector_field<2>(j, "principal");
  const Vec2 res = vector_field<2>(j, "resolution");

  if (!j.contains("pose") || !j["pose"].is_array()) {
    fail(ErrorCode::kValidation, "field 'pose' must be a 4x4 matrix");
  }
  std::vector<double> flat;
  for (const auto& e : j["pose"]) {
    if (e.is_array()) {
      if (e.size() != 4) fail(ErrorCode::kValidation, "pose rows must have 4 entries");
      for (const auto& v : e) flat.push_back(number(v, "pose"));
    } else {
      flat.push_back(number(e, "pose"));
    }
  }
  if (flat.size() != 16) fail(ErrorCode::kValidation, "pose must have 16 entries");
  RigidTransform pose;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) pose.rotation(r, c) = flat[static_cast<std::size_t>(r * 4 + c)];
    pose.translation[r] = flat[static_cast<std::size_t>(r * 4 + 3)];
  }
  if (flat[12] != 0.0 || flat[13] != 0.0 || flat[14] != 0.0 || flat[15] != 1.0) {
    fail(ErrorCode::kValidation, "pose must be a rigid homogeneous transform");
  }
  if (res[0] != std::floor(res[0]) || res[1] != std::floor(res[1])) {
    fail(ErrorCode::kValidation, "resolution must be integral");
  }
  return Camera(focal, principal, pose, static_cast<int>(res[0]),
                static_cast<int>(res[1]));
}

Camera load_camera(const std::filesystem::path& path) {
  return camera_from_json(read_text_file(path));
}

void save_camera(const Camera& camera, const std::filesystem::path& path) {
  write_text_file(path, camera_to_json(camera));
}

std::string mlp_to_json(const MotionMLP& mlp) {
  json layers = json::array();
  const auto params = mlp.parameters();
  for (const auto& l : MotionMLP::layers()) {
    json weight = json::array();
    for (int r = 0; r < l.out; ++r) {
      json row = json::array();
      for (int c = 0; c < l.in; ++c) {
        row.push_back(params[l.weight_offset + static_cast<std::size_t>(r * l.in + c)]);
      }
      weight.push_back(row);
    }
    json bias = json::array();
    for (int r = 0; r < l.out; ++r) bias.push_back(params[l.bias_offset + static_cast<std::size_t>(r)]);
    layers.push_back({{"weight", weight}, {"bias", bias}});
  }
  return layers.dump() + "\n";
}

MotionMLP mlp_from_json(const std::string& text, MotionOutput output) {
  const json j = parse(text);
  const auto views = MotionMLP::layers();
  if (!j.is_array() || j.size() != views.size()) {
    fail(ErrorCode::kValidation, "MLP checkpoint must list 3 layers");
  }
  MotionMLP mlp(output);
  auto params = mlp.parameters();
  for (std::size_t li = 0; li < views.size(); ++li) {
    const auto& l = views[li];
    const json& layer = j[li];
    if (!layer.contains("weight") || !layer.contains("bias") ||
        layer["weight"].size() != static_cast<std::size_t>(l.out) ||
        layer["bias"].size() != static_cast<std::size_t>(l.out)) {
      fail(ErrorCode::kValidation, "MLP layer shape mismatch");
    }
    for (int r = 0; r < l.out; ++r) {
      const json& row = layer["weight"][static_cast<std::size_t>(r)];
      if (!row.is_array() || row.size() != static_cast<std::size_t>(l.in)) {
        fail(ErrorCode::kValidation, "MLP weight row shape mismatch");
      }
      for (int c = 0; c < l.in; ++c) {
        params[l.weight_offset + static_cast<std::size_t>(r * l.in + c)] =
            number(row[static_cast<std::size_t>(c)], "weight");
      }
      params[l.bias_offset + static_cast<std::size_t>(r)] =
          number(layer["bias"][static_cast<std::size_t>(r)], "bias");
    }
  }
  return mlp;
}

}  // namespace artic
