#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include "artic/geometry.hpp"

// OBJ subset: `v` and triangular `f` records. Per-face colors travel in
// `#fc r g b` comment lines that follow the face they describe, so other OBJ
// tools still read the geometry.

namespace artic {
namespace {

std::string where(const std::filesystem::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line) + ": ";
}

bool parse_double(std::string_view tok, double& out) {
  const char* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace

TriMesh load_mesh(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open mesh " + path.string());

  TriMesh mesh;
  std::vector<Rgb> colors;
  std::vector<std::int64_t> color_face;
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string_view line(raw);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const auto tok = split(line);
    if (tok.empty()) continue;

    if (tok[0] == "#fc") {
      if (tok.size() != 4 || mesh.faces.empty()) {
        fail(ErrorCode::kParse, where(path, lineno) + "malformed face color");
      }
      Rgb c;
      for (int k = 0; k < 3; ++k) {
        if (!parse_double(tok[k + 1], c[k]) || c[k] < 0.0 || c[k] > 1.0) {
          fail(ErrorCode::kParse, where(path, lineno) + "bad face color");
        }
      }
      colors.push_back(c);
      color_face.push_back(static_cast<std::int64_t>(mesh.faces.size()) - 1);
    } else if (tok[0][0] == '#') {
      continue;
    } else if (tok[0] == "v") {
      if (tok.size() < 4) {
        fail(ErrorCode::kParse, where(path, lineno) + "vertex needs 3 coords");
      }
      Vec3 v;
      for (int k = 0; k < 3; ++k) {
        if (!parse_double(tok[k + 1], v[k])) {
          fail(ErrorCode::kParse, where(path, lineno) + "bad vertex coordinate");
        }
      }
      mesh.vertices.push_back(v);
    } else if (tok[0] == "f") {
      if (tok.size() != 4) {
        fail(ErrorCode::kParse,
             where(path, lineno) + "only triangle faces are supported");
      }
      Face face{};
      for (int k = 0; k < 3; ++k) {
        std::string_view ref = tok[k + 1];
        ref = ref.substr(0, ref.find('/'));
        long long idx = 0;
        auto [ptr, ec] =
            std::from_chars(ref.data(), ref.data() + ref.size(), idx);
        if (ec != std::errc() || ptr != ref.data() + ref.size() || idx == 0) {
          fail(ErrorCode::kParse, where(path, lineno) + "bad face index");
        }
        const auto nv = static_cast<long long>(mesh.vertices.size());
        const long long resolved = idx > 0 ? idx - 1 : nv + idx;
        if (resolved < 0 || resolved >= nv) {
          fail(ErrorCode::kValidation,
               where(path, lineno) + "face index " + std::to_string(idx) +
                   " out of range for " + std::to_string(nv) + " vertices");
        }
        face[k] = static_cast<std::uint32_t>(resolved);
      }
      mesh.faces.push_back(face);
    } else if (tok[0] == "vn" || tok[0] == "vt" || tok[0] == "o" ||
               tok[0] == "g" || tok[0] == "s" || tok[0] == "mtllib" ||
               tok[0] == "usemtl") {
      continue;
    } else {
      fail(ErrorCode::kParse, where(path, lineno) + "unsupported record '" +
                                  std::string(tok[0]) + "'");
    }
  }

  if (!colors.empty()) {
    if (colors.size() != mesh.faces.size()) {
      fail(ErrorCode::kParse, path.string() + ": face colors incomplete");
    }
    for (std::size_t i = 0; i < color_face.size(); ++i) {
      if (color_face[i] != static_cast<std::int64_t>(i)) {
        fail(ErrorCode::kParse, path.string() + ": face colors out of order");
      }
    }
    mesh.face_colors = std::move(colors);
  }
  mesh.validate();
  return mesh;
}

void save_mesh(const TriMesh& mesh, const std::filesystem::path& path) {
  mesh.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot write mesh " + path.string());
  char buf[128];
  for (const auto& v : mesh.vertices) {
    std::snprintf(buf, sizeof(buf), "v %.9g %.9g %.9g\n", v.x(), v.y(), v.z());
    out << buf;
  }
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const Face& t = mesh.faces[f];
    out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
    if (mesh.has_colors()) {
      const Rgb& c = mesh.face_colors[f];
      std::snprintf(buf, sizeof(buf), "#fc %.9g %.9g %.9g\n", c.x(), c.y(),
                    c.z());
      out << buf;
    }
  }
  if (!out) fail(ErrorCode::kIo, "failed writing mesh " + path.string());
}

}  // namespace artic
