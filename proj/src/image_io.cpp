#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

#include "artic/geometry.hpp"

namespace artic {
namespace {

// Reads one header token, skipping whitespace and `#` comments.
std::string header_token(const std::string& buf, std::size_t& pos) {
  while (pos < buf.size()) {
    const char c = buf[pos];
    if (c == '#') {
      while (pos < buf.size() && buf[pos] != '\n') ++pos;
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      ++pos;
    } else {
      break;
    }
  }
  const std::size_t start = pos;
  while (pos < buf.size() && !std::isspace(static_cast<unsigned char>(buf[pos]))) {
    ++pos;
  }
  return buf.substr(start, pos - start);
}

int header_int(const std::string& buf, std::size_t& pos,
               const std::filesystem::path& path) {
  const std::string tok = header_token(buf, pos);
  if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos) {
    fail(ErrorCode::kParse, path.string() + ": malformed image header");
  }
  return std::stoi(tok);
}

}  // namespace

Image load_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open image " + path.string());
  const std::string buf((std::istreambuf_iterator<char>(in)),
                        std::istreambuf_iterator<char>());

  std::size_t pos = 0;
  const std::string magic = header_token(buf, pos);
  int channels = 0;
  if (magic == "P6") {
    channels = 3;
  } else if (magic == "P5") {
    channels = 1;
  } else {
    fail(ErrorCode::kParse,
         path.string() + ": unsupported image format '" + magic + "'");
  }
  const int width = header_int(buf, pos, path);
  const int height = header_int(buf, pos, path);
  const int maxval = header_int(buf, pos, path);
  if (maxval != 255) {
    fail(ErrorCode::kParse, path.string() + ": only maxval 255 is supported");
  }
  if (pos >= buf.size() || !std::isspace(static_cast<unsigned char>(buf[pos]))) {
    fail(ErrorCode::kParse, path.string() + ": truncated image header");
  }
  ++pos;

  const std::size_t count = static_cast<std::size_t>(width) * height * channels;
  if (buf.size() - pos < count) {
    fail(ErrorCode::kParse, path.string() + ": truncated image payload");
  }
  std::vector<double> data(count);
  for (std::size_t i = 0; i < count; ++i) {
    data[i] = static_cast<unsigned char>(buf[pos + i]) / 255.0;
  }
  return Image(width, height, channels, std::move(data));
}

void save_image(const Image& image, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot write image " + path.string());
  out << (image.channels() == 3 ? "P6" : "P5") << '\n'
      << image.width() << ' ' << image.height() << "\n255\n";
  std::string payload(image.data().size(), '\0');
  for (std::size_t i = 0; i < payload.size(); ++i) {
    const double v = std::clamp(std::round(image.data()[i] * 255.0), 0.0, 255.0);
    payload[i] = static_cast<char>(static_cast<unsigned char>(v));
  }
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!out) fail(ErrorCode::kIo, "failed writing image " + path.string());
}

}  // namespace artic
