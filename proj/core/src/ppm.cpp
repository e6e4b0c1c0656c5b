#include "selrcn/ppm.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "selrcn/errors.hpp"

namespace selrcn {

namespace {

// Next whitespace-delimited header token, skipping '#' comments.
std::string header_token(std::istream& in, const std::filesystem::path& path) {
  std::string token;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!token.empty()) return token;
      continue;
    }
    token.push_back(static_cast<char>(ch));
  }
  if (token.empty()) throw ParseError(path.string() + ": truncated PPM header");
  return token;
}

std::size_t header_number(std::istream& in, const std::filesystem::path& path) {
  const std::string token = header_token(in, path);
  if (token.empty() || !std::all_of(token.begin(), token.end(), [](char c) { return std::isdigit(c); })) {
    throw ParseError(path.string() + ": invalid PPM header field '" + token + "'");
  }
  return std::stoul(token);
}

}  // namespace

Tensor read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open frame " + path.string());
  if (header_token(in, path) != "P6") throw ParseError(path.string() + ": not a binary PPM (P6)");
  const std::size_t width = header_number(in, path);
  const std::size_t height = header_number(in, path);
  const std::size_t maxval = header_number(in, path);
  if (width == 0 || height == 0) throw ParseError(path.string() + ": empty image");
  if (maxval == 0 || maxval > 255) throw ParseError(path.string() + ": unsupported maxval " + std::to_string(maxval));

  std::vector<unsigned char> pixels(width * height * 3);
  in.read(reinterpret_cast<char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
  if (in.gcount() != static_cast<std::streamsize>(pixels.size())) {
    throw ParseError(path.string() + ": truncated pixel data");
  }
  Tensor frame(Shape{3, height, width});
  auto out = frame.mutable_data();
  const double scale = 1.0 / static_cast<double>(maxval);
  for (std::size_t i = 0; i < width * height; ++i) {
    for (std::size_t c = 0; c < 3; ++c) out[c * width * height + i] = pixels[i * 3 + c] * scale;
  }
  return frame;
}

void write_ppm(const std::filesystem::path& path, const Tensor& frame) {
  if (frame.rank() != 3 || frame.dim(0) != 3) {
    throw DimensionError("write_ppm: expected [3×H×W], got " + shape_string(frame.shape()));
  }
  const std::size_t height = frame.dim(1), width = frame.dim(2);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write frame " + path.string());
  out << "P6\n" << width << ' ' << height << "\n255\n";
  std::vector<unsigned char> pixels(width * height * 3);
  auto v = frame.data();
  for (std::size_t i = 0; i < width * height; ++i) {
    for (std::size_t c = 0; c < 3; ++c) {
      const double x = std::clamp(v[c * width * height + i], 0.0, 1.0);
      pixels[i * 3 + c] = static_cast<unsigned char>(std::lround(x * 255.0));
    }
  }
  out.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
  if (!out) throw std::runtime_error("failed writing frame " + path.string());
}

}  // namespace selrcn
