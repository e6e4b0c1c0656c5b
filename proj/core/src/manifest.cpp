#include "selrcn/manifest.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "selrcn/errors.hpp"
#include "selrcn/ppm.hpp"

namespace selrcn {

namespace fs = std::filesystem;

std::string frame_filename(std::size_t index) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "frame_%06zu.ppm", index);
  return buffer;
}

namespace {

std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(trim(field));
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

bool is_unsigned(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

[[noreturn]] void fail(const fs::path& path, std::size_t line, const std::string& message) {
  throw ParseError(path.string() + ":" + std::to_string(line) + ": " + message);
}

std::size_t count_frame_files(const fs::path& dir) {
  std::size_t count = 0;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_regular_file() && name.rfind("frame_", 0) == 0 && entry.path().extension() == ".ppm") ++count;
  }
  return count;
}

}  // namespace

std::vector<VideoDescriptor> load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open manifest " + path.string());
  const fs::path base = path.parent_path();

  std::vector<VideoDescriptor> videos;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const std::vector<std::string> fields = split_fields(line);
    if (line_no == 1 && fields.size() >= 2 && !is_unsigned(fields[1])) continue;  // header
    if (fields.size() != 3) {
      fail(path, line_no, "expected 3 fields (video_dir,label_index,frame_count), got " + std::to_string(fields.size()));
    }
    if (fields[0].empty()) fail(path, line_no, "empty video_dir");
    if (!is_unsigned(fields[1])) fail(path, line_no, "label_index '" + fields[1] + "' is not a non-negative integer");
    if (!is_unsigned(fields[2])) fail(path, line_no, "frame_count '" + fields[2] + "' is not a non-negative integer");

    VideoDescriptor d;
    d.id = fields[0];
    d.directory = fs::path(fields[0]).is_absolute() ? fs::path(fields[0]) : base / fields[0];
    d.label = std::stoul(fields[1]);
    d.frame_count = std::stoul(fields[2]);
    d.line = line_no;
    if (d.frame_count == 0) fail(path, line_no, "frame_count must be positive");
    if (!fs::is_directory(d.directory)) {
      fail(path, line_no, "video directory '" + d.directory.string() + "' does not exist");
    }
    const std::size_t found = count_frame_files(d.directory);
    if (found != d.frame_count || !fs::exists(d.directory / frame_filename(d.frame_count))) {
      fail(path, line_no,
           "frame_count " + std::to_string(d.frame_count) + " does not match " + std::to_string(found) +
               " frame files in '" + d.directory.string() + "'");
    }
    videos.push_back(std::move(d));
  }
  return videos;
}

VideoSample load_video(const VideoDescriptor& descriptor) {
  VideoSample video;
  video.label = descriptor.label;
  video.id = descriptor.id;
  std::vector<double> values;
  Shape frame_shape;
  for (std::size_t i = 1; i <= descriptor.frame_count; ++i) {
    const Tensor frame = read_ppm(descriptor.directory / frame_filename(i));
    if (frame_shape.empty()) {
      frame_shape = frame.shape();
      values.reserve(frame.numel() * descriptor.frame_count);
    } else if (frame.shape() != frame_shape) {
      throw ParseError("frame " + std::to_string(i) + " of '" + descriptor.id + "' has shape " +
                       shape_string(frame.shape()) + ", expected " + shape_string(frame_shape));
    }
    values.insert(values.end(), frame.data().begin(), frame.data().end());
  }
  video.frames = Tensor(Shape{descriptor.frame_count, frame_shape[0], frame_shape[1], frame_shape[2]}, std::move(values));
  return video;
}

std::vector<VideoSample> load_videos(std::span<const VideoDescriptor> descriptors) {
  std::vector<VideoSample> videos;
  videos.reserve(descriptors.size());
  for (const VideoDescriptor& d : descriptors) videos.push_back(load_video(d));
  return videos;
}

fs::path write_dataset(const fs::path& root, std::span<const VideoSample> videos) {
  fs::create_directories(root);
  const fs::path manifest = root / "manifest.csv";
  std::ofstream out(manifest);
  if (!out) throw std::runtime_error("cannot write manifest " + manifest.string());
  out << "video_dir,label_index,frame_count\n";
  for (const VideoSample& v : videos) {
    const fs::path dir = root / v.id;
    fs::create_directories(dir);
    const std::size_t frame_size = v.frames.numel() / v.frame_count();
    const Shape shape{v.frames.dim(1), v.frames.dim(2), v.frames.dim(3)};
    for (std::size_t t = 0; t < v.frame_count(); ++t) {
      auto begin = v.frames.data().begin() + static_cast<std::ptrdiff_t>(t * frame_size);
      write_ppm(dir / frame_filename(t + 1), Tensor(shape, std::vector<double>(begin, begin + static_cast<std::ptrdiff_t>(frame_size))));
    }
    out << v.id << ',' << v.label << ',' << v.frame_count() << '\n';
  }
  return manifest;
}

}  // namespace selrcn
