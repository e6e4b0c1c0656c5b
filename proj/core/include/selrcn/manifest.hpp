#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "selrcn/video.hpp"

namespace selrcn {

/// One manifest row: a directory of frame_%06d.ppm files (1-indexed).
struct VideoDescriptor {
  std::filesystem::path directory;
  std::string id;
  std::size_t label = 0;
  std::size_t frame_count = 0;
  std::size_t line = 0;
};

/// "frame_000001.ppm" for index 1.
std::string frame_filename(std::size_t index);

/// Parses `video_dir,label_index,frame_count` rows. Relative directories are
/// resolved against the manifest's directory. A first line whose second field
/// is not numeric is treated as a header. Errors name the file and line.
std::vector<VideoDescriptor> load_manifest(const std::filesystem::path& path);

VideoSample load_video(const VideoDescriptor& descriptor);
std::vector<VideoSample> load_videos(std::span<const VideoDescriptor> descriptors);

/// Writes every sample as <root>/<id>/frame_%06d.ppm plus <root>/manifest.csv
/// with a header line. Returns the manifest path.
std::filesystem::path write_dataset(const std::filesystem::path& root, std::span<const VideoSample> videos);

}  // namespace selrcn
