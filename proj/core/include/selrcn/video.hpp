#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "selrcn/rng.hpp"
#include "selrcn/tensor.hpp"

namespace selrcn {

/// A labeled clip. frames is [T×3×H×W] with values in [0,1].
struct VideoSample {
  Tensor frames;
  std::size_t label = 0;
  std::string id;

  std::size_t frame_count() const { return frames.dim(0); }
};

struct SegmentSpec {
  std::size_t length = 30;
  std::size_t stride = 15;

  void validate() const;
};

struct Segment {
  Tensor frames;  // [length×3×H×W]
  std::size_t label = 0;
  std::string video_id;
  std::size_t index = 0;
  std::vector<std::size_t> frame_indices;
};

/// Start frames of the segments cut from a video of `frame_count` frames.
/// Windows start at 0, stride, 2·stride, …; the last window is the first one
/// reaching the end of the video, and any part of it past the end wraps
/// around to frame 0.
std::vector<std::size_t> segment_starts(std::size_t frame_count, const SegmentSpec& spec);

/// Frame indices of the window starting at `start`, wrapped modulo frame_count.
std::vector<std::size_t> segment_frame_indices(std::size_t start, std::size_t frame_count, const SegmentSpec& spec);

std::vector<Segment> segment_video(const VideoSample& video, const SegmentSpec& spec);

/// Bilinear resize (half-pixel centers, edge clamped) so the shorter side is
/// `target`; the longer side is rounded to the nearest integer. Accepts a
/// frame [3×H×W] or a stack [T×3×H×W].
Tensor resize_short_side(const Tensor& frames, std::size_t target);

/// Output size of resize_short_side for an H×W input.
std::array<std::size_t, 2> resized_dims(std::size_t height, std::size_t width, std::size_t target);

enum class AugmentMode { train, test };

struct AugmentConfig {
  std::size_t short_side = 256;
  std::size_t crop = 224;
  double flip_prob = 0.5;
  std::array<double, 3> mean{0.485, 0.456, 0.406};
  std::array<double, 3> std{0.229, 0.224, 0.225};
  AugmentMode mode = AugmentMode::train;

  void validate() const;
};

/// Mirrors every frame of a stack [T×3×H×W] left-to-right.
Tensor flip_horizontal(const Tensor& frames);

/// Square crop of side `size` at (top, left) from every frame.
Tensor crop_frames(const Tensor& frames, std::size_t top, std::size_t left, std::size_t size);

/// channel ← (channel − mean) / std, per channel.
Tensor normalize_frames(const Tensor& frames, const std::array<double, 3>& mean, const std::array<double, 3>& std);
Tensor denormalize_frames(const Tensor& frames, const std::array<double, 3>& mean, const std::array<double, 3>& std);

/// Crop, optional flip and normalization of already-resized frames. Train
/// mode draws one crop offset and one flip decision for the whole segment;
/// test mode center-crops and never flips.
Tensor augment_segment(const Tensor& frames, const AugmentConfig& config, Rng& rng);

/// Resizes to config.short_side when needed, then augment_segment.
Tensor prepare_segment(const Tensor& frames, const AugmentConfig& config, Rng& rng);

/// Seed for one segment's augmentation, independent of processing order.
std::uint64_t segment_seed(std::uint64_t seed, std::string_view video_id, std::size_t segment_index);

}  // namespace selrcn
