#include "selrcn/video.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "selrcn/errors.hpp"

namespace selrcn {

void SegmentSpec::validate() const {
  if (length == 0 || stride == 0 || stride > length) {
    throw InputError("segment spec needs 1 <= stride <= length, got length " + std::to_string(length) +
                     ", stride " + std::to_string(stride));
  }
}

std::vector<std::size_t> segment_starts(std::size_t frame_count, const SegmentSpec& spec) {
  spec.validate();
  if (frame_count == 0) throw InputError("cannot segment an empty video");
  std::vector<std::size_t> starts;
  for (std::size_t start = 0;; start += spec.stride) {
    starts.push_back(start);
    if (start + spec.length >= frame_count) break;
  }
  return starts;
}

std::vector<std::size_t> segment_frame_indices(std::size_t start, std::size_t frame_count, const SegmentSpec& spec) {
  std::vector<std::size_t> indices(spec.length);
  for (std::size_t i = 0; i < spec.length; ++i) indices[i] = (start + i) % frame_count;
  return indices;
}

namespace {

void require_frames(const char* op, const Tensor& frames) {
  if (!frames.defined() || frames.rank() != 4) {
    throw DimensionError(std::string(op) + ": expected frames [T×C×H×W], got " +
                         (frames.defined() ? shape_string(frames.shape()) : std::string("<undefined>")));
  }
}

Tensor select_frames(const Tensor& frames, const std::vector<std::size_t>& indices) {
  const std::size_t frame_size = frames.numel() / frames.dim(0);
  Shape shape = frames.shape();
  shape[0] = indices.size();
  Tensor out(shape);
  auto src = frames.data();
  auto dst = out.mutable_data();
  for (std::size_t i = 0; i < indices.size(); ++i) {
    std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(indices[i] * frame_size), frame_size,
                dst.begin() + static_cast<std::ptrdiff_t>(i * frame_size));
  }
  return out;
}

}  // namespace

std::vector<Segment> segment_video(const VideoSample& video, const SegmentSpec& spec) {
  if (!video.frames.defined() || video.frames.rank() == 0 || video.frame_count() == 0) {
    throw InputError("cannot segment empty video '" + video.id + "'");
  }
  require_frames("segment_video", video.frames);
  std::vector<Segment> segments;
  const std::vector<std::size_t> starts = segment_starts(video.frame_count(), spec);
  for (std::size_t i = 0; i < starts.size(); ++i) {
    Segment seg;
    seg.frame_indices = segment_frame_indices(starts[i], video.frame_count(), spec);
    seg.frames = select_frames(video.frames, seg.frame_indices);
    seg.label = video.label;
    seg.video_id = video.id;
    seg.index = i;
    segments.push_back(std::move(seg));
  }
  return segments;
}

std::array<std::size_t, 2> resized_dims(std::size_t height, std::size_t width, std::size_t target) {
  if (height == 0 || width == 0 || target == 0) throw InputError("resize: dimensions must be positive");
  if (height <= width) {
    const auto w = static_cast<std::size_t>(std::llround(static_cast<double>(width) * target / height));
    return {target, std::max<std::size_t>(1, w)};
  }
  const auto h = static_cast<std::size_t>(std::llround(static_cast<double>(height) * target / width));
  return {std::max<std::size_t>(1, h), target};
}

Tensor resize_short_side(const Tensor& frames, std::size_t target) {
  const bool single = frames.rank() == 3;
  if (!single) require_frames("resize_short_side", frames);
  const std::size_t t_count = single ? 1 : frames.dim(0);
  const std::size_t channels = frames.dim(single ? 0 : 1);
  const std::size_t h = frames.dim(single ? 1 : 2);
  const std::size_t w = frames.dim(single ? 2 : 3);
  const auto [oh, ow] = resized_dims(h, w, target);
  if (oh == h && ow == w) return frames.clone();

  // Precomputed source taps per output row/column.
  struct Tap {
    std::size_t lo, hi;
    double frac;
  };
  auto taps = [](std::size_t in, std::size_t out) {
    std::vector<Tap> result(out);
    const double ratio = static_cast<double>(in) / static_cast<double>(out);
    for (std::size_t i = 0; i < out; ++i) {
      double src = (static_cast<double>(i) + 0.5) * ratio - 0.5;
      src = std::clamp(src, 0.0, static_cast<double>(in - 1));
      const auto lo = static_cast<std::size_t>(std::floor(src));
      const std::size_t hi = std::min(lo + 1, in - 1);
      result[i] = Tap{lo, hi, src - static_cast<double>(lo)};
    }
    return result;
  };
  const std::vector<Tap> ys = taps(h, oh);
  const std::vector<Tap> xs = taps(w, ow);

  Tensor out(single ? Shape{channels, oh, ow} : Shape{t_count, channels, oh, ow});
  auto src = frames.data();
  auto dst = out.mutable_data();
  for (std::size_t plane = 0; plane < t_count * channels; ++plane) {
    const double* in = src.data() + plane * h * w;
    double* o = dst.data() + plane * oh * ow;
    for (std::size_t y = 0; y < oh; ++y) {
      const Tap& ty = ys[y];
      for (std::size_t x = 0; x < ow; ++x) {
        const Tap& tx = xs[x];
        const double top = in[ty.lo * w + tx.lo] * (1.0 - tx.frac) + in[ty.lo * w + tx.hi] * tx.frac;
        const double bottom = in[ty.hi * w + tx.lo] * (1.0 - tx.frac) + in[ty.hi * w + tx.hi] * tx.frac;
        o[y * ow + x] = top * (1.0 - ty.frac) + bottom * ty.frac;
      }
    }
  }
  return out;
}

void AugmentConfig::validate() const {
  if (crop == 0 || crop > short_side) {
    throw InputError("augment: crop " + std::to_string(crop) + " must be in [1, short_side=" +
                     std::to_string(short_side) + "]");
  }
  if (flip_prob < 0.0 || flip_prob > 1.0) throw InputError("augment: flip probability must be in [0,1]");
  for (double s : std) {
    if (!(s > 0.0)) throw InputError("augment: std must be positive");
  }
}

Tensor flip_horizontal(const Tensor& frames) {
  require_frames("flip_horizontal", frames);
  const std::size_t w = frames.dim(3);
  const std::size_t rows = frames.numel() / w;
  Tensor out(frames.shape());
  auto src = frames.data();
  auto dst = out.mutable_data();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t x = 0; x < w; ++x) dst[r * w + x] = src[r * w + (w - 1 - x)];
  }
  return out;
}

Tensor crop_frames(const Tensor& frames, std::size_t top, std::size_t left, std::size_t size) {
  require_frames("crop_frames", frames);
  const std::size_t n = frames.dim(0), c = frames.dim(1), h = frames.dim(2), w = frames.dim(3);
  if (size == 0 || top + size > h || left + size > w) {
    throw InputError("crop of " + std::to_string(size) + " at (" + std::to_string(top) + "," + std::to_string(left) +
                     ") exceeds frame " + std::to_string(h) + "x" + std::to_string(w));
  }
  Tensor out(Shape{n, c, size, size});
  auto src = frames.data();
  auto dst = out.mutable_data();
  for (std::size_t plane = 0; plane < n * c; ++plane) {
    for (std::size_t y = 0; y < size; ++y) {
      std::copy_n(src.data() + plane * h * w + (top + y) * w + left, size, dst.data() + (plane * size + y) * size);
    }
  }
  return out;
}

namespace {

Tensor channel_affine(const Tensor& frames, const std::array<double, 3>& mean, const std::array<double, 3>& std,
                      bool forward) {
  require_frames("normalize", frames);
  if (frames.dim(1) != 3) throw DimensionError("normalize: expected 3 channels, got " + shape_string(frames.shape()));
  const std::size_t plane = frames.dim(2) * frames.dim(3);
  Tensor out(frames.shape());
  auto src = frames.data();
  auto dst = out.mutable_data();
  for (std::size_t i = 0; i < frames.numel(); ++i) {
    const std::size_t ch = (i / plane) % 3;
    dst[i] = forward ? (src[i] - mean[ch]) / std[ch] : src[i] * std[ch] + mean[ch];
  }
  return out;
}

}  // namespace

Tensor normalize_frames(const Tensor& frames, const std::array<double, 3>& mean, const std::array<double, 3>& std) {
  return channel_affine(frames, mean, std, true);
}

Tensor denormalize_frames(const Tensor& frames, const std::array<double, 3>& mean, const std::array<double, 3>& std) {
  return channel_affine(frames, mean, std, false);
}

Tensor augment_segment(const Tensor& frames, const AugmentConfig& config, Rng& rng) {
  config.validate();
  require_frames("augment_segment", frames);
  const std::size_t h = frames.dim(2), w = frames.dim(3);
  if (config.crop > h || config.crop > w) {
    throw InputError("augment_segment: crop " + std::to_string(config.crop) + " larger than frame " +
                     std::to_string(h) + "x" + std::to_string(w));
  }
  std::size_t top = (h - config.crop) / 2;
  std::size_t left = (w - config.crop) / 2;
  bool flip = false;
  if (config.mode == AugmentMode::train) {
    top = rng.below(h - config.crop + 1);
    left = rng.below(w - config.crop + 1);
    flip = rng.bernoulli(config.flip_prob);
  }
  Tensor out = crop_frames(frames, top, left, config.crop);
  if (flip) out = flip_horizontal(out);
  return normalize_frames(out, config.mean, config.std);
}

Tensor prepare_segment(const Tensor& frames, const AugmentConfig& config, Rng& rng) {
  require_frames("prepare_segment", frames);
  const std::size_t short_side = std::min(frames.dim(2), frames.dim(3));
  if (short_side == config.short_side) return augment_segment(frames, config, rng);
  return augment_segment(resize_short_side(frames, config.short_side), config, rng);
}

std::uint64_t segment_seed(std::uint64_t seed, std::string_view video_id, std::size_t segment_index) {
  return derive_seed(seed, {hash_string(video_id), static_cast<std::uint64_t>(segment_index)});
}

}  // namespace selrcn
