#include "selrcn/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "selrcn/errors.hpp"
#include "selrcn/rng.hpp"

namespace selrcn {

namespace {

constexpr std::size_t kSquare = 4;  // side of the moving square
constexpr std::size_t kTrail = 2;   // streak height behind the square
constexpr std::size_t kStep = 3;    // vertical displacement per frame
constexpr double kBackground = 0.5;
constexpr double kSquareValue = 1.0;
constexpr double kTrailValue = 0.0;

}  // namespace

void SynthConfig::validate() const {
  if (classes < 2) throw InputError("synthetic data needs at least 2 classes");
  if (samples == 0) throw InputError("synthetic data needs at least one sample");
  if (noise < 0.0) throw InputError("noise level must be non-negative");
  const SynthLayout layout = synth_layout(*this);
  const std::size_t travel = kStep * (layout.run_length - 1);
  if (frame_size < kSquare + kTrail + travel + 2) {
    throw InputError("frame size " + std::to_string(frame_size) + " too small for the moving pattern");
  }
}

SynthLayout synth_layout(const SynthConfig& config) {
  SynthLayout layout;
  layout.slots = (config.classes + 1) / 2;
  layout.run_length = std::max<std::size_t>(2, config.frames / (layout.slots + 1));
  if (layout.slots * layout.run_length > config.frames) {
    throw InputError("synthetic clips of " + std::to_string(config.frames) + " frames cannot hold " +
                     std::to_string(layout.slots) + " slots of " + std::to_string(layout.run_length) + " frames");
  }
  // Spread the slots evenly, leaving noise frames in the gaps.
  const double gap = static_cast<double>(config.frames - layout.slots * layout.run_length) /
                     static_cast<double>(layout.slots + 1);
  for (std::size_t p = 0; p < layout.slots; ++p) {
    layout.slot_starts.push_back(static_cast<std::size_t>(std::floor(gap * static_cast<double>(p + 1))) +
                                 p * layout.run_length);
  }
  return layout;
}

SynthDirection synth_direction(std::size_t label) { return label % 2 == 0 ? SynthDirection::down : SynthDirection::up; }

std::size_t synth_slot(std::size_t label) { return label / 2; }

std::vector<std::size_t> synth_informative_frames(const SynthConfig& config, std::size_t label) {
  const SynthLayout layout = synth_layout(config);
  std::vector<std::size_t> frames;
  const std::size_t start = layout.slot_starts.at(synth_slot(label));
  for (std::size_t i = 0; i < layout.run_length; ++i) frames.push_back(start + i);
  return frames;
}

std::vector<VideoSample> synth_generate(const SynthConfig& config) {
  config.validate();
  const SynthLayout layout = synth_layout(config);
  const std::size_t s = config.frame_size;
  const std::size_t plane = s * s;
  const std::size_t travel = kStep * (layout.run_length - 1);

  std::vector<VideoSample> videos;
  videos.reserve(config.samples);
  for (std::size_t i = 0; i < config.samples; ++i) {
    Rng rng(derive_seed(config.seed, {static_cast<std::uint64_t>(i)}));
    VideoSample video;
    video.label = i % config.classes;
    char id[32];
    std::snprintf(id, sizeof id, "video_%05zu", i);
    video.id = id;

    std::vector<double> values(config.frames * 3 * plane, kBackground);
    const SynthDirection direction = synth_direction(video.label);
    const std::size_t left = 1 + rng.below(s - kSquare - 1);
    // Top row of the square in the first informative frame.
    std::size_t top0;
    if (direction == SynthDirection::down) {
      top0 = kTrail + rng.below(s - kSquare - travel - kTrail + 1);
    } else {
      top0 = travel + rng.below(s - kSquare - kTrail - travel + 1);
    }
    const std::size_t start = layout.slot_starts[synth_slot(video.label)];
    for (std::size_t r = 0; r < layout.run_length; ++r) {
      const std::size_t t = start + r;
      const std::size_t top = direction == SynthDirection::down ? top0 + kStep * r : top0 - kStep * r;
      const std::size_t trail_top = direction == SynthDirection::down ? top - kTrail : top + kSquare;
      for (std::size_t c = 0; c < 3; ++c) {
        double* frame = values.data() + (t * 3 + c) * plane;
        for (std::size_t y = 0; y < kSquare; ++y) {
          for (std::size_t x = 0; x < kSquare; ++x) frame[(top + y) * s + left + x] = kSquareValue;
        }
        for (std::size_t y = 0; y < kTrail; ++y) {
          for (std::size_t x = 0; x < kSquare; ++x) frame[(trail_top + y) * s + left + x] = kTrailValue;
        }
      }
    }
    if (config.noise > 0.0) {
      for (double& v : values) v = std::clamp(v + config.noise * rng.normal(), 0.0, 1.0);
    }
    video.frames = Tensor(Shape{config.frames, 3, s, s}, std::move(values));
    videos.push_back(std::move(video));
  }
  return videos;
}

}  // namespace selrcn
