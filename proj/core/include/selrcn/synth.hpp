#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "selrcn/video.hpp"

namespace selrcn {

/// Synthetic action clips. Every frame is mid-gray plus Gaussian noise except
/// for one short run of informative frames in which a bright square moves
/// vertically, trailed by a dark streak on the side it came from. The class
/// encodes where in time the run occurs (slot) and whether the square moves
/// down or up, so recognizing it takes both appearance and temporal order.
struct SynthConfig {
  std::size_t classes = 4;
  std::size_t samples = 400;
  std::size_t frames = 10;
  std::size_t frame_size = 18;
  double noise = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Moving direction encoded by a class.
enum class SynthDirection { down, up };

struct SynthLayout {
  std::size_t slots = 0;
  std::size_t run_length = 0;
  std::vector<std::size_t> slot_starts;
};

SynthLayout synth_layout(const SynthConfig& config);
SynthDirection synth_direction(std::size_t label);
std::size_t synth_slot(std::size_t label);

/// Frame indices that carry the moving pattern for a given class.
std::vector<std::size_t> synth_informative_frames(const SynthConfig& config, std::size_t label);

/// Sample i gets label i mod K. Deterministic in config.seed.
std::vector<VideoSample> synth_generate(const SynthConfig& config);

}  // namespace selrcn
