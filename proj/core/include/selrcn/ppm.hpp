#pragma once

#include <filesystem>

#include "selrcn/tensor.hpp"

namespace selrcn {

/// Reads a binary PPM (P6, maxval ≤ 255) into [3×H×W] with values in [0,1].
Tensor read_ppm(const std::filesystem::path& path);

/// Writes [3×H×W] values in [0,1] as P6 with maxval 255 (rounded, clamped).
void write_ppm(const std::filesystem::path& path, const Tensor& frame);

}  // namespace selrcn
