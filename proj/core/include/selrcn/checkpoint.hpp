#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "selrcn/tensor.hpp"

namespace selrcn {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Named-tensor archive with three sections: model tensors, optimizer state
/// and a configuration echo.
///
/// Binary layout (little-endian):
///   "SELR" | u32 version | u32 count | count × record      (model)
///          | u32 count | count × record                    (optimizer)
///          | u32 count | count × record                    (config)
///   record: u16 name length | UTF-8 name | u8 ndim | ndim × u32 dims |
///           numel × f32 payload
///
/// Payloads are 32-bit. A tensor whose values are not all exactly
/// representable in 32 bits is followed by a companion record "<name>@f64" of
/// shape [dims…×4] holding each value's 64-bit pattern as four 16-bit
/// integers (least significant first); the reader restores the exact values
/// from it. Readers that ignore companions see the float rounding.
struct Checkpoint {
  NamedTensors tensors;
  NamedTensors optimizer;
  NamedTensors config;
};

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& checkpoint);

/// Throws FormatError (UnsupportedVersionError for version ≠ 1) naming the
/// byte offset where decoding failed.
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

/// Writes to a temporary file and renames it over `path`.
void checkpoint_save(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint checkpoint_load(const std::filesystem::path& path);

/// Tensor with the given name, or nullptr.
const Tensor* find_tensor(const NamedTensors& tensors, std::string_view name);

}  // namespace selrcn
