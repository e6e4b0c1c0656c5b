#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <vector>

#include "selrcn/checkpoint.hpp"
#include "selrcn/errors.hpp"
#include "test_support.hpp"

namespace selrcn {
namespace {

namespace fs = std::filesystem;

Checkpoint sample_checkpoint() {
  Rng rng(1);
  Checkpoint c;
  c.tensors.push_back({"cnn.stem.weight", testing::random_tensor({2, 3, 3, 3}, rng)});
  c.tensors.push_back({"exact", Tensor({4}, {0.5, -2.0, 1024.0, 0.0})});
  c.tensors.push_back({"awkward", Tensor({5}, {1e-300, std::numeric_limits<double>::denorm_min(), -0.0,
                                               std::numeric_limits<double>::max(), 1.0 / 3.0})});
  c.optimizer.push_back({"adam.step", Tensor({1}, {3.0})});
  c.config.push_back({"config.preset", Tensor({1}, {1.0})});
  return c;
}

void expect_same(const NamedTensors& a, const NamedTensors& b) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].name, b[i].name);
    EXPECT_EQ(a[i].tensor.shape(), b[i].tensor.shape());
    EXPECT_TRUE(testing::bit_equal(a[i].tensor.data(), b[i].tensor.data())) << a[i].name;
  }
}

TEST(Checkpoint, RoundTripIsBitIdentical) {
  const Checkpoint c = sample_checkpoint();
  const Checkpoint back = decode_checkpoint(encode_checkpoint(c));
  expect_same(c.tensors, back.tensors);
  expect_same(c.optimizer, back.optimizer);
  expect_same(c.config, back.config);
  EXPECT_EQ(find_tensor(back.tensors, "exact")->at({2}), 1024.0);
  EXPECT_EQ(find_tensor(back.tensors, "nope"), nullptr);
}

TEST(Checkpoint, FloatRepresentableTensorsNeedNoCompanion) {
  Checkpoint c;
  c.tensors.push_back({"w", Tensor({2}, {0.5, 0.25})});
  // magic + version + three counts + one record of name 1, rank 1, 2 floats.
  EXPECT_EQ(encode_checkpoint(c).size(), 4u + 4u + 3u * 4u + (2u + 1u + 1u + 4u + 8u));
}

TEST(Checkpoint, HeaderLayout) {
  const auto bytes = encode_checkpoint(sample_checkpoint());
  ASSERT_GE(bytes.size(), 8u);
  EXPECT_EQ(std::memcmp(bytes.data(), "SELR", 4), 0);
  EXPECT_EQ(bytes[4], 1);
  EXPECT_EQ(bytes[5] | bytes[6] | bytes[7], 0);
}

TEST(Checkpoint, EveryTruncationIsRejected) {
  const auto bytes = encode_checkpoint(sample_checkpoint());
  for (std::size_t n = 0; n < bytes.size(); n += 7) {
    EXPECT_THROW(decode_checkpoint(std::span(bytes.data(), n)), FormatError) << n;
  }
}

TEST(Checkpoint, TrailingBytesAreRejected) {
  auto bytes = encode_checkpoint(sample_checkpoint());
  bytes.push_back(0);
  EXPECT_THROW(decode_checkpoint(bytes), FormatError);
}

TEST(Checkpoint, BadMagicIsRejectedAtOffsetZero) {
  auto bytes = encode_checkpoint(sample_checkpoint());
  bytes[0] = 'X';
  try {
    decode_checkpoint(bytes);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_EQ(e.offset(), 0u);
  }
}

TEST(Checkpoint, VersionTwoIsUnsupported) {
  auto bytes = encode_checkpoint(sample_checkpoint());
  bytes[4] = 2;
  try {
    decode_checkpoint(bytes);
    FAIL() << "expected UnsupportedVersionError";
  } catch (const UnsupportedVersionError& e) {
    EXPECT_EQ(e.version(), 2u);
    EXPECT_EQ(e.offset(), 4u);
  }
}

TEST(Checkpoint, SaveLoadThroughFile) {
  const fs::path dir = fs::temp_directory_path() / "selrcn_unit_checkpoint";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const fs::path path = dir / "model.selr";
  const Checkpoint c = sample_checkpoint();
  checkpoint_save(path, c);
  checkpoint_save(path, c);
  expect_same(c.tensors, checkpoint_load(path).tensors);
  std::size_t files = 0;
  for ([[maybe_unused]] const auto& entry : fs::directory_iterator(dir)) ++files;
  EXPECT_EQ(files, 1u);

  const auto size = fs::file_size(path);
  fs::resize_file(path, size / 2);
  EXPECT_THROW(checkpoint_load(path), FormatError);
  EXPECT_ANY_THROW(checkpoint_load(dir / "absent.selr"));
  fs::remove_all(dir);
}

}  // namespace
}  // namespace selrcn
