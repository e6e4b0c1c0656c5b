#include "selrcn/checkpoint.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <map>
#include <string>

#include "selrcn/errors.hpp"

namespace selrcn {

namespace {

constexpr char kMagic[4] = {'S', 'E', 'L', 'R'};
constexpr std::string_view kExact = "@f64";
constexpr std::size_t kChunks = 4;

class Writer {
 public:
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    out_.insert(out_.end(), p, p + n);
  }
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) {
    for (int i = 0; i < 2; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  std::size_t offset() const { return pos_; }
  bool done() const { return pos_ == in_.size(); }

  void need(std::size_t n, const char* what) {
    if (in_.size() - pos_ < n) {
      throw FormatError(std::string("truncated checkpoint while reading ") + what, pos_);
    }
  }
  std::uint8_t u8(const char* what) {
    need(1, what);
    return in_[pos_++];
  }
  std::uint16_t u16(const char* what) {
    need(2, what);
    std::uint16_t v = 0;
    for (int i = 0; i < 2; ++i) v |= static_cast<std::uint16_t>(in_[pos_++]) << (8 * i);
    return v;
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in_[pos_++]) << (8 * i);
    return v;
  }
  float f32(const char* what) { return std::bit_cast<float>(u32(what)); }
  std::string text(std::size_t n, const char* what) {
    need(n, what);
    std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
    pos_ += n;
    return s;
  }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

void write_record(Writer& w, const std::string& name, const Shape& shape, const std::vector<float>& payload) {
  if (name.size() > std::numeric_limits<std::uint16_t>::max()) throw InputError("tensor name too long: " + name);
  if (shape.size() > std::numeric_limits<std::uint8_t>::max()) throw InputError("tensor rank too large: " + name);
  w.u16(static_cast<std::uint16_t>(name.size()));
  w.bytes(name.data(), name.size());
  w.u8(static_cast<std::uint8_t>(shape.size()));
  for (std::size_t d : shape) {
    if (d > std::numeric_limits<std::uint32_t>::max()) throw InputError("tensor dimension too large: " + name);
    w.u32(static_cast<std::uint32_t>(d));
  }
  for (float v : payload) w.f32(v);
}

void write_section(Writer& w, const NamedTensors& tensors) {
  struct Pending {
    std::string name;
    Shape shape;
    std::vector<float> payload;
  };
  std::vector<Pending> records;
  for (const NamedTensor& nt : tensors) {
    if (nt.name.ends_with(kExact)) throw InputError("tensor name '" + nt.name + "' uses a reserved suffix");
    const auto values = nt.tensor.data();
    std::vector<float> rounded(values.size());
    bool exact = true;
    for (std::size_t i = 0; i < values.size(); ++i) {
      rounded[i] = static_cast<float>(values[i]);
      exact = exact && std::bit_cast<std::uint64_t>(static_cast<double>(rounded[i])) ==
                           std::bit_cast<std::uint64_t>(values[i]);
    }
    records.push_back({nt.name, nt.tensor.shape(), std::move(rounded)});
    if (!exact) {
      std::vector<float> chunks;
      chunks.reserve(values.size() * kChunks);
      for (double v : values) {
        const std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
        for (std::size_t c = 0; c < kChunks; ++c) chunks.push_back(static_cast<float>((bits >> (16 * c)) & 0xFFFFu));
      }
      Shape shape = nt.tensor.shape();
      shape.push_back(kChunks);
      records.push_back({nt.name + std::string(kExact), std::move(shape), std::move(chunks)});
    }
  }
  w.u32(static_cast<std::uint32_t>(records.size()));
  for (const Pending& r : records) write_record(w, r.name, r.shape, r.payload);
}

NamedTensors read_section(Reader& r) {
  const std::uint32_t count = r.u32("section count");
  NamedTensors out;
  std::map<std::string, std::size_t> index;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::size_t record_offset = r.offset();
    const std::uint16_t name_len = r.u16("name length");
    std::string name = r.text(name_len, "tensor name");
    const std::uint8_t ndim = r.u8("rank");
    if (ndim == 0) throw FormatError("tensor '" + name + "' has rank 0", record_offset);
    Shape shape(ndim);
    std::size_t numel = 1;
    for (std::uint8_t d = 0; d < ndim; ++d) {
      const std::size_t dim_offset = r.offset();
      shape[d] = r.u32("dimension");
      if (shape[d] == 0) throw FormatError("tensor '" + name + "' has a zero dimension", dim_offset);
      numel *= shape[d];
    }
    r.need(numel * 4, "tensor payload");
    const std::size_t payload_offset = r.offset();
    std::vector<double> values(numel);
    for (double& v : values) v = r.f32("tensor payload");

    if (!name.ends_with(kExact)) {
      index[name] = out.size();
      out.push_back({std::move(name), Tensor(std::move(shape), std::move(values))});
      continue;
    }
    // Exact 64-bit companion: replaces the rounded values of its base tensor.
    const std::string base = name.substr(0, name.size() - kExact.size());
    auto it = index.find(base);
    Shape base_shape = shape;
    base_shape.pop_back();
    if (it == index.end() || shape.back() != kChunks || out[it->second].tensor.shape() != base_shape) {
      throw FormatError("companion '" + name + "' does not match a preceding tensor", record_offset);
    }
    auto dst = out[it->second].tensor.mutable_data();
    for (std::size_t e = 0; e < dst.size(); ++e) {
      std::uint64_t bits = 0;
      for (std::size_t c = 0; c < kChunks; ++c) {
        const double chunk = values[e * kChunks + c];
        if (!(chunk >= 0.0 && chunk <= 65535.0) || chunk != std::floor(chunk)) {
          throw FormatError("companion '" + name + "' holds a non-integer chunk", payload_offset);
        }
        bits |= static_cast<std::uint64_t>(chunk) << (16 * c);
      }
      dst[e] = std::bit_cast<double>(bits);
    }
  }
  return out;
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& checkpoint) {
  Writer w;
  w.bytes(kMagic, sizeof kMagic);
  w.u32(kCheckpointVersion);
  write_section(w, checkpoint.tensors);
  write_section(w, checkpoint.optimizer);
  write_section(w, checkpoint.config);
  return w.take();
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  if (bytes.size() < sizeof kMagic || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    throw FormatError("bad checkpoint magic (expected \"SELR\")", 0);
  }
  r.text(sizeof kMagic, "magic");
  const std::size_t version_offset = r.offset();
  const std::uint32_t version = r.u32("version");
  if (version != kCheckpointVersion) throw UnsupportedVersionError(version, version_offset);

  Checkpoint checkpoint;
  checkpoint.tensors = read_section(r);
  checkpoint.optimizer = read_section(r);
  checkpoint.config = read_section(r);
  if (!r.done()) throw FormatError("unexpected trailing bytes after checkpoint", r.offset());
  return checkpoint;
}

void checkpoint_save(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  const std::vector<std::uint8_t> bytes = encode_checkpoint(checkpoint);
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write checkpoint " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("failed writing checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint checkpoint_load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

const Tensor* find_tensor(const NamedTensors& tensors, std::string_view name) {
  for (const NamedTensor& nt : tensors) {
    if (nt.name == name) return &nt.tensor;
  }
  return nullptr;
}

}  // namespace selrcn
