#pragma once

// Checkpoint format, version 1. All integers and doubles little-endian.
//
//   bytes  "MDCS"
//   u32    format version (1)
//   u32    stitch mode (0 rgb, 1 freq, 2 none, 3 one, 4 all)
//   u64    seed
//   u32    frequency transform (0 dct, 1 fft, 2 dwt)
//   u32    input size N
//   u32    block count K
//   K x block:
//     u32  rank, then rank x u64 dims
//     u64  element count, then count x f64
//
// Block order: spatial mean, spatial std, frequency mean, frequency std
// (branch statistics, [3] each), then DualBranchModel::parameters() order:
// spatial backbone (block1..4 depthwise, pointwise, bias; fc weights, fc
// bias), frequency backbone, classifier weights, classifier bias, and the
// stitch alphas [4] = (rr, rd, dr, dd) last. Absent branches and units are
// omitted.

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "mdcs/image_io.hpp"
#include "mdcs/network.hpp"
#include "mdcs/pipeline.hpp"

namespace mdcs {

inline constexpr std::array<char, 4> kCheckpointMagic = {'M', 'D', 'C', 'S'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  DualBranchModel model;
  FeaturePipeline pipeline;
};

namespace detail {

class LeWriter {
 public:
  explicit LeWriter(std::vector<std::uint8_t>& out) : out_(out) {}
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put(bits, 8);
  }
  void block(const Tensor& t) {
    u32(static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) u64(d);
    u64(t.size());
    for (double v : t.data()) f64(v);
  }

 private:
  void put(std::uint64_t v, int bytes) {
    for (int i = 0; i < bytes; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t>& out_;
};

class LeReader {
 public:
  LeReader(const std::vector<std::uint8_t>& in, std::string path) : in_(in), path_(std::move(path)) {}
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  double f64() {
    const std::uint64_t bits = get(8);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  Tensor block(const std::string& what) {
    const std::uint32_t rank = u32();
    if (rank == 0 || rank > 8) throw fail("bad rank in block " + what);
    Shape shape(rank);
    for (auto& d : shape) d = u64();
    const std::uint64_t count = u64();
    if (count != shape_numel(shape) || count > (in_.size() - pos_) / 8) throw fail("bad length in block " + what);
    std::vector<double> data(count);
    for (auto& v : data) v = f64();
    return Tensor(shape, std::move(data));
  }
  bool at_end() const { return pos_ == in_.size(); }
  IoError fail(const std::string& why) const { return IoError("corrupt checkpoint " + path_ + ": " + why); }

 private:
  std::uint64_t get(int bytes) {
    if (in_.size() - pos_ < static_cast<std::size_t>(bytes)) throw fail("unexpected end of file");
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(in_[pos_ + i]) << (8 * i);
    pos_ += static_cast<std::size_t>(bytes);
    return v;
  }
  const std::vector<std::uint8_t>& in_;
  std::size_t pos_ = 0;
  std::string path_;
};

inline Tensor stats_tensor(const std::vector<double>& v) { return Tensor(Shape{v.size()}, v); }

}  // namespace detail

inline std::vector<std::uint8_t> serialize_checkpoint(Checkpoint& ckpt) {
  std::vector<std::uint8_t> bytes(kCheckpointMagic.begin(), kCheckpointMagic.end());
  detail::LeWriter w(bytes);
  auto params = ckpt.model.parameters();
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(ckpt.model.mode));
  w.u64(ckpt.model.seed);
  w.u32(static_cast<std::uint32_t>(ckpt.pipeline.transform));
  w.u32(static_cast<std::uint32_t>(ckpt.model.input_size));
  w.u32(static_cast<std::uint32_t>(4 + params.size()));
  w.block(detail::stats_tensor(ckpt.pipeline.spatial.mean));
  w.block(detail::stats_tensor(ckpt.pipeline.spatial.stddev));
  w.block(detail::stats_tensor(ckpt.pipeline.frequency.mean));
  w.block(detail::stats_tensor(ckpt.pipeline.frequency.stddev));
  for (const ParamRef& p : params) w.block(*p.tensor);
  return bytes;
}

inline void save_checkpoint(const std::filesystem::path& path, Checkpoint& ckpt) {
  const auto bytes = serialize_checkpoint(ckpt);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw IoError("failed writing " + path.string());
}

inline Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes, const std::string& path) {
  if (bytes.size() < 4 || !std::equal(kCheckpointMagic.begin(), kCheckpointMagic.end(), bytes.begin())) {
    throw IoError("not a checkpoint (bad magic): " + path);
  }
  const std::vector<std::uint8_t> body(bytes.begin() + 4, bytes.end());
  detail::LeReader r(body, path);
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) throw r.fail("unsupported version " + std::to_string(version));
  const std::uint32_t mode = r.u32();
  if (mode > static_cast<std::uint32_t>(StitchMode::ALL_STITCHES)) throw r.fail("bad mode " + std::to_string(mode));
  const std::uint64_t seed = r.u64();
  const std::uint32_t transform = r.u32();
  if (transform > static_cast<std::uint32_t>(Transform::DWT_HAAR)) {
    throw r.fail("bad transform " + std::to_string(transform));
  }
  const std::uint32_t input_size = r.u32();
  if (input_size == 0 || input_size % 16 != 0 || input_size > 4096) {
    throw r.fail("bad input size " + std::to_string(input_size));
  }
  Checkpoint ckpt{build_model(static_cast<StitchMode>(mode), input_size, seed), {}};
  ckpt.pipeline.transform = static_cast<Transform>(transform);
  auto params = ckpt.model.parameters();
  const std::uint32_t blocks = r.u32();
  if (blocks != 4 + params.size()) {
    throw r.fail("expected " + std::to_string(4 + params.size()) + " blocks, found " + std::to_string(blocks));
  }
  auto read_stats = [&](BranchStats& st, Branch b, const std::string& name) {
    st.branch = b;
    for (std::vector<double>* dst : {&st.mean, &st.stddev}) {
      const Tensor t = r.block(name);
      if (t.shape() != Shape{kInputChannels}) throw r.fail("block " + name + " must have shape [3]");
      dst->assign(t.data().begin(), t.data().end());
    }
  };
  read_stats(ckpt.pipeline.spatial, Branch::SPATIAL, "spatial.stats");
  read_stats(ckpt.pipeline.frequency, Branch::FREQUENCY, "frequency.stats");
  for (const ParamRef& p : params) {
    Tensor t = r.block(p.name);
    if (t.shape() != p.tensor->shape()) {
      throw r.fail("block " + p.name + " has shape " + shape_string(t.shape()) + ", expected " +
                   shape_string(p.tensor->shape()));
    }
    std::copy(t.data().begin(), t.data().end(), p.tensor->data().begin());
  }
  if (!r.at_end()) throw r.fail("trailing bytes");
  return ckpt;
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes, path.string());
}

}  // namespace mdcs
