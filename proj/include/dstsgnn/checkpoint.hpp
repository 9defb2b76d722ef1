#pragma once

// Versioned binary checkpoint. All integers and doubles are little-endian.
//
//   magic      8 bytes  "DSTSGNN\x01"
//   version    u32      = 1
//   config     i64 t, horizon, variables, p, s, k, d, m, decomp_kernel,
//                  epochs, batch_size, patience
//              u64 seed
//              f64 ridge, learning_rate
//   blocks     u32 count, then per block: u64 rows, u64 cols, f64[rows*cols]
//              column-major, in ModelParams flat order
//   scaler     u8 present; if 1: block mean (N x 1), block std (N x 1)
//   trailer    4 bytes  "END\0"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dstsgnn/data.hpp"
#include "dstsgnn/errors.hpp"
#include "dstsgnn/model.hpp"

namespace dstsgnn {

inline constexpr std::array<char, 8> kCheckpointMagic = {'D', 'S', 'T', 'S', 'G', 'N', 'N', '\x01'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelConfig config;
  ModelParams params;
  std::optional<Standardizer> scaler;  // dataset standardization fitted on the training split
};

namespace detail {

class LeWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void i64(std::int64_t v) { put(static_cast<std::uint64_t>(v), 8); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
  void bytes(const char* p, std::size_t n) { buf_.append(p, n); }
  void block(const Eigen::Ref<const Matrix>& m) {
    u64(static_cast<std::uint64_t>(m.rows()));
    u64(static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i) f64(m(i, j));
  }
  const std::string& str() const noexcept { return buf_; }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
  }
  std::string buf_;
};

class LeReader {
 public:
  explicit LeReader(std::string data) : data_(std::move(data)) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  std::int64_t i64() { return static_cast<std::int64_t>(get(8)); }
  double f64() { return std::bit_cast<double>(get(8)); }
  void bytes(char* out, std::size_t n) {
    need(n);
    std::memcpy(out, data_.data() + pos_, n);
    pos_ += n;
  }
  Matrix block(Eigen::Index rows, Eigen::Index cols) {
    const auto r = u64(), c = u64();
    if (r != static_cast<std::uint64_t>(rows) || c != static_cast<std::uint64_t>(cols))
      fail(ErrorKind::Format, "block shape " + std::to_string(r) + "x" + std::to_string(c) + " does not match config (" +
                                  shape_str(rows, cols) + ")");
    need(static_cast<std::size_t>(r * c * 8));
    Matrix m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
      for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = f64();
    return m;
  }
  bool at_end() const noexcept { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) fail(ErrorKind::Format, "checkpoint is truncated");
  }
  std::uint64_t get(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  std::string data_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::string encode_checkpoint(const Checkpoint& ck) {
  detail::LeWriter w;
  w.bytes(kCheckpointMagic.data(), kCheckpointMagic.size());
  w.u32(kCheckpointVersion);
  const ModelConfig& c = ck.config;
  for (std::int64_t v : {c.t, c.horizon, c.variables, c.p, c.s, c.k, c.d, c.m, c.decomp_kernel, c.epochs,
                         c.batch_size, c.patience})
    w.i64(v);
  w.u64(c.seed);
  w.f64(c.ridge);
  w.f64(c.learning_rate);

  std::uint32_t count = 0;
  ck.params.for_each_block([&](const Eigen::Ref<const Matrix>&) { ++count; });
  w.u32(count);
  ck.params.for_each_block([&](const Eigen::Ref<const Matrix>& b) { w.block(b); });

  w.u8(ck.scaler ? 1 : 0);
  if (ck.scaler) {
    w.block(ck.scaler->mean);
    w.block(ck.scaler->std);
  }
  w.bytes("END\0", 4);
  return w.str();
}

inline Checkpoint decode_checkpoint(std::string data) {
  detail::LeReader r(std::move(data));
  std::array<char, 8> magic{};
  r.bytes(magic.data(), magic.size());
  if (magic != kCheckpointMagic) detail::fail(ErrorKind::Format, "bad checkpoint magic");
  const auto version = r.u32();
  if (version != kCheckpointVersion)
    detail::fail(ErrorKind::Format, "unsupported checkpoint version " + std::to_string(version));

  Checkpoint ck;
  ModelConfig& c = ck.config;
  for (std::int64_t* f : {&c.t, &c.horizon, &c.variables, &c.p, &c.s, &c.k, &c.d, &c.m, &c.decomp_kernel, &c.epochs,
                          &c.batch_size, &c.patience})
    *f = r.i64();
  c.seed = r.u64();
  c.ridge = r.f64();
  c.learning_rate = r.f64();
  try {
    c.validate();
  } catch (const Error& e) {
    detail::fail(ErrorKind::Format, std::string("checkpoint config invalid: ") + e.what());
  }

  // Shapes come from the config; the stored shapes must agree.
  ModelParams shape;
  for (auto& comp : shape.comp) {
    comp.embed_w.resize(c.p, c.k);
    comp.embed_b.resize(c.k);
    comp.kernels.layer_weights.assign(static_cast<std::size_t>(c.m), Matrix(c.nodes(), c.k));
  }
  shape.head_w.resize(c.head_inputs(), c.horizon);
  shape.head_b.resize(c.horizon);
  std::uint32_t expected = 0;
  shape.for_each_block([&](const Eigen::Ref<const Matrix>&) { ++expected; });
  if (r.u32() != expected) detail::fail(ErrorKind::Format, "parameter block count does not match config");
  shape.for_each_block([&](Eigen::Ref<Matrix> b) { b = r.block(b.rows(), b.cols()); });
  ck.params = std::move(shape);

  const auto has_scaler = r.u8();
  if (has_scaler > 1) detail::fail(ErrorKind::Format, "bad scaler flag");
  if (has_scaler) {
    Standardizer s;
    s.mean = r.block(c.variables, 1);
    s.std = r.block(c.variables, 1);
    ck.scaler = std::move(s);
  }
  std::array<char, 4> trailer{};
  r.bytes(trailer.data(), trailer.size());
  if (std::memcmp(trailer.data(), "END\0", 4) != 0 || !r.at_end())
    detail::fail(ErrorKind::Format, "bad checkpoint trailer");
  return ck;
}

inline void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  const std::string bytes = encode_checkpoint(ck);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) detail::fail(ErrorKind::Io, "cannot write checkpoint '" + path + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) detail::fail(ErrorKind::Io, "write failed for '" + path + "'");
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) detail::fail(ErrorKind::Io, "cannot open checkpoint '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return decode_checkpoint(ss.str());
}

}  // namespace dstsgnn
