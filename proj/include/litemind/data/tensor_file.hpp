#pragma once

// LMND tensor container, little-endian throughout:
//
//   offset  size     field
//   0       4        magic "LMND"
//   4       2        version (u16) = 1
//   6       1        dtype (u8): 0 = f32, 1 = f64
//   7       1        ndim (u8)
//   8       8*ndim   dims (u64 each)
//   ...     count*s  row-major payload
//
// The payload must be exactly count * sizeof(dtype) bytes; short files and
// trailing bytes are both rejected.

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <type_traits>
#include <vector>

#include "litemind/numerics/tensor.hpp"

namespace litemind {

inline constexpr std::uint16_t kTensorFileVersion = 1;
inline constexpr char kTensorMagic[4] = {'L', 'M', 'N', 'D'};

enum class Dtype : std::uint8_t { f32 = 0, f64 = 1 };

inline std::size_t dtype_size(Dtype d) { return d == Dtype::f32 ? 4 : 8; }

template <typename T>
constexpr Dtype dtype_of() {
  static_assert(std::is_same_v<T, float> || std::is_same_v<T, double>, "LMND stores f32 or f64");
  return std::is_same_v<T, float> ? Dtype::f32 : Dtype::f64;
}

class TensorFileError : public DataError {
 public:
  enum class Kind { io, bad_magic, bad_version, bad_dtype, bad_dims, truncated, trailing_bytes };
  TensorFileError(Kind kind, const std::string& what) : DataError(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

namespace detail {

inline void put_le(std::vector<std::uint8_t>& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline std::uint64_t get_le(const std::uint8_t* p, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

}  // namespace detail

template <typename T>
std::vector<std::uint8_t> encode_tensor(const RealTensor<T>& t) {
  if (t.shape.size() > 255) throw DataError("encode_tensor: too many dimensions");
  if (t.data.size() != element_count(t.shape)) throw DataError("encode_tensor: data/shape mismatch");
  std::vector<std::uint8_t> out(kTensorMagic, kTensorMagic + 4);
  detail::put_le(out, kTensorFileVersion, 2);
  out.push_back(static_cast<std::uint8_t>(dtype_of<T>()));
  out.push_back(static_cast<std::uint8_t>(t.shape.size()));
  for (auto e : t.shape) detail::put_le(out, e, 8);
  out.reserve(out.size() + t.data.size() * sizeof(T));
  for (T v : t.data) {
    if constexpr (std::is_same_v<T, float>) {
      detail::put_le(out, std::bit_cast<std::uint32_t>(v), 4);
    } else {
      detail::put_le(out, std::bit_cast<std::uint64_t>(v), 8);
    }
  }
  return out;
}

struct TensorHeader {
  Dtype dtype;
  Shape shape;
  std::size_t payload_offset;
};

inline TensorHeader decode_header(const std::vector<std::uint8_t>& bytes, const std::string& origin) {
  using K = TensorFileError::Kind;
  if (bytes.size() < 8) {
    throw TensorFileError(K::truncated, origin + ": header truncated (" + std::to_string(bytes.size()) +
                                            " bytes, need at least 8)");
  }
  if (std::memcmp(bytes.data(), kTensorMagic, 4) != 0) {
    throw TensorFileError(K::bad_magic, origin + ": bad magic (expected \"LMND\")");
  }
  const auto version = static_cast<std::uint16_t>(detail::get_le(bytes.data() + 4, 2));
  if (version != kTensorFileVersion) {
    throw TensorFileError(K::bad_version, origin + ": unsupported version " + std::to_string(version) +
                                              " (expected " + std::to_string(kTensorFileVersion) + ")");
  }
  const std::uint8_t code = bytes[6];
  if (code > 1) throw TensorFileError(K::bad_dtype, origin + ": unknown dtype code " + std::to_string(code));
  const std::size_t ndim = bytes[7];
  const std::size_t header = 8 + 8 * ndim;
  if (bytes.size() < header) {
    throw TensorFileError(K::truncated, origin + ": dims truncated (expected " + std::to_string(header) +
                                            " header bytes, got " + std::to_string(bytes.size()) + ")");
  }
  TensorHeader h{static_cast<Dtype>(code), Shape(ndim), header};
  std::uint64_t count = 1;
  for (std::size_t i = 0; i < ndim; ++i) {
    const std::uint64_t e = detail::get_le(bytes.data() + 8 + 8 * i, 8);
    if (e != 0 && count > (std::uint64_t{1} << 48) / e) {
      throw TensorFileError(K::bad_dims, origin + ": dims overflow");
    }
    count *= e;
    h.shape[i] = static_cast<std::size_t>(e);
  }
  return h;
}

template <typename T>
RealTensor<T> decode_tensor(const std::vector<std::uint8_t>& bytes, const std::string& origin = "tensor") {
  using K = TensorFileError::Kind;
  const auto h = decode_header(bytes, origin);
  const std::size_t count = element_count(h.shape);
  const std::size_t expected = count * dtype_size(h.dtype);
  const std::size_t actual = bytes.size() - h.payload_offset;
  if (actual < expected) {
    throw TensorFileError(K::truncated, origin + ": payload truncated, expected " + std::to_string(expected) +
                                            " bytes, got " + std::to_string(actual));
  }
  if (actual > expected) {
    throw TensorFileError(K::trailing_bytes, origin + ": " + std::to_string(actual - expected) +
                                                 " trailing bytes after payload of " + std::to_string(expected));
  }
  RealTensor<T> t(h.shape);
  const std::uint8_t* p = bytes.data() + h.payload_offset;
  for (std::size_t i = 0; i < count; ++i) {
    if (h.dtype == Dtype::f32) {
      t.data[i] = static_cast<T>(std::bit_cast<float>(static_cast<std::uint32_t>(detail::get_le(p + 4 * i, 4))));
    } else {
      t.data[i] = static_cast<T>(std::bit_cast<double>(detail::get_le(p + 8 * i, 8)));
    }
  }
  return t;
}

inline std::vector<std::uint8_t> read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TensorFileError(TensorFileError::Kind::io, "cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw TensorFileError(TensorFileError::Kind::io, "cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw TensorFileError(TensorFileError::Kind::io, "write failed for " + path);
}

template <typename T>
void write_tensor(const std::string& path, const RealTensor<T>& t) {
  write_bytes(path, encode_tensor(t));
}

// Reads either dtype and converts to T (lossless when the dtypes agree).
template <typename T>
RealTensor<T> read_tensor(const std::string& path) {
  return decode_tensor<T>(read_bytes(path), path);
}

inline TensorHeader read_tensor_header(const std::string& path) {
  return decode_header(read_bytes(path), path);
}

}  // namespace litemind
