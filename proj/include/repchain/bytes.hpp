#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace repchain {

using Bytes = std::vector<std::uint8_t>;

// 256-bit digest. Also used for keys, signatures and VRF outputs.
using Digest = std::array<std::uint8_t, 32>;

inline constexpr Digest kZeroDigest{};

inline std::string to_hex(std::span<const std::uint8_t> data) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(data.size() * 2);
  for (auto b : data) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0x0f]);
  }
  return out;
}

inline Bytes from_hex(std::string_view hex) {
  if (hex.size() % 2 != 0) throw std::invalid_argument("from_hex: odd length");
  auto nibble = [](char c) -> std::uint8_t {
    if (c >= '0' && c <= '9') return static_cast<std::uint8_t>(c - '0');
    if (c >= 'a' && c <= 'f') return static_cast<std::uint8_t>(c - 'a' + 10);
    if (c >= 'A' && c <= 'F') return static_cast<std::uint8_t>(c - 'A' + 10);
    throw std::invalid_argument("from_hex: bad digit");
  };
  Bytes out(hex.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = static_cast<std::uint8_t>(nibble(hex[2 * i]) << 4 | nibble(hex[2 * i + 1]));
  return out;
}

inline Digest digest_from_hex(std::string_view hex) {
  auto raw = from_hex(hex);
  if (raw.size() != 32) throw std::invalid_argument("digest_from_hex: need 64 hex digits");
  Digest d;
  std::copy(raw.begin(), raw.end(), d.begin());
  return d;
}

inline void append_u64be(Bytes& out, std::uint64_t v) {
  for (int shift = 56; shift >= 0; shift -= 8)
    out.push_back(static_cast<std::uint8_t>(v >> shift));
}

inline std::uint64_t read_u64be(std::span<const std::uint8_t> in) {
  if (in.size() < 8) throw std::out_of_range("read_u64be: short input");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = v << 8 | in[i];
  return v;
}

// Canonical encoder. Every field is written as an 8-byte big-endian length
// followed by the payload. Integers are 8-byte big-endian payloads; nested
// records and lists are the concatenation of their own fields.
class Encoder {
 public:
  Encoder& u64(std::uint64_t v) {
    append_u64be(buf_, 8);
    append_u64be(buf_, v);
    return *this;
  }

  Encoder& i64(std::int64_t v) { return u64(static_cast<std::uint64_t>(v)); }

  Encoder& bytes(std::span<const std::uint8_t> b) {
    append_u64be(buf_, b.size());
    buf_.insert(buf_.end(), b.begin(), b.end());
    return *this;
  }

  Encoder& nested(const Encoder& inner) { return bytes(inner.buf_); }

  const Bytes& data() const& { return buf_; }
  const Bytes& data() const&& = delete;
  Bytes take() { return std::move(buf_); }

 private:
  Bytes buf_;
};

inline Bytes concat(std::initializer_list<std::span<const std::uint8_t>> parts) {
  Bytes out;
  for (auto p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

inline std::span<const std::uint8_t> as_bytes(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

}  // namespace repchain
