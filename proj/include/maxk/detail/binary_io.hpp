#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

#include "maxk/error.hpp"

namespace maxk::detail {

// All on-disk integers and floats are little-endian regardless of host.

class BinaryWriter {
 public:
  explicit BinaryWriter(std::ostream& os) : os_(os) {}

  void magic(std::string_view tag) { os_.write(tag.data(), static_cast<std::streamsize>(tag.size())); }
  void u8(std::uint8_t v) { put<1>(v); }
  void u16(std::uint16_t v) { put<2>(v); }
  void u32(std::uint32_t v) { put<4>(v); }
  void u64(std::uint64_t v) { put<8>(v); }
  void f32(float v) { put<4>(std::bit_cast<std::uint32_t>(v)); }

 private:
  template <int N, typename U>
  void put(U v) {
    std::array<char, N> buf;
    for (int i = 0; i < N; ++i) buf[i] = static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff);
    os_.write(buf.data(), N);
  }

  std::ostream& os_;
};

class BinaryReader {
 public:
  BinaryReader(std::istream& is, std::string what) : is_(is), what_(std::move(what)) {}

  void expect_magic(std::string_view tag) {
    std::string got(tag.size(), '\0');
    read_raw(got.data(), got.size());
    if (got != tag) throw FormatError(what_ + ": bad magic, expected \"" + std::string(tag) + "\"");
  }
  std::uint8_t u8() { return static_cast<std::uint8_t>(get<1>()); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(get<2>()); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get<4>()); }
  std::uint64_t u64() { return get<8>(); }
  float f32() { return std::bit_cast<float>(u32()); }

  /// True when the stream has no bytes left.
  bool at_end() { return is_.peek() == std::char_traits<char>::eof(); }

 private:
  template <int N>
  std::uint64_t get() {
    std::array<unsigned char, N> buf;
    read_raw(reinterpret_cast<char*>(buf.data()), N);
    std::uint64_t v = 0;
    for (int i = 0; i < N; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
  }

  void read_raw(char* dst, std::size_t n) {
    is_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(is_.gcount()) != n) throw LengthError(what_ + ": truncated file");
  }

  std::istream& is_;
  std::string what_;
};

}  // namespace maxk::detail
