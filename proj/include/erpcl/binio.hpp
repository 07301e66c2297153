#pragma once

// Little-endian byte encoding shared by the ERPD and ERPW containers.

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>
#include <vector>

#include "erpcl/error.hpp"

namespace erpcl::binio {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <class U>
U to_little(U v) {
  if constexpr (std::endian::native == std::endian::little || sizeof(U) == 1) {
    return v;
  } else {
    U out{};
    auto* src = reinterpret_cast<const unsigned char*>(&v);
    auto* dst = reinterpret_cast<unsigned char*>(&out);
    for (std::size_t i = 0; i < sizeof(U); ++i) dst[i] = src[sizeof(U) - 1 - i];
    return out;
  }
}

class Writer {
 public:
  void bytes(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) { put(to_little(v)); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

  const std::string& buffer() const { return buf_; }
  std::string take() { return std::move(buf_); }

 private:
  template <class U>
  void put(U v) {
    char raw[sizeof(U)];
    std::memcpy(raw, &v, sizeof(U));
    buf_.append(raw, sizeof(U));
  }
  std::string buf_;
};

class Reader {
 public:
  Reader(std::string_view data, std::string_view what) : data_(data), what_(what) {}

  std::uint64_t offset() const { return pos_; }
  std::uint64_t remaining() const { return data_.size() - pos_; }
  std::uint64_t size() const { return data_.size(); }

  std::string_view bytes(std::size_t n) {
    need(n);
    auto out = data_.substr(pos_, n);
    pos_ += n;
    return out;
  }
  std::uint8_t u8() { return static_cast<std::uint8_t>(bytes(1)[0]); }
  std::uint32_t u32() {
    std::uint32_t v;
    std::memcpy(&v, bytes(4).data(), 4);
    return to_little(v);
  }
  float f32() { return std::bit_cast<float>(u32()); }

 private:
  void need(std::size_t n) const {
    if (remaining() < n) {
      throw FormatError(std::string(what_) + ": truncated, expected " + std::to_string(pos_ + n) +
                            " bytes but file has " + std::to_string(data_.size()),
                        pos_);
    }
  }

  std::string_view data_;
  std::string_view what_;
  std::uint64_t pos_ = 0;
};

std::string read_file(const std::string& path);
/// Writes to path + ".tmp", then renames over path.
void write_file(const std::string& path, std::string_view contents);

}  // namespace erpcl::binio
