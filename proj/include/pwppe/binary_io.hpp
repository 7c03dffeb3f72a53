#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "pwppe/common.hpp"

namespace pwppe {

// Little-endian serialization helpers shared by the binary formats.
class ByteWriter {
public:
  void bytes(const char* p, std::size_t n) { buf_.insert(buf_.end(), p, p + n); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

  const std::vector<char>& buffer() const noexcept { return buf_; }

private:
  std::vector<char> buf_;
};

class ByteReader {
public:
  ByteReader(std::vector<char> data, std::string source, std::size_t start = 0)
      : data_(std::move(data)), source_(std::move(source)), pos_(start) {}

  void bytes(char* p, std::size_t n) {
    need(n);
    std::memcpy(p, data_.data() + pos_, n);
    pos_ += n;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }

  std::size_t offset() const noexcept { return pos_; }
  bool at_end() const noexcept { return pos_ == data_.size(); }
  std::size_t remaining() const noexcept { return data_.size() - pos_; }

private:
  void need(std::size_t n) const {
    if (pos_ + n > data_.size()) throw FormatError(source_ + ": unexpected end of file", pos_);
  }

  std::vector<char> data_;
  std::string source_;
  std::size_t pos_;
};

std::vector<char> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, const std::vector<char>& bytes);

}  // namespace pwppe
