#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "rbda/error.hpp"

namespace rbda::io {

/// Little-endian primitive writer over a std::ostream.
class LeWriter {
 public:
  explicit LeWriter(std::ostream& os) : os_(os) {}

  void bytes(const void* data, std::size_t n) {
    os_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
  }
  void u32(std::uint32_t x) { put(x); }
  void u64(std::uint64_t x) { put(x); }
  void f64(double x) { put(std::bit_cast<std::uint64_t>(x)); }
  void f64_array(std::span<const double> xs) {
    u64(xs.size());
    for (double x : xs) f64(x);
  }

 private:
  template <class T>
  void put(T x) {
    std::array<unsigned char, sizeof(T)> b{};
    for (std::size_t k = 0; k < sizeof(T); ++k) b[k] = static_cast<unsigned char>(x >> (8 * k));
    bytes(b.data(), b.size());
  }

  std::ostream& os_;
};

/// Little-endian primitive reader; throws MissingInput on truncation.
class LeReader {
 public:
  LeReader(std::istream& is, std::string source) : is_(is), source_(std::move(source)) {}

  void bytes(void* data, std::size_t n) {
    is_.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(is_.gcount()) != n) {
      throw MissingInput(source_ + ": truncated file");
    }
  }
  std::uint32_t u32() { return get<std::uint32_t>(); }
  std::uint64_t u64() { return get<std::uint64_t>(); }
  double f64() { return std::bit_cast<double>(get<std::uint64_t>()); }
  std::vector<double> f64_array(std::uint64_t expected) {
    const std::uint64_t n = u64();
    if (n != expected) {
      throw ConfigError(source_ + ": array length " + std::to_string(n) + ", expected " +
                        std::to_string(expected));
    }
    std::vector<double> xs(n);
    for (double& x : xs) x = f64();
    return xs;
  }
  bool at_end() { return is_.peek() == std::char_traits<char>::eof(); }
  const std::string& source() const { return source_; }

 private:
  template <class T>
  T get() {
    std::array<unsigned char, sizeof(T)> b{};
    bytes(b.data(), b.size());
    T x = 0;
    for (std::size_t k = 0; k < sizeof(T); ++k) x |= static_cast<T>(b[k]) << (8 * k);
    return x;
  }

  std::istream& is_;
  std::string source_;
};

}  // namespace rbda::io
