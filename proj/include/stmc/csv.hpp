#pragma once

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace stmc {

// 17 significant digits, '.' decimal separator, locale-independent.
std::string format_double(double v);

// FNV-1a 64-bit over raw bytes, hex-encoded (config fingerprints).
std::string fnv1a64_hex(std::string_view bytes);

// RFC-4180 CSV writer: comma separator, "" escaping, \r\n line endings.
class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path) : out_(path, std::ios::binary) {
    if (!out_) throw std::runtime_error("cannot open for writing: " + path);
  }

  template <class... Ts>
  void row(const Ts&... vals) {
    bool first = true;
    ((write_field(vals, first), first = false), ...);
    out_ << "\r\n";
  }

 private:
  void write_field(double v, bool first) { put(format_double(v), first); }
  void write_field(int v, bool first) { put(std::to_string(v), first); }
  void write_field(long v, bool first) { put(std::to_string(v), first); }
  void write_field(std::size_t v, bool first) { put(std::to_string(v), first); }
  void write_field(const char* s, bool first) { put_quoted(s, first); }
  void write_field(const std::string& s, bool first) { put_quoted(s, first); }

  void put(const std::string& s, bool first) {
    if (!first) out_ << ',';
    out_ << s;
  }
  void put_quoted(std::string_view s, bool first);

  std::ofstream out_;
};

} // namespace stmc
