#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace lscd {

/// Splits on runs of ASCII whitespace; never returns empty tokens.
std::vector<std::string> split_ws(std::string_view line);

/// Splits on a single delimiter, keeping empty fields.
std::vector<std::string_view> split_on(std::string_view line, char delim);

std::string_view trim(std::string_view s);

/// Shortest decimal form that round-trips the double.
std::string format_double(double v);

/// Decimal form with 9 significant digits (round-trips any float).
std::string format_float9(float v);

double parse_double(std::string_view s);
float parse_float(std::string_view s);
std::int64_t parse_int(std::string_view s);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

/// 64-bit FNV-1a, used for cache keys and content fingerprints.
class Fingerprint {
 public:
  Fingerprint& add(std::string_view bytes);
  Fingerprint& add(std::uint64_t v);
  Fingerprint& add(double v);
  std::uint64_t value() const { return h_; }
  std::string hex() const;

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

}  // namespace lscd
