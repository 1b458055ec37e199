#pragma once

#include <array>
#include <charconv>
#include <string>

namespace simofdm {

/// Shortest decimal text that parses back to the same double.
inline std::string format_number(double x) {
  std::array<char, 64> buf{};
  const auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return ec == std::errc{} ? std::string(buf.data(), p) : std::string("nan");
}

}  // namespace simofdm
