#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace synchronic::text {

struct Line {
  std::size_t number = 0;  // 1-based
  std::string_view body;   // comment stripped, trimmed
};

/// Splits on '\n', strips '#' comments and surrounding whitespace and drops
/// blank lines.
std::vector<Line> logical_lines(std::string_view source);

std::string_view trim(std::string_view s);
std::vector<std::string_view> split_ws(std::string_view s);

/// Decimal unsigned integer; nullopt on anything else or overflow.
std::optional<std::uint64_t> parse_uint(std::string_view s);

bool is_identifier(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace synchronic::text
