#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "synchronic/vm/trace.hpp"

namespace synchronic::harness {

struct Metrics {
  std::uint64_t cycles = 0;
  std::size_t peak_active = 0;
  double mean_active = 0;
  vm::RegIndex footprint = 0;  // highest register index touched
  std::optional<std::string> error;

  std::string to_string() const;
};

/// Throws Error(Stage::Parse) for an empty trace.
Metrics metrics(const std::vector<vm::TraceRecord>& trace, std::optional<std::string> error = std::nullopt);
Metrics metrics(std::string_view trace_text);

}  // namespace synchronic::harness
