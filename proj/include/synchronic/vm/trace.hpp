#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "synchronic/vm/machine.hpp"

namespace synchronic::vm {

/// `cycle=<n> active=[..] writes=[(r,b,v),..] next=[..]`
std::string format_record(const TraceRecord& record);

/// One line per record plus an optional trailing `error=...` line.
std::string format_trace(const std::vector<TraceRecord>& trace,
                         const std::optional<MachineError>& error = std::nullopt);

struct ParsedTrace {
  std::vector<TraceRecord> records;
  std::optional<std::string> error;  // text of the trailing error line
};

/// Throws ParseError naming the offending line.
ParsedTrace parse_trace(std::string_view text);

}  // namespace synchronic::vm
