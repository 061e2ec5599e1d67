#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "synchronic/vm/image.hpp"
#include "synchronic/vm/isa.hpp"

namespace synchronic::earth {

struct Region {
  std::string instance;  // "<macro>@<k>"
  vm::RegIndex start = 0;
  vm::RegIndex end = 0;  // inclusive

  friend bool operator==(const Region&, const Region&) = default;
};

struct SymbolMap {
  std::map<std::string, vm::RegIndex> labels;
  std::vector<Region> regions;  // in expansion order

  friend bool operator==(const SymbolMap&, const SymbolMap&) = default;
};

struct AsmOptions {
  vm::MachineConfig config;
  /// Reject a jump inside a macro instance whose fan-out leaves the instance.
  bool strict_regions = false;
};

struct Assembly {
  vm::Image image;  // image.data is the guard map
  SymbolMap symbols;
};

/// Two passes: macro expansion with placement from register 1, then label and
/// const resolution and encoding. Throws ParseError for malformed text and
/// AsmError for semantic failures.
Assembly assemble(std::string_view source, const AsmOptions& options = {});

/// Image-format text, assemblable back to identical register words and entry
/// set. Labels from `symbols` are attached as comments.
std::string disassemble(const vm::Image& image, const SymbolMap* symbols = nullptr);

/// `.sym` sidecar: `label <name> <idx>` and `region <instance> <start> <end>`.
std::string format_symbols(const SymbolMap& symbols);
SymbolMap parse_symbols(std::string_view text);

}  // namespace synchronic::earth
