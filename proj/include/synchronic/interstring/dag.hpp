#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "synchronic/interstring/interstring.hpp"

namespace synchronic::interstring {

struct DagNode {
  std::size_t layer = 0;  // 0-based
  std::size_t cell = 0;
  std::string destination;
  std::string op;
  std::vector<std::string> sources;
  std::vector<std::optional<std::size_t>> defs;  // per source: defining node, nullopt for leaves
  std::uint64_t depth = 0;                       // longest path ending here, in cells
  std::uint64_t tree_size = 0;                   // saturating at UINT64_MAX
  bool sink = true;                              // value never read by a later cell
};

/// Def-use DAG of an interstring plus its size metrics.
struct DataflowView {
  std::vector<DagNode> nodes;
  std::vector<std::pair<std::size_t, std::size_t>> edges;  // (def, use)
  std::size_t layers = 0;
  std::size_t cells = 0;
  std::size_t width = 0;
  std::uint64_t depth = 0;
  /// Node count of the pure tree obtained by duplicating every shared
  /// definition, summed over sink cells.
  std::uint64_t tree_expansion_size = 0;
};

DataflowView to_dag(const Interstring& is);

/// `key=value` lines.
std::string format_metrics(const DataflowView& view);

}  // namespace synchronic::interstring
