#include "synchronic/interstring/dag.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <sstream>

namespace synchronic::interstring {

namespace {

std::uint64_t sat_add(std::uint64_t a, std::uint64_t b) {
  return a > std::numeric_limits<std::uint64_t>::max() - b ? std::numeric_limits<std::uint64_t>::max()
                                                           : a + b;
}

}  // namespace

DataflowView to_dag(const Interstring& is) {
  DataflowView view;
  view.layers = is.layers.size();
  std::map<std::string, std::size_t> latest;  // name -> defining node, as of the layer start
  for (std::size_t l = 0; l < is.layers.size(); ++l) {
    const Layer& layer = is.layers[l];
    view.width = std::max(view.width, layer.cells.size());
    std::vector<std::pair<std::string, std::size_t>> defined_here;
    for (std::size_t c = 0; c < layer.cells.size(); ++c) {
      const Cell& cell = layer.cells[c];
      DagNode node;
      node.layer = l;
      node.cell = c;
      node.destination = cell.destination();
      node.op = cell.symbols.size() > 1 ? cell.op() : std::string{};
      node.tree_size = 1;
      const std::size_t id = view.nodes.size();
      for (const std::string& src : cell.sources()) {
        node.sources.push_back(src);
        const auto it = is_literal(src) ? latest.end() : latest.find(src);
        if (it == latest.end()) {
          node.defs.push_back(std::nullopt);
          node.tree_size = sat_add(node.tree_size, 1);
          node.depth = std::max<std::uint64_t>(node.depth, 0);
          continue;
        }
        DagNode& def = view.nodes[it->second];
        def.sink = false;
        node.defs.push_back(it->second);
        node.tree_size = sat_add(node.tree_size, def.tree_size);
        node.depth = std::max(node.depth, def.depth);
        view.edges.emplace_back(it->second, id);
      }
      node.depth += 1;
      view.depth = std::max(view.depth, node.depth);
      defined_here.emplace_back(node.destination, id);
      view.nodes.push_back(std::move(node));
    }
    for (const auto& [name, id] : defined_here) latest[name] = id;
  }
  view.cells = view.nodes.size();
  for (const DagNode& node : view.nodes) {
    if (node.sink) view.tree_expansion_size = sat_add(view.tree_expansion_size, node.tree_size);
  }
  return view;
}

std::string format_metrics(const DataflowView& view) {
  std::ostringstream out;
  out << "layers=" << view.layers << '\n'
      << "cells=" << view.cells << '\n'
      << "edges=" << view.edges.size() << '\n'
      << "depth=" << view.depth << '\n'
      << "width=" << view.width << '\n'
      << "tree_expansion_size=" << view.tree_expansion_size << '\n';
  return out.str();
}

}  // namespace synchronic::interstring
