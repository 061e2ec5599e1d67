#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace synchronic::interstring {

inline constexpr std::size_t kDefaultMaxCellLength = 4;

/// Innermost string: `dst op src...`. Its length is bounded by the
/// interstring's max_cell_len; only layers and cells-per-layer are unbounded.
struct Cell {
  std::vector<std::string> symbols;

  const std::string& destination() const { return symbols.at(0); }
  const std::string& op() const { return symbols.at(1); }
  std::span<const std::string> sources() const {
    return symbols.size() > 2 ? std::span<const std::string>(symbols).subspan(2)
                              : std::span<const std::string>{};
  }

  friend bool operator==(const Cell&, const Cell&) = default;
};

struct Layer {
  std::vector<Cell> cells;
  std::size_t line = 0;

  friend bool operator==(const Layer& a, const Layer& b) { return a.cells == b.cells; }
};

struct Interstring {
  std::vector<Layer> layers;
  std::size_t max_cell_len = kDefaultMaxCellLength;

  std::size_t cell_count() const;
  friend bool operator==(const Interstring& a, const Interstring& b) { return a.layers == b.layers; }
};

bool is_literal(std::string_view symbol);

/// Newline separates layers, ';' separates cells, whitespace separates
/// symbols, '#' starts a comment.
Interstring parse_interstring(std::string_view text,
                              std::size_t max_cell_len = kDefaultMaxCellLength);

/// Canonical text; parse_interstring(print(x)) == x.
std::string print(const Interstring& is);

/// Unsigned integers modulo 2^width with a named operator table.
class Algebra {
 public:
  using Value = std::uint64_t;
  using Fn = std::function<Value(std::span<const Value>, unsigned width)>;
  struct Op {
    unsigned arity = 0;
    Fn fn;
  };

  /// add sub mul and or xor not shl shr eq lt mov.
  static Algebra standard(unsigned width = 32);

  explicit Algebra(unsigned width) : width_(width) {}

  void define(const std::string& name, unsigned arity, Fn fn);
  const Op* find(std::string_view name) const;

  unsigned width() const { return width_; }
  Value mask() const { return mask_for(width_); }
  static Value mask_for(unsigned width);

  /// Throws Error(Stage::Eval) for unknown operators or wrong arity.
  Value apply(std::string_view name, std::span<const Value> args) const;
  Value apply(std::string_view name, std::span<const Value> args, unsigned width) const;

 private:
  unsigned width_;
  std::map<std::string, Op, std::less<>> ops_;
};

enum class FindingKind {
  DuplicateDestination,
  UndefinedSource,
  SameLayerRead,
  LiteralDestination,
  MissingOperator,
  UnknownOperator,
  ArityMismatch,
};

struct Finding {
  FindingKind kind;
  std::size_t layer = 0;  // 1-based
  std::size_t cell = 0;   // 0-based within the layer
  std::string name;
  std::string message;
};

struct ValidationReport {
  std::vector<Finding> findings;

  bool clean() const { return findings.empty(); }
  std::size_t count(FindingKind kind) const;
  std::string to_string() const;
};

/// Language-level write exclusivity and read-before-define checks. A source
/// must be an initial name or the destination of a strictly earlier layer.
/// Operator checks run only when `algebra` is given.
ValidationReport validate(const Interstring& is, const std::set<std::string>& initial_names,
                          const Algebra* algebra = nullptr);

using Environment = std::map<std::string, Algebra::Value>;

/// Layers run in order; every cell of a layer reads the pre-layer
/// environment and all results commit together after the layer.
Environment evaluate(const Interstring& is, const Algebra& algebra, Environment env);

}  // namespace synchronic::interstring
