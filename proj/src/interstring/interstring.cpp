#include "synchronic/interstring/interstring.hpp"

#include <sstream>

#include "synchronic/error.hpp"
#include "synchronic/util/text.hpp"

namespace synchronic::interstring {

std::size_t Interstring::cell_count() const {
  std::size_t n = 0;
  for (const Layer& layer : layers) n += layer.cells.size();
  return n;
}

bool is_literal(std::string_view symbol) { return text::parse_uint(symbol).has_value(); }

Interstring parse_interstring(std::string_view source, std::size_t max_cell_len) {
  Interstring is;
  is.max_cell_len = max_cell_len;
  for (const text::Line& line : text::logical_lines(source)) {
    Layer layer;
    layer.line = line.number;
    std::string_view rest = line.body;
    while (true) {
      const std::size_t semi = rest.find(';');
      const std::string_view raw = text::trim(rest.substr(0, semi));
      const auto symbols = text::split_ws(raw);
      if (symbols.empty()) throw ParseError("empty cell", line.number);
      if (symbols.size() > max_cell_len) {
        throw ParseError("cell length " + std::to_string(symbols.size()) + " > " +
                             std::to_string(max_cell_len) + " in '" + std::string(raw) + "'",
                         line.number);
      }
      Cell cell;
      for (std::string_view sym : symbols) {
        if (!text::is_identifier(sym) && !is_literal(sym)) {
          throw ParseError("illegal symbol '" + std::string(sym) + "'", line.number);
        }
        cell.symbols.emplace_back(sym);
      }
      layer.cells.push_back(std::move(cell));
      if (semi == std::string_view::npos) break;
      rest = rest.substr(semi + 1);
    }
    is.layers.push_back(std::move(layer));
  }
  return is;
}

std::string print(const Interstring& is) {
  std::ostringstream out;
  for (const Layer& layer : is.layers) {
    for (std::size_t c = 0; c < layer.cells.size(); ++c) {
      if (c) out << " ; ";
      for (std::size_t s = 0; s < layer.cells[c].symbols.size(); ++s) {
        if (s) out << ' ';
        out << layer.cells[c].symbols[s];
      }
    }
    out << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Algebra

Algebra::Value Algebra::mask_for(unsigned width) {
  return width >= 64 ? ~Value{0} : (Value{1} << width) - 1;
}

void Algebra::define(const std::string& name, unsigned arity, Fn fn) {
  ops_[name] = Op{arity, std::move(fn)};
}

const Algebra::Op* Algebra::find(std::string_view name) const {
  const auto it = ops_.find(name);
  return it == ops_.end() ? nullptr : &it->second;
}

Algebra Algebra::standard(unsigned width) {
  using V = Value;
  using Args = std::span<const V>;
  Algebra alg(width);
  alg.define("add", 2, [](Args a, unsigned) { return a[0] + a[1]; });
  alg.define("sub", 2, [](Args a, unsigned) { return a[0] - a[1]; });
  alg.define("mul", 2, [](Args a, unsigned) { return a[0] * a[1]; });
  alg.define("and", 2, [](Args a, unsigned) { return a[0] & a[1]; });
  alg.define("or", 2, [](Args a, unsigned) { return a[0] | a[1]; });
  alg.define("xor", 2, [](Args a, unsigned) { return a[0] ^ a[1]; });
  alg.define("not", 1, [](Args a, unsigned) { return ~a[0]; });
  alg.define("shl", 2, [](Args a, unsigned w) { return a[1] >= w ? V{0} : a[0] << a[1]; });
  alg.define("shr", 2, [](Args a, unsigned w) { return a[1] >= w ? V{0} : a[0] >> a[1]; });
  alg.define("eq", 2, [](Args a, unsigned) { return V{a[0] == a[1]}; });
  alg.define("lt", 2, [](Args a, unsigned) { return V{a[0] < a[1]}; });
  alg.define("mov", 1, [](Args a, unsigned) { return a[0]; });
  return alg;
}

Algebra::Value Algebra::apply(std::string_view name, std::span<const Value> args) const {
  return apply(name, args, width_);
}

Algebra::Value Algebra::apply(std::string_view name, std::span<const Value> args,
                              unsigned width) const {
  const Op* op = find(name);
  if (op == nullptr) throw Error(Stage::Eval, "unknown operator '" + std::string(name) + "'");
  if (args.size() != op->arity) {
    throw Error(Stage::Eval, "operator '" + std::string(name) + "' takes " +
                                 std::to_string(op->arity) + " operands, got " +
                                 std::to_string(args.size()));
  }
  const Value m = mask_for(width);
  std::vector<Value> masked(args.begin(), args.end());
  for (Value& v : masked) v &= m;
  return op->fn(masked, width) & m;
}

// ---------------------------------------------------------------------------
// Validation

std::size_t ValidationReport::count(FindingKind kind) const {
  std::size_t n = 0;
  for (const Finding& f : findings) n += f.kind == kind;
  return n;
}

std::string ValidationReport::to_string() const {
  std::string out;
  for (const Finding& f : findings) {
    out += "layer " + std::to_string(f.layer) + " cell " + std::to_string(f.cell + 1) + ": " +
           f.message + '\n';
  }
  return out;
}

ValidationReport validate(const Interstring& is, const std::set<std::string>& initial_names,
                          const Algebra* algebra) {
  ValidationReport report;
  std::set<std::string> defined = initial_names;
  for (std::size_t l = 0; l < is.layers.size(); ++l) {
    const Layer& layer = is.layers[l];
    auto add = [&](FindingKind kind, std::size_t c, const std::string& name, std::string msg) {
      report.findings.push_back(Finding{kind, l + 1, c, name, std::move(msg)});
    };
    std::set<std::string> written;
    for (std::size_t c = 0; c < layer.cells.size(); ++c) {
      const Cell& cell = layer.cells[c];
      const std::string& dst = cell.destination();
      if (is_literal(dst)) {
        add(FindingKind::LiteralDestination, c, dst, "literal '" + dst + "' used as a destination");
      } else if (!written.insert(dst).second) {
        add(FindingKind::DuplicateDestination, c, dst, "duplicate destination '" + dst + "'");
      }
    }
    for (std::size_t c = 0; c < layer.cells.size(); ++c) {
      const Cell& cell = layer.cells[c];
      if (cell.symbols.size() < 2) {
        add(FindingKind::MissingOperator, c, cell.destination(), "cell has no operator");
        continue;
      }
      if (is_literal(cell.op())) {
        add(FindingKind::UnknownOperator, c, cell.op(), "literal '" + cell.op() + "' used as an operator");
      } else if (algebra != nullptr) {
        const Algebra::Op* op = algebra->find(cell.op());
        if (op == nullptr) {
          add(FindingKind::UnknownOperator, c, cell.op(), "unknown operator '" + cell.op() + "'");
        } else if (op->arity != cell.sources().size()) {
          add(FindingKind::ArityMismatch, c, cell.op(),
              "operator '" + cell.op() + "' takes " + std::to_string(op->arity) + " operands, got " +
                  std::to_string(cell.sources().size()));
        }
      }
      for (const std::string& src : cell.sources()) {
        if (is_literal(src) || defined.count(src)) continue;
        if (written.count(src)) {
          add(FindingKind::SameLayerRead, c, src,
              "'" + src + "' is read in the layer that first defines it");
        } else {
          add(FindingKind::UndefinedSource, c, src, "undefined source '" + src + "'");
        }
      }
    }
    for (const std::string& w : written) defined.insert(w);
  }
  return report;
}

// ---------------------------------------------------------------------------
// Evaluation

Environment evaluate(const Interstring& is, const Algebra& algebra, Environment env) {
  const Algebra::Value m = algebra.mask();
  for (auto& [name, value] : env) value &= m;
  for (const Layer& layer : is.layers) {
    std::vector<std::pair<const std::string*, Algebra::Value>> results;
    results.reserve(layer.cells.size());
    for (const Cell& cell : layer.cells) {
      if (cell.symbols.size() < 2) throw Error(Stage::Eval, "cell has no operator", layer.line);
      std::vector<Algebra::Value> args;
      for (const std::string& src : cell.sources()) {
        if (const auto lit = text::parse_uint(src)) {
          args.push_back(*lit & m);
          continue;
        }
        const auto it = env.find(src);
        if (it == env.end()) throw Error(Stage::Eval, "undefined source '" + src + "'", layer.line);
        args.push_back(it->second);
      }
      try {
        results.emplace_back(&cell.destination(), algebra.apply(cell.op(), args));
      } catch (const Error& e) {
        throw Error(Stage::Eval, e.detail(), layer.line);
      }
    }
    for (const auto& [name, value] : results) env[*name] = value;
  }
  return env;
}

}  // namespace synchronic::interstring
