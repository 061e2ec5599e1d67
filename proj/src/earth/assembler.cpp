#include "synchronic/earth/assembler.hpp"

#include <cctype>
#include <set>
#include <sstream>

#include "synchronic/error.hpp"
#include "synchronic/util/text.hpp"

namespace synchronic::earth {

namespace {

using vm::Opcode;
using vm::RegIndex;

struct Token {
  bool punct = false;
  std::string text;
};

std::vector<Token> tokenize(std::string_view line, std::size_t lineno) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    const char c = line[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = i;
      while (i < line.size() && (std::isalnum(static_cast<unsigned char>(line[i])) || line[i] == '_')) ++i;
      out.push_back({false, std::string(line.substr(start, i - start))});
    } else if (std::string_view("(),{}:=+-.").find(c) != std::string_view::npos) {
      out.push_back({true, std::string(1, c)});
      ++i;
    } else {
      throw ParseError(std::string("unexpected character '") + c + "'", lineno);
    }
  }
  return out;
}

/// `name`, `int`, `name+int` or `name-int`. An empty name means a plain number.
struct Operand {
  std::string name;
  std::int64_t offset = 0;
};

std::string describe(const Operand& op) {
  if (op.name.empty()) return std::to_string(op.offset);
  if (op.offset == 0) return op.name;
  return op.name + (op.offset > 0 ? "+" : "") + std::to_string(op.offset);
}

class Cursor {
 public:
  Cursor(std::vector<Token> toks, std::size_t line) : toks_(std::move(toks)), line_(line) {}

  bool done() const { return pos_ >= toks_.size(); }
  std::size_t line() const { return line_; }

  bool peek_punct(char c) const { return !done() && toks_[pos_].punct && toks_[pos_].text[0] == c; }
  bool accept(char c) {
    if (!peek_punct(c)) return false;
    ++pos_;
    return true;
  }
  void expect(char c) {
    if (!accept(c)) throw ParseError(std::string("expected '") + c + "'" + near(), line_);
  }
  std::string word() {
    if (done() || toks_[pos_].punct) throw ParseError("expected a name or number" + near(), line_);
    return toks_[pos_++].text;
  }
  std::string identifier() {
    std::string w = word();
    if (!text::is_identifier(w)) throw ParseError("expected a name, got '" + w + "'", line_);
    return w;
  }
  std::uint64_t number() {
    const std::string w = word();
    const auto v = text::parse_uint(w);
    if (!v) throw ParseError("expected a number, got '" + w + "'", line_);
    return *v;
  }
  Operand operand() {
    const std::string w = word();
    Operand op;
    if (const auto v = text::parse_uint(w)) {
      op.offset = static_cast<std::int64_t>(*v);
      return op;
    }
    if (!text::is_identifier(w)) throw ParseError("bad operand '" + w + "'", line_);
    op.name = w;
    if (accept('+')) {
      op.offset = static_cast<std::int64_t>(number());
    } else if (accept('-')) {
      op.offset = -static_cast<std::int64_t>(number());
    }
    return op;
  }
  void end() {
    if (!done()) throw ParseError("unexpected '" + toks_[pos_].text + "'", line_);
  }
  // The first token is a label definition when followed by ':'.
  std::optional<std::string> label_prefix() {
    if (toks_.size() >= 2 && !toks_[0].punct && toks_[1].punct && toks_[1].text == ":" && pos_ == 0) {
      pos_ = 2;
      if (!text::is_identifier(toks_[0].text)) throw ParseError("bad label '" + toks_[0].text + "'", line_);
      return toks_[0].text;
    }
    return std::nullopt;
  }

 private:
  std::string near() const { return done() ? " at end of line" : " near '" + toks_[pos_].text + "'"; }

  std::vector<Token> toks_;
  std::size_t line_;
  std::size_t pos_ = 0;
};

struct Stmt {
  enum class Kind { Label, Instr, Data, At, Use };
  Kind kind = Kind::Instr;
  std::size_t line = 0;
  std::string label;
  Opcode op = Opcode::Wr0;
  Operand a;
  Operand b;
  std::string macro;
  std::vector<Operand> args;
};

struct Macro {
  std::string name;
  std::vector<std::string> params;
  std::vector<Stmt> body;
  std::size_t line = 0;
};

struct Program {
  std::optional<std::pair<std::uint32_t, std::uint32_t>> geometry;
  std::map<std::string, std::int64_t> consts;
  std::map<std::string, Macro> macros;
  std::vector<Stmt> stmts;
  std::vector<std::pair<Operand, std::size_t>> entry;
  bool has_entry = false;
};

// Parses the instruction part of a line (after any label) into `out`.
void parse_statement(Cursor& cur, std::vector<Stmt>& out) {
  const std::size_t line = cur.line();
  const std::string head = cur.identifier();
  Stmt s;
  s.line = line;
  if (head == "wr0" || head == "wr1" || head == "cnd") {
    s.op = head == "wr0" ? Opcode::Wr0 : head == "wr1" ? Opcode::Wr1 : Opcode::Cnd;
    s.a = cur.operand();
    cur.expect('.');
    s.b = cur.operand();
  } else if (head == "jmp") {
    s.op = Opcode::Jmp;
    s.a = cur.operand();
    s.b = cur.operand();
  } else if (head == "halt") {
    s.op = Opcode::Jmp;
  } else if (head == "data") {
    s.kind = Stmt::Kind::Data;
    s.a = cur.operand();
  } else if (head == "at") {
    s.kind = Stmt::Kind::At;
    s.a = cur.operand();
  } else if (head == "use") {
    s.kind = Stmt::Kind::Use;
    s.macro = cur.identifier();
    cur.expect('(');
    if (!cur.accept(')')) {
      do {
        s.args.push_back(cur.operand());
      } while (cur.accept(','));
      cur.expect(')');
    }
  } else if (head == "reg") {
    // image-format line: `reg <idx> = <instruction>` pins the placement
    Stmt at;
    at.kind = Stmt::Kind::At;
    at.line = line;
    at.a.offset = static_cast<std::int64_t>(cur.number());
    cur.expect('=');
    out.push_back(at);
    parse_statement(cur, out);
    return;
  } else {
    throw ParseError("unknown instruction '" + head + "'", line);
  }
  cur.end();
  out.push_back(std::move(s));
}

void parse_line(Cursor& cur, std::vector<Stmt>& out) {
  if (auto label = cur.label_prefix()) {
    Stmt s;
    s.kind = Stmt::Kind::Label;
    s.line = cur.line();
    s.label = *label;
    out.push_back(std::move(s));
  }
  if (!cur.done()) parse_statement(cur, out);
}

Program parse_program(std::string_view source) {
  Program prog;
  const auto lines = text::logical_lines(source);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto& line = lines[i];
    Cursor cur(tokenize(line.body, line.number), line.number);
    const auto first = text::split_ws(line.body)[0];
    if (first == "config") {
      if (!prog.stmts.empty() || prog.has_entry || !prog.consts.empty() || !prog.macros.empty()) {
        throw ParseError("config header must come first", line.number);
      }
      cur.identifier();
      std::uint32_t n = 0, w = 0;
      for (int k = 0; k < 2; ++k) {
        const std::string key = cur.identifier();
        cur.expect('=');
        const auto v = static_cast<std::uint32_t>(cur.number());
        if (key == "n") {
          n = v;
        } else if (key == "w") {
          w = v;
        } else {
          throw ParseError("unknown config key '" + key + "'", line.number);
        }
      }
      cur.end();
      prog.geometry = std::make_pair(n, w);
    } else if (first == "entry") {
      cur.identifier();
      prog.has_entry = true;
      while (!cur.done()) prog.entry.emplace_back(cur.operand(), line.number);
    } else if (first == "const") {
      cur.identifier();
      const std::string name = cur.identifier();
      cur.expect('=');
      const auto value = static_cast<std::int64_t>(cur.number());
      cur.end();
      if (!prog.consts.emplace(name, value).second) throw AsmError("duplicate const '" + name + "'", line.number);
    } else if (first == "macro") {
      cur.identifier();
      Macro m;
      m.line = line.number;
      m.name = cur.identifier();
      cur.expect('(');
      if (!cur.accept(')')) {
        do {
          m.params.push_back(cur.identifier());
        } while (cur.accept(','));
        cur.expect(')');
      }
      cur.expect('{');
      cur.end();
      bool closed = false;
      for (++i; i < lines.size(); ++i) {
        if (lines[i].body == "}") {
          closed = true;
          break;
        }
        const auto head = text::split_ws(lines[i].body)[0];
        if (head == "macro" || head == "entry" || head == "const" || head == "config") {
          throw ParseError("'" + std::string(head) + "' is not allowed inside a macro", lines[i].number);
        }
        Cursor body(tokenize(lines[i].body, lines[i].number), lines[i].number);
        parse_line(body, m.body);
      }
      if (!closed) throw ParseError("macro '" + m.name + "' is not closed", line.number);
      if (prog.macros.count(m.name)) throw AsmError("duplicate macro '" + m.name + "'", line.number);
      prog.macros.emplace(m.name, std::move(m));
    } else {
      parse_line(cur, prog.stmts);
    }
  }
  return prog;
}

// ---------------------------------------------------------------------------
// Pass 1: expansion and placement

struct Placed {
  RegIndex reg = 0;
  Stmt stmt;
  std::optional<std::size_t> region;  // innermost enclosing instance
};

class Expander {
 public:
  Expander(const Program& prog, const vm::MachineConfig& config) : prog_(prog), config_(config) {}

  void run() {
    Context top;
    expand(prog_.stmts, top);
  }

  std::vector<Placed> placed;
  SymbolMap symbols;
  std::vector<std::size_t> label_lines;

 private:
  struct Context {
    std::map<std::string, Operand> params;
    std::map<std::string, std::string> renamed;
    std::optional<std::size_t> region;
  };

  Operand rewrite(const Operand& op, const Context& ctx) const {
    if (op.name.empty()) return op;
    if (const auto it = ctx.params.find(op.name); it != ctx.params.end()) {
      Operand out = it->second;
      out.offset += op.offset;
      return out;
    }
    if (const auto it = ctx.renamed.find(op.name); it != ctx.renamed.end()) {
      return Operand{it->second, op.offset};
    }
    return op;
  }

  std::int64_t static_value(const Operand& op, std::size_t line) const {
    if (op.name.empty()) return op.offset;
    const auto it = prog_.consts.find(op.name);
    if (it == prog_.consts.end()) {
      throw AsmError("'" + op.name + "' must be a number or const here", line);
    }
    return it->second + op.offset;
  }

  void define_label(const std::string& name, std::size_t line) {
    if (prog_.consts.count(name)) throw AsmError("label '" + name + "' clashes with a const", line);
    if (!symbols.labels.emplace(name, next_).second) throw AsmError("duplicate label '" + name + "'", line);
  }

  void place(Stmt stmt, const Context& ctx) {
    if (next_ >= config_.n_registers) {
      throw AsmError("program does not fit in " + std::to_string(config_.n_registers) + " registers",
                     stmt.line);
    }
    if (!used_.insert(next_).second) {
      throw AsmError("register " + std::to_string(next_) + " defined twice", stmt.line);
    }
    placed.push_back(Placed{next_, std::move(stmt), ctx.region});
    ++next_;
  }

  void expand(const std::vector<Stmt>& body, const Context& ctx) {
    for (const Stmt& s : body) {
      switch (s.kind) {
        case Stmt::Kind::Label: {
          const auto it = ctx.renamed.find(s.label);
          define_label(it == ctx.renamed.end() ? s.label : it->second, s.line);
          break;
        }
        case Stmt::Kind::At: {
          const std::int64_t at = static_value(rewrite(s.a, ctx), s.line);
          if (at <= 0 || at >= static_cast<std::int64_t>(config_.n_registers)) {
            throw AsmError("placement " + std::to_string(at) + " out of range", s.line);
          }
          next_ = static_cast<RegIndex>(at);
          break;
        }
        case Stmt::Kind::Instr:
        case Stmt::Kind::Data: {
          Stmt out = s;
          out.a = rewrite(s.a, ctx);
          out.b = rewrite(s.b, ctx);
          place(std::move(out), ctx);
          break;
        }
        case Stmt::Kind::Use:
          instantiate(s, ctx);
          break;
      }
    }
  }

  void instantiate(const Stmt& use, const Context& outer) {
    const auto it = prog_.macros.find(use.macro);
    if (it == prog_.macros.end()) throw AsmError("unknown macro '" + use.macro + "'", use.line);
    const Macro& m = it->second;
    for (const std::string& active : stack_) {
      if (active == m.name) throw AsmError("recursive macro '" + m.name + "'", use.line);
    }
    if (use.args.size() != m.params.size()) {
      throw AsmError("macro '" + m.name + "' takes " + std::to_string(m.params.size()) +
                         " arguments, got " + std::to_string(use.args.size()),
                     use.line);
    }
    const std::string instance = m.name + "@" + std::to_string(++instances_[m.name]);
    Context inner;
    for (std::size_t i = 0; i < m.params.size(); ++i) inner.params[m.params[i]] = rewrite(use.args[i], outer);
    for (const Stmt& s : m.body) {
      if (s.kind != Stmt::Kind::Label) continue;
      if (inner.params.count(s.label)) {
        throw AsmError("label '" + s.label + "' shadows a parameter of '" + m.name + "'", s.line);
      }
      inner.renamed[s.label] = instance + "." + s.label;
    }
    const std::size_t region = symbols.regions.size();
    symbols.regions.push_back(Region{instance, next_, next_});
    inner.region = region;
    stack_.push_back(m.name);
    expand(m.body, inner);
    stack_.pop_back();
    if (next_ == symbols.regions[region].start) {
      // empty instance: its own empty children were already dropped, so it is last
      symbols.regions.pop_back();
    } else {
      symbols.regions[region].end = next_ - 1;
    }
  }

  const Program& prog_;
  const vm::MachineConfig& config_;
  RegIndex next_ = 1;
  std::set<RegIndex> used_;
  std::map<std::string, int> instances_;
  std::vector<std::string> stack_;
};

}  // namespace

// ---------------------------------------------------------------------------

Assembly assemble(std::string_view source, const AsmOptions& options) {
  const Program prog = parse_program(source);
  vm::MachineConfig config = options.config;
  if (prog.geometry) {
    config.n_registers = prog.geometry->first;
    config.word_width = prog.geometry->second;
  }
  try {
    config.validate();
  } catch (const Error& e) {
    throw AsmError(e.detail());
  }
  if (!prog.has_entry) throw AsmError("no entry directive");

  Expander ex(prog, config);
  ex.run();

  auto resolve = [&](const Operand& op, std::size_t line) -> std::int64_t {
    if (op.name.empty()) return op.offset;
    if (const auto c = prog.consts.find(op.name); c != prog.consts.end()) return c->second + op.offset;
    if (const auto l = ex.symbols.labels.find(op.name); l != ex.symbols.labels.end()) {
      return static_cast<std::int64_t>(l->second) + op.offset;
    }
    throw AsmError("unknown label '" + op.name + "'", line);
  };

  Assembly out;
  out.image.n_registers = config.n_registers;
  out.image.word_width = config.word_width;
  const auto n = static_cast<std::int64_t>(config.n_registers);
  for (const Placed& p : ex.placed) {
    const Stmt& s = p.stmt;
    if (s.kind == Stmt::Kind::Data) {
      const std::int64_t v = resolve(s.a, s.line);
      if (v < 0 || (static_cast<vm::Word>(v) & ~config.word_mask()) != 0) {
        throw AsmError("data value " + describe(s.a) + " does not fit the word", s.line);
      }
      out.image.words[p.reg] = static_cast<vm::Word>(v);
      out.image.data.insert(p.reg);
      continue;
    }
    const std::int64_t a = resolve(s.a, s.line);
    const std::int64_t b = resolve(s.b, s.line);
    if (a < 0 || a >= n) throw AsmError("operand " + describe(s.a) + " out of range", s.line);
    if (s.op == Opcode::Jmp) {
      if (b < 0 || a + b >= n) {
        throw AsmError("jump fan-out " + describe(s.a) + " " + describe(s.b) + " out of range", s.line);
      }
      if (options.strict_regions && p.region && !(a == 0 && b == 0)) {
        const Region& r = ex.symbols.regions[*p.region];
        if (a < r.start || a + b > r.end) {
          throw AsmError("jump fan-out " + std::to_string(a) + ".." + std::to_string(a + b) +
                             " leaves region " + r.instance,
                         s.line);
        }
      }
    } else if (b < 0 || b >= static_cast<std::int64_t>(config.word_width)) {
      throw AsmError("bit operand " + describe(s.b) + " out of range", s.line);
    }
    out.image.words[p.reg] =
        vm::encode(vm::Instruction{s.op, static_cast<RegIndex>(a), static_cast<std::uint32_t>(b)}, config);
  }

  std::set<RegIndex> entry;
  for (const auto& [op, line] : prog.entry) {
    const std::int64_t r = resolve(op, line);
    if (r <= 0 || r >= n) throw AsmError("entry " + describe(op) + " out of range", line);
    if (!entry.insert(static_cast<RegIndex>(r)).second) throw AsmError("duplicate entry " + describe(op), line);
  }
  out.image.entry.assign(entry.begin(), entry.end());
  out.symbols = std::move(ex.symbols);
  return out;
}

std::string disassemble(const vm::Image& image, const SymbolMap* symbols) {
  std::map<RegIndex, std::vector<std::string>> names;
  if (symbols != nullptr) {
    for (const auto& [name, reg] : symbols->labels) names[reg].push_back(name);
  }
  const vm::MachineConfig config = image.config_from(vm::MachineConfig{});
  std::ostringstream out;
  out << "config n=" << image.n_registers << " w=" << image.word_width << '\n';
  out << "entry";
  for (RegIndex r : image.entry) out << ' ' << r;
  out << '\n';
  std::set<RegIndex> regs(image.data.begin(), image.data.end());
  for (const auto& [r, w] : image.words) regs.insert(r);
  for (RegIndex r : regs) {
    const auto it = image.words.find(r);
    out << "reg " << r << " = "
        << vm::describe_word(it == image.words.end() ? 0 : it->second, image.data.count(r) != 0, config);
    if (const auto n = names.find(r); n != names.end()) out << "  # " << text::join(n->second, ", ");
    out << '\n';
  }
  return out.str();
}

std::string format_symbols(const SymbolMap& symbols) {
  std::ostringstream out;
  for (const auto& [name, reg] : symbols.labels) out << "label " << name << ' ' << reg << '\n';
  for (const Region& r : symbols.regions) out << "region " << r.instance << ' ' << r.start << ' ' << r.end << '\n';
  return out.str();
}

SymbolMap parse_symbols(std::string_view source) {
  SymbolMap symbols;
  for (const text::Line& line : text::logical_lines(source)) {
    const auto toks = text::split_ws(line.body);
    auto num = [&](std::string_view t) {
      const auto v = text::parse_uint(t);
      if (!v) throw ParseError("expected a register index, got '" + std::string(t) + "'", line.number);
      return static_cast<RegIndex>(*v);
    };
    if (toks[0] == "label" && toks.size() == 3) {
      symbols.labels[std::string(toks[1])] = num(toks[2]);
    } else if (toks[0] == "region" && toks.size() == 4) {
      symbols.regions.push_back(Region{std::string(toks[1]), num(toks[2]), num(toks[3])});
    } else {
      throw ParseError("malformed symbol line", line.number);
    }
  }
  return symbols;
}

}  // namespace synchronic::earth
