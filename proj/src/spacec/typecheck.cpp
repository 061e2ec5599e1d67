#include "synchronic/spacec/typecheck.hpp"

#include <algorithm>
#include <functional>

#include "synchronic/error.hpp"
#include "synchronic/util/text.hpp"

namespace synchronic::spacec {

namespace {

const std::set<std::string, std::less<>> kKeywords = {"module", "const", "var",  "seq", "par",
                                                      "if",     "else",  "repeat", "unroll",
                                                      "interstring", "in", "out"};

}  // namespace

std::optional<Builtin> find_builtin(std::string_view name) {
  static const std::pair<const char*, unsigned> kOps[] = {
      {"not", 1}, {"mov", 1}, {"and", 2}, {"or", 2}, {"xor", 2},
      {"add", 2}, {"sub", 2}, {"mul", 2}, {"eq", 2}, {"lt", 2}};
  for (const auto& [op, arity] : kOps) {
    const std::string_view prefix(op);
    if (name.substr(0, prefix.size()) != prefix) continue;
    const std::string_view digits = name.substr(prefix.size());
    if (digits.empty() || digits[0] == '0') continue;
    const auto width = text::parse_uint(digits);
    if (!width || *width > 64) continue;
    Builtin b;
    b.name = std::string(name);
    b.op = op;
    b.width = static_cast<unsigned>(*width);
    b.arity = arity;
    b.out_width = (b.op == "eq" || b.op == "lt") ? 1 : b.width;
    return b;
  }
  return std::nullopt;
}

const VarInfo& TypedModule::var(std::string_view name) const {
  const auto it = index.find(name);
  if (it == index.end()) throw TypeError("unknown name '" + std::string(name) + "' in " + module.name);
  return vars[it->second];
}

Signature TypedModule::signature() const {
  Signature sig;
  for (const VarDecl& d : module.ins) sig.ins.push_back(d.width);
  for (const VarDecl& d : module.outs) sig.outs.push_back(d.width);
  return sig;
}

const TypedModule* TypedProgram::find(std::string_view name) const {
  for (const TypedModule& m : modules) {
    if (m.module.name == name) return &m;
  }
  return nullptr;
}

const TypedModule* TypedProgram::resolve(std::string_view name) const {
  if (const TypedModule* m = find(name)) return m;
  const auto it = builtins.find(name);
  return it == builtins.end() ? nullptr : &it->second;
}

TypedModule builtin_module(const Builtin& builtin) {
  TypedModule tm;
  tm.module.name = builtin.name;
  tm.module.ins.push_back(VarDecl{"a", builtin.width, 0});
  if (builtin.arity == 2) tm.module.ins.push_back(VarDecl{"b", builtin.width, 0});
  tm.module.outs.push_back(VarDecl{"r", builtin.out_width, 0});
  interstring::Cell cell;
  cell.symbols = {"r", builtin.op, "a"};
  if (builtin.arity == 2) cell.symbols.push_back("b");
  Stmt body;
  body.kind = Stmt::Kind::Layers;
  body.layers.layers.push_back(interstring::Layer{{cell}, 1});
  tm.module.body.push_back(std::move(body));
  for (const VarDecl& d : tm.module.ins) {
    tm.index.emplace(d.name, tm.vars.size());
    tm.vars.push_back(VarInfo{d.name, d.width, VarKind::In});
  }
  tm.index.emplace("r", tm.vars.size());
  tm.vars.push_back(VarInfo{"r", builtin.out_width, VarKind::Out});
  return tm;
}

const TypedModule& require_builtin(TypedProgram& program, std::string_view name) {
  if (const auto it = program.builtins.find(name); it != program.builtins.end()) return it->second;
  const auto b = find_builtin(name);
  if (!b) throw TypeError("unknown module '" + std::string(name) + "'");
  if (b->width > program.max_width) {
    throw TypeError("'" + b->name + "' is wider than the word width " + std::to_string(program.max_width));
  }
  return program.builtins.emplace(b->name, builtin_module(*b)).first->second;
}

std::optional<Signature> TypedProgram::signature(std::string_view callee) const {
  if (const TypedModule* m = find(callee)) return m->signature();
  if (const auto b = find_builtin(callee)) {
    Signature sig;
    sig.ins.assign(b->arity, b->width);
    sig.outs = {b->out_width};
    return sig;
  }
  return std::nullopt;
}

Effects effects(const Stmt& stmt) {
  Effects fx;
  auto merge = [&](const std::vector<Stmt>& body) {
    for (const Stmt& s : body) {
      Effects inner = effects(s);
      fx.reads.insert(inner.reads.begin(), inner.reads.end());
      fx.writes.insert(inner.writes.begin(), inner.writes.end());
    }
  };
  switch (stmt.kind) {
    case Stmt::Kind::Decl:
      break;
    case Stmt::Kind::Call:
      for (const Arg& a : stmt.args) {
        if (!a.literal) fx.reads.insert(a.name);
      }
      fx.writes.insert(stmt.outs.begin(), stmt.outs.end());
      break;
    case Stmt::Kind::Layers:
      for (const auto& layer : stmt.layers.layers) {
        for (const auto& cell : layer.cells) {
          fx.writes.insert(cell.destination());
          for (const std::string& src : cell.sources()) {
            if (!interstring::is_literal(src)) fx.reads.insert(src);
          }
        }
      }
      break;
    case Stmt::Kind::If:
      fx.reads.insert(stmt.cond);
      merge(stmt.body);
      merge(stmt.else_body);
      break;
    case Stmt::Kind::Seq:
    case Stmt::Kind::Par:
    case Stmt::Kind::Repeat:
      merge(stmt.body);
      break;
  }
  return fx;
}

namespace {

class Checker {
 public:
  Checker(const Program& prog, TypedProgram& out) : prog_(prog), out_(out) {}

  void check_module(const Module& m) {
    TypedModule tm;
    tm.module = m;
    cur_ = &tm;
    for (const VarDecl& d : m.ins) declare(d, VarKind::In);
    for (const VarDecl& d : m.outs) declare(d, VarKind::Out);
    for (Stmt& s : tm.module.body) check_stmt(s);
    cur_ = nullptr;
    out_.modules.push_back(std::move(tm));
  }

 private:
  void declare(const VarDecl& d, VarKind kind) {
    if (kKeywords.count(d.name)) throw TypeError("'" + d.name + "' is a reserved word", d.line);
    if (d.width == 0 || d.width > out_.max_width) {
      throw TypeError("width of '" + d.name + "' must be in 1.." + std::to_string(out_.max_width), d.line);
    }
    if (cur_->index.count(d.name)) throw TypeError("'" + d.name + "' declared twice", d.line);
    cur_->index.emplace(d.name, cur_->vars.size());
    cur_->vars.push_back(VarInfo{d.name, d.width, kind});
  }

  unsigned width_of(const std::string& name, std::size_t line) const {
    const auto it = cur_->index.find(name);
    if (it == cur_->index.end()) throw TypeError("unknown name '" + name + "'", line);
    return cur_->vars[it->second].width;
  }

  static void check_literal(std::uint64_t v, unsigned width, std::size_t line) {
    if (width < 64 && (v >> width) != 0) {
      throw TypeError("literal " + std::to_string(v) + " does not fit uint" + std::to_string(width), line);
    }
  }

  void check_stmt(Stmt& s) {
    switch (s.kind) {
      case Stmt::Kind::Decl:
        for (const VarDecl& d : s.decls) declare(d, VarKind::Local);
        break;
      case Stmt::Kind::Call:
        check_call(s);
        break;
      case Stmt::Kind::Seq:
        for (Stmt& b : s.body) check_stmt(b);
        break;
      case Stmt::Kind::Par:
        for (Stmt& b : s.body) check_stmt(b);
        check_par(s);
        break;
      case Stmt::Kind::If:
        if (width_of(s.cond, s.line) != 1) {
          throw TypeError("condition '" + s.cond + "' must be uint1", s.line);
        }
        for (Stmt& b : s.body) check_stmt(b);
        for (Stmt& b : s.else_body) check_stmt(b);
        break;
      case Stmt::Kind::Repeat:
        if (!s.count_name.empty()) {
          const auto c = prog_.consts.find(s.count_name);
          if (c == prog_.consts.end()) {
            throw TypeError("non-constant repeat bound '" + s.count_name + "'", s.line);
          }
          s.count = c->second;
        }
        for (Stmt& b : s.body) check_stmt(b);
        break;
      case Stmt::Kind::Layers:
        check_layers(s);
        break;
    }
  }

  void check_call(const Stmt& s) {
    const auto sig = out_.signature(s.callee);
    if (!sig) throw TypeError("unknown module '" + s.callee + "'", s.line);
    if (!out_.find(s.callee) && find_builtin(s.callee)->width > out_.max_width) {
      throw TypeError("'" + s.callee + "' is wider than the word width " + std::to_string(out_.max_width), s.line);
    }
    if (s.args.size() != sig->ins.size()) {
      throw TypeError("'" + s.callee + "' takes " + std::to_string(sig->ins.size()) + " inputs, got " +
                          std::to_string(s.args.size()),
                      s.line);
    }
    for (std::size_t i = 0; i < s.args.size(); ++i) {
      const Arg& a = s.args[i];
      if (a.literal) {
        check_literal(*a.literal, sig->ins[i], s.line);
      } else if (const unsigned w = width_of(a.name, s.line); w != sig->ins[i]) {
        throw TypeError("width mismatch: '" + a.name + "' is uint" + std::to_string(w) + " but '" + s.callee +
                            "' input " + std::to_string(i + 1) + " is uint" + std::to_string(sig->ins[i]),
                        s.line);
      }
    }
    if (s.outs.size() != sig->outs.size()) {
      throw TypeError("'" + s.callee + "' has " + std::to_string(sig->outs.size()) + " outputs, " +
                          std::to_string(s.outs.size()) + " targets given",
                      s.line);
    }
    std::set<std::string> seen;
    for (std::size_t i = 0; i < s.outs.size(); ++i) {
      if (!seen.insert(s.outs[i]).second) throw TypeError("target '" + s.outs[i] + "' repeated", s.line);
      if (const unsigned w = width_of(s.outs[i], s.line); w != sig->outs[i]) {
        throw TypeError("width mismatch: '" + s.outs[i] + "' is uint" + std::to_string(w) + " but '" +
                            s.callee + "' output " + std::to_string(i + 1) + " is uint" +
                            std::to_string(sig->outs[i]),
                        s.line);
      }
    }
  }

  static void check_par(const Stmt& s) {
    std::vector<Effects> fx;
    for (const Stmt& b : s.body) fx.push_back(effects(b));
    for (std::size_t i = 0; i < fx.size(); ++i) {
      for (std::size_t j = 0; j < fx.size(); ++j) {
        if (i == j) continue;
        for (const std::string& w : fx[i].writes) {
          if (j > i && fx[j].writes.count(w)) {
            throw TypeError("par branches " + std::to_string(i + 1) + " and " + std::to_string(j + 1) +
                                " both write '" + w + "'",
                            s.line);
          }
          if (fx[j].reads.count(w)) {
            throw TypeError("par branch " + std::to_string(j + 1) + " reads '" + w + "' written by branch " +
                                std::to_string(i + 1),
                            s.line);
          }
        }
      }
    }
  }

  void check_layers(const Stmt& s) {
    std::set<std::string> names;
    for (const VarInfo& v : cur_->vars) names.insert(v.name);
    const auto alg = interstring::Algebra::standard(64);
    const auto report = interstring::validate(s.layers, names, &alg);
    if (!report.clean()) {
      const auto& f = report.findings.front();
      throw TypeError("interstring layer " + std::to_string(f.layer) + ": " + f.message, s.line + f.layer - 1);
    }
    for (std::size_t l = 0; l < s.layers.layers.size(); ++l) {
      const std::size_t line = s.line + l;
      for (const auto& cell : s.layers.layers[l].cells) {
        const unsigned dw = width_of(cell.destination(), line);
        const std::string& op = cell.op();
        const auto srcs = cell.sources();
        auto src_width = [&](const std::string& src) -> std::optional<unsigned> {
          if (interstring::is_literal(src)) return std::nullopt;
          return width_of(src, line);
        };
        auto mismatch = [&](const std::string& what) {
          throw TypeError("width mismatch in '" + cell.destination() + " " + op + "': " + what, line);
        };
        if (op == "eq" || op == "lt") {
          if (dw != 1) mismatch("destination must be uint1");
          const auto w0 = src_width(srcs[0]);
          const auto w1 = src_width(srcs[1]);
          if (!w0 && !w1) mismatch("at least one operand must be a variable");
          const unsigned w = w0 ? *w0 : *w1;
          if (w0 && w1 && *w0 != *w1) mismatch("operands differ in width");
          for (const auto& src : srcs) {
            if (interstring::is_literal(src)) check_literal(*text::parse_uint(src), w, line);
          }
        } else if (op == "shl" || op == "shr") {
          if (!interstring::is_literal(srcs[1])) {
            throw TypeError("shift amount of '" + op + "' must be a literal", line);
          }
          if (const auto w = src_width(srcs[0]); w && *w != dw) mismatch("operand differs from destination");
          if (interstring::is_literal(srcs[0])) check_literal(*text::parse_uint(srcs[0]), dw, line);
        } else {
          for (const auto& src : srcs) {
            if (const auto w = src_width(src)) {
              if (*w != dw) mismatch("'" + src + "' is uint" + std::to_string(*w) + ", destination is uint" +
                                     std::to_string(dw));
            } else {
              check_literal(*text::parse_uint(src), dw, line);
            }
          }
        }
      }
    }
  }

  const Program& prog_;
  TypedProgram& out_;
  TypedModule* cur_ = nullptr;
};

void collect_callees(const std::vector<Stmt>& body, std::vector<std::pair<std::string, std::size_t>>& out) {
  for (const Stmt& s : body) {
    if (s.kind == Stmt::Kind::Call) out.emplace_back(s.callee, s.line);
    collect_callees(s.body, out);
    collect_callees(s.else_body, out);
  }
}

void check_acyclic(const Program& prog) {
  std::map<std::string, int> color;  // 0 white, 1 grey, 2 black
  std::vector<std::string> path;
  std::function<void(const Module&)> visit = [&](const Module& m) {
    color[m.name] = 1;
    path.push_back(m.name);
    std::vector<std::pair<std::string, std::size_t>> callees;
    collect_callees(m.body, callees);
    for (const auto& [callee, line] : callees) {
      const Module* next = prog.find(callee);
      if (next == nullptr) continue;
      if (color[callee] == 1) {
        std::string chain;
        const auto start = std::find(path.begin(), path.end(), callee);
        for (auto it = start; it != path.end(); ++it) chain += *it + " -> ";
        throw TypeError("recursive call chain " + chain + callee, line);
      }
      if (color[callee] == 0) visit(*next);
    }
    path.pop_back();
    color[m.name] = 2;
  };
  for (const Module& m : prog.modules) {
    if (color[m.name] == 0) visit(m);
  }
}

}  // namespace

TypedProgram typecheck(const Program& program, unsigned max_width) {
  std::set<std::string> names;
  for (const Module& m : program.modules) {
    if (find_builtin(m.name)) throw TypeError("module name '" + m.name + "' is reserved for a builtin", m.line);
    if (kKeywords.count(m.name)) throw TypeError("'" + m.name + "' is a reserved word", m.line);
    if (!names.insert(m.name).second) throw TypeError("module '" + m.name + "' defined twice", m.line);
  }
  // signatures are visible before bodies are checked
  TypedProgram stubs;
  stubs.max_width = max_width;
  for (const Module& m : program.modules) {
    TypedModule stub;
    stub.module.name = m.name;
    stub.module.ins = m.ins;
    stub.module.outs = m.outs;
    stubs.modules.push_back(std::move(stub));
  }
  TypedProgram out;
  out.max_width = max_width;
  for (const Module& m : program.modules) {
    TypedProgram view = stubs;
    Checker checker(program, view);
    checker.check_module(m);
    out.modules.push_back(std::move(view.modules.back()));
  }
  check_acyclic(program);
  std::vector<std::pair<std::string, std::size_t>> callees;
  for (const TypedModule& m : out.modules) collect_callees(m.module.body, callees);
  for (const auto& [callee, line] : callees) {
    if (out.find(callee)) continue;
    try {
      require_builtin(out, callee);
    } catch (const TypeError& e) {
      throw TypeError(e.detail(), line);
    }
  }
  return out;
}

}  // namespace synchronic::spacec
