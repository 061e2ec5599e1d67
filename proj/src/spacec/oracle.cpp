#include "synchronic/spacec/oracle.hpp"

#include <map>

#include "synchronic/error.hpp"
#include "synchronic/interstring/interstring.hpp"
#include "synchronic/util/text.hpp"

namespace synchronic::spacec {

namespace {

using interstring::Algebra;

class Interpreter {
 public:
  explicit Interpreter(const TypedProgram& program) : program_(program), algebra_(Algebra::standard(64)) {}

  std::vector<std::uint64_t> call(const TypedModule& m, std::span<const std::uint64_t> inputs) {
    if (inputs.size() != m.module.ins.size()) {
      throw Error(Stage::Eval, "'" + m.module.name + "' takes " + std::to_string(m.module.ins.size()) +
                                   " inputs, got " + std::to_string(inputs.size()));
    }
    Frame frame{&m, std::vector<std::uint64_t>(m.vars.size(), 0)};
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      frame.values[i] = inputs[i] & Algebra::mask_for(m.vars[i].width);
    }
    run(frame, m.module.body);
    std::vector<std::uint64_t> outs;
    for (std::size_t j = 0; j < m.module.outs.size(); ++j) outs.push_back(frame.values[m.module.ins.size() + j]);
    return outs;
  }

 private:
  struct Frame {
    const TypedModule* module;
    std::vector<std::uint64_t> values;

    std::size_t slot(const std::string& name) const { return module->index.find(name)->second; }
    unsigned width(const std::string& name) const { return module->vars[slot(name)].width; }
  };

  std::uint64_t operand(const Frame& f, const std::string& symbol) const {
    if (interstring::is_literal(symbol)) return *text::parse_uint(symbol);
    return f.values[f.slot(symbol)];
  }

  void run(Frame& f, const std::vector<Stmt>& body) {
    for (const Stmt& s : body) exec(f, s);
  }

  void exec(Frame& f, const Stmt& s) {
    switch (s.kind) {
      case Stmt::Kind::Decl:
        break;
      case Stmt::Kind::Seq:
      case Stmt::Kind::Par:  // branches touch disjoint names
        run(f, s.body);
        break;
      case Stmt::Kind::If:
        run(f, f.values[f.slot(s.cond)] & 1U ? s.body : s.else_body);
        break;
      case Stmt::Kind::Repeat:
        for (std::uint64_t i = 0; i < s.count; ++i) run(f, s.body);
        break;
      case Stmt::Kind::Call: {
        const TypedModule* callee = program_.resolve(s.callee);
        if (callee == nullptr) throw Error(Stage::Eval, "unknown module '" + s.callee + "'", s.line);
        std::vector<std::uint64_t> args;
        for (const Arg& a : s.args) args.push_back(a.literal ? *a.literal : f.values[f.slot(a.name)]);
        const auto outs = call(*callee, args);
        for (std::size_t j = 0; j < outs.size(); ++j) f.values[f.slot(s.outs[j])] = outs[j];
        break;
      }
      case Stmt::Kind::Layers:
        for (const auto& layer : s.layers.layers) {
          std::vector<std::pair<std::size_t, std::uint64_t>> results;
          for (const auto& cell : layer.cells) {
            const unsigned dw = f.width(cell.destination());
            unsigned ow = dw;
            std::vector<std::uint64_t> args;
            for (const std::string& src : cell.sources()) {
              args.push_back(operand(f, src));
              if (!interstring::is_literal(src) && (cell.op() == "eq" || cell.op() == "lt")) ow = f.width(src);
            }
            results.emplace_back(f.slot(cell.destination()), apply_op(cell.op(), args, dw, ow));
          }
          for (const auto& [slot, value] : results) f.values[slot] = value;
        }
        break;
    }
  }

  const TypedProgram& program_;
  Algebra algebra_;
};

}  // namespace

std::uint64_t apply_op(std::string_view op, std::span<const std::uint64_t> args, unsigned width,
                       unsigned operand_width) {
  static const Algebra algebra = Algebra::standard(64);
  const std::uint64_t m = Algebra::mask_for(width);
  if (op == "shl" || op == "shr") {
    const std::uint64_t x = args[0] & m;
    if (args[1] >= width) return 0;
    return (op == "shl" ? x << args[1] : x >> args[1]) & m;
  }
  if (op == "eq" || op == "lt") return algebra.apply(op, args, operand_width) & m;
  return algebra.apply(op, args, width);
}

std::vector<std::uint64_t> interpret(const TypedProgram& program, std::string_view module,
                                     std::span<const std::uint64_t> inputs) {
  const TypedModule* m = program.resolve(module);
  if (m == nullptr) throw Error(Stage::Eval, "unknown module '" + std::string(module) + "'");
  return Interpreter(program).call(*m, inputs);
}

}  // namespace synchronic::spacec
