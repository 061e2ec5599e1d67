#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "synchronic/harness/verify.hpp"
#include "synchronic/spacec/compiler.hpp"
#include "synchronic/spacec/oracle.hpp"
#include "synchronic/vm/machine.hpp"

namespace synchronic::testing {

inline std::string inputs_decl(int n, const char* type) {
  std::string s;
  for (int i = 0; i < n; ++i) s += (i ? ", v" : "v") + std::to_string(i) + ":" + type;
  return s;
}

/// Sum of n uint8 values as a balanced tree of add8 calls, one `par` per level.
inline std::string tree_sum(int n) {
  std::string body;
  std::vector<std::string> level;
  for (int i = 0; i < n; ++i) level.push_back("v" + std::to_string(i));
  int fresh = 0;
  while (level.size() > 1) {
    std::vector<std::string> next;
    std::string calls;
    for (std::size_t i = 0; i + 1 < level.size(); i += 2) {
      const std::string t = level.size() == 2 ? "s" : "t" + std::to_string(fresh++);
      if (t != "s") body += "  var " + t + ":uint8;\n";
      calls += "    " + t + " = add8(" + level[i] + ", " + level[i + 1] + ");\n";
      next.push_back(t);
    }
    if (level.size() % 2) next.push_back(level.back());
    body += "  par {\n" + calls + "  }\n";
    level = std::move(next);
  }
  return "module tree(in " + inputs_decl(n, "uint8") + "; out s:uint8) {\n" + body + "}\n";
}

/// The same sum as a sequential chain of add8 calls.
inline std::string chain_sum(int n) {
  std::string body = "  s = add8(v0, v1);\n";
  for (int i = 2; i < n; ++i) body += "  s = add8(s, v" + std::to_string(i) + ");\n";
  return "module chain(in " + inputs_decl(n, "uint8") + "; out s:uint8) {\n" + body + "}\n";
}

/// k independent calls of a one-bit unit module in one `par`.
inline std::string par_units(int k) {
  std::string ins;
  std::string outs;
  std::string calls;
  for (int i = 0; i < k; ++i) {
    ins += (i ? ", a" : "a") + std::to_string(i) + ":uint1";
    outs += (i ? ", r" : "r") + std::to_string(i) + ":uint1";
    calls += "    r" + std::to_string(i) + " = unit(a" + std::to_string(i) + ");\n";
  }
  return "module unit(in a:uint1; out r:uint1) {\n  r = not1(a);\n}\n"
         "module main(in " + ins + "; out " + outs + ") {\n  par {\n" + calls + "  }\n}\n";
}

struct Compiled {
  spacec::CompileResult result;
  spacec::TypedProgram typed;
  vm::MachineConfig config;

  harness::Signature signature() const { return {result.inputs, result.outputs}; }
};

inline Compiled build(const std::string& source, const std::string& module = "",
                      vm::MachineConfig config = {}) {
  config.guard_checks = true;
  Compiled c;
  c.config = config;
  c.result = spacec::compile(source, {config, module});
  c.typed = spacec::typecheck(spacec::parse_space(source), config.word_width);
  const std::string top = module.empty() ? c.result.lowered.instances.at(0).module : module;
  if (!c.typed.find(top)) spacec::require_builtin(c.typed, top);
  return c;
}

/// Oracle bound to the compiled top module.
inline harness::Oracle oracle_for(const Compiled& c) {
  const std::string top = c.result.lowered.instances.at(0).module;
  return [&c, top](std::span<const std::uint64_t> in) { return spacec::interpret(c.typed, top, in); };
}

/// One run; returns the outcome with cycles and peak activation.
inline harness::CaseOutcome run_once(const Compiled& c, const std::vector<std::uint64_t>& inputs) {
  vm::Machine m(c.result.image, c.config);
  return harness::run_case(m, c.signature(), inputs);
}

}  // namespace synchronic::testing

namespace synchronic::testing {

/// `repeat 2` around one builtin call: a single callee instance called twice.
inline std::string call_twice(const std::string& builtin) {
  const auto b = spacec::find_builtin(builtin);
  const std::string in = "uint" + std::to_string(b->width);
  const std::string out = "uint" + std::to_string(b->out_width);
  const std::string args = b->arity == 2 ? "a, b" : "a";
  return "module twice(in a:" + in + ", b:" + in + "; out r:" + out + ") {\n  repeat 2 {\n    r = " + builtin +
         "(" + args + ");\n  }\n}\n";
}

struct CallObservation {
  std::vector<std::uint64_t> outputs;    // callee output at each completion
  std::vector<bool> clean_on_entry;      // non-input slots zero and inputs exact at each activation
  bool clean_after = false;              // whole data region zero once the run ends
  std::optional<vm::MachineError> error;
};

/// Steps a compiled program and watches instance `inst` (a callee whose
/// inputs come from `args`).
inline CallObservation observe_calls(const Compiled& c, const std::vector<std::uint64_t>& inputs, std::size_t inst,
                                     const std::vector<std::uint64_t>& args) {
  const auto& region = c.result.allocation.regions.at(inst);
  const std::size_t n_in = args.size();
  vm::MachineState st = vm::make_state(c.result.image, c.config);
  for (std::size_t i = 0; i < inputs.size(); ++i) st.registers[c.result.inputs[i].reg] = inputs[i];
  CallObservation obs;
  while (st.status == vm::Status::Running && st.cycle < c.config.max_cycles) {
    vm::TraceRecord rec;
    vm::step(st, c.config, &c.result.image.data, &rec);
    if (st.status == vm::Status::Errored) break;
    for (const vm::WriteRecord& w : rec.writes) {
      if (w.reg == region.data && w.value) obs.outputs.push_back(st.registers[region.data + 1 + n_in]);
    }
    if (std::find(rec.next.begin(), rec.next.end(), region.start) != rec.next.end()) {
      bool clean = true;
      for (vm::RegIndex r = region.data; r < region.end; ++r) {
        const std::size_t slot = r - region.data;
        const std::uint64_t want = slot >= 1 && slot <= n_in ? args[slot - 1] : 0;
        clean = clean && st.registers[r] == want;
      }
      obs.clean_on_entry.push_back(clean);
    }
  }
  obs.error = st.error;
  obs.clean_after = true;
  for (vm::RegIndex r = region.data; r < region.end; ++r) obs.clean_after = obs.clean_after && st.registers[r] == 0;
  return obs;
}

}  // namespace synchronic::testing
