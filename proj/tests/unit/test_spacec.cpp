#include <doctest.h>

#include <random>

#include "support/space_programs.hpp"
#include "synchronic/error.hpp"
#include "synchronic/spacec/ast.hpp"
#include "synchronic/spacec/compiler.hpp"
#include "synchronic/spacec/oracle.hpp"
#include "synchronic/spacec/typecheck.hpp"
#include "synchronic/vm/trace.hpp"

using namespace synchronic;
using namespace synchronic::spacec;
using synchronic::testing::build;

namespace {

const char* kAdd4 = R"(
module adder(in a:uint4, b:uint4; out s:uint4) {
  s = add4(a, b);
}
)";

template <typename E>
std::string error_of(const std::string& src) {
  try {
    typecheck(parse_space(src));
  } catch (const E& e) {
    return e.what();
  }
  return "";
}

/// Cycle at which the first write to `reg` commits, or -1.
long first_write(const vm::RunResult& r, vm::RegIndex reg) {
  for (const auto& rec : r.trace) {
    for (const auto& w : rec.writes) {
      if (w.reg == reg) return static_cast<long>(rec.cycle);
    }
  }
  return -1;
}

}  // namespace

TEST_CASE("parse and typecheck a one-call module") {
  const Program p = parse_space(kAdd4);
  REQUIRE(p.modules.size() == 1);
  const TypedProgram t = typecheck(p);
  const TypedModule& m = t.modules.at(0);
  REQUIRE(m.module.body.size() == 1);
  CHECK(m.module.body[0].kind == Stmt::Kind::Call);
  CHECK(m.module.body[0].callee == "add4");
  CHECK(m.var("s").width == 4);
  CHECK(t.builtins.count("add4") == 1);
}

TEST_CASE("parser forms") {
  const Program p = parse_space(R"(
const N = 3;
// header with outputs only
module k(out z:uint2) { z = mov2(2); }
module m(in a:uint8; out q:uint8, r:uint1) {
  var t:uint8, u:uint1;
  c:uint8 = not8(a);       # declaring assignment
  par { q = xor8(a, c); r = eq8(a, 7); }
  if (r) { t = mov8(a); } else { seq { t = mov8(c); } }
  repeat N { t = add8(t, 1); }
  repeat 2 unroll { u = not1(u); }
  interstring {
    t add a 1 ; u lt a c
    q mov t
  }
}
)");
  REQUIRE(p.modules.size() == 2);
  CHECK(p.consts.at("N") == 3);
  const Module& m = p.modules[1];
  CHECK(m.ins.size() == 1);
  CHECK(m.outs.size() == 2);
  CHECK(m.body[1].kind == Stmt::Kind::Decl);
  CHECK(m.body[2].kind == Stmt::Kind::Call);
  CHECK(m.body[3].kind == Stmt::Kind::Par);
  CHECK(m.body[3].body.size() == 2);
  CHECK(m.body[4].kind == Stmt::Kind::If);
  CHECK(m.body[5].count_name == "N");
  CHECK(m.body[6].unroll);
  CHECK(m.body[7].layers.layers.size() == 2);
  const TypedProgram t = typecheck(p);
  CHECK(t.modules[1].module.body[5].count == 3);
}

TEST_CASE("syntax errors carry the line") {
  try {
    parse_space("module m(in a:uint4; out s:uint4) {\n  s = add4(a, b\n}\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() >= 2);
    CHECK(std::string(e.what()).find("parse error") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_space("module m(in a:uint0) {}"), ParseError);
  CHECK_THROWS_AS(parse_space("module m() { interstring { a add b c d e } }"), ParseError);
}

TEST_CASE("type errors") {
  CHECK(error_of<TypeError>("module m(in a:uint4, b:uint4) { s:uint4 = add8(a, b); }").find("width mismatch") !=
        std::string::npos);
  CHECK(error_of<TypeError>("module m(in a:uint1; out r:uint1) { r = m(a); }").find("recursive") !=
        std::string::npos);
  CHECK(error_of<TypeError>("module f(in a:uint1; out r:uint1) { r = g(a); }\n"
                            "module g(in a:uint1; out r:uint1) { r = f(a); }")
            .find("recursive call chain") != std::string::npos);
  CHECK(error_of<TypeError>("module m(in n:uint4) { repeat n { } }").find("non-constant repeat bound") !=
        std::string::npos);
  CHECK(error_of<TypeError>("module m(out s:uint4) { s = add4(x, 1); }").find("unknown name") != std::string::npos);
  CHECK(error_of<TypeError>("module m(out s:uint4) { s = nosuch(1); }").find("unknown module") !=
        std::string::npos);
  CHECK(error_of<TypeError>("module m(out s:uint4) { s = add4(16, 1); }").find("does not fit") !=
        std::string::npos);
  CHECK(error_of<TypeError>("module add4(out s:uint4) { }").find("builtin") != std::string::npos);
  CHECK(error_of<TypeError>("module m(in a:uint4; out s:uint4, t:uint4) { par { s = not4(a); s = mov4(a); } }")
            .find("both write") != std::string::npos);
  CHECK(error_of<TypeError>("module m(in a:uint4; out s:uint4, t:uint4) { par { s = not4(a); t = mov4(s); } }")
            .find("reads 's'") != std::string::npos);
  CHECK(error_of<TypeError>("module m(in a:uint4; out c:uint4) { if (a) { } }").find("uint1") != std::string::npos);
  CHECK(error_of<TypeError>("module m(in a:uint4; out c:uint4) { interstring { c add a q } }").find("undefined source") !=
        std::string::npos);
  CHECK(error_of<TypeError>("module m(in a:uint4; out c:uint2) { interstring { c add a 1 } }")
            .find("width mismatch") != std::string::npos);
  CHECK(error_of<TypeError>("module m(in a:uint4; out c:uint1) { interstring { c eq 1 2 } }")
            .find("variable") != std::string::npos);
  CHECK(error_of<TypeError>("module m(in a:uint4; out c:uint4) { interstring { c shl a a } }")
            .find("literal") != std::string::npos);
  CHECK_THROWS_AS(typecheck(parse_space("module m(in a:uint40) {}"), 32), TypeError);
}

TEST_CASE("oracle interprets calls, layers, loops and branches") {
  const TypedProgram t = typecheck(parse_space(R"(
module f(in a:uint8, b:uint8; out r:uint8, c:uint1) {
  var t:uint8;
  interstring {
    t add a b ; c lt a b
    r mul t t
  }
  if (c) { r = add8(r, 1); } else { }
  repeat 3 { r = add8(r, a); }
}
)"));
  for (std::uint64_t a : {0ULL, 3ULL, 200ULL}) {
    for (std::uint64_t b : {0ULL, 5ULL, 255ULL}) {
      std::uint64_t r = ((a + b) & 0xff) * ((a + b) & 0xff) & 0xff;
      if (a < b) r = (r + 1) & 0xff;
      r = (r + 3 * a) & 0xff;
      const std::vector<std::uint64_t> in{a, b};
      CHECK(interpret(t, "f", in) == std::vector<std::uint64_t>{r, a < b ? 1ULL : 0ULL});
    }
  }
  TypedProgram b = typecheck(parse_space(""));
  require_builtin(b, "sub4");
  const std::vector<std::uint64_t> in{2, 5};
  CHECK(interpret(b, "sub4", in) == std::vector<std::uint64_t>{13});
}

TEST_CASE("allocation: par branches get disjoint, ordered regions") {
  const auto c = build(R"(
module m(in a:uint1, b:uint1, x:uint1, y:uint1; out c:uint1, d:uint1) {
  par { c = and1(a, b); d = and1(x, y); }
}
)");
  const AllocationMap& al = c.result.allocation;
  REQUIRE(al.regions.size() == 3);
  REQUIRE(al.facts.size() == 1);
  const auto& r1 = al.regions[al.facts[0].first];
  const auto& r2 = al.regions[al.facts[0].second];
  CHECK(r1.start < r2.start);
  CHECK(r1.end <= r2.start);
  CHECK(r1.name == "m/and1@1");
  CHECK(r2.name == "m/and1@2");
  CHECK(al.regions[0].start == 1);
  for (std::size_t i = 1; i < al.regions.size(); ++i) CHECK(al.regions[i - 1].end == al.regions[i].start);
  const std::string sched = format_schedule(c.result);
  CHECK(sched.find("join CycleBalanced") != std::string::npos);
  CHECK(sched.find("disjoint m/and1@1") != std::string::npos);
}

TEST_CASE("allocation fails when the machine is too small") {
  vm::MachineConfig small;
  small.n_registers = 64;
  small.word_width = 16;
  CHECK_THROWS_AS(compile(kAdd4, {small, ""}), AllocError);
}

TEST_CASE("compilation is deterministic") {
  const auto a = compile(synchronic::testing::tree_sum(8), {});
  const auto b = compile(synchronic::testing::tree_sum(8), {});
  CHECK(a.image.words == b.image.words);
  CHECK(a.image.entry == b.image.entry);
  CHECK(a.image.data == b.image.data);
  CHECK(a.symbols == b.symbols);
  CHECK(format_schedule(a) == format_schedule(b));
}

TEST_CASE("and1 writes its result within four cycles") {
  auto c = build("", "and1");
  const vm::RegIndex r = c.result.outputs.at(0).reg;
  const auto entry = c.result.image.entry.at(0);
  const auto first = vm::decode(c.result.image.words.at(entry), c.config);
  CHECK(first.op == vm::Opcode::Cnd);
  CHECK(first.a == c.result.inputs.at(0).reg);
  for (std::uint64_t a = 0; a < 2; ++a) {
    for (std::uint64_t b = 0; b < 2; ++b) {
      vm::MachineState st = vm::make_state(c.result.image, c.config);
      st.registers[c.result.inputs[0].reg] = a;
      st.registers[c.result.inputs[1].reg] = b;
      const auto run = vm::run(st, c.config, &c.result.image.data, true);
      REQUIRE(run.state.status == vm::Status::Halted);
      const long w = first_write(run, r);
      CHECK(w >= 0);
      CHECK(w <= 3);
      CHECK(run.state.registers[r] == (a & b));
    }
  }
}

TEST_CASE("par of two and1 calls runs both branches in the same cycle") {
  const auto c = build(R"(
module m(in a:uint1, b:uint1, x:uint1, y:uint1; out c:uint1, d:uint1) {
  par { c = and1(a, b); d = and1(x, y); }
}
)");
  const auto run = vm::run(c.result.image, c.config, true);
  REQUIRE(run.state.status == vm::Status::Halted);
  CHECK(run.peak_active >= 2);
  // one JMP with offset 1 activates a two-entry ladder of JMPs
  bool ladder = false;
  for (const auto& rec : run.trace) {
    for (vm::RegIndex r : rec.active) {
      const auto ins = vm::decode(run.state.registers[r], c.config);
      if (ins.op == vm::Opcode::Jmp && ins.b == 1) {
        const auto x = vm::decode(run.state.registers[ins.a], c.config);
        const auto y = vm::decode(run.state.registers[ins.a + 1], c.config);
        ladder = ladder || (x.op == vm::Opcode::Jmp && y.op == vm::Opcode::Jmp);
      }
    }
  }
  CHECK(ladder);
}

TEST_CASE("not8 runs eight threads at once") {
  const auto c = build("", "not8");
  const auto out = synchronic::testing::run_once(c, {0x5a});
  CHECK(out.actual.at(0) == 0xa5);
  CHECK(out.peak_active >= 8);
}

TEST_CASE("add4 is exhaustively correct") {
  const auto c = build(kAdd4);
  const auto report = harness::verify(c.result.image, c.signature(),
                                      [](std::span<const std::uint64_t> in) {
                                        return harness::Values{(in[0] + in[1]) % 16};
                                      },
                                      {}, c.config);
  CHECK(report.cases == 256);
  CHECK(report.passed == 256);
  CHECK(report.machine_errors == 0);
  CHECK_FALSE(report.sampled);
}

TEST_CASE("xor8 agrees on sampled inputs") {
  const auto c = build("module x(in a:uint8, b:uint8; out s:uint8) { s = xor8(a, b); }");
  harness::VerifyOptions opt;
  opt.samples = 1000;
  const auto report = harness::verify(c.result.image, c.signature(),
                                      [](std::span<const std::uint64_t> in) { return harness::Values{in[0] ^ in[1]}; },
                                      opt, c.config);
  CHECK(report.sampled);
  CHECK(report.cases == 1000);
  CHECK(report.passed == 1000);
}

TEST_CASE("every builtin family matches the oracle") {
  for (const char* name : {"not4", "mov4", "and3", "or3", "xor3", "add4", "sub4", "mul4", "eq4", "lt4", "add1",
                           "mul1", "sub2", "lt1", "eq1", "mul3"}) {
    CAPTURE(name);
    const auto c = build("", name);
    const auto report = harness::verify(c.result.image, c.signature(), synchronic::testing::oracle_for(c), {},
                                        c.config);
    CHECK(report.ok());
    CHECK(report.machine_errors == 0);
  }
}

TEST_CASE("interstring blocks compile with in-layer sharing") {
  const auto c = build(R"(
module f(in a:uint8, b:uint8; out r:uint8, c:uint1) {
  var t:uint8;
  interstring {
    t add a b ; c lt a b
    r mul t t ; a shr a 1 ; b shl b 2
    t xor a b ; a sub r 3
    r or t a ; c eq r 0
  }
}
)");
  harness::VerifyOptions opt;
  opt.samples = 300;
  const auto report =
      harness::verify(c.result.image, c.signature(), synchronic::testing::oracle_for(c), opt, c.config);
  CHECK(report.ok());
}

TEST_CASE("swapping through a single layer reads pre-layer values") {
  const auto c = build(R"(
module s(in a:uint4, b:uint4; out x:uint4, y:uint4) {
  interstring {
    x mov a ; y mov b
    x mov y ; y mov x
  }
}
)");
  const auto out = synchronic::testing::run_once(c, {3, 9});
  CHECK(out.actual == harness::Values{9, 3});
}

TEST_CASE("control flow: if, repeat loops, unrolled repeat, nested calls") {
  const auto c = build(R"(
const K = 5;
module inc(in a:uint6; out r:uint6) { r = add6(a, 1); }
module g(in a:uint6, p:uint1; out r:uint6) {
  r = mov6(a);
  if (p) {
    repeat K { r = inc(r); }
  } else {
    repeat 2 unroll { r = add6(r, a); }
  }
  repeat 0 { r = not6(r); }
}
)");
  const auto report = harness::verify(c.result.image, c.signature(), synchronic::testing::oracle_for(c), {}, c.config);
  CHECK(report.cases == 128);
  CHECK(report.ok());
}

TEST_CASE("flag-polled join when a branch is dynamic") {
  const auto c = build(R"(
module g(in a:uint4, p:uint1; out r:uint4, s:uint4) {
  par {
    if (p) { r = not4(a); } else { r = mov4(a); }
    s = add4(a, a);
  }
}
)");
  CHECK(format_schedule(c.result).find("join FlagPolled") != std::string::npos);
  const auto report = harness::verify(c.result.image, c.signature(), synchronic::testing::oracle_for(c), {}, c.config);
  CHECK(report.ok());
}

TEST_CASE("static cycle counts match measured runs") {
  const std::vector<std::pair<std::string, std::string>> programs = {
      {"", "add8"},
      {"", "mul4"},
      {"", "lt6"},
      {"", "xor8"},
      {kAdd4, ""},
      {synchronic::testing::tree_sum(4), ""},
      {synchronic::testing::chain_sum(3), ""},
      {"module r(in a:uint4; out s:uint4) { s = mov4(a); repeat 3 { s = add4(s, a); } }", ""},
      {"module l(in a:uint4, b:uint4; out s:uint4) { interstring { s mul a b ; a add a b\n s sub s a } }", ""},
  };
  std::mt19937_64 rng(7);
  for (const auto& [src, top] : programs) {
    CAPTURE(src);
    CAPTURE(top);
    const auto c = build(src, top);
    const auto& predicted = c.result.lowered.instances.at(0).cycles;
    REQUIRE(predicted.has_value());
    for (int k = 0; k < 20; ++k) {
      std::vector<std::uint64_t> in;
      for (const auto& p : c.result.inputs) in.push_back(rng() & ((1ULL << p.width) - 1));
      const auto out = synchronic::testing::run_once(c, in);
      REQUIRE_FALSE(out.error.has_value());
      // entry to the flag write, then the flag write and the final halt
      CHECK(out.cycles == *predicted + 2);
    }
  }
}

TEST_CASE("tree reduction beats the sequential chain") {
  for (int n : {4, 8}) {
    const auto tree = build(synchronic::testing::tree_sum(n));
    const auto chain = build(synchronic::testing::chain_sum(n));
    std::vector<std::uint64_t> in;
    std::uint64_t sum = 0;
    for (int i = 0; i < n; ++i) {
      in.push_back(static_cast<std::uint64_t>(37 * i + 11) & 0xff);
      sum += in.back();
    }
    const auto t = synchronic::testing::run_once(tree, in);
    const auto s = synchronic::testing::run_once(chain, in);
    CHECK(t.actual.at(0) == (sum & 0xff));
    CHECK(s.actual.at(0) == (sum & 0xff));
    CHECK(t.cycles < s.cycles);
  }
}

TEST_CASE("a callee is clean on every call and after return") {
  for (const char* name : {"add4", "not4", "lt3", "mul3"}) {
    CAPTURE(name);
    const auto c = build(synchronic::testing::call_twice(name));
    REQUIRE(c.result.lowered.instances.size() == 2);
    const std::vector<std::uint64_t> in{5, 3};
    const auto b = find_builtin(name);
    const std::vector<std::uint64_t> args(in.begin(), in.begin() + b->arity);
    const auto obs = synchronic::testing::observe_calls(c, in, 1, args);
    CHECK_FALSE(obs.error.has_value());
    REQUIRE(obs.outputs.size() == 2);
    CHECK(obs.outputs[0] == obs.outputs[1]);
    CHECK(obs.outputs[0] == interpret(c.typed, name, args).at(0));
    CHECK(obs.clean_on_entry == std::vector<bool>{true, true});
    CHECK(obs.clean_after);
  }
}

TEST_CASE("symbols name instances, variables and regions") {
  const auto c = build(kAdd4);
  CHECK(c.result.symbols.labels.at("adder") == c.result.image.entry.at(0));
  CHECK(c.result.symbols.labels.at("adder.a") == c.result.inputs.at(0).reg);
  CHECK(c.result.symbols.labels.at("adder.s") == c.result.outputs.at(0).reg);
  CHECK(c.result.symbols.labels.count("adder/add4@1.r") == 1);
  REQUIRE(c.result.symbols.regions.size() == 2);
  CHECK(c.result.symbols.regions[1].instance == "adder/add4@1");
  // every data slot is guarded
  for (const auto& r : c.result.allocation.regions) {
    for (vm::RegIndex x = r.data; x < r.end; ++x) CHECK(c.result.image.data.count(x) == 1);
  }
}
