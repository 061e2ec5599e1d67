#include "cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "synchronic/earth/assembler.hpp"
#include "synchronic/error.hpp"
#include "synchronic/harness/metrics.hpp"
#include "synchronic/harness/verify.hpp"
#include "synchronic/interstring/dag.hpp"
#include "synchronic/interstring/interstring.hpp"
#include "synchronic/spacec/compiler.hpp"
#include "synchronic/spacec/oracle.hpp"
#include "synchronic/util/text.hpp"
#include "synchronic/vm/image.hpp"
#include "synchronic/vm/machine.hpp"
#include "synchronic/vm/trace.hpp"

namespace synchronic::cli {

namespace {

namespace fs = std::filesystem;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Stage::Io, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) throw Error(Stage::Io, "cannot write '" + path + "'");
}

std::uint64_t env_number(const char* name, std::uint64_t fallback) {
  const char* v = std::getenv(name);
  if (v == nullptr || *v == '\0') return fallback;
  const auto n = text::parse_uint(v);
  if (!n) throw Error(Stage::Usage, std::string(name) + " is not an unsigned integer: '" + v + "'");
  return *n;
}

/// Defaults overridden by SYNCHRONIC_N, SYNCHRONIC_W and SYNCHRONIC_MAXCYCLES.
vm::MachineConfig base_config() {
  vm::MachineConfig c;
  c.n_registers = static_cast<std::uint32_t>(env_number("SYNCHRONIC_N", c.n_registers));
  c.word_width = static_cast<std::uint32_t>(env_number("SYNCHRONIC_W", c.word_width));
  c.max_cycles = env_number("SYNCHRONIC_MAXCYCLES", c.max_cycles);
  c.validate();
  return c;
}

std::string with_extension(const std::string& path, const char* ext) {
  return fs::path(path).replace_extension(ext).string();
}

// -- subcommands -------------------------------------------------------------

struct AsmArgs {
  std::string input;
  std::string output;
  std::string symbols;
  bool strict = false;
};

int cmd_asm(const AsmArgs& a, std::ostream& out) {
  earth::AsmOptions opt;
  opt.config = base_config();
  opt.strict_regions = a.strict;
  const earth::Assembly as = earth::assemble(read_file(a.input), opt);
  const std::string image = vm::dump_image(as.image);
  if (a.output.empty()) {
    out << image;
  } else {
    write_file(a.output, image);
  }
  if (!a.symbols.empty()) write_file(a.symbols, earth::format_symbols(as.symbols));
  return 0;
}

struct DisasmArgs {
  std::string input;
  std::string symbols;
};

int cmd_disasm(const DisasmArgs& a, std::ostream& out) {
  const vm::Image image = vm::load_image(read_file(a.input), base_config());
  if (a.symbols.empty()) {
    out << earth::disassemble(image);
  } else {
    const earth::SymbolMap sym = earth::parse_symbols(read_file(a.symbols));
    out << earth::disassemble(image, &sym);
  }
  return 0;
}

struct RunArgs {
  std::string input;
  std::string trace;
  std::string dump;
  std::uint64_t max_cycles = 0;
  bool guard = false;
};

int cmd_run(const RunArgs& a, std::ostream& out, std::ostream& err) {
  vm::MachineConfig base = base_config();
  if (a.max_cycles) base.max_cycles = a.max_cycles;
  const vm::Image image = vm::load_image(read_file(a.input), base);
  vm::MachineConfig config = image.config_from(base);
  config.guard_checks = a.guard;
  const vm::RunResult r = vm::run(image, config, !a.trace.empty());
  if (!a.trace.empty()) write_file(a.trace, vm::format_trace(r.trace, r.state.error));
  if (!a.dump.empty()) write_file(a.dump, vm::dump_state(r.state, config));
  if (r.state.error) {
    err << "machine error: " << vm::to_string(*r.state.error) << "\n";
    return 2;
  }
  out << "halted cycles=" << r.cycles << " peak_active=" << r.peak_active << "\n";
  return 0;
}

struct EvalArgs {
  std::string input;
  std::vector<std::string> env;
  unsigned width = 32;
  std::size_t max_cell = interstring::kDefaultMaxCellLength;
};

interstring::Interstring load_interstring(const std::string& path, std::size_t k) {
  return interstring::parse_interstring(read_file(path), k);
}

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const auto is = load_interstring(a.input, a.max_cell);
  interstring::Environment env;
  for (const std::string& kv : a.env) {
    const auto eq = kv.find('=');
    const auto value = eq == std::string::npos ? std::nullopt : text::parse_uint(kv.substr(eq + 1));
    if (!value || !text::is_identifier(kv.substr(0, eq))) {
      throw Error(Stage::Usage, "--env expects name=value, got '" + kv + "'");
    }
    env[kv.substr(0, eq)] = *value;
  }
  std::set<std::string> names;
  for (const auto& [k, v] : env) names.insert(k);
  const auto alg = interstring::Algebra::standard(a.width);
  const auto report = interstring::validate(is, names, &alg);
  if (!report.clean()) {
    const auto& f = report.findings.front();
    throw Error(Stage::Type, "layer " + std::to_string(f.layer) + ": " + f.message,
                is.layers.at(f.layer - 1).line);
  }
  const interstring::Environment result = interstring::evaluate(is, alg, env);
  std::set<std::string> written;
  for (const auto& layer : is.layers) {
    for (const auto& cell : layer.cells) written.insert(cell.destination());
  }
  std::string line;
  for (const std::string& name : written) {
    if (!line.empty()) line += ' ';
    line += name + "=" + std::to_string(result.at(name));
  }
  out << line << "\n";
  return 0;
}

int cmd_isdag(const EvalArgs& a, std::ostream& out) {
  const auto is = load_interstring(a.input, a.max_cell);
  // names never defined by a cell are the initial environment
  std::set<std::string> defined;
  std::set<std::string> inputs;
  for (const auto& layer : is.layers) {
    for (const auto& cell : layer.cells) {
      for (const std::string& s : cell.sources()) {
        if (!interstring::is_literal(s) && !defined.count(s)) inputs.insert(s);
      }
    }
    for (const auto& cell : layer.cells) defined.insert(cell.destination());
  }
  const auto report = interstring::validate(is, inputs);
  if (!report.clean()) {
    const auto& f = report.findings.front();
    throw Error(Stage::Type, "layer " + std::to_string(f.layer) + ": " + f.message,
                is.layers.at(f.layer - 1).line);
  }
  out << interstring::format_metrics(interstring::to_dag(is));
  return 0;
}

struct SpacecArgs {
  std::string input;
  std::string output;
  std::string symbols;
  std::string sched;
  std::string module;
};

int cmd_spacec(const SpacecArgs& a, std::ostream& out) {
  const vm::MachineConfig config = base_config();
  const spacec::CompileResult r = spacec::compile(read_file(a.input), {config, a.module});
  const std::string image = a.output.empty() ? with_extension(a.input, ".img") : a.output;
  const std::string sym = a.symbols.empty() ? with_extension(image, ".sym") : a.symbols;
  const std::string sched = a.sched.empty() ? with_extension(image, ".sched") : a.sched;
  write_file(image, vm::dump_image(r.image));
  write_file(sym, earth::format_symbols(r.symbols));
  write_file(sched, spacec::format_schedule(r));
  const auto& top = r.lowered.instances.front();
  out << "compiled " << top.module << ": " << r.lowered.instances.size() << " instances, "
      << r.allocation.free_start - 1 << " registers, cycles "
      << (top.cycles ? std::to_string(*top.cycles) : std::string("dynamic")) << "\n"
      << "wrote " << image << " " << sym << " " << sched << "\n";
  return 0;
}

struct VerifyArgs {
  std::string input;
  std::string module;
  unsigned bits = 16;
  std::uint64_t samples = 0;
  std::uint64_t seed = 1;
};

int cmd_verify(const VerifyArgs& a, std::ostream& out) {
  vm::MachineConfig config = base_config();
  config.guard_checks = true;
  const std::string source = read_file(a.input);
  const spacec::CompileResult r = spacec::compile(source, {config, a.module});
  spacec::TypedProgram typed = spacec::typecheck(spacec::parse_space(source), config.word_width);
  const std::string top = r.lowered.instances.front().module;
  if (!typed.find(top)) spacec::require_builtin(typed, top);

  harness::VerifyOptions opt;
  opt.exhaustive_bits = a.bits;
  opt.seed = a.seed;
  if (a.samples) opt.samples = a.samples;
  const harness::Signature sig{r.inputs, r.outputs};
  const harness::VerifyReport report = harness::verify(
      r.image, sig, [&](std::span<const std::uint64_t> in) { return spacec::interpret(typed, top, in); }, opt,
      config);
  out << report.summary();
  if (report.machine_errors) return 2;
  return report.ok() ? 0 : 1;
}

int cmd_metrics(const std::string& input, std::ostream& out) {
  out << harness::metrics(read_file(input)).to_string();
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Synchronic A-Ram toolchain: simulator, Earth assembler, interstrings, mini-Space compiler"};
  app.name("synchronic");
  app.require_subcommand(1);

  AsmArgs asm_args;
  auto* asm_cmd = app.add_subcommand("asm", "assemble Earth source to an image");
  asm_cmd->add_option("file", asm_args.input, "Earth source")->required();
  asm_cmd->add_option("-o,--output", asm_args.output, "image file (default: stdout)");
  asm_cmd->add_option("--sym", asm_args.symbols, "symbol sidecar file");
  asm_cmd->add_flag("--strict-regions", asm_args.strict, "reject fan-out leaving a macro instance");

  DisasmArgs dis_args;
  auto* dis_cmd = app.add_subcommand("disasm", "disassemble an image");
  dis_cmd->add_option("image", dis_args.input, "image file")->required();
  dis_cmd->add_option("--sym", dis_args.symbols, "symbol sidecar for label comments");

  RunArgs run_args;
  auto* run_cmd = app.add_subcommand("run", "run an image");
  run_cmd->add_option("image", run_args.input, "image file")->required();
  run_cmd->add_option("--trace", run_args.trace, "write the cycle trace here");
  run_cmd->add_option("--dump", run_args.dump, "write the final state here");
  run_cmd->add_option("--max-cycles", run_args.max_cycles, "cycle limit");
  run_cmd->add_flag("--guard", run_args.guard, "error on activating a data register");

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate an interstring");
  eval_cmd->add_option("file", eval_args.input, ".is file")->required();
  eval_cmd->add_option("--env", eval_args.env, "initial value name=value (repeatable)");
  eval_cmd->add_option("--width", eval_args.width, "value width in bits")->check(CLI::Range(1, 64));
  eval_cmd->add_option("-K,--max-cell", eval_args.max_cell, "maximum cell length");

  EvalArgs dag_args;
  auto* dag_cmd = app.add_subcommand("isdag", "dataflow metrics of an interstring");
  dag_cmd->add_option("file", dag_args.input, ".is file")->required();
  dag_cmd->add_option("-K,--max-cell", dag_args.max_cell, "maximum cell length");

  SpacecArgs spc_args;
  auto* spc_cmd = app.add_subcommand("spacec", "compile mini-Space to an image, .sym and .sched");
  spc_cmd->add_option("file", spc_args.input, ".spc source")->required();
  spc_cmd->add_option("-o,--output", spc_args.output, "image file (default: <file>.img)");
  spc_cmd->add_option("--sym", spc_args.symbols, "symbol sidecar (default: <image>.sym)");
  spc_cmd->add_option("--sched", spc_args.sched, "schedule report (default: <image>.sched)");
  spc_cmd->add_option("--module", spc_args.module, "top module (default: the last one)");

  VerifyArgs ver_args;
  auto* ver_cmd = app.add_subcommand("verify", "check a compiled module against the reference semantics");
  ver_cmd->add_option("file", ver_args.input, ".spc source")->required();
  ver_cmd->add_option("--module", ver_args.module, "module or builtin to verify")->required();
  auto* bits = ver_cmd->add_option("--exhaustive-bits", ver_args.bits, "exhaustive budget in input bits");
  ver_cmd->add_option("--samples", ver_args.samples, "random cases (forces sampling)")->excludes(bits);
  ver_cmd->add_option("--seed", ver_args.seed, "sampling seed");

  std::string trace_file;
  auto* met_cmd = app.add_subcommand("metrics", "metrics of a trace");
  met_cmd->add_option("trace", trace_file, "trace file")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (*asm_cmd) return cmd_asm(asm_args, out);
    if (*dis_cmd) return cmd_disasm(dis_args, out);
    if (*run_cmd) return cmd_run(run_args, out, err);
    if (*eval_cmd) return cmd_eval(eval_args, out);
    if (*dag_cmd) return cmd_isdag(dag_args, out);
    if (*spc_cmd) return cmd_spacec(spc_args, out);
    if (*ver_cmd) return cmd_verify(ver_args, out);
    if (*met_cmd) return cmd_metrics(trace_file, out);
  } catch (const Error& e) {
    err << e.what() << "\n";
    return e.stage() == Stage::Machine ? 2 : 1;
  } catch (const std::exception& e) {
    err << "io error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace synchronic::cli
