// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "support/random_image.hpp"
#include "support/space_programs.hpp"
#include "synchronic/earth/assembler.hpp"
#include "synchronic/error.hpp"
#include "synchronic/interstring/dag.hpp"
#include "synchronic/vm/image.hpp"
#include "synchronic/vm/machine.hpp"

using namespace synchronic;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = true;
  std::string note;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) {
      pass = false;
      note = what;
    }
  }
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

vm::Image fixture_image(const char* name) { return vm::load_image(slurp(fs::path(SYNCHRONIC_FIXTURES) / name)); }

std::optional<vm::MachineError> run_fixture(const char* name) {
  const vm::Image img = fixture_image(name);
  return vm::run(img, img.config_from({})).state.error;
}

Outcome determinism() {
  Outcome o;
  std::mt19937_64 rng(20261019);
  const auto t0 = Clock::now();
  for (int i = 0; i < 100; ++i) {
    const vm::Image img = testing::random_image(rng);
    vm::MachineConfig cfg = img.config_from({});
    cfg.max_cycles = 2000;
    const auto a = vm::run(img, cfg, true);
    const auto b = vm::run(img, cfg, true);
    o.require(a.trace == b.trace && a.state == b.state, "image " + std::to_string(i) + " diverged");
  }
  const double s = seconds_since(t0);
  o.require(s < 10.0, "took " + std::to_string(s) + " s");
  if (o.pass) o.note = "100 images, " + std::to_string(s) + " s";
  return o;
}

Outcome write_contention() {
  Outcome o;
  const vm::MachineError want{vm::ErrorKind::WriteContention, 2, 0, 0};
  o.require(run_fixture("conflict.img") == want, "conflict.img");
  o.require(run_fixture("conflict_equal.img") == want, "conflict_equal.img");
  const vm::MachineError late{vm::ErrorKind::WriteContention, 1, 3, 2};
  o.require(run_fixture("late_conflict.img") == late, "late_conflict.img");
  for (const char* clean : {"disjoint.img", "write_bit.img", "sink.img"}) {
    o.require(!run_fixture(clean).has_value(), std::string(clean) + " raised an error");
  }
  return o;
}

Outcome activation_contention() {
  Outcome o;
  const auto dup = run_fixture("duplicate.img");
  o.require(dup && dup->kind == vm::ErrorKind::ActivationContention && dup->reg == 8 && dup->cycle == 0,
            "duplicate.img");
  o.require(!run_fixture("sink.img").has_value(), "sink.img raised an error");
  return o;
}

struct BuiltinCheck {
  const char* name;
  std::function<std::uint64_t(std::uint64_t, std::uint64_t)> fn;
  std::optional<std::uint64_t> samples;
};

// Criteria 4 and 5 share one pass over the builtin suite.
std::pair<Outcome, Outcome> builtins_correct() {
  Outcome correct;
  Outcome clean;
  const std::vector<BuiltinCheck> suite = {
      {"not8", [](auto a, auto) { return ~a & 0xff; }, std::nullopt},
      {"and8", [](auto a, auto b) { return a & b; }, std::nullopt},
      {"or8", [](auto a, auto b) { return a | b; }, std::nullopt},
      {"xor8", [](auto a, auto b) { return a ^ b; }, std::nullopt},
      {"add4", [](auto a, auto b) { return (a + b) & 0xf; }, std::nullopt},
      {"add8", [](auto a, auto b) { return (a + b) & 0xff; }, 10000},
  };
  const auto t0 = Clock::now();
  std::uint64_t total = 0;
  std::uint64_t errors = 0;
  for (const BuiltinCheck& b : suite) {
    const auto c = testing::build("", b.name);
    harness::VerifyOptions opt;
    opt.samples = b.samples;
    const auto fn = b.fn;
    const auto report = harness::verify(
        c.result.image, c.signature(),
        [fn](std::span<const std::uint64_t> in) {
          return harness::Values{fn(in[0], in.size() > 1 ? in[1] : 0)};
        },
        opt, c.config);
    correct.require(report.ok(), std::string(b.name) + ": " + report.summary());
    total += report.cases;
    errors += report.machine_errors;
  }
  const double s = seconds_since(t0);
  correct.require(s < 120.0, "took " + std::to_string(s) + " s");
  if (correct.pass) correct.note = std::to_string(total) + " cases, " + std::to_string(s) + " s";
  clean.require(errors == 0, std::to_string(errors) + " machine errors");
  if (clean.pass) clean.note = "0 machine errors in " + std::to_string(total) + " cases";
  return {correct, clean};
}

Outcome doubling_chain() {
  Outcome o;
  for (int d = 1; d <= 16; ++d) {
    std::string src;
    for (int i = 1; i <= d; ++i) {
      src += "x" + std::to_string(i) + " add x" + std::to_string(i - 1) + " x" + std::to_string(i - 1) + "\n";
    }
    const auto view = interstring::to_dag(interstring::parse_interstring(src));
    const std::uint64_t tree = (std::uint64_t{1} << (d + 1)) - 1;
    o.require(view.cells == static_cast<std::size_t>(d) && view.tree_expansion_size == tree,
              "d=" + std::to_string(d) + " cells=" + std::to_string(view.cells) +
                  " tree=" + std::to_string(view.tree_expansion_size));
  }
  return o;
}

Outcome parallelism() {
  Outcome o;
  const auto x = testing::build("", "xor8");
  const auto r = testing::run_once(x, {0x5a, 0xc3});
  o.require(!r.error && r.actual.at(0) == (0x5a ^ 0xc3), "xor8 result");
  o.require(r.peak_active >= 8, "xor8 peak_active=" + std::to_string(r.peak_active));
  std::string note = "xor8 peak=" + std::to_string(r.peak_active);
  for (int k : {2, 4, 8}) {
    const auto c = testing::build(testing::par_units(k), "main");
    const std::vector<std::uint64_t> in(static_cast<std::size_t>(k), 1);
    const auto u = testing::run_once(c, in);
    o.require(!u.error && u.actual == std::vector<std::uint64_t>(static_cast<std::size_t>(k), 0),
              "par_units(" + std::to_string(k) + ") result");
    o.require(u.peak_active >= static_cast<std::size_t>(k),
              "par_units(" + std::to_string(k) + ") peak_active=" + std::to_string(u.peak_active));
    note += " k" + std::to_string(k) + "=" + std::to_string(u.peak_active);
  }
  if (o.pass) o.note = note;
  return o;
}

Outcome tree_beats_chain() {
  Outcome o;
  std::string note;
  for (int n : {2, 4, 8, 16}) {
    const auto tree = testing::build(testing::tree_sum(n), "tree");
    const auto chain = testing::build(testing::chain_sum(n), "chain");
    std::vector<std::uint64_t> in;
    std::uint64_t sum = 0;
    for (int i = 0; i < n; ++i) {
      in.push_back(static_cast<std::uint64_t>(53 * i + 7) & 0xff);
      sum += in.back();
    }
    const auto t = testing::run_once(tree, in);
    const auto c = testing::run_once(chain, in);
    const std::string tag = "n=" + std::to_string(n);
    o.require(!t.error && !c.error, tag + " machine error");
    o.require(t.actual == c.actual && t.actual.at(0) == (sum & 0xff), tag + " results differ");
    if (n >= 4) {
      o.require(t.cycles < c.cycles,
                tag + " tree=" + std::to_string(t.cycles) + " chain=" + std::to_string(c.cycles));
    }
    note += (note.empty() ? "" : " ") + tag + ":" + std::to_string(t.cycles) + "/" + std::to_string(c.cycles);
  }
  if (o.pass) o.note = note;
  return o;
}

Outcome builtin_reuse() {
  Outcome o;
  const std::vector<std::vector<std::uint64_t>> inputs = {{0, 0}, {5, 3}, {200, 77}, {255, 255}};
  for (const char* name : {"not8", "mov8", "and8", "or8", "xor8", "add8", "sub8", "mul8", "eq8", "lt8"}) {
    const auto c = testing::build(testing::call_twice(name));
    const auto b = spacec::find_builtin(name);
    for (const auto& in : inputs) {
      const std::vector<std::uint64_t> args(in.begin(), in.begin() + b->arity);
      const auto obs = testing::observe_calls(c, in, 1, args);
      const std::uint64_t want = spacec::interpret(c.typed, name, args).at(0);
      const std::string tag = std::string(name) + " on " + std::to_string(in[0]) + "," + std::to_string(in[1]);
      o.require(!obs.error, tag + ": machine error");
      o.require(obs.outputs == std::vector<std::uint64_t>{want, want}, tag + ": wrong outputs");
      o.require(obs.clean_on_entry == std::vector<bool>{true, true}, tag + ": dirty region on entry");
      o.require(obs.clean_after, tag + ": dirty region after return");
    }
  }
  return o;
}

Outcome round_trips() {
  Outcome o;
  std::size_t files = 0;
  for (const auto& entry : fs::directory_iterator(SYNCHRONIC_FIXTURES)) {
    const fs::path p = entry.path();
    const std::string name = p.filename().string();
    if (p.extension() == ".earth") {
      const auto first = earth::assemble(slurp(p));
      const std::string text = earth::disassemble(first.image, &first.symbols);
      const auto second = earth::assemble(text);
      o.require(second.image.words == first.image.words && second.image.entry == first.image.entry,
                name + ": disassembly does not reassemble");
      o.require(earth::disassemble(second.image, &first.symbols) == text, name + ": disassembly not a fixed point");
      ++files;
    } else if (p.extension() == ".img") {
      const vm::Image img = vm::load_image(slurp(p));
      const std::string dumped = vm::dump_image(img);
      o.require(vm::load_image(dumped) == img, name + ": load(dump) differs");
      o.require(vm::dump_image(vm::load_image(dumped)) == dumped, name + ": dump not a fixed point");
      const auto re = earth::assemble(earth::disassemble(img));
      o.require(re.image.words == img.words && re.image.entry == img.entry, name + ": earth round trip");
      ++files;
    }
  }
  o.require(files > 0, "no fixtures found");
  if (o.pass) o.note = std::to_string(files) + " fixtures";
  return o;
}

}  // namespace

int main() {
  using Criterion = std::function<Outcome()>;
  std::optional<std::pair<Outcome, Outcome>> builtin_results;
  auto builtin_pair = [&]() -> std::pair<Outcome, Outcome>& {
    if (!builtin_results) builtin_results = builtins_correct();
    return *builtin_results;
  };
  const std::vector<std::pair<const char*, Criterion>> criteria = {
      {"deterministic traces", determinism},
      {"write contention detected", write_contention},
      {"activation contention detected", activation_contention},
      {"compiled builtins match their oracles", [&] { return builtin_pair().first; }},
      {"no machine errors during verification", [&] { return builtin_pair().second; }},
      {"doubling chain tree expansion", doubling_chain},
      {"parallel activation", parallelism},
      {"tree sum beats chain sum (cycles tree/chain)", tree_beats_chain},
      {"builtin instance reusable", builtin_reuse},
      {"textual round trips", round_trips},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.note = std::string("exception: ") + e.what();
    }
    failed += !o.pass;
    std::printf("%s %zu %s%s%s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.note.empty() ? "" : ": ",
                o.note.c_str());
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
