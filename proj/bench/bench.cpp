#include <benchmark/benchmark.h>

#include "support/space_programs.hpp"
#include "synchronic/harness/verify.hpp"
#include "synchronic/vm/machine.hpp"

using namespace synchronic;

namespace {

// A wide program: many threads per cycle is where phase-1 parallelism shows.
const testing::Compiled& wide_program() {
  static const testing::Compiled c = testing::build(testing::par_units(32), "main");
  return c;
}

template <bool Reference>
void BM_Step(benchmark::State& state) {
  const auto& c = wide_program();
  std::uint64_t cycles = 0;
  for (auto _ : state) {
    vm::MachineState st = vm::make_state(c.result.image, c.config);
    while (st.status == vm::Status::Running) {
      if constexpr (Reference) {
        vm::step_reference(st, c.config, &c.result.image.data);
      } else {
        vm::step(st, c.config, &c.result.image.data);
      }
    }
    cycles += st.cycle;
    benchmark::DoNotOptimize(st.registers.data());
  }
  state.counters["cycles/s"] = benchmark::Counter(static_cast<double>(cycles), benchmark::Counter::kIsRate);
}

template <bool Serial>
void BM_Verify(benchmark::State& state) {
  static const testing::Compiled c = testing::build("", "add8");
  harness::VerifyOptions opt;
  opt.samples = static_cast<std::uint64_t>(state.range(0));
  const auto oracle = [](std::span<const std::uint64_t> in) { return harness::Values{(in[0] + in[1]) & 0xff}; };
  for (auto _ : state) {
    const auto report = Serial ? harness::verify_serial(c.result.image, c.signature(), oracle, opt, c.config)
                               : harness::verify(c.result.image, c.signature(), oracle, opt, c.config);
    if (!report.ok()) state.SkipWithError("verification failed");
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_Step<false>)->Name("step/parallel");
BENCHMARK(BM_Step<true>)->Name("step/reference");
BENCHMARK(BM_Verify<false>)->Name("verify/parallel")->Arg(2000);
BENCHMARK(BM_Verify<true>)->Name("verify/serial")->Arg(2000);

BENCHMARK_MAIN();
