#include "synchronic/harness/verify.hpp"

#include <algorithm>
#include <cstdio>
#include <random>

#include "synchronic/error.hpp"

namespace synchronic::harness {

namespace {

std::uint64_t mask(unsigned width) { return width >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << width) - 1; }

struct Plan {
  bool sampled = false;
  std::uint64_t count = 0;
  std::vector<Values> samples;
};

Values exhaustive_case(const Signature& sig, std::uint64_t index) {
  Values v;
  for (const spacec::Port& p : sig.inputs) {
    v.push_back(index & mask(p.width));
    index = p.width >= 64 ? 0 : index >> p.width;
  }
  return v;
}

Plan plan(const Signature& sig, const VerifyOptions& options) {
  Plan p;
  const unsigned bits = sig.input_bits();
  if (!options.samples && bits <= options.exhaustive_bits && bits < 64) {
    p.count = std::uint64_t{1} << bits;
    return p;
  }
  p.sampled = true;
  p.count = options.samples.value_or(options.default_samples);
  std::mt19937_64 rng(options.seed);
  p.samples.reserve(p.count);
  for (std::uint64_t i = 0; i < p.count; ++i) {
    Values v;
    for (const spacec::Port& port : sig.inputs) v.push_back(rng() & mask(port.width));
    p.samples.push_back(std::move(v));
  }
  return p;
}

CaseOutcome run_one(vm::Machine& machine, const Signature& sig, const Oracle& oracle, Values inputs) {
  CaseOutcome c = run_case(machine, sig, inputs);
  c.expected = oracle(inputs);
  return c;
}

VerifyReport aggregate(const Plan& p, std::vector<CaseOutcome>& outcomes, const VerifyOptions& options) {
  VerifyReport r;
  r.sampled = p.sampled;
  r.cases = outcomes.size();
  std::uint64_t total = 0;
  bool first = true;
  for (CaseOutcome& c : outcomes) {
    if (c.ok()) {
      ++r.passed;
    } else if (r.failures.size() < options.max_reported) {
      r.failures.push_back(c);
    }
    r.machine_errors += c.error.has_value();
    r.peak_active = std::max(r.peak_active, c.peak_active);
    if (!c.error) {
      r.min_cycles = first ? c.cycles : std::min(r.min_cycles, c.cycles);
      r.max_cycles = std::max(r.max_cycles, c.cycles);
      total += c.cycles;
      first = false;
    }
  }
  const std::uint64_t clean = r.cases - r.machine_errors;
  r.mean_cycles = clean ? static_cast<double>(total) / static_cast<double>(clean) : 0.0;
  return r;
}

}  // namespace

unsigned Signature::input_bits() const {
  unsigned bits = 0;
  for (const spacec::Port& p : inputs) bits += p.width;
  return bits;
}

CaseOutcome run_case(vm::Machine& machine, const Signature& sig, std::span<const std::uint64_t> inputs) {
  if (inputs.size() != sig.inputs.size()) throw Error(Stage::Verify, "input count does not match the signature");
  machine.reset();
  vm::MachineState& st = machine.state();
  for (std::size_t i = 0; i < inputs.size(); ++i) st.registers[sig.inputs[i].reg] = inputs[i] & mask(sig.inputs[i].width);
  CaseOutcome c;
  c.inputs.assign(inputs.begin(), inputs.end());
  c.cycles = machine.run();
  c.peak_active = machine.peak_active();
  c.error = st.error;
  for (const spacec::Port& p : sig.outputs) c.actual.push_back(st.registers[p.reg] & mask(p.width));
  return c;
}

VerifyReport verify(const vm::Image& image, const Signature& sig, const Oracle& oracle, const VerifyOptions& options,
                    const vm::MachineConfig& config) {
  const Plan p = plan(sig, options);
  std::vector<CaseOutcome> outcomes(p.count);
  const auto n = static_cast<std::int64_t>(p.count);
#pragma omp parallel
  {
    vm::Machine machine(image, config);
#pragma omp for schedule(dynamic, 64)
    for (std::int64_t i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(i);
      outcomes[k] = run_one(machine, sig, oracle, p.sampled ? p.samples[k] : exhaustive_case(sig, k));
    }
  }
  return aggregate(p, outcomes, options);
}

VerifyReport verify_serial(const vm::Image& image, const Signature& sig, const Oracle& oracle,
                           const VerifyOptions& options, const vm::MachineConfig& config) {
  const Plan p = plan(sig, options);
  std::vector<CaseOutcome> outcomes(p.count);
  vm::Machine machine(image, config);
  for (std::uint64_t i = 0; i < p.count; ++i) {
    outcomes[i] = run_one(machine, sig, oracle, p.sampled ? p.samples[i] : exhaustive_case(sig, i));
  }
  return aggregate(p, outcomes, options);
}

std::string VerifyReport::summary() const {
  char stats[160];
  std::snprintf(stats, sizeof stats, " cycles min=%llu mean=%.1f max=%llu peak_active=%zu",
                static_cast<unsigned long long>(min_cycles), mean_cycles,
                static_cast<unsigned long long>(max_cycles), peak_active);
  std::string out = std::to_string(passed) + "/" + std::to_string(cases) + " ok (" +
                    (sampled ? "sampled " + std::to_string(cases) + " cases" : std::string("exhaustive")) + ")" +
                    stats + "\n";
  for (const CaseOutcome& c : failures) {
    out += "mismatch inputs=[";
    for (std::size_t i = 0; i < c.inputs.size(); ++i) out += (i ? "," : "") + std::to_string(c.inputs[i]);
    out += "] expected=[";
    for (std::size_t i = 0; i < c.expected.size(); ++i) out += (i ? "," : "") + std::to_string(c.expected[i]);
    out += "] actual=[";
    for (std::size_t i = 0; i < c.actual.size(); ++i) out += (i ? "," : "") + std::to_string(c.actual[i]);
    out += "]";
    if (c.error) out += " machine error " + vm::to_string(*c.error);
    out += "\n";
  }
  return out;
}

}  // namespace synchronic::harness
