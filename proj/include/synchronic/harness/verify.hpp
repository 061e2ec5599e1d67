#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "synchronic/spacec/compiler.hpp"
#include "synchronic/vm/image.hpp"
#include "synchronic/vm/machine.hpp"

namespace synchronic::harness {

using Values = std::vector<std::uint64_t>;
using Oracle = std::function<Values(std::span<const std::uint64_t>)>;

/// Compiled module interface: where inputs are loaded and outputs read.
struct Signature {
  std::vector<spacec::Port> inputs;
  std::vector<spacec::Port> outputs;

  unsigned input_bits() const;
};

struct VerifyOptions {
  unsigned exhaustive_bits = 16;        // budget for exhaustive enumeration
  std::optional<std::uint64_t> samples; // forces sampling when set
  std::uint64_t default_samples = 1000;
  std::uint64_t seed = 1;
  std::size_t max_reported = 8;
};

struct CaseOutcome {
  Values inputs;
  Values expected;
  Values actual;
  std::optional<vm::MachineError> error;
  std::uint64_t cycles = 0;
  std::size_t peak_active = 0;

  bool ok() const { return !error && expected == actual; }
};

struct VerifyReport {
  bool sampled = false;
  std::uint64_t cases = 0;
  std::uint64_t passed = 0;
  std::uint64_t machine_errors = 0;
  std::vector<CaseOutcome> failures;  // first max_reported, in input order
  std::uint64_t min_cycles = 0;
  std::uint64_t max_cycles = 0;
  double mean_cycles = 0;
  std::size_t peak_active = 0;

  bool ok() const { return cases > 0 && passed == cases; }
  /// "256/256 ok (exhaustive) cycles min=.. mean=.. max=.. peak=.." plus one
  /// line per reported failure.
  std::string summary() const;
};

/// Loads `inputs` into a reset machine, runs it, and reads the outputs.
CaseOutcome run_case(vm::Machine& machine, const Signature& sig, std::span<const std::uint64_t> inputs);

/// Exhaustive when the signature's input bits fit the budget and no sample
/// count is forced; otherwise seeded random sampling. Cases run on
/// per-thread machines and are aggregated in input order.
VerifyReport verify(const vm::Image& image, const Signature& sig, const Oracle& oracle,
                    const VerifyOptions& options, const vm::MachineConfig& config);

/// Single-threaded reference of `verify`.
VerifyReport verify_serial(const vm::Image& image, const Signature& sig, const Oracle& oracle,
                           const VerifyOptions& options, const vm::MachineConfig& config);

}  // namespace synchronic::harness
