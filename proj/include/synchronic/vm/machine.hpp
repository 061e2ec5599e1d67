#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "synchronic/vm/image.hpp"
#include "synchronic/vm/isa.hpp"

namespace synchronic::vm {

enum class ErrorKind {
  WriteContention,
  ActivationContention,
  AddressOverflow,
  DataExecution,
  CycleLimitExceeded,
};

struct MachineError {
  ErrorKind kind = ErrorKind::WriteContention;
  RegIndex reg = 0;
  std::uint32_t bit = 0;  // meaningful for WriteContention only
  std::uint64_t cycle = 0;

  friend bool operator==(const MachineError&, const MachineError&) = default;
};

const char* kind_name(ErrorKind kind);

/// "WriteContention(2,0) at cycle 0", "ActivationContention(8) at cycle 3".
std::string to_string(const MachineError& error);

enum class Status { Running, Halted, Errored };

struct MachineState {
  std::vector<Word> registers;
  std::vector<RegIndex> active;  // sorted, no duplicates, never contains 0
  std::uint64_t cycle = 0;
  Status status = Status::Running;
  std::optional<MachineError> error;
  RegIndex touched_high = 0;  // one past the highest register written or activated

  friend bool operator==(const MachineState&, const MachineState&) = default;
};

struct WriteRecord {
  RegIndex reg = 0;
  std::uint32_t bit = 0;
  bool value = false;

  friend auto operator<=>(const WriteRecord&, const WriteRecord&) = default;
};

struct TraceRecord {
  std::uint64_t cycle = 0;
  std::vector<RegIndex> active;
  std::vector<WriteRecord> writes;  // sorted by (reg, bit)
  std::vector<RegIndex> next;

  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

/// Registers whose activation is a DataExecution error when guard checks are on.
using GuardMap = std::set<RegIndex>;

MachineState make_state(const Image& image, const MachineConfig& config);

/// One synchronous cycle: every active register decodes its start-of-cycle
/// word (phase 1, read-only, run in parallel for wide activation sets), then
/// writes and the next activation set are committed together (phase 2).
/// On error the state is left at the failing cycle with status Errored and no
/// write of that cycle applied.
void step(MachineState& state, const MachineConfig& config, const GuardMap* guard = nullptr,
          TraceRecord* record = nullptr);

/// Serial phase 1. Observationally identical to `step`; kept as the reference.
void step_reference(MachineState& state, const MachineConfig& config,
                    const GuardMap* guard = nullptr, TraceRecord* record = nullptr);

struct RunResult {
  MachineState state;
  std::uint64_t cycles = 0;
  std::size_t peak_active = 0;
  std::uint64_t total_active = 0;  // sum of |active| over executed cycles
  std::vector<TraceRecord> trace;
};

/// Steps until Halted, Errored or `config.max_cycles` (CycleLimitExceeded).
RunResult run(const Image& image, const MachineConfig& config, bool trace = false);
RunResult run(MachineState state, const MachineConfig& config, const GuardMap* guard,
              bool trace = false);

/// Reusable machine for many runs of one image: `reset` restores only the
/// image footprint and the registers written since the last reset.
class Machine {
 public:
  Machine(const Image& image, const MachineConfig& config);

  void reset();
  MachineState& state() { return state_; }
  const MachineState& state() const { return state_; }

  /// Runs to completion; returns cycles executed and records peak activation.
  std::uint64_t run();
  std::size_t peak_active() const { return peak_active_; }

 private:
  const Image* image_;
  MachineConfig config_;
  MachineState state_;
  std::size_t peak_active_ = 0;
};

/// Applies the committed writes of `trace` to the image's initial registers.
std::vector<Word> replay(const Image& image, const MachineConfig& config,
                         const std::vector<TraceRecord>& trace);

/// Image-format text of a state: registers, the current activation set as the
/// entry line, and cycle/status as comments.
std::string dump_state(const MachineState& state, const MachineConfig& config,
                       const GuardMap& guard = {});

}  // namespace synchronic::vm
