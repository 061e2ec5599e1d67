#include "synchronic/vm/machine.hpp"

#include <algorithm>
#include <sstream>

#include "synchronic/error.hpp"

namespace synchronic::vm {

const char* kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::WriteContention: return "WriteContention";
    case ErrorKind::ActivationContention: return "ActivationContention";
    case ErrorKind::AddressOverflow: return "AddressOverflow";
    case ErrorKind::DataExecution: return "DataExecution";
    case ErrorKind::CycleLimitExceeded: return "CycleLimitExceeded";
  }
  return "?";
}

std::string to_string(const MachineError& error) {
  std::string out = kind_name(error.kind);
  switch (error.kind) {
    case ErrorKind::WriteContention:
      out += "(" + std::to_string(error.reg) + "," + std::to_string(error.bit) + ")";
      break;
    case ErrorKind::CycleLimitExceeded:
      break;
    default:
      out += "(" + std::to_string(error.reg) + ")";
  }
  return out + " at cycle " + std::to_string(error.cycle);
}

MachineState make_state(const Image& image, const MachineConfig& config) {
  config.validate();
  if (image.n_registers != config.n_registers || image.word_width != config.word_width) {
    throw Error(Stage::Usage, "image geometry n=" + std::to_string(image.n_registers) +
                                  " w=" + std::to_string(image.word_width) +
                                  " does not match the machine configuration");
  }
  MachineState state;
  state.registers.assign(config.n_registers, 0);
  for (const auto& [r, w] : image.words) state.registers[r] = w & config.word_mask();
  state.active = image.entry;
  std::sort(state.active.begin(), state.active.end());
  state.status = state.active.empty() ? Status::Halted : Status::Running;
  if (!state.active.empty()) state.touched_high = state.active.back() + 1;
  return state;
}

namespace detail {

/// Phase-1 result of one active register. Successors are always a contiguous
/// range [succ_first, succ_first + succ_count).
struct Request {
  RegIndex reg = 0;
  bool writes = false;
  WriteRecord write;
  RegIndex succ_first = 0;
  std::uint32_t succ_count = 0;
  std::optional<ErrorKind> fault;
};

inline Request evaluate(RegIndex r, const std::vector<Word>& regs, const MachineConfig& config,
                        const GuardMap* guard) {
  Request req;
  req.reg = r;
  if (guard != nullptr && guard->count(r) != 0) {
    req.fault = ErrorKind::DataExecution;
    return req;
  }
  const Instruction ins = decode(regs[r], config);
  const std::uint64_t n = config.n_registers;
  std::uint64_t first = r + 1;
  std::uint64_t count = 1;
  switch (ins.op) {
    case Opcode::Wr0:
    case Opcode::Wr1:
      req.writes = true;
      req.write = WriteRecord{ins.a, ins.b, ins.op == Opcode::Wr1};
      break;
    case Opcode::Cnd:
      if ((regs[ins.a] >> ins.b) & 1U) first = r + 2;
      break;
    case Opcode::Jmp:
      first = ins.a;
      count = std::uint64_t{ins.b} + 1;
      break;
  }
  if (ins.a >= n || (ins.op != Opcode::Jmp && ins.b >= config.word_width) ||
      first + count - 1 >= n) {
    req.fault = ErrorKind::AddressOverflow;
    return req;
  }
  req.succ_first = static_cast<RegIndex>(first);
  req.succ_count = static_cast<std::uint32_t>(count);
  return req;
}

void fail(MachineState& state, ErrorKind kind, RegIndex reg, std::uint32_t bit = 0) {
  state.status = Status::Errored;
  state.error = MachineError{kind, reg, bit, state.cycle};
}

/// Phase 2: error detection in a fixed order (per-register faults by index,
/// then write contention, then activation contention), then commit.
void commit(MachineState& state, std::vector<Request>& requests, TraceRecord* record) {
  for (const Request& req : requests) {
    if (req.fault) {
      fail(state, *req.fault, req.reg);
      return;
    }
  }

  std::vector<WriteRecord> writes;
  writes.reserve(requests.size());
  for (const Request& req : requests) {
    if (req.writes) writes.push_back(req.write);
  }
  std::sort(writes.begin(), writes.end());
  for (std::size_t i = 1; i < writes.size(); ++i) {
    if (writes[i].reg == writes[i - 1].reg && writes[i].bit == writes[i - 1].bit) {
      fail(state, ErrorKind::WriteContention, writes[i].reg, writes[i].bit);
      return;
    }
  }

  // Successor ranges with the sink dropped.
  std::vector<std::pair<RegIndex, RegIndex>> ranges;  // inclusive [first, last]
  ranges.reserve(requests.size());
  for (const Request& req : requests) {
    RegIndex first = req.succ_first;
    const RegIndex last = req.succ_first + req.succ_count - 1;
    if (first == 0) {
      if (last == 0) continue;
      first = 1;
    }
    ranges.emplace_back(first, last);
  }
  std::sort(ranges.begin(), ranges.end());
  std::size_t total = 0;
  for (std::size_t i = 0; i < ranges.size(); ++i) {
    if (i > 0 && ranges[i].first <= ranges[i - 1].second) {
      fail(state, ErrorKind::ActivationContention, ranges[i].first);
      return;
    }
    total += ranges[i].second - ranges[i].first + 1;
  }
  // Ranges are disjoint and sorted by start, so a running max is unnecessary.

  std::vector<RegIndex> next;
  next.reserve(total);
  for (const auto& [first, last] : ranges) {
    for (std::uint64_t r = first; r <= last; ++r) next.push_back(static_cast<RegIndex>(r));
  }

  if (!writes.empty()) state.touched_high = std::max(state.touched_high, writes.back().reg + 1);
  if (!next.empty()) state.touched_high = std::max(state.touched_high, next.back() + 1);
  for (const WriteRecord& w : writes) {
    const Word mask = Word{1} << w.bit;
    if (w.value) {
      state.registers[w.reg] |= mask;
    } else {
      state.registers[w.reg] &= ~mask;
    }
  }

  if (record != nullptr) {
    record->cycle = state.cycle;
    record->active = state.active;
    record->writes = writes;
    record->next = next;
  }
  state.active = std::move(next);
  ++state.cycle;
  if (state.active.empty()) state.status = Status::Halted;
}

constexpr std::size_t kParallelThreshold = 256;

}  // namespace detail

void step_reference(MachineState& state, const MachineConfig& config, const GuardMap* guard,
                    TraceRecord* record) {
  if (state.status != Status::Running) return;
  std::vector<detail::Request> requests(state.active.size());
  for (std::size_t i = 0; i < state.active.size(); ++i) {
    requests[i] = detail::evaluate(state.active[i], state.registers, config, guard);
  }
  detail::commit(state, requests, record);
}

void step(MachineState& state, const MachineConfig& config, const GuardMap* guard,
          TraceRecord* record) {
  if (state.status != Status::Running) return;
  const std::size_t count = state.active.size();
  std::vector<detail::Request> requests(count);
  const auto& active = state.active;
  const auto& regs = state.registers;
#pragma omp parallel for schedule(static) if (count >= detail::kParallelThreshold)
  for (std::size_t i = 0; i < count; ++i) {
    requests[i] = detail::evaluate(active[i], regs, config, guard);
  }
  detail::commit(state, requests, record);
}

RunResult run(MachineState state, const MachineConfig& config, const GuardMap* guard, bool trace) {
  RunResult result;
  while (state.status == Status::Running) {
    if (state.cycle >= config.max_cycles) {
      state.status = Status::Errored;
      state.error = MachineError{ErrorKind::CycleLimitExceeded, 0, 0, state.cycle};
      break;
    }
    const std::size_t width = state.active.size();
    TraceRecord record;
    step(state, config, guard, trace ? &record : nullptr);
    if (state.status == Status::Errored) break;
    result.peak_active = std::max(result.peak_active, width);
    result.total_active += width;
    if (trace) result.trace.push_back(std::move(record));
  }
  result.cycles = state.cycle;
  result.state = std::move(state);
  return result;
}

RunResult run(const Image& image, const MachineConfig& config, bool trace) {
  const GuardMap* guard = config.guard_checks ? &image.data : nullptr;
  return run(make_state(image, config), config, guard, trace);
}

Machine::Machine(const Image& image, const MachineConfig& config)
    : image_(&image), config_(config), state_(make_state(image, config)) {}

void Machine::reset() {
  // Outside the image footprint only registers below touched_high can be dirty.
  const RegIndex high = std::max(image_->footprint(), state_.touched_high);
  std::fill(state_.registers.begin(), state_.registers.begin() + high, 0);
  for (const auto& [r, w] : image_->words) state_.registers[r] = w & config_.word_mask();
  state_.active = image_->entry;
  std::sort(state_.active.begin(), state_.active.end());
  state_.cycle = 0;
  state_.touched_high = state_.active.empty() ? 0 : state_.active.back() + 1;
  state_.error.reset();
  state_.status = state_.active.empty() ? Status::Halted : Status::Running;
  peak_active_ = 0;
}

std::uint64_t Machine::run() {
  const GuardMap* guard = config_.guard_checks ? &image_->data : nullptr;
  while (state_.status == Status::Running) {
    if (state_.cycle >= config_.max_cycles) {
      state_.status = Status::Errored;
      state_.error = MachineError{ErrorKind::CycleLimitExceeded, 0, 0, state_.cycle};
      break;
    }
    const std::size_t width = state_.active.size();
    step(state_, config_, guard);
    if (state_.status != Status::Errored) peak_active_ = std::max(peak_active_, width);
  }
  return state_.cycle;
}

std::vector<Word> replay(const Image& image, const MachineConfig& config,
                         const std::vector<TraceRecord>& trace) {
  std::vector<Word> regs = make_state(image, config).registers;
  for (const TraceRecord& rec : trace) {
    for (const WriteRecord& w : rec.writes) {
      const Word mask = Word{1} << w.bit;
      regs[w.reg] = w.value ? (regs[w.reg] | mask) : (regs[w.reg] & ~mask);
    }
  }
  return regs;
}

std::string dump_state(const MachineState& state, const MachineConfig& config,
                       const GuardMap& guard) {
  std::ostringstream out;
  out << "# cycle " << state.cycle << '\n';
  out << "# status "
      << (state.status == Status::Running ? "running"
          : state.status == Status::Halted ? "halted"
                                           : "errored");
  if (state.error) out << ' ' << to_string(*state.error);
  out << '\n';
  out << "config n=" << config.n_registers << " w=" << config.word_width << '\n';
  out << "entry";
  for (RegIndex r : state.active) out << ' ' << r;
  out << '\n';
  for (std::size_t r = 0; r < state.registers.size(); ++r) {
    const Word word = state.registers[r];
    const bool is_data = guard.count(static_cast<RegIndex>(r)) != 0;
    if (word == 0 && !is_data) continue;
    out << "reg " << r << " = " << describe_word(word, is_data, config) << '\n';
  }
  return out.str();
}

}  // namespace synchronic::vm
