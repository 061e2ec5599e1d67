#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "synchronic/earth/assembler.hpp"
#include "synchronic/spacec/typecheck.hpp"
#include "synchronic/vm/image.hpp"
#include "synchronic/vm/isa.hpp"

namespace synchronic::spacec {

// ---------------------------------------------------------------------------
// Symbolic code

/// Operand of an IR instruction, resolved to a register at link time.
struct Ref {
  enum class Kind : std::uint8_t { Sink, Next, Code, Data };
  Kind kind = Kind::Sink;
  std::size_t instance = 0;
  std::uint32_t index = 0;  // label for Code, slot for Data

  static Ref sink() { return {}; }
  static Ref next() { return {Kind::Next, 0, 0}; }
  static Ref code(std::size_t inst, std::uint32_t label) { return {Kind::Code, inst, label}; }
  static Ref data(std::size_t inst, std::uint32_t slot) { return {Kind::Data, inst, slot}; }

  friend bool operator==(const Ref&, const Ref&) = default;
};

struct IrInstr {
  vm::Opcode op = vm::Opcode::Jmp;
  Ref a;
  std::uint32_t b = 0;
};

/// Module instance: one per call site. Its region is code followed by data
/// slots; slot 0 is the completion flag and label 0 the entry.
struct Instance {
  std::string name;    // "main", "main/add4@1"
  std::string module;
  std::size_t parent = 0;  // own index for the top instance
  std::vector<IrInstr> code;
  std::vector<std::size_t> labels;  // label -> code position
  std::vector<std::string> slot_names;
  std::vector<unsigned> slot_widths;
  std::size_t port_count = 0;   // ins and outs follow the done flag
  std::size_t var_count = 0;    // ports and locals
  std::optional<std::uint64_t> cycles;  // entry to the completion-flag write

  std::size_t size() const { return code.size() + slot_names.size(); }
};

enum class JoinStrategy { None, CycleBalanced, FlagPolled };
std::string_view join_name(JoinStrategy join);

struct StatementSchedule {
  std::string module;
  std::size_t line = 0;
  std::string kind;  // call, par, seq, if, repeat, interstring
  std::optional<std::uint64_t> cycles;
  JoinStrategy join = JoinStrategy::None;
};

struct ScheduleInfo {
  std::vector<StatementSchedule> statements;
  std::vector<std::pair<std::string, std::optional<std::uint64_t>>> modules;  // entry to done write
};

struct Lowered {
  std::vector<Instance> instances;  // preorder; [0] is the top
  ScheduleInfo schedule;
  /// Instances live at the same time in different `par` branches.
  std::vector<std::pair<std::size_t, std::size_t>> exclusive;
};

/// Lowers `top` (a user module or a builtin name) and all its callees.
Lowered lower(TypedProgram& program, std::string_view top);

// ---------------------------------------------------------------------------
// Allocation and linking

struct InstanceRegion {
  std::string name;
  vm::RegIndex start = 0;
  vm::RegIndex data = 0;  // first data slot (the completion flag)
  vm::RegIndex end = 0;   // one past the last slot
};

struct DisjointFact {
  std::size_t first = 0;
  std::size_t second = 0;
};

struct AllocationMap {
  std::vector<InstanceRegion> regions;  // parallel to Lowered::instances
  std::vector<DisjointFact> facts;
  vm::RegIndex free_start = 1;  // first register of the remaining free block
  vm::RegIndex free_end = 0;

  vm::RegIndex slot(std::size_t instance, std::size_t slot) const {
    return regions[instance].data + static_cast<vm::RegIndex>(slot);
  }
};

/// Deterministic first-fit from register 1. Throws AllocError when the
/// machine is too small.
AllocationMap allocate(const Lowered& lowered, const vm::MachineConfig& config);

struct Port {
  std::string name;
  unsigned width = 0;
  vm::RegIndex reg = 0;
};

struct CompileResult {
  vm::Image image;
  earth::SymbolMap symbols;
  ScheduleInfo schedule;
  AllocationMap allocation;
  Lowered lowered;
  std::vector<Port> inputs;
  std::vector<Port> outputs;
  vm::RegIndex done = 0;
};

/// Resolves symbolic code against `alloc` into an image whose entry is the
/// top instance; every data slot is in the image's guard set.
CompileResult codegen(Lowered lowered, const AllocationMap& alloc, const vm::MachineConfig& config);

struct CompileOptions {
  vm::MachineConfig config;
  std::string module;  // top; empty selects the last module in the source
};

/// parse, typecheck, lower, allocate, codegen.
CompileResult compile(std::string_view source, const CompileOptions& options);

/// Text report: module and statement cycle counts, joins, disjointness facts.
std::string format_schedule(const CompileResult& result);

}  // namespace synchronic::spacec
