#pragma once

#include <cstdint>
#include <string>

namespace synchronic::vm {

using Word = std::uint64_t;
using RegIndex = std::uint32_t;

inline constexpr unsigned kMaxWordWidth = 64;

/// Register array geometry and run limits.
///
/// Both sizes must be powers of two and a JMP (the widest instruction) must
/// fit one word: 2 + log2(n) + max(log2(w), log2(n)) <= w.
struct MachineConfig {
  std::uint32_t n_registers = 65536;
  std::uint32_t word_width = 64;
  std::uint64_t max_cycles = 1'000'000;
  bool guard_checks = false;

  void validate() const;  // throws Error(Stage::Usage)

  unsigned address_bits() const;
  unsigned bit_index_bits() const;
  Word word_mask() const;
};

enum class Opcode : std::uint8_t { Wr0 = 0, Wr1 = 1, Cnd = 2, Jmp = 3 };

/// Decoded primitive. For WR0/WR1/CND `a` is a register and `b` a bit index;
/// for JMP `a` is the target and `b` the inclusive activation offset.
struct Instruction {
  Opcode op = Opcode::Wr0;
  RegIndex a = 0;
  std::uint32_t b = 0;

  friend bool operator==(const Instruction&, const Instruction&) = default;
};

Instruction decode(Word word, const MachineConfig& config);

/// Inverse of decode on in-range operands; throws Error(Stage::Asm) otherwise.
Word encode(const Instruction& ins, const MachineConfig& config);

/// True when `word` is exactly the encoding of its own decoded form.
bool is_canonical(Word word, const MachineConfig& config);

/// "wr1 3.0", "cnd 4.2", "jmp 8 2".
std::string to_string(const Instruction& ins);
const char* mnemonic(Opcode op);

}  // namespace synchronic::vm
