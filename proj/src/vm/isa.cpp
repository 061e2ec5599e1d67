#include "synchronic/vm/isa.hpp"

#include <bit>

#include "synchronic/error.hpp"

namespace synchronic::vm {

namespace {

unsigned log2_exact(std::uint32_t v) { return static_cast<unsigned>(std::countr_zero(v)); }

Word field_mask(unsigned bits) { return bits >= 64 ? ~Word{0} : (Word{1} << bits) - 1; }

}  // namespace

void MachineConfig::validate() const {
  if (!std::has_single_bit(n_registers) || n_registers < 4) {
    throw Error(Stage::Usage, "n_registers must be a power of two >= 4, got " +
                                  std::to_string(n_registers));
  }
  if (!std::has_single_bit(word_width) || word_width < 8 || word_width > kMaxWordWidth) {
    throw Error(Stage::Usage, "word_width must be a power of two in [8, 64], got " +
                                  std::to_string(word_width));
  }
  const unsigned need = 2 + address_bits() + std::max(bit_index_bits(), address_bits());
  if (need > word_width) {
    throw Error(Stage::Usage, "instruction needs " + std::to_string(need) +
                                  " bits but word_width is " + std::to_string(word_width));
  }
}

unsigned MachineConfig::address_bits() const { return log2_exact(n_registers); }
unsigned MachineConfig::bit_index_bits() const { return log2_exact(word_width); }
Word MachineConfig::word_mask() const { return field_mask(word_width); }

Instruction decode(Word word, const MachineConfig& config) {
  const unsigned abits = config.address_bits();
  Instruction ins;
  ins.op = static_cast<Opcode>(word & 0x3);
  ins.a = static_cast<RegIndex>((word >> 2) & field_mask(abits));
  const unsigned bbits = ins.op == Opcode::Jmp ? abits : config.bit_index_bits();
  ins.b = static_cast<std::uint32_t>((word >> (2 + abits)) & field_mask(bbits));
  return ins;
}

Word encode(const Instruction& ins, const MachineConfig& config) {
  if (ins.a >= config.n_registers) {
    throw AsmError("register operand " + std::to_string(ins.a) + " out of range");
  }
  if (ins.op == Opcode::Jmp) {
    if (static_cast<std::uint64_t>(ins.a) + ins.b >= config.n_registers) {
      throw AsmError("jump fan-out " + std::to_string(ins.a) + "+" + std::to_string(ins.b) +
                     " exceeds the register array");
    }
  } else if (ins.b >= config.word_width) {
    throw AsmError("bit operand " + std::to_string(ins.b) + " out of range");
  }
  const unsigned abits = config.address_bits();
  return static_cast<Word>(ins.op) | (Word{ins.a} << 2) | (Word{ins.b} << (2 + abits));
}

bool is_canonical(Word word, const MachineConfig& config) {
  const Instruction ins = decode(word, config);
  if (ins.op == Opcode::Jmp && static_cast<std::uint64_t>(ins.a) + ins.b >= config.n_registers) {
    return false;
  }
  return encode(ins, config) == word;
}

const char* mnemonic(Opcode op) {
  switch (op) {
    case Opcode::Wr0: return "wr0";
    case Opcode::Wr1: return "wr1";
    case Opcode::Cnd: return "cnd";
    case Opcode::Jmp: return "jmp";
  }
  return "?";
}

std::string to_string(const Instruction& ins) {
  std::string out = mnemonic(ins.op);
  out += ' ';
  out += std::to_string(ins.a);
  out += ins.op == Opcode::Jmp ? ' ' : '.';
  out += std::to_string(ins.b);
  return out;
}

}  // namespace synchronic::vm
