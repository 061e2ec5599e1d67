#pragma once

#include <random>

#include "synchronic/vm/image.hpp"

namespace synchronic::testing {

/// Random valid image: every register holds a random in-range instruction
/// and 1..3 distinct entry registers are chosen. Runs may halt, error or loop.
inline vm::Image random_image(std::mt19937_64& rng, std::uint32_t n = 64, std::uint32_t w = 16) {
  vm::Image img;
  img.n_registers = n;
  img.word_width = w;
  vm::MachineConfig cfg;
  cfg.n_registers = n;
  cfg.word_width = w;
  std::uniform_int_distribution<std::uint32_t> reg(1, n - 1);
  std::uniform_int_distribution<std::uint32_t> bit(0, w - 1);
  std::uniform_int_distribution<int> op(0, 3);
  std::uniform_int_distribution<std::uint32_t> small(0, 3);
  for (std::uint32_t r = 1; r < n; ++r) {
    vm::Instruction ins;
    ins.op = static_cast<vm::Opcode>(op(rng));
    if (ins.op == vm::Opcode::Jmp) {
      ins.a = rng() % 5 == 0 ? 0 : reg(rng);
      ins.b = std::min<std::uint32_t>(small(rng), n - 1 - ins.a);
    } else {
      ins.a = reg(rng);
      ins.b = bit(rng);
    }
    img.words[r] = vm::encode(ins, cfg);
  }
  const std::uint32_t entries = 1 + rng() % 3;
  while (img.entry.size() < entries) {
    const auto r = reg(rng);
    if (std::find(img.entry.begin(), img.entry.end(), r) == img.entry.end()) img.entry.push_back(r);
  }
  std::sort(img.entry.begin(), img.entry.end());
  return img;
}

}  // namespace synchronic::testing
