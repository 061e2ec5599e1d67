#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "synchronic/vm/isa.hpp"

namespace synchronic::vm {

/// Initial machine contents: sparse register words (absent = zero), the
/// entry activation set and the guard map of data-marked registers.
struct Image {
  std::uint32_t n_registers = 65536;
  std::uint32_t word_width = 64;
  std::map<RegIndex, Word> words;
  std::vector<RegIndex> entry;
  std::set<RegIndex> data;

  /// Config with this image's geometry and the limits of `base`.
  MachineConfig config_from(const MachineConfig& base) const;

  /// One past the highest defined or entry register (0 for an empty image).
  RegIndex footprint() const;

  friend bool operator==(const Image&, const Image&) = default;
};

/// Parses the line-oriented image format. The geometry comes from the
/// optional `config n=.. w=..` header, else from `defaults`.
Image load_image(std::string_view text, const MachineConfig& defaults = {});

/// Emits the image format; `load_image(dump_image(img))` is the identity.
std::string dump_image(const Image& image);

/// "reg 3 = wr1 1.0" style right-hand side for a register word.
std::string describe_word(Word word, bool is_data, const MachineConfig& config);

}  // namespace synchronic::vm
