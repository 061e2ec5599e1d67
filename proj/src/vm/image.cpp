#include "synchronic/vm/image.hpp"

#include <algorithm>
#include <sstream>

#include "synchronic/error.hpp"
#include "synchronic/util/text.hpp"

namespace synchronic::vm {

MachineConfig Image::config_from(const MachineConfig& base) const {
  MachineConfig config = base;
  config.n_registers = n_registers;
  config.word_width = word_width;
  return config;
}

RegIndex Image::footprint() const {
  RegIndex top = 0;
  if (!words.empty()) top = std::max(top, words.rbegin()->first + 1);
  if (!data.empty()) top = std::max(top, *data.rbegin() + 1);
  for (RegIndex r : entry) top = std::max(top, r + 1);
  return top;
}

namespace {

std::uint64_t need_uint(std::string_view tok, std::size_t line, const char* what) {
  const auto v = text::parse_uint(tok);
  if (!v) throw ParseError(std::string("expected ") + what + ", got '" + std::string(tok) + "'", line);
  return *v;
}

std::pair<std::uint64_t, std::uint64_t> split_dot(std::string_view tok, std::size_t line) {
  const std::size_t dot = tok.find('.');
  if (dot == std::string_view::npos) {
    throw ParseError("expected <register>.<bit>, got '" + std::string(tok) + "'", line);
  }
  return {need_uint(tok.substr(0, dot), line, "register"),
          need_uint(tok.substr(dot + 1), line, "bit index")};
}

// "n=16" -> 16
std::uint64_t keyed(std::string_view tok, std::string_view key, std::size_t line) {
  if (tok.size() <= key.size() + 1 || tok.substr(0, key.size()) != key || tok[key.size()] != '=') {
    throw ParseError("expected " + std::string(key) + "=<int>, got '" + std::string(tok) + "'", line);
  }
  return need_uint(tok.substr(key.size() + 1), line, "integer");
}

}  // namespace

Image load_image(std::string_view source, const MachineConfig& defaults) {
  Image image;
  image.n_registers = defaults.n_registers;
  image.word_width = defaults.word_width;
  MachineConfig config = image.config_from(defaults);
  bool have_entry = false;
  bool have_reg = false;
  std::set<RegIndex> entry_seen;

  for (const text::Line& line : text::logical_lines(source)) {
    const auto toks = text::split_ws(line.body);
    const std::string_view head = toks[0];
    if (head == "config") {
      if (have_reg || have_entry) throw ParseError("config header must come first", line.number);
      if (toks.size() != 3) throw ParseError("expected 'config n=<int> w=<int>'", line.number);
      config.n_registers = static_cast<std::uint32_t>(keyed(toks[1], "n", line.number));
      config.word_width = static_cast<std::uint32_t>(keyed(toks[2], "w", line.number));
      try {
        config.validate();
      } catch (const Error& e) {
        throw ParseError(e.detail(), line.number);
      }
      image.n_registers = config.n_registers;
      image.word_width = config.word_width;
    } else if (head == "entry") {
      have_entry = true;
      for (std::size_t i = 1; i < toks.size(); ++i) {
        const auto idx = need_uint(toks[i], line.number, "register index");
        if (idx == 0) throw ParseError("register 0 is the sink and cannot be an entry", line.number);
        if (idx >= config.n_registers) {
          throw ParseError("entry index " + std::to_string(idx) + " out of range", line.number);
        }
        if (!entry_seen.insert(static_cast<RegIndex>(idx)).second) {
          throw ParseError("duplicate entry " + std::to_string(idx), line.number);
        }
      }
    } else if (head == "reg") {
      have_reg = true;
      if (toks.size() < 4 || toks[2] != "=") {
        throw ParseError("expected 'reg <idx> = <instruction>'", line.number);
      }
      const auto idx = need_uint(toks[1], line.number, "register index");
      if (idx >= config.n_registers) {
        throw ParseError("register index " + std::to_string(idx) + " out of range", line.number);
      }
      const auto reg = static_cast<RegIndex>(idx);
      if (image.words.count(reg) || image.data.count(reg)) {
        throw ParseError("duplicate definition of register " + std::to_string(idx), line.number);
      }
      const std::string_view op = toks[3];
      Word word = 0;
      try {
        if (op == "data") {
          if (toks.size() != 5) throw ParseError("expected 'data <uint>'", line.number);
          word = need_uint(toks[4], line.number, "data literal");
          if ((word & ~config.word_mask()) != 0) {
            throw ParseError("data literal wider than the word", line.number);
          }
          image.data.insert(reg);
        } else if (op == "jmp") {
          if (toks.size() != 6) throw ParseError("expected 'jmp <target> <offset>'", line.number);
          Instruction ins{Opcode::Jmp, static_cast<RegIndex>(need_uint(toks[4], line.number, "target")),
                          static_cast<std::uint32_t>(need_uint(toks[5], line.number, "offset"))};
          word = encode(ins, config);
        } else if (op == "wr0" || op == "wr1" || op == "cnd") {
          if (toks.size() != 5) throw ParseError("expected '" + std::string(op) + " <reg>.<bit>'", line.number);
          const auto [a, b] = split_dot(toks[4], line.number);
          const Opcode code = op == "wr0" ? Opcode::Wr0 : op == "wr1" ? Opcode::Wr1 : Opcode::Cnd;
          if (a >= config.n_registers || b >= config.word_width) {
            throw ParseError("operand out of range in '" + std::string(line.body) + "'", line.number);
          }
          word = encode(Instruction{code, static_cast<RegIndex>(a), static_cast<std::uint32_t>(b)}, config);
        } else {
          throw ParseError("unknown instruction '" + std::string(op) + "'", line.number);
        }
      } catch (const AsmError& e) {
        throw ParseError(e.detail(), line.number);
      }
      image.words[reg] = word;
    } else {
      throw ParseError("unknown directive '" + std::string(head) + "'", line.number);
    }
  }
  if (!have_entry) throw ParseError("no entry directive");
  image.entry.assign(entry_seen.begin(), entry_seen.end());
  return image;
}

std::string describe_word(Word word, bool is_data, const MachineConfig& config) {
  if (is_data || !is_canonical(word, config)) return "data " + std::to_string(word);
  return to_string(decode(word, config));
}

std::string dump_image(const Image& image) {
  const MachineConfig config = image.config_from(MachineConfig{});
  std::ostringstream out;
  out << "config n=" << image.n_registers << " w=" << image.word_width << '\n';
  out << "entry";
  for (RegIndex r : image.entry) out << ' ' << r;
  out << '\n';
  std::set<RegIndex> regs;
  for (const auto& [r, w] : image.words) regs.insert(r);
  regs.insert(image.data.begin(), image.data.end());
  for (RegIndex r : regs) {
    const auto it = image.words.find(r);
    const Word word = it == image.words.end() ? 0 : it->second;
    out << "reg " << r << " = " << describe_word(word, image.data.count(r) != 0, config) << '\n';
  }
  return out.str();
}

}  // namespace synchronic::vm
