#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "synchronic/interstring/interstring.hpp"

namespace synchronic::spacec {

struct VarDecl {
  std::string name;
  unsigned width = 0;
  std::size_t line = 0;
};

/// Call argument: a variable or an unsigned literal.
struct Arg {
  std::string name;
  std::optional<std::uint64_t> literal;
};

struct Stmt {
  enum class Kind { Decl, Call, Seq, Par, If, Repeat, Layers };

  Kind kind = Kind::Seq;
  std::size_t line = 0;

  std::vector<VarDecl> decls;  // Decl

  std::vector<std::string> outs;  // Call
  std::string callee;
  std::vector<Arg> args;

  std::vector<Stmt> body;  // Seq, Par (one branch per statement), If (then), Repeat
  std::vector<Stmt> else_body;
  std::string cond;  // If

  std::string count_name;  // Repeat: const name, or empty for a literal
  std::uint64_t count = 0;
  bool unroll = false;

  interstring::Interstring layers;  // Layers
};

struct Module {
  std::string name;
  std::vector<VarDecl> ins;
  std::vector<VarDecl> outs;
  std::vector<Stmt> body;
  std::size_t line = 0;
};

struct Program {
  std::map<std::string, std::uint64_t> consts;
  std::vector<Module> modules;

  const Module* find(std::string_view name) const;
};

/// Throws ParseError with the offending line.
Program parse_space(std::string_view source);

}  // namespace synchronic::spacec
