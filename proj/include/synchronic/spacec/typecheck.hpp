#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "synchronic/spacec/ast.hpp"

namespace synchronic::spacec {

/// Builtin module family `<op><N>`: not mov and or xor add sub mul eq lt.
/// eqN/ltN output uint1; all others output uintN.
struct Builtin {
  std::string name;
  std::string op;
  unsigned width = 0;
  unsigned arity = 0;
  unsigned out_width = 0;
};

std::optional<Builtin> find_builtin(std::string_view name);

enum class VarKind { In, Out, Local };

struct VarInfo {
  std::string name;
  unsigned width = 0;
  VarKind kind = VarKind::Local;
};

struct Signature {
  std::vector<unsigned> ins;
  std::vector<unsigned> outs;
};

struct TypedModule {
  Module module;                 // repeat counts resolved
  std::vector<VarInfo> vars;     // ins, outs, then locals in declaration order
  std::map<std::string, std::size_t, std::less<>> index;

  const VarInfo& var(std::string_view name) const;
  Signature signature() const;
};

struct TypedProgram {
  std::vector<TypedModule> modules;
  std::map<std::string, TypedModule, std::less<>> builtins;  // those referenced
  unsigned max_width = 64;

  const TypedModule* find(std::string_view name) const;
  /// User module, else an already referenced builtin.
  const TypedModule* resolve(std::string_view name) const;
  /// User module or builtin; nullopt when neither exists.
  std::optional<Signature> signature(std::string_view callee) const;
};

struct Effects {
  std::set<std::string> reads;
  std::set<std::string> writes;
};

Effects effects(const Stmt& stmt);

/// Builtin as a module: ports a (, b) and r, body a one-cell interstring.
TypedModule builtin_module(const Builtin& builtin);

/// Adds the builtin to `program.builtins`; throws TypeError for unknown names
/// or widths above max_width.
const TypedModule& require_builtin(TypedProgram& program, std::string_view name);

/// Widths, call signatures, declaration before use, par exclusivity,
/// constant repeat bounds and an acyclic call graph. Throws TypeError.
TypedProgram typecheck(const Program& program, unsigned max_width = 64);

}  // namespace synchronic::spacec
