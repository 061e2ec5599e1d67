#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace synchronic {

/// Pipeline stage that raised an error. The stage name is always the first
/// word of the formatted message so that CLI diagnostics identify it.
enum class Stage { Parse, Asm, Type, Eval, Alloc, Codegen, Machine, Verify, Io, Usage };

const char* stage_name(Stage stage);

class Error : public std::runtime_error {
 public:
  Error(Stage stage, const std::string& message, std::size_t line = 0);

  Stage stage() const { return stage_; }
  std::size_t line() const { return line_; }  // 1-based, 0 when unknown
  const std::string& detail() const { return detail_; }

 private:
  Stage stage_;
  std::size_t line_;
  std::string detail_;
};

class ParseError : public Error {
 public:
  explicit ParseError(const std::string& message, std::size_t line = 0)
      : Error(Stage::Parse, message, line) {}
};

class AsmError : public Error {
 public:
  explicit AsmError(const std::string& message, std::size_t line = 0)
      : Error(Stage::Asm, message, line) {}
};

class TypeError : public Error {
 public:
  explicit TypeError(const std::string& message, std::size_t line = 0)
      : Error(Stage::Type, message, line) {}
};

class AllocError : public Error {
 public:
  explicit AllocError(const std::string& message) : Error(Stage::Alloc, message) {}
};

class CodegenError : public Error {
 public:
  explicit CodegenError(const std::string& message) : Error(Stage::Codegen, message) {}
};

}  // namespace synchronic
