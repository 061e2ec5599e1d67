#include "synchronic/error.hpp"

namespace synchronic {

const char* stage_name(Stage stage) {
  switch (stage) {
    case Stage::Parse: return "parse";
    case Stage::Asm: return "asm";
    case Stage::Type: return "type";
    case Stage::Eval: return "eval";
    case Stage::Alloc: return "alloc";
    case Stage::Codegen: return "codegen";
    case Stage::Machine: return "machine";
    case Stage::Verify: return "verify";
    case Stage::Io: return "io";
    case Stage::Usage: return "usage";
  }
  return "unknown";
}

namespace {

std::string format(Stage stage, const std::string& message, std::size_t line) {
  std::string out = stage_name(stage);
  out += " error: ";
  if (line != 0) {
    out += "line " + std::to_string(line) + ": ";
  }
  out += message;
  return out;
}

}  // namespace

Error::Error(Stage stage, const std::string& message, std::size_t line)
    : std::runtime_error(format(stage, message, line)), stage_(stage), line_(line), detail_(message) {}

}  // namespace synchronic
