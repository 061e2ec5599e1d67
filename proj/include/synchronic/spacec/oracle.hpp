#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "synchronic/spacec/typecheck.hpp"

namespace synchronic::spacec {

/// One cell operator on values already reduced to their widths. `width` is the
/// destination width, `operand_width` the source width (differs for eq/lt).
std::uint64_t apply_op(std::string_view op, std::span<const std::uint64_t> args, unsigned width,
                       unsigned operand_width);

/// Reference semantics of a typed module: outputs in declaration order.
/// Inputs are masked to their declared widths.
std::vector<std::uint64_t> interpret(const TypedProgram& program, std::string_view module,
                                     std::span<const std::uint64_t> inputs);

}  // namespace synchronic::spacec
