#pragma once

#include <string>
#include <vector>

#include "lsc/qcb.hpp"
#include "lsc/router.hpp"

namespace lsc::render {

// One character per patch; `B` for bus routes, `R` registers, `E` externs,
// `I` IO, `L` local routes, `.` unallocated.
std::string ascii_board(const qcb::Qcb& board);

std::string svg_board(const qcb::Qcb& board);

// Per-cycle frames of the stream; locked patches are overdrawn with '#'.
std::vector<std::string> ascii_frames(const qcb::Qcb& board,
                                      const std::vector<router::Instruction>& stream);

}  // namespace lsc::render
