#pragma once

#include <iosfwd>

namespace gbs {

/// Entry point of the `gbs` tool. Returns 0 on success, 1 when a check or
/// computation fails, 2 on usage errors.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace gbs
