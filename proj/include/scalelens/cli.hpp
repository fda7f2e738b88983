#pragma once

#include <ostream>

namespace scalelens {

/// Entry point behind the `scalelens` executable. Returns 0 on success,
/// 1 for analysis or validation failures and 2 for usage errors.
int cli_dispatch(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace scalelens
