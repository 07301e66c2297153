#pragma once

namespace erpcl::cli {

/// Entry point of the erpcl tool. Exit codes: 0 success, 1 usage or validation
/// error, 2 runtime failure (including a failed gradient check).
int run(int argc, const char* const* argv);

}  // namespace erpcl::cli
