#pragma once

#include <string>
#include <vector>

namespace gmvae::cli {

/// Entry point shared by the binary and the tests. Returns the process exit
/// status: 0 on success, 1 for runtime/file/check failures, 2 for usage
/// errors.
int run(const std::vector<std::string>& args);

} // namespace gmvae::cli
