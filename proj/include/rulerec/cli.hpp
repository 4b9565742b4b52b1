#pragma once

#include <string>
#include <vector>

namespace rulerec::cli {

// Runs one CLI invocation. Returns 0 on success, 1 on usage errors and 2 on
// data or validation errors.
int run(const std::vector<std::string>& args);

}  // namespace rulerec::cli
