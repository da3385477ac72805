#pragma once

#include <string>
#include <vector>

namespace mobifair {

// Exit codes: 0 success, 1 usage/config error, 2 data error.
int cli_main(int argc, const char* const* argv);
int cli_main(const std::vector<std::string>& args); // convenience for tests

} // namespace mobifair
