#pragma once

#include <stdexcept>
#include <string>

namespace mobifair {

// Bad flags, malformed config files, out-of-range parameters. CLI exit code 1.
struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Unusable input data (CSV, model files, degenerate matrices). CLI exit code 2.
struct data_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace mobifair
