#pragma once

#include <stdexcept>

namespace hapens {

// Bad experiment configuration or CLI arguments. CLI maps this to exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Unreadable or invalid model libraries and run records. CLI exit code 3.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Incompatible inputs at evaluation time. CLI exit code 4.
struct EvalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace hapens
