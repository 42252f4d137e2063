#pragma once

#include <stdexcept>
#include <string>

namespace epicast {

// Bad input files or malformed records; maps to CLI exit code 2.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad run configuration; maps to CLI exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace epicast
