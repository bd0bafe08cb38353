#pragma once

#include <stdexcept>

namespace bevkit {

// Bad arguments, malformed config, artifact hash mismatch. Maps to the
// usage exit code.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Filesystem and serialization failures.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A verification property failed (gradient check and friends).
struct CheckError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace bevkit
