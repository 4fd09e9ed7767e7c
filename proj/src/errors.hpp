#pragma once

#include <stdexcept>
#include <string>

namespace sardet {

/// Invalid configuration, malformed file content, or data that violates a
/// documented invariant.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Filesystem-level failure. The message always names the path involved.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace sardet
