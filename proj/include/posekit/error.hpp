#pragma once

#include <stdexcept>
#include <string>

namespace posekit {

// Thrown on violated preconditions, malformed values and unparseable input.
// The CLI maps it to exit code 2.
struct InvalidInputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Thrown when a referenced file or frame does not exist. CLI exit code 3.
struct MissingFileError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw InvalidInputError(msg);
}

} // namespace posekit
