#pragma once
// Error taxonomy shared by the library and the CLI exit-code mapping.

#include <stdexcept>
#include <string>

namespace eclipse {

enum class ErrorKind {
    io,                  // file open / read / write failures
    bad_magic,           // container magic mismatch
    version_mismatch,    // container version unsupported
    truncated,           // payload ends mid-frame
    format,              // malformed config / schema violation
    degenerate_geometry, // light below fingertip, coincident keypoints, ...
    behind_camera,       // projection of a point with non-positive depth
    shape_mismatch,      // model / patch channel disagreement
    invalid_argument,    // bad caller input (empty LED set, ...)
    empty_dataset,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void raise(ErrorKind kind, const std::string& what) {
    throw Error(kind, what);
}

}  // namespace eclipse
