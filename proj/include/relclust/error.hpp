#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace relclust {

enum class ErrorKind {
    Io,
    Parse,
    Validation,
    Argument,
    Backend,
    Format,
    Corruption,
};

std::string_view to_string(ErrorKind kind);

// Every failure raised by the library carries a kind so the CLI can map it
// onto an exit code and a machine-readable error record.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace relclust
