#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace egren {

enum class ErrorKind {
    InvalidArgument,
    Parse,
    NonIntegrable,
    NeedsExtension,
    NeedsSubtraction,
    NotConverged,
    Inconclusive,
    OrderMismatch,
    Schema,
    OnDiagonal,
    MembershipViolated,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

// Syntax error in the kernel DSL. Positions are 1-based; offset is 0-based.
class ParseError : public Error {
public:
    ParseError(const std::string& msg, std::size_t offset, int line, int column);

    std::size_t offset() const noexcept { return offset_; }
    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }

private:
    std::size_t offset_;
    int line_;
    int column_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
    throw Error(kind, what);
}

inline void require(bool cond, const std::string& what) {
    if (!cond) fail(ErrorKind::InvalidArgument, what);
}

}  // namespace egren
