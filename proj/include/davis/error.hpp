// SPDX-License-Identifier: MIT
/// @file error.hpp
/// @brief Error categories shared by every module.
///
/// Every failure raised by the library is a davis::Error carrying an
/// ErrorKind. The command-line front end maps kinds onto exit codes.
#pragma once

#include <stdexcept>
#include <string>

namespace davis {

enum class ErrorKind {
    Argument,     ///< caller violated a precondition
    Domain,       ///< evaluation outside a function's domain
    Model,        ///< market admits arbitrage or endowment is invalid
    Numeric,      ///< solver failed to converge or produced non-finite output
    Config,       ///< malformed experiment configuration
    Unsupported,  ///< configuration outside what the implementation handles
    Internal,     ///< invariant broken inside the library
};

inline const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Argument: return "argument";
        case ErrorKind::Domain: return "domain";
        case ErrorKind::Model: return "model";
        case ErrorKind::Numeric: return "numeric";
        case ErrorKind::Config: return "config";
        case ErrorKind::Unsupported: return "unsupported";
        case ErrorKind::Internal: return "internal";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + " error: " + what), kind_(kind) {}

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool condition, ErrorKind kind, const std::string& what) {
    if (!condition) fail(kind, what);
}

}  // namespace davis
