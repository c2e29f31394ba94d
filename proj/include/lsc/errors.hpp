#pragma once

#include <stdexcept>
#include <string>

namespace lsc {

// Error categories map onto CLI exit codes (see cli.hpp).
enum class ErrorKind {
    Parse,
    Allocation,
    Routing,
    Validation,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string message)
        : std::runtime_error(std::move(message)), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

struct ParseError : Error {
    explicit ParseError(std::string message) : Error(ErrorKind::Parse, std::move(message)) {}
};

struct AllocationError : Error {
    explicit AllocationError(std::string message) : Error(ErrorKind::Allocation, std::move(message)) {}
};

struct RoutingError : Error {
    explicit RoutingError(std::string message) : Error(ErrorKind::Routing, std::move(message)) {}
};

struct ValidationError : Error {
    explicit ValidationError(std::string message) : Error(ErrorKind::Validation, std::move(message)) {}
};

}  // namespace lsc
