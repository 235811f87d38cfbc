#pragma once

#include <stdexcept>
#include <string>

namespace jubensha {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Caller violated a documented precondition.
class PreconditionError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class FormatError : public Error {
public:
    using Error::Error;
};

class SchemaError : public Error {
public:
    SchemaError(std::string code, const std::string& message)
        : Error(code + ": " + message), code_(std::move(code)) {}
    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

class EmptyInput : public PreconditionError {
public:
    using PreconditionError::PreconditionError;
};

}  // namespace jubensha
