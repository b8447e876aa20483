#pragma once

#include <stdexcept>
#include <string>

namespace chatmine {

// Failure categories surfaced through the C API as distinct status codes.
enum class ErrorKind {
    kIo,        // unreadable / unwritable files
    kData,      // malformed or unusable input data
    kConfig,    // invalid configuration or mismatched artifacts
    kContract,  // caller violated an operation precondition
    kInternal,  // invariant breach inside the library
};

class Error : public std::runtime_error {
 public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

 private:
    ErrorKind kind_;
};

struct IoError : Error {
    explicit IoError(const std::string& what) : Error(ErrorKind::kIo, what) {}
};
struct DataError : Error {
    explicit DataError(const std::string& what) : Error(ErrorKind::kData, what) {}
};
struct ConfigError : Error {
    explicit ConfigError(const std::string& what) : Error(ErrorKind::kConfig, what) {}
};
struct ContractViolation : Error {
    explicit ContractViolation(const std::string& what) : Error(ErrorKind::kContract, what) {}
};
struct InternalError : Error {
    explicit InternalError(const std::string& what) : Error(ErrorKind::kInternal, what) {}
};

#define CHATMINE_REQUIRE(cond, msg)                                   \
    do {                                                              \
        if (!(cond)) throw ::chatmine::ContractViolation(msg);        \
    } while (0)

}  // namespace chatmine
