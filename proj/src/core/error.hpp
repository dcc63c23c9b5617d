#pragma once

#include <stdexcept>
#include <string>

namespace mknock {

// Error kinds map one-to-one onto the C API status codes and CLI exit codes.
enum class ErrorKind {
    Config = 2,   // bad parameters or inconsistent configuration
    Data = 3,     // malformed or unusable input data
    Solver = 4,   // numerical failure (matrix not PSD, non-convergence, ...)
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& msg)
        : std::runtime_error(msg), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& msg) : Error(ErrorKind::Config, msg) {}
};

struct DataError : Error {
    explicit DataError(const std::string& msg) : Error(ErrorKind::Data, msg) {}
};

struct SolverError : Error {
    explicit SolverError(const std::string& msg) : Error(ErrorKind::Solver, msg) {}
};

// Matrix failures (non-PSD input, failed factorization) are solver-class errors.
struct MatrixError : SolverError {
    explicit MatrixError(const std::string& msg) : SolverError(msg) {}
};

#define MKNOCK_REQUIRE(cond, ErrType, msg) \
    do {                                   \
        if (!(cond)) throw ErrType(msg);   \
    } while (0)

}  // namespace mknock
