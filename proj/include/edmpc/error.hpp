#ifndef EDMPC_ERROR_HPP
#define EDMPC_ERROR_HPP

#include <stdexcept>
#include <string>

namespace edmpc {

// Error categories map onto CLI exit codes: usage/config 1, data 2, numerical 3.

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when an embedding or library cannot supply enough rows.
class InsufficientDataError : public DataError {
public:
    InsufficientDataError(const std::string& what, std::size_t required, std::size_t available)
        : DataError("insufficient data: " + what + " requires length > " + std::to_string(required) +
                    ", got " + std::to_string(available)),
          required_(required) {}

    std::size_t required() const noexcept { return required_; }

private:
    std::size_t required_;
};

class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace edmpc

#endif
