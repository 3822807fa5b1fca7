#pragma once

#include <stdexcept>
#include <string>

namespace sintro {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite values encountered mid-computation; training loops catch this
// to abort with the last good parameters.
class NumericError : public Error {
public:
    explicit NumericError(const std::string& msg) : Error(msg) {}
};

} // namespace sintro
