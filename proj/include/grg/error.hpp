#pragma once

#include <stdexcept>
#include <string>

namespace grg {

// Base class for every recoverable failure raised by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Endpoint failure that survived the retry budget. Carries how many
// attempts were made before giving up.
class TransportError : public Error {
public:
    TransportError(const std::string& what, int attempts)
        : Error(what), attempts_(attempts) {}

    int attempts() const noexcept { return attempts_; }

private:
    int attempts_;
};

} // namespace grg
