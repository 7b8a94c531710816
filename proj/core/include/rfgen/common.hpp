#pragma once

#include <stdexcept>
#include <string>

namespace rfgen {

// Violated precondition or broken invariant on a public surface.
class contract_error : public std::invalid_argument {
public:
    explicit contract_error(const std::string& what) : std::invalid_argument(what) {}
};

// Runtime failure (I/O, NaN abort, incompatible checkpoint).
class runtime_failure : public std::runtime_error {
public:
    explicit runtime_failure(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool condition, const std::string& message) {
    if (!condition) throw contract_error(message);
}

} // namespace rfgen
