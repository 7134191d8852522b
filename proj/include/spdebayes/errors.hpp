#pragma once

#include <stdexcept>
#include <string>

namespace spdebayes {

// Invalid configuration / input contract violations (CLI exit code 2).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical aborts: non-finite state, factorization failure (CLI exit code 3).
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace spdebayes
