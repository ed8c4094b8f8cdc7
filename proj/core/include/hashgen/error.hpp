#pragma once

#include <stdexcept>
#include <string>

namespace hashgen {

// Base for everything thrown by this library.
struct error : std::runtime_error {
    explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

// Operand shapes do not line up (matmul inner dims, elementwise mismatch, ...).
struct shape_error : error {
    explicit shape_error(const std::string& msg) : error(msg) {}
};

// A documented precondition was violated by the caller.
struct contract_error : error {
    explicit contract_error(const std::string& msg) : error(msg) {}
};

// Bad run configuration (unknown variant, lr <= 0, K > beam, ...).
struct config_error : error {
    explicit config_error(const std::string& msg) : error(msg) {}
};

// Non-finite values or other numeric breakdowns at runtime.
struct numeric_error : error {
    explicit numeric_error(const std::string& msg) : error(msg) {}
};

} // namespace hashgen
