#pragma once

#include <stdexcept>
#include <string>

namespace cspath {

// A caller broke a documented precondition. `parameter()` names the offending input.
class ContractError : public std::invalid_argument {
public:
    ContractError(std::string parameter, const std::string& what)
        : std::invalid_argument(parameter + ": " + what), parameter_(std::move(parameter)) {}

    const std::string& parameter() const noexcept { return parameter_; }

private:
    std::string parameter_;
};

// The inputs were valid but the requested computation exceeds a budget
// (quadrature axes, Fock truncation, non-Gaussian integrand for a Gaussian evaluator).
class RefusalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed text input. `column()` is 1-based; 0 when unknown.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t column)
        : std::runtime_error(what), column_(column) {}

    std::size_t column() const noexcept { return column_; }

private:
    std::size_t column_;
};

}  // namespace cspath
