#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace robustnet {

enum class ErrorKind {
    InvalidNetwork,
    InvalidArgument,
    IndexOutOfRange,
    DimensionMismatch,
    Unstable,
    PreconditionViolated,
    CycleBudgetExceeded,
    InvalidCertificate,
    NotDiagonallyDominant,
    NonFiniteState,
    ParseError,
};

constexpr std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidNetwork: return "invalid_network";
        case ErrorKind::InvalidArgument: return "invalid_argument";
        case ErrorKind::IndexOutOfRange: return "index_out_of_range";
        case ErrorKind::DimensionMismatch: return "dimension_mismatch";
        case ErrorKind::Unstable: return "unstable";
        case ErrorKind::PreconditionViolated: return "precondition_violated";
        case ErrorKind::CycleBudgetExceeded: return "cycle_budget_exceeded";
        case ErrorKind::InvalidCertificate: return "invalid_certificate";
        case ErrorKind::NotDiagonallyDominant: return "not_diagonally_dominant";
        case ErrorKind::NonFiniteState: return "non_finite_state";
        case ErrorKind::ParseError: return "parse_error";
    }
    return "unknown";
}

/// Every failure raised by the library. `step()` is set when the error
/// originated inside a change sequence.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message,
          std::optional<std::size_t> step = std::nullopt)
        : std::runtime_error(message), kind_(kind), step_(step) {}

    ErrorKind kind() const noexcept { return kind_; }
    std::optional<std::size_t> step() const noexcept { return step_; }

private:
    ErrorKind kind_;
    std::optional<std::size_t> step_;
};

} // namespace robustnet
