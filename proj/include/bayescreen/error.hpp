#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bayescreen {

enum class ErrorKind {
    InvalidProbability,
    SpecificityOne,
    DegenerateTest,
    EpsilonOne,
    InfeasibleTarget,
    InvalidTarget,
    InvalidAxis,
};

constexpr std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::InvalidProbability: return "InvalidProbability";
    case ErrorKind::SpecificityOne: return "SpecificityOne";
    case ErrorKind::DegenerateTest: return "DegenerateTest";
    case ErrorKind::EpsilonOne: return "EpsilonOne";
    case ErrorKind::InfeasibleTarget: return "InfeasibleTarget";
    case ErrorKind::InvalidTarget: return "InvalidTarget";
    case ErrorKind::InvalidAxis: return "InvalidAxis";
    }
    return "Unknown";
}

// Domain error raised by every library operation. The kind is the stable,
// machine-readable part; what() is for humans.
class DomainError : public std::domain_error {
public:
    DomainError(ErrorKind kind, const std::string& message)
        : std::domain_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }
    std::string_view name() const noexcept { return to_string(kind_); }

private:
    ErrorKind kind_;
};

} // namespace bayescreen
