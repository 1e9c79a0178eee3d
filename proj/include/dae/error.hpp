#pragma once

#include <stdexcept>
#include <string>

namespace dae
{
enum class ErrorKind
{
        invalid_argument,
        singular_input,
        non_monotonic_time,
        dt_too_large,
        degenerate_gravity,
        degenerate_triad,
        non_finite_activation,
        non_finite_loss,
        format_error,
        parse_error,
        alignment_error,
        recording_too_short,
};

[[nodiscard]] constexpr const char* to_string(ErrorKind kind) noexcept
{
        switch (kind)
        {
        case ErrorKind::invalid_argument:
                return "InvalidArgument";
        case ErrorKind::singular_input:
                return "SingularInput";
        case ErrorKind::non_monotonic_time:
                return "NonMonotonicTime";
        case ErrorKind::dt_too_large:
                return "DtTooLarge";
        case ErrorKind::degenerate_gravity:
                return "DegenerateGravity";
        case ErrorKind::degenerate_triad:
                return "DegenerateTriad";
        case ErrorKind::non_finite_activation:
                return "NonFiniteActivation";
        case ErrorKind::non_finite_loss:
                return "NonFiniteLoss";
        case ErrorKind::format_error:
                return "FormatError";
        case ErrorKind::parse_error:
                return "ParseError";
        case ErrorKind::alignment_error:
                return "AlignmentError";
        case ErrorKind::recording_too_short:
                return "RecordingTooShort";
        }
        return "Unknown";
}

// Input/validation problems map to exit code 2, numerical failures to 3.
[[nodiscard]] constexpr bool is_numerical(ErrorKind kind) noexcept
{
        switch (kind)
        {
        case ErrorKind::singular_input:
        case ErrorKind::non_monotonic_time:
        case ErrorKind::dt_too_large:
        case ErrorKind::degenerate_gravity:
        case ErrorKind::degenerate_triad:
        case ErrorKind::non_finite_activation:
        case ErrorKind::non_finite_loss:
                return true;
        default:
                return false;
        }
}

class Error final : public std::runtime_error
{
        ErrorKind kind_;

public:
        Error(ErrorKind kind, const std::string& message)
                : std::runtime_error(std::string(to_string(kind)) + ": " + message),
                  kind_(kind)
        {
        }

        [[nodiscard]] ErrorKind kind() const noexcept
        {
                return kind_;
        }
};
}
