#ifndef DEPTHSIGN_ERRORS_HPP
#define DEPTHSIGN_ERRORS_HPP

#include <cstddef>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace depthsign {

namespace detail {
inline std::string format_rate(double rate) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", rate);
    return buf;
}
} // namespace detail

/// Base class of every exception thrown by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Matrix or layer dimensions do not conform.
struct ShapeError : Error {
    using Error::Error;
};

/// An argument value lies outside its documented domain.
struct ParameterError : Error {
    using Error::Error;
};

/// A file could not be opened, read or written.
struct IoError : Error {
    using Error::Error;
};

/// A file was read but its contents do not match the expected format.
struct FormatError : Error {
    using Error::Error;
};

/// A metric has no defined value for the given counts.
struct UndefinedMetricError : Error {
    using Error::Error;
};

/// Training produced a non-finite objective.
struct DivergenceError : Error {
    DivergenceError(std::string stage, std::size_t epoch, double learning_rate)
        : Error((stage.empty() ? std::string() : stage + ": ") +
                "objective became non-finite at epoch " + std::to_string(epoch) +
                " (learning rate " + detail::format_rate(learning_rate) + ")"),
          stage(std::move(stage)), epoch(epoch), learning_rate(learning_rate) {}

    DivergenceError(std::size_t epoch, double learning_rate)
        : DivergenceError(std::string(), epoch, learning_rate) {}

    std::string stage;
    std::size_t epoch;
    double learning_rate;
};

} // namespace depthsign

#endif // DEPTHSIGN_ERRORS_HPP
