#ifndef GLF_ERRORS_HPP
#define GLF_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace glf {

// Validation failures (bad arguments, malformed files, schema violations).
// The CLI maps these to exit code 2.
using validation_error = std::invalid_argument;

// Numerical failures (indefinite matrices, failed root brackets, overflow).
// The CLI maps these to exit code 3.
struct numeric_error : std::runtime_error {
    explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct conditioning_error : numeric_error {
    explicit conditioning_error(const std::string& msg) : numeric_error(msg) {}
};

struct bound_failure : numeric_error {
    explicit bound_failure(const std::string& msg) : numeric_error(msg) {}
};

struct capacity_error : numeric_error {
    explicit capacity_error(const std::string& msg) : numeric_error(msg) {}
};

// Requested an analyticity-based bound for a density whose polyellipse
// constants are not available (Laplacian/Cauchy Fourier densities).
struct unsupported_analyticity : numeric_error {
    explicit unsupported_analyticity(const std::string& msg) : numeric_error(msg) {}
};

}  // namespace glf

#endif
