#pragma once

#include <stdexcept>
#include <string>

namespace rotalign {

// Error categories map one-to-one onto CLI exit codes (see cli.hpp).

/// Invalid user input: configuration values, malformed files, bad grids.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A computation could not meet its accuracy contract.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Population reached the top of the rotational basis.
class TruncationError : public NumericalError {
public:
    TruncationError(const std::string& what, int j_max, double boundary_population)
        : NumericalError(what), j_max_(j_max), boundary_population_(boundary_population) {}

    int j_max() const noexcept { return j_max_; }
    double boundary_population() const noexcept { return boundary_population_; }

private:
    int j_max_;
    double boundary_population_;
};

/// File could not be read or written.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace rotalign
