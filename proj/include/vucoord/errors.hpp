#pragma once

#include <stdexcept>
#include <string>

namespace vucoord {

/// Scenario data fails validation (bad topology, out-of-range fields, ...).
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// Scenario file or JSON payload cannot be parsed.
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

/// Network matrices cannot be formed (singular I + Z*Y_L, ...).
class ModelError : public std::runtime_error {
public:
    explicit ModelError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical failure inside the optimizer.
class SolverError : public std::runtime_error {
public:
    explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace vucoord
