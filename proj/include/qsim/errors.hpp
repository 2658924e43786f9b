#pragma once

#include <stdexcept>
#include <string>

namespace qsim {

// Structural or parameter validation failure (CLI exit code 2).
class SpecError : public std::runtime_error {
public:
    explicit SpecError(const std::string& what) : std::runtime_error(what) {}
};

// Simulation grid does not align with the horizon or a schedule breakpoint
// (CLI exit code 3).
class GridError : public std::runtime_error {
public:
    explicit GridError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace qsim
