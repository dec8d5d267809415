#pragma once

#include <stdexcept>
#include <string>

namespace iontrap {

// Error taxonomy shared by the library and the CLI exit-status contract.
class error : public std::runtime_error {
public:
    explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input file (layout, mesh, config).
class parse_error : public error {
public:
    using error::error;
};

// Input violates a layout/geometry invariant (overlap, spacing, duplicate id).
class validation_error : public error {
public:
    using error::error;
};

// Geometric construction failed (degenerate sweep, self-intersection).
class geometry_error : public error {
public:
    using error::error;
};

// Evaluation requested outside the valid region.
class domain_error : public error {
public:
    using error::error;
};

// Linear system could not be solved (singular / over panel budget).
class solver_error : public error {
public:
    using error::error;
};

// An iteration finished without meeting its tolerance.
class convergence_error : public error {
public:
    using error::error;
};

// Least-squares fit rejected (ill-conditioned design matrix).
class fit_error : public error {
public:
    using error::error;
};

// A pipeline stage is missing an upstream artifact.
class dependency_error : public error {
public:
    using error::error;
};

// Bad run configuration (missing file, unwritable directory, bad range).
class config_error : public error {
public:
    using error::error;
};

} // namespace iontrap
