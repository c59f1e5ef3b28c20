#pragma once

#include <stdexcept>

namespace pgrtb {

// Invalid MarketConfig or run configuration.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Argument outside the mathematical domain of an operation (e.g. a negative price).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Step index outside [0, N].
class IndexError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

// Inconsistent arguments (length mismatches, empty inputs where not allowed).
class ArgumentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A split asks to sell to more advertisers than are available.
class InfeasibleSplit : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Exhaustive search refused because the instance is too large.
class GuardError : public std::length_error {
public:
    using std::length_error::length_error;
};

class FitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ClusteringError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed or unreadable input files.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace pgrtb
