#pragma once

#include <stdexcept>

namespace lade {

/// Shape or rank disagreement between tensor/matrix operands.
struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Value outside the mathematical domain of an operation (log of a
/// non-positive number, zero probability, ...).
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

/// Invalid argument to a constructor or factory (bad counts, bad ratios).
struct ParameterError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// API misuse: calling an operation in a state its contract forbids.
struct ContractError : std::logic_error {
    using std::logic_error::logic_error;
};

/// Integer index (class label, row, column) out of range.
struct IndexError : std::out_of_range {
    using std::out_of_range::out_of_range;
};

/// Deterministic construction gave up (e.g. mean placement retries exhausted).
struct ConstructionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Non-finite value where the numeric contract requires a finite one.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent experiment configuration.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Filesystem failure with the offending path in the message.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace lade
