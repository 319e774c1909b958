#pragma once

#include <stdexcept>
#include <string>

namespace siglab {

/// Malformed input document (bad syntax, wrong types). Carries a location hint.
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

/// Structurally sound input that violates a model invariant (dangling
/// reference, conflicting movements, impossible route, bad config value).
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// Caller broke an API precondition (unknown id, dimension mismatch).
class ContractError : public std::logic_error {
public:
    explicit ContractError(const std::string& what) : std::logic_error(what) {}
};

/// Numerical failure during learning (non-finite loss). Fail fast.
class TrainingError : public std::runtime_error {
public:
    explicit TrainingError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace siglab
