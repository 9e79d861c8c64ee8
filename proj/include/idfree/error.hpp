#pragma once

#include <stdexcept>
#include <string>

namespace idfree {

/// Malformed or inconsistent input data (CLI exit code 2).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid parameters passed by the caller (CLI exit code 1).
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A library invariant was violated (CLI exit code 3).
class InvariantError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace idfree
