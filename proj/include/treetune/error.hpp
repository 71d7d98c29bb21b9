#pragma once

#include <stdexcept>
#include <string>

namespace treetune {

/// Base for every error the library raises on purpose.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad input data: unreadable files, malformed cells, degenerate vectors.
class DataError : public Error {
public:
    using Error::Error;
};

/// A hyperparameter or argument outside its allowed range.
class ParamError : public Error {
public:
    using Error::Error;
};

/// Raised by the metric functions when a score is undefined for the inputs.
class MetricError : public DataError {
public:
    using DataError::DataError;
};

}  // namespace treetune
