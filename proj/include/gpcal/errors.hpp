#pragma once

#include <stdexcept>
#include <string>

namespace gpcal {

/// Bad input: wrong dimensions, malformed files, invalid configuration.
class ValidationError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public ValidationError
{
public:
    using ValidationError::ValidationError;
};

class InsufficientDataError : public ValidationError
{
public:
    using ValidationError::ValidationError;
};

/// Numerical breakdown: non-PD kernel matrix, rank-deficient design.
class NumericalError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

class SingularityError : public NumericalError
{
public:
    using NumericalError::NumericalError;
};

class RankError : public NumericalError
{
public:
    using NumericalError::NumericalError;
};

class IoError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

} // namespace gpcal
