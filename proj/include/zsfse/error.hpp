#pragma once

#include <stdexcept>
#include <string>

namespace zs {

struct Error : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

/// Parameters outside their documented domain.
struct InvalidArgument : Error
{
  using Error::Error;
};

/// Array dimensions that do not agree between operands.
struct ShapeError : Error
{
  using Error::Error;
};

/// Non-finite values, divergence, or solver breakdown.
struct NumericalError : Error
{
  using Error::Error;
};

/// Malformed or unknown configuration.
struct ConfigError : Error
{
  using Error::Error;
};

/// Missing files, digest mismatches, unexpected on-disk layouts.
struct IoError : Error
{
  using Error::Error;
};

/// A stored array whose axis names or order differ from what the reader expects.
struct AxisError : IoError
{
  using IoError::IoError;
};

} // namespace zs
