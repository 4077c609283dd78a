#pragma once

#include <stdexcept>
#include <string>

namespace vinegen {

//! base class of all errors raised by the library.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

//! input data unusable for estimation (too few points, constant columns).
class DegenerateInputError : public Error
{
public:
  using Error::Error;
};

//! argument outside the domain of a function (e.g. u not in (0,1)).
class DomainError : public Error
{
public:
  using Error::Error;
};

//! malformed file or serialized model.
class FormatError : public Error
{
public:
  using Error::Error;
};

//! numerical failure (NaN loss, non-finite values).
class NumericError : public Error
{
public:
  using Error::Error;
};

//! dimensions of two inputs do not agree.
class DimensionError : public Error
{
public:
  using Error::Error;
};

} // namespace vinegen
