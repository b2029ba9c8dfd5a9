#pragma once

#include <stdexcept>
#include <string>

namespace sigsel {

/// Base of every exception thrown by the library.
class error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Malformed embedding file header (bad magic, version, or layout).
class format_error : public error {
  public:
    using error::error;
};

/// A file declared more payload than it contains.
class truncation_error : public format_error {
  public:
    using format_error::format_error;
};

/// Values that violate a data invariant (non-finite features, bad labels).
class data_error : public error {
  public:
    using error::error;
};

/// Input outside an operation's mathematical domain, e.g. negative values for chi2.
class domain_error : public data_error {
  public:
    using data_error::data_error;
};

/// Too few rows or classes to define the requested computation.
class degenerate_input_error : public data_error {
  public:
    using data_error::data_error;
};

/// Caller passed an out-of-range or mismatched argument.
class argument_error : public error {
  public:
    using error::error;
};

class io_error : public error {
  public:
    using error::error;
};

}  // namespace sigsel
