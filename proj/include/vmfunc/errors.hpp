#pragma once

#include <stdexcept>

namespace vmf {

/// A functional or normalizer is undefined at the given input (zero variance,
/// zero dispersion s_n², ...).
struct DegenerateError : std::domain_error {
  using std::domain_error::domain_error;
};

/// The functional kind has no analytic derivative in the catalog.
struct NoAnalyticDerivative : std::logic_error {
  using std::logic_error::logic_error;
};

/// An exact enumeration would exceed its size guard.
struct SizeGuardError : std::length_error {
  using std::length_error::length_error;
};

} // namespace vmf
