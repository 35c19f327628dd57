#pragma once

#include <stdexcept>
#include <string>

namespace qlrap {

// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Matrix is not Hermitian within herm_tol. Carries max |A(i,j) - conj(A(j,i))|.
struct NotHermitian : Error {
  double violation;
  explicit NotHermitian(double v)
      : Error("matrix is not Hermitian, violation " + std::to_string(v)), violation(v) {}
};

// Trace differs from one by more than trace_tol.
struct NotUnitTrace : Error {
  double violation;
  explicit NotUnitTrace(double v)
      : Error("matrix trace is not 1, violation " + std::to_string(v)), violation(v) {}
};

// Smallest eigenvalue is below -psd_tol. Carries the magnitude of the dip.
struct NotPSD : Error {
  double violation;
  explicit NotPSD(double v)
      : Error("matrix is not positive semi-definite, violation " + std::to_string(v)),
        violation(v) {}
};

struct DimMismatch : Error {
  using Error::Error;
};

struct LengthMismatch : Error {
  using Error::Error;
};

// Vector sums differ by more than sum_tol.
struct SumMismatch : Error {
  double violation;
  explicit SumMismatch(double v)
      : Error("vector sums differ by " + std::to_string(v)), violation(v) {}
};

struct RankOutOfRange : Error {
  long long requested;
  long long dim;
  RankOutOfRange(long long r, long long d)
      : Error("rank bound " + std::to_string(r) + " outside [1, " + std::to_string(d) + "]"),
        requested(r),
        dim(d) {}
};

// Pure-state norm differs from one by more than trace_tol.
struct NotNormalized : Error {
  double violation;
  explicit NotNormalized(double v)
      : Error("state vector is not normalized, violation " + std::to_string(v)), violation(v) {}
};

struct NoConvergence : Error {
  using Error::Error;
};

struct ZeroTrace : Error {
  using Error::Error;
};

struct ZeroVector : Error {
  using Error::Error;
};

struct BudgetExceeded : Error {
  using Error::Error;
};

struct ParseError : Error {
  using Error::Error;
};

}  // namespace qlrap
