#pragma once

// Exact rational scalar used for enumeration-derived probabilities, plus the
// Eigen glue needed to hold it in dense matrices.

#include <cstdint>
#include <limits>
#include <string>
#include <string_view>

#include <Eigen/Core>
#include <boost/rational.hpp>

namespace pirmes {

using Rational = boost::rational<std::int64_t>;

inline double to_double(const Rational& r) { return boost::rational_cast<double>(r); }
inline double to_double(double x) { return x; }

/// "num/den", or "num" when the denominator is one.
std::string format_rational(const Rational& r);

/// Accepts "num/den", an integer, or a finite decimal such as "0.125".
Rational parse_rational(std::string_view text);

template <typename Scalar>
Scalar scalar_from_double(double x) {
  return Scalar(x);
}

/// Exact when x is zero; otherwise rounded to a 1e-15 grid.
template <>
inline Rational scalar_from_double<Rational>(double x) {
  if (x == 0.0) return Rational(0);
  constexpr std::int64_t kScale = 1'000'000'000'000'000;
  return Rational(static_cast<std::int64_t>(x * static_cast<double>(kScale)), kScale);
}

/// Comparison slack per scalar type: zero for exact arithmetic.
template <typename Scalar>
struct Tolerance {
  static constexpr double sd = 1e-9;
};

template <>
struct Tolerance<Rational> {
  static constexpr double sd = 0.0;
};

}  // namespace pirmes

namespace Eigen {

template <>
struct NumTraits<pirmes::Rational> : GenericNumTraits<pirmes::Rational> {
  using Real = pirmes::Rational;
  using NonInteger = pirmes::Rational;
  using Nested = pirmes::Rational;
  using Literal = pirmes::Rational;

  enum {
    IsComplex = 0,
    IsInteger = 0,
    IsSigned = 1,
    RequireInitialization = 1,
    ReadCost = 1,
    AddCost = 4,
    MulCost = 8
  };

  static Real epsilon() { return Real(0); }
  static Real dummy_precision() { return Real(0); }
  static Real highest() { return Real(std::numeric_limits<std::int64_t>::max()); }
  static Real lowest() { return Real(std::numeric_limits<std::int64_t>::min() + 1); }
  static int digits10() { return 18; }
};

namespace internal {
template <>
struct cast_impl<pirmes::Rational, double> {
  static inline double run(const pirmes::Rational& x) { return pirmes::to_double(x); }
};
}  // namespace internal

}  // namespace Eigen
