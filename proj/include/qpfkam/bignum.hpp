#pragma once

#include <boost/multiprecision/gmp.hpp>
#include <boost/multiprecision/mpfr.hpp>

#include <string>

namespace qpfkam {

using BigInt = boost::multiprecision::mpz_int;
using BigRational = boost::multiprecision::mpq_rational;
/// 120 significant decimal digits; used for schedule audits in log space.
using BigFloat = boost::multiprecision::number<boost::multiprecision::mpfr_float_backend<120>>;

/// Raises the MPFR exponent range to its maximum. Idempotent.
void init_bigfloat();

/// floor(sqrt(n)) for n >= 0.
[[nodiscard]] BigInt isqrt(const BigInt& n);

/// log2(x) for x > 0, accurate to double precision relative error.
[[nodiscard]] double log2_of(const BigInt& x);

/// Natural logarithm of x > 0 at BigFloat precision.
[[nodiscard]] BigFloat ln_of(const BigInt& x);

/// Exact three-way comparison of x^e against y (x, y >= 1). Uses a
/// logarithmic pre-test and falls back to exact exponentiation only when
/// the two sides agree to within the pre-test resolution.
[[nodiscard]] int compare_pow(const BigInt& x, unsigned long e, const BigInt& y);

/// Exact three-way comparison of x^e against y^f.
[[nodiscard]] int compare_pow2(const BigInt& x, unsigned long e, const BigInt& y, unsigned long f);

/// Formats exp(log_value) as a decimal string "d.ddddde<exp>" without ever
/// materialising the (possibly astronomically small) number itself.
[[nodiscard]] std::string exp_to_decimal(const BigFloat& log_value, int digits = 12);

/// Decimal string of a BigFloat with the given number of significant digits.
[[nodiscard]] std::string to_decimal(const BigFloat& x, int digits = 30);

}  // namespace qpfkam
