#include "qpfkam/bignum.hpp"

#include <gmp.h>
#include <mpfr.h>

#include <cmath>
#include <cstdio>
#include <mutex>
#include <sstream>

namespace qpfkam {

void init_bigfloat() {
    static std::once_flag once;
    std::call_once(once, [] {
        mpfr_set_emax(mpfr_get_emax_max());
        mpfr_set_emin(mpfr_get_emin_min());
    });
}

BigInt isqrt(const BigInt& n) {
    BigInt r;
    mpz_sqrt(r.backend().data(), n.backend().data());
    return r;
}

double log2_of(const BigInt& x) {
    long exp = 0;
    const double mant = mpz_get_d_2exp(&exp, x.backend().data());
    return static_cast<double>(exp) + std::log2(mant);
}

BigFloat ln_of(const BigInt& x) {
    init_bigfloat();
    BigFloat v;
    mpfr_set_z(v.backend().data(), x.backend().data(), MPFR_RNDN);
    return log(v);
}

namespace {

int sign_of(double d) { return (d > 0) - (d < 0); }

}  // namespace

int compare_pow2(const BigInt& x, unsigned long e, const BigInt& y, unsigned long f) {
    const double lhs = static_cast<double>(e) * log2_of(x);
    const double rhs = static_cast<double>(f) * log2_of(y);
    const double tol = 1e-9 * std::max(std::abs(lhs), std::abs(rhs)) + 1e-6;
    if (std::abs(lhs - rhs) > tol) return sign_of(lhs - rhs);
    BigInt a, b;
    mpz_pow_ui(a.backend().data(), x.backend().data(), e);
    mpz_pow_ui(b.backend().data(), y.backend().data(), f);
    return a < b ? -1 : (a > b ? 1 : 0);
}

int compare_pow(const BigInt& x, unsigned long e, const BigInt& y) { return compare_pow2(x, e, y, 1); }

std::string exp_to_decimal(const BigFloat& log_value, int digits) {
    init_bigfloat();
    const BigFloat log10v = log_value / log(BigFloat(10));
    const BigFloat e = floor(log10v);
    BigFloat mant = pow(BigFloat(10), log10v - e);
    BigFloat exponent = e;
    // Guard against the mantissa rounding up to 10.
    std::ostringstream probe;
    probe.precision(digits);
    probe << std::fixed << mant;
    if (probe.str().rfind("10", 0) == 0) {
        mant /= 10;
        exponent += 1;
    }
    std::ostringstream out;
    out.precision(digits);
    out << std::fixed << mant << "e" << exponent.convert_to<BigInt>();
    return out.str();
}

std::string to_decimal(const BigFloat& x, int digits) {
    std::ostringstream out;
    out.precision(digits);
    out << std::scientific << x;
    return out.str();
}

}  // namespace qpfkam
