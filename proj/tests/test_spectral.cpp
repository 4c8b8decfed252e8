#include "qpfkam/error.hpp"
#include "qpfkam/grid.hpp"
#include "qpfkam/spectral.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace qpfkam;

namespace {

constexpr double kPi = std::numbers::pi;
const Omega kOmega{1.0, 0.6180339887498949};

double max_coeff_diff(const TorusFunction& a, const TorusFunction& b) {
    double d = 0.0;
    for (const auto& [m, c] : (a - b).modes) d = std::max(d, std::abs(c));
    return d;
}

TorusFunction random_series(std::mt19937_64& rng, int deg, double amp) {
    std::normal_distribution<double> N(0.0, 1.0);
    TorusFunction f;
    for (int l = -deg; l <= deg; ++l)
        for (int k1 = -deg; k1 <= deg; ++k1)
            for (int k2 = -deg; k2 <= deg; ++k2) {
                const Mode m{l, k1, k2};
                if (m.degree() > deg || m.is_zero()) continue;
                if (CanonicalLess{}(m, -m)) f.add_real_pair(m, amp * Complex(N(rng), N(rng)));
            }
    return f;
}

}  // namespace

TEST_CASE("majorant of a sine mode") {
    const TorusFunction f = sine_mode({1, 1, 0}, 1e-3);
    CHECK(f.size() == 2);
    CHECK(majorant(f, 0.5, 0.5) == doctest::Approx(1e-3 * std::exp(1.0)));
    CHECK(majorant(f, 0.0, 0.0) == doctest::Approx(1e-3));
    CHECK(hermitian_defect(f) == 0.0);
}

TEST_CASE("real evaluation of sine and cosine modes") {
    const TorusFunction s = sine_mode({1, 2, -1}, 0.7), c = cosine_mode({0, 1, 1}, 0.3);
    const double th = 0.13, p1 = 0.41, p2 = 0.77;
    CHECK(evaluate_real(s, th, p1, p2) == doctest::Approx(0.7 * std::sin(2 * kPi * (th + 2 * p1 - p2))));
    CHECK(evaluate_real(c, th, p1, p2) == doctest::Approx(0.3 * std::cos(2 * kPi * (p1 + p2))));
}

TEST_CASE("point evaluator matches direct evaluation") {
    std::mt19937_64 rng(5);
    const TorusFunction f = random_series(rng, 5, 1e-2);
    const PointEvaluator ev(f);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int i = 0; i < 50; ++i) {
        const double a = U(rng), b = U(rng), c = U(rng);
        CHECK(ev.value(a, b, c) == doctest::Approx(evaluate_real(f, a, b, c)).epsilon(1e-12));
        const auto [v, dv] = ev.value_dtheta(a, b, c);
        CHECK(v == doctest::Approx(evaluate_real(f, a, b, c)).epsilon(1e-12));
        CHECK(dv == doctest::Approx(evaluate_real(derive_theta(f), a, b, c)).epsilon(1e-10));
    }
}

TEST_CASE("product of two cosines") {
    // cos x cos y = (cos(x+y) + cos(x-y)) / 2
    const TorusFunction a = cosine_mode({1, 0, 0}, 1.0), b = cosine_mode({0, 1, 0}, 1.0);
    const ProductResult p = multiply(a, b, 10);
    const TorusFunction expect = cosine_mode({1, 1, 0}, 0.5) + cosine_mode({1, -1, 0}, 0.5);
    CHECK(max_coeff_diff(p.product, expect) < 1e-16);
    CHECK(p.remainder_norm == 0.0);
}

TEST_CASE("derivatives multiply by 2 pi i times the index") {
    TorusFunction f;
    f.add({2, -1, 3}, Complex(0.5, 0.25));
    CHECK(std::abs(derive_theta(f).coeff({2, -1, 3}) - Complex(0.0, 2 * kPi * 2) * Complex(0.5, 0.25)) < 1e-14);
    const Complex w(0.0, 2 * kPi * (-1.0 * kOmega[0] + 3.0 * kOmega[1]));
    CHECK(std::abs(derive_omega(f, kOmega).coeff({2, -1, 3}) - w * Complex(0.5, 0.25)) < 1e-14);
}

TEST_CASE("theta average and oscillation split") {
    std::mt19937_64 rng(2);
    const TorusFunction f = random_series(rng, 4, 1.0);
    const TorusFunction avg = theta_average(f), osc = theta_oscillation(f);
    CHECK(avg.phi_only());
    for (const auto& [m, c] : osc.modes) CHECK(m.l != 0);
    CHECK(max_coeff_diff(avg + osc, f) == 0.0);
}

TEST_CASE("truncate and tail are complementary") {
    std::mt19937_64 rng(3);
    const TorusFunction f = random_series(rng, 6, 1.0);
    const TorusFunction lo = truncate(f, 3), hi = tail(f, 3);
    for (const auto& [m, c] : lo.modes) CHECK(m.degree() < 3);
    CHECK(max_coeff_diff(lo + hi, f) == 0.0);
    CHECK(majorant_tail(f, 0.2, 0.3, 3) == doctest::Approx(majorant(hi, 0.2, 0.3)));
}

TEST_CASE("constant-coefficient cohomological equation on a single mode") {
    PhiFunction g;
    g.add_real_pair({0, 2, -1}, Complex(1e-3, 0.0));
    const PhiFunction h = solve_constant_coefficient(g, kOmega, 10);
    const Complex expect = Complex(1e-3, 0.0) / Complex(0.0, 2 * kPi * (2 * kOmega[0] - kOmega[1]));
    CHECK(std::abs(h.coeff({0, 2, -1}) - expect) < 1e-18);
    CHECK(max_coeff_diff(derive_omega(h, kOmega), g) < 1e-18);
}

TEST_CASE("imaginary shift bound uses exp(|k| r) - 1") {
    PhiFunction h;
    h.add_real_pair({0, 1, 1}, Complex(0.0, 0.1));
    const ImaginaryShiftSplit s = split_real_imaginary_shift(h, 0.3);
    CHECK(s.bound == doctest::Approx(0.2 * std::expm1(0.6)));
    CHECK_THROWS_AS((void)split_real_imaginary_shift(h, 0.3, 1e-3), Error);
}

TEST_CASE("grid synthesis and analysis round trip") {
    std::mt19937_64 rng(9);
    const TorusFunction f = random_series(rng, 4, 1.0);
    const std::array<int, 3> n{16, 16, 16};
    const TorusFunction back = analyze(synthesize(f, n), n);
    CHECK(max_coeff_diff(back, f) < 1e-13);
}

TEST_CASE("composition with a constant shift rotates every theta mode") {
    const TorusFunction f = sine_mode({1, 1, 0}, 1.0) + cosine_mode({2, 0, 1}, 0.5);
    const double c = 0.1;
    const ComposeResult r = compose_fiber_shift(f, constant(c));
    // f(theta + c) has coefficients f_l e^{2 pi i l c}
    TorusFunction expect;
    for (const auto& [m, v] : f.modes) expect.add(m, v * std::polar(1.0, 2 * kPi * m.l * c));
    CHECK(max_coeff_diff(r.value, expect) < 1e-14);
    const ComposeResult d = compose_fiber_shift_delta(f, constant(c));
    CHECK(max_coeff_diff(d.value, expect - f) < 1e-14);
}

TEST_CASE("composition agrees with pointwise evaluation") {
    const TorusFunction f = sine_mode({1, 1, 0}, 1e-2) + cosine_mode({1, 0, -1}, 3e-3);
    const TorusFunction h = sine_mode({1, 0, 1}, 1e-2) + cosine_mode({0, 1, 0}, 2e-2);
    const ComposeResult r = compose_fiber_shift(f, h);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int i = 0; i < 30; ++i) {
        const double a = U(rng), b = U(rng), c = U(rng);
        const double direct = evaluate_real(f, a + evaluate_real(h, a, b, c), b, c);
        CHECK(evaluate_real(r.value, a, b, c) == doctest::Approx(direct).epsilon(1e-12));
    }
    CHECK(r.alias_residual < 1e-12);
}

TEST_CASE("grid quotient inverts a product") {
    const TorusFunction q = cosine_mode({1, 1, 0}, 0.1) + sine_mode({0, 0, 1}, 0.05);
    TorusFunction den = cosine_mode({1, 0, 0}, 0.2);
    den.add({}, 1.0);
    const TorusFunction num = multiply(q, den, 100).product;
    const ComposeResult r = quotient_on_grid(num, den);
    CHECK(max_coeff_diff(r.value, q) < 1e-12);
    CHECK_THROWS_AS((void)quotient_on_grid(num, cosine_mode({1, 0, 0}, 1.0) - cosine_mode({1, 0, 0}, 1.0)), Error);
}

TEST_CASE("series from samples recovers a trigonometric polynomial") {
    const TorusFunction f = sine_mode({2, 1, 0}, 0.3) + cosine_mode({0, 1, -2}, 0.1);
    const PointEvaluator ev(f);
    const ComposeResult r = series_from_samples({2, 1, 2}, 1.0, [&](double a, double b, double c) { return ev.value(a, b, c); });
    CHECK(max_coeff_diff(r.value, f) < 1e-13);
}
