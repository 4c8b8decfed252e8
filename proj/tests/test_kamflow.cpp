#include "qpfkam/error.hpp"
#include "qpfkam/kamflow.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace qpfkam;

namespace {

constexpr double kPi = std::numbers::pi;
const double kAlpha = 0.6180339887498949;
const Omega kOmega{1.0, kAlpha};

}  // namespace

TEST_CASE("q_star marks where ln Q < a Q^(1/4) starts to hold") {
    for (double a : {0.05, 0.2, 1.0}) {
        const BigInt Q = q_star(BigFloat(a));
        const double q = Q.convert_to<double>();
        CHECK(std::log(q) < a * std::pow(q, 0.25));
        if (Q > 1) CHECK(std::log(q - 1) >= a * std::pow(q - 1, 0.25));
    }
    // a >= 4/e keeps a e^{y/4} above y everywhere
    CHECK(q_star(BigFloat(2.0)) == 1);
    CHECK(q_star(BigFloat(0.05)) > q_star(BigFloat(0.2)));
}

TEST_CASE("schedule rows shrink the strip and the error") {
    const Frequency fr = expand_continued_fraction(FrequencySpec::golden(), 60);
    CdOptions o;
    o.terms = 4;
    const CdSequence cd = select_cd_sequence(fr, o);
    ScheduleParams p;
    p.n_max = 3;
    const ScheduleAudit a = audit_schedule(fr, cd, p);
    REQUIRE(a.rows.size() >= 3);
    for (std::size_t i = 1; i < a.rows.size(); ++i) {
        CHECK(a.rows[i].r < a.rows[i - 1].r);
        CHECK(a.rows[i].s < a.rows[i - 1].s);
        CHECK(a.rows[i].ln_eps < a.rows[i - 1].ln_eps);
    }
    CHECK(a.ln_eps0 < a.ln_eps0_bound);
    CHECK(a.U == doctest::Approx(a.u_tilde + 12.0));
}

TEST_CASE("make_system moves the mean of g into rho_tilde") {
    PhiFunction g = cosine_mode({0, 1, 0}, 1e-3);
    g.add({}, 0.01);
    const QpfSystem sys = make_system(0.3, g, TorusFunction{}, kOmega, 0.5, 0.5);
    CHECK(sys.load_shift == doctest::Approx(0.01));
    CHECK(sys.rho_tilde() == doctest::Approx(0.31));
    CHECK(std::abs(sys.g.coeff({})) == 0.0);
}

TEST_CASE("set_reference_rotation leaves the vector field unchanged") {
    QpfSystem sys = make_system(0.3, cosine_mode({0, 1, 0}, 1e-3), sine_mode({1, 0, 1}, 1e-4), kOmega, 0.5, 0.5);
    const TorusFunction before = sys.vector_field();
    set_reference_rotation(sys, 0.2999, 1e-9);
    CHECK(sys.rho_f == 0.2999);
    CHECK(majorant(sys.vector_field() - before, 0.0, 0.0) < 1e-16);
}

TEST_CASE("step a divides a single low mode by its small divisor") {
    const PhiFunction g = cosine_mode({0, 2, -1}, 1e-3);
    const QpfSystem sys = make_system(std::sqrt(2.0) - 1.0, g, TorusFunction{}, kOmega, 0.5, 0.5);
    const StepAResult r = step_a_eliminate(sys, BigInt(10), 0.4, 0.4);
    const Complex expect = g.coeff({0, 2, -1}) / Complex(0.0, 2 * kPi * (2 * kOmega[0] - kOmega[1]));
    CHECK(std::abs(r.h.coeff({0, 2, -1}) - expect) < 1e-16);
    CHECK(majorant(r.sys.g, 0.0, 0.0) < 1e-16);
    CHECK(majorant(r.sys.f, 0.0, 0.0) < 1e-16);
}

TEST_CASE("step b does nothing when f vanishes") {
    const QpfSystem sys = make_system(std::sqrt(2.0) - 1.0, cosine_mode({0, 1, 0}, 1e-6), TorusFunction{}, kOmega,
                                      0.5, 0.5);
    const StepBResult r = step_b_reduce(sys, 0.05, 0.05, EngineeringOptions{});
    CHECK(majorant(r.htilde, 0.0, 0.0) == 0.0);
    CHECK(majorant(r.sys.f, 0.0, 0.0) == 0.0);
}

TEST_CASE("conjugation chain composition and inversion") {
    ChainElement a;
    a.kind = ChainElement::Kind::fiber_translation;
    a.h = cosine_mode({0, 1, 0}, 0.05);
    a.norm = 0.05;
    ChainElement b;
    b.kind = ChainElement::Kind::near_identity;
    b.h = sine_mode({1, 0, 1}, 1e-2);
    b.norm = 1e-2;
    ConjugationChain A, B, AB;
    A.append(a);
    B.append(b);
    AB.append(A);
    AB.append(B);
    for (double th : {0.0, 0.3, 0.77}) {
        const double p1 = 0.21, p2 = 0.64;
        const double direct = th + 1e-2 * std::sin(2 * kPi * (th + p2));
        CHECK(B.evaluate(th, p1, p2) == doctest::Approx(direct).epsilon(1e-14));
        CHECK(AB.evaluate(th, p1, p2) == doctest::Approx(A.evaluate(B.evaluate(th, p1, p2), p1, p2)).epsilon(1e-14));
        CHECK(std::abs(AB.inverse(AB.evaluate(th, p1, p2), p1, p2) - th) < 1e-12);
    }
    CHECK(AB.cumulative_norm() == doctest::Approx(0.05 + 1e-2));
}

TEST_CASE("mode-locked approximant picks the nearest resonance") {
    const ModeLockedApproximant at_alpha = mode_locked_approximant(kAlpha, kOmega, 1e-2);
    CHECK(at_alpha.k1 == 0);
    CHECK(at_alpha.k2 == 1);
    CHECK(at_alpha.distance < 1e-2 / 2);
    const ModeLockedApproximant at_zero = mode_locked_approximant(0.0, kOmega, 1e-2);
    CHECK(at_zero.k1 == 0);
    CHECK(at_zero.k2 == 0);
    CHECK(at_zero.distance == doctest::Approx(1e-2 / (4 * kPi)));
}

TEST_CASE("linearizable approximant of an integrable system is the system itself") {
    const Frequency fr = expand_continued_fraction(FrequencySpec::golden(), 60);
    CdOptions o;
    o.terms = 4;
    const CdSequence cd = select_cd_sequence(fr, o);
    const QpfSystem sys = make_system(std::sqrt(2.0) - 1.0, cosine_mode({0, 1, 0}, 1e-3), TorusFunction{},
                                      Omega{1.0, fr.alpha()}, 0.5, 0.5);
    const LinearizableApproximant la = linearizable_approximant(sys, cd, 1e-6, EngineeringOptions{});
    CHECK(la.distance < 1e-14);
    CHECK(la.rho_bar == doctest::Approx(std::sqrt(2.0) - 1.0).epsilon(1e-14));
    CHECK(la.reference_residual < 1e-14);
}
