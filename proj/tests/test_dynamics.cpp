#include "qpfkam/dynamics.hpp"
#include "qpfkam/error.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace qpfkam;

namespace {

constexpr double kPi = std::numbers::pi;
const Omega kOmega{1.0, 0.6180339887498949};

}  // namespace

TEST_CASE("circle distance wraps around") {
    CHECK(circle_distance(0.1, 0.9) == doctest::Approx(0.2));
    CHECK(circle_distance(2.25, 0.25) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(circle_distance(0.0, 0.5) == doctest::Approx(0.5));
}

TEST_CASE("rigid rotation plus a phi-only term keeps its mean rotation") {
    TorusFunction v = constant(0.3) + cosine_mode({0, 1, 0}, 0.1);
    const RotationEstimate e = rotation_number(CircleFlow{v, kOmega}, 1000.0);
    CHECK(std::abs(e.rho - 0.3) <= e.error);
    CHECK(e.error < 1e-9);
    CHECK(e.consistent);
}

TEST_CASE("integrate follows a constant field exactly") {
    const FlowTrajectory tr = integrate(CircleFlow{constant(0.25), kOmega}, 0.1, {0.0, 0.0}, 10.0);
    CHECK(tr.theta.back() == doctest::Approx(0.1 + 2.5).epsilon(1e-13));
    CHECK_THROWS_AS((void)integrate(CircleFlow{constant(0.25), kOmega}, 0.0, {0.0, 0.0}, 1.0, IntegrateOptions{0.5}),
                    Error);
}

TEST_CASE("autonomous locked flow has zero rotation") {
    const TorusFunction v = constant(0.05) + sine_mode({1, 0, 0}, 0.1);
    const RotationEstimate e = rotation_number(CircleFlow{v, kOmega}, 1000.0);
    CHECK(std::abs(e.rho) < 1e-6);
}

TEST_CASE("projective flow of a rotation generator is constant") {
    const double beta = 0.7;
    const ProjectiveFlow p = projective_flow(Sl2Flow::constant(0.0, -beta, beta, 0.0, kOmega));
    CHECK(p.flow.field.coeff({}).real() == doctest::Approx(beta / kPi));
    CHECK(majorant(p.flow.field - constant(beta / kPi), 0.0, 0.0) < 1e-15);
    CHECK(p.validation_error < 1e-8);
}

TEST_CASE("projective flow of a diagonal generator") {
    const double a = 0.2;
    const ProjectiveFlow p = projective_flow(Sl2Flow::constant(a, 0.0, 0.0, -a, kOmega));
    const TorusFunction expect = sine_mode({1, 0, 0}, -a / kPi);
    CHECK(majorant(p.flow.field - expect, 0.0, 0.0) < 1e-15);
}

TEST_CASE("Lyapunov exponent of an elliptic and a hyperbolic generator") {
    const LyapunovEstimate rot = lyapunov_exponent(Sl2Flow::constant(0.0, -1.0, 1.0, 0.0, kOmega), 1e3);
    CHECK(std::abs(rot.lambda) < 1e-2);
    const LyapunovEstimate hyp = lyapunov_exponent(Sl2Flow::constant(0.1, 0.0, 0.0, -0.1, kOmega), 1e3);
    CHECK(hyp.lambda == doctest::Approx(0.1).epsilon(1e-2));
}

TEST_CASE("trace defect of a constant generator") {
    CHECK(Sl2Flow::constant(0.1, 0.0, 0.0, -0.1, kOmega).trace_defect() == doctest::Approx(0.0));
    CHECK(Sl2Flow::constant(0.1, 0.0, 0.0, 0.1, kOmega).trace_defect() == doctest::Approx(0.2));
}

TEST_CASE("conjugacy of a rigid rotation with itself under a fiber translation") {
    // theta = theta_bar + h(phi) maps theta_bar' = rho to theta' = rho + d_omega h
    const PhiFunction h = sine_mode({0, 1, 0}, 0.05);
    ConjugationChain chain;
    ChainElement e;
    e.h = h;
    chain.append(e);
    const TorusFunction va = constant(0.3) + derive_omega(h, kOmega);
    ConjugacyOptions o;
    o.samples = 5;
    o.T = 5.0;
    const ConjugacyReport r = verify_conjugacy(chain, CircleFlow{va, kOmega}, CircleFlow{constant(0.3), kOmega}, o);
    CHECK(r.max_defect < 1e-10);
}
