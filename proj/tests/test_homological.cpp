#include "qpfkam/error.hpp"
#include "qpfkam/homological.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace qpfkam;

namespace {

constexpr double kPi = std::numbers::pi;
const Omega kOmega{1.0, 0.6180339887498949};
const double kRho = std::sqrt(2.0) - 1.0;

HomologicalParams params(int K) {
    HomologicalParams p;
    p.rho = kRho;
    p.omega = kOmega;
    p.K = K;
    p.s = 0.5;
    p.r = 0.5;
    p.delta = 0.2;
    p.sigma = 0.1;
    p.gamma = 0.05;
    p.tau = 3.0;
    p.waive_degree_condition = true;
    return p;
}

}  // namespace

TEST_CASE("mode lattice sizes") {
    // |k1| + |k2| < b has 2 b^2 - 2 b + 1 points
    for (int b = 1; b < 8; ++b) CHECK(mode_lattice(b).size() == static_cast<std::size_t>(2 * b * b - 2 * b + 1));
}

TEST_CASE("g = 0 reduces to division by the small divisor") {
    TorusFunction f;
    f.add_real_pair({1, 1, 0}, Complex(1e-6, 0.0));
    const HomologicalSolution sol = solve_homological(f, PhiFunction{}, params(6));
    const Complex expect = Complex(1e-6, 0.0) / Complex(0.0, 2 * kPi * (kOmega[0] + kRho));
    CHECK(std::abs(sol.h.coeff({1, 1, 0}) - expect) < 1e-20);
    CHECK(sol.residual < 1e-20);
}

TEST_CASE("Neumann solution matches the dense solve") {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> N(0.0, 1.0);
    PhiFunction g;
    for (int k1 = -3; k1 <= 3; ++k1)
        for (int k2 = 0; k2 <= 3; ++k2)
            if ((k2 > 0 || k1 > 0) && std::abs(k1) + k2 <= 3) g.add_real_pair({0, k1, k2}, 1e-9 * Complex(N(rng), N(rng)));
    TorusFunction f;
    for (int l = 1; l <= 3; ++l)
        for (int k1 = -2; k1 <= 2; ++k1)
            for (int k2 = -2; k2 <= 2; ++k2) f.add_real_pair({l, k1, k2}, 1e-9 * Complex(N(rng), N(rng)));
    const int K = 6;
    const HomologicalSolution sol = solve_homological(f, g, params(K));
    double worst = 0.0;
    for (int l = -K + 1; l < K; ++l) {
        if (l == 0) continue;
        const ModeSystem sys = build_mode_system(g, l, K, kRho, kOmega, 0.4, true);
        std::vector<Complex> rhs;
        for (const auto& [k1, k2] : sys.lattice) rhs.push_back(f.coeff({l, k1, k2}));
        const auto x = dense_oracle_solve(sys, rhs);
        for (std::size_t i = 0; i < x.size(); ++i) {
            const Complex h = sol.h.coeff({l, sys.lattice[i].first, sys.lattice[i].second});
            if (std::abs(x[i]) > 1e-30) worst = std::max(worst, std::abs(h - x[i]) / std::abs(x[i]));
        }
    }
    CHECK(worst <= 1e-10);
}

TEST_CASE("resonant rotation violates dominance") {
    TorusFunction f;
    f.add_real_pair({1, 0, 0}, Complex(1e-9, 0.0));
    HomologicalParams p = params(4);
    p.rho = kOmega[1];  // l = 1, k = (0, -1) is an exact resonance
    CHECK_THROWS_WITH_AS((void)solve_homological(f, PhiFunction{}, p), doctest::Contains("dominance-violated"), Error);
}

TEST_CASE("theta-mean of f is rejected") {
    TorusFunction f = cosine_mode({0, 1, 0}, 1e-9);
    CHECK_THROWS_AS((void)solve_homological(f, PhiFunction{}, params(4)), Error);
}

TEST_CASE("precondition audit formulas") {
    const PreconditionAudit a = check_preconditions(1e-41, 1e-40, 0.1, 0.05, 3.0, 8, kRho, kOmega);
    CHECK(a.K_formula == static_cast<int>(std::floor(std::log(1e40) / 0.1)));
    CHECK(a.degree_rhs == doctest::Approx(std::pow(0.05 * 0.05 / 1e-41, 1.0 / 9.0)));
    CHECK(a.degree_ok);
    CHECK(a.dominance_ok);
    const PreconditionAudit b = check_preconditions(1e-3, 1e-3, 0.1, 0.05, 3.0, 8, kRho, kOmega);
    CHECK_FALSE(b.degree_ok);
}

TEST_CASE("certified bounds on a small instance") {
    TorusFunction f = sine_mode({1, 1, 0}, 1e-40) + cosine_mode({2, 0, 1}, 5e-41);
    const PhiFunction g = cosine_mode({0, 1, 0}, 1e-41);
    HomologicalParams p = params(8);
    p.waive_degree_condition = false;
    const HomologicalSolution sol = solve_homological(f, g, p);
    CHECK(sol.bounds_certified);
    CHECK(sol.h_norm <= sol.h_bound);
    CHECK(sol.P_norm <= sol.P_bound);
    for (const auto& m : sol.modes) CHECK(m.C < 0.5);
}
