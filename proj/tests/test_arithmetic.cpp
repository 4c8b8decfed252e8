#include "qpfkam/arithmetic.hpp"
#include "qpfkam/error.hpp"

#include <doctest.h>

#include <cmath>

using namespace qpfkam;

namespace {

/// q_n for the periodic expansion [0; a, a, a, ...], straight from the recurrence.
std::vector<BigInt> periodic_q(int a, std::size_t count) {
    std::vector<BigInt> q{1, a};
    while (q.size() < count) q.push_back(a * q[q.size() - 1] + q[q.size() - 2]);
    q.resize(count);
    return q;
}

}  // namespace

TEST_CASE("golden and silver expansions follow their recurrences") {
    for (int a : {1, 2}) {
        const Frequency fr = expand_continued_fraction(a == 1 ? FrequencySpec::golden() : FrequencySpec::silver(), 40);
        REQUIRE(fr.q.size() == 40);
        for (const auto& x : fr.partial_quotients) CHECK(x == a);
        const auto q = periodic_q(a, 40);
        for (std::size_t n = 0; n < 40; ++n) CHECK(fr.q[n] == q[n]);
        // p_n q_{n-1} - p_{n-1} q_n = (-1)^(n-1)
        for (std::size_t n = 1; n < 40; ++n) {
            const BigInt det = fr.p[n] * fr.q[n - 1] - fr.p[n - 1] * fr.q[n];
            CHECK(det == ((n % 2) ? 1 : -1));
        }
    }
}

TEST_CASE("golden alpha value") {
    const Frequency fr = expand_continued_fraction(FrequencySpec::golden(), 30);
    CHECK(fr.alpha() == doctest::Approx(0.6180339887498949).epsilon(1e-15));
    CHECK_FALSE(fr.rational_input);
}

TEST_CASE("rational input stops early and is flagged") {
    const Frequency fr = expand_continued_fraction(FrequencySpec::from_rational(3, 7), 20);
    CHECK(fr.rational_input);
    // 3/7 = [0; 2, 3]
    REQUIRE(fr.partial_quotients.size() == 2);
    CHECK(fr.partial_quotients[0] == 2);
    CHECK(fr.partial_quotients[1] == 3);
    CHECK(fr.q.back() == 7);
}

TEST_CASE("decimal parsing is exact") {
    CHECK(parse_decimal("0.25") == BigRational(1, 4));
    CHECK(parse_decimal("-1.5e-3") == BigRational(-3, 2000));
}

TEST_CASE("quotient list reproduces the golden convergents") {
    const Frequency fr = expand_continued_fraction(FrequencySpec::from_quotients(std::vector<BigInt>(12, 1)), 12);
    const auto q = periodic_q(1, 12);
    for (std::size_t n = 0; n < fr.q.size(); ++n) CHECK(fr.q[n] == q[n]);
}

TEST_CASE("best approximation and two-sided bounds up to q_n <= 1e4") {
    for (const auto& spec : {FrequencySpec::golden(), FrequencySpec::silver()}) {
        const Frequency fr = expand_continued_fraction(spec, 30);
        for (std::size_t n = 1; n + 1 < fr.q.size() && fr.q[n] <= 10000; ++n) {
            const BestApproxReport r = verify_best_approx(fr, n);
            CHECK(r.pass);
            CHECK(r.lower_slack > 0.0);
            CHECK(r.upper_slack > 0.0);
        }
    }
}

TEST_CASE("convergent oracle agrees with stored convergents and runs past them") {
    const Frequency fr = expand_continued_fraction(FrequencySpec::golden(), 40);
    ConvergentOracle oracle(fr);
    for (std::size_t n = 0; n < 40; ++n) CHECK(oracle.q(n) == fr.q[n]);
    const auto q = periodic_q(1, 120);
    CHECK(oracle.q(119) == q[119]);
}

TEST_CASE("exact sign of u + v alpha") {
    const Frequency fr = expand_continued_fraction(FrequencySpec::golden(), 40);
    CHECK(sign_linear(fr.model, -1, 2) > 0);  // 2 alpha - 1 = 0.236
    CHECK(sign_linear(fr.model, 1, -2) < 0);
    CHECK(sign_linear(fr.model, -5, 8) < 0);  // 8 alpha - 5 = -0.0557
}

TEST_CASE("golden CD sequence indices") {
    const Frequency fr = expand_continued_fraction(FrequencySpec::golden(), 60);
    CdOptions o;
    o.terms = 4;
    const CdSequence cd = select_cd_sequence(fr, o);
    REQUIRE(cd.terms.size() == 4);
    CHECK(cd.terms[0].n == 1);
    CHECK(cd.terms[1].n == 13);
    CHECK(cd.terms[1].Q == 377);
    CHECK(cd.terms[2].n == 108);
    CHECK(cd.terms[3].n == 868);
    CHECK(validate_cd_sequence(fr, cd).ok);
}

TEST_CASE("Liouville exponents keep U - U~ = 12 for the default bridge parameter") {
    const Frequency fr = expand_continued_fraction(FrequencySpec::golden(), 60);
    const LiouvilleReport r = compute_liouville_exponents(fr);
    CHECK(r.u == doctest::Approx(r.u_tilde + 12.0));
    CHECK(r.u_tilde > 0.0);
    CHECK(r.u_tilde < 1.0);
}

TEST_CASE("Diophantine audit rejects a resonant rotation") {
    const Frequency fr = expand_continued_fraction(FrequencySpec::golden(), 40);
    const DiophantineReport bad = audit_diophantine(0.5, fr, 0.05, 3.0, 20);
    CHECK_FALSE(bad.pass);
    const DiophantineReport good = audit_diophantine(std::sqrt(2.0) - 1.0, fr, 0.05, 3.0, 60);
    CHECK(good.pass);
}
