#include "qpfkam/arithmetic.hpp"

#include "qpfkam/error.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <map>

namespace qpfkam {

namespace {

constexpr const char* kModule = "arithmetic";

[[noreturn]] void fail(Errc code, const std::string& detail) { throw Error(kModule, code, detail); }

int sgn(const BigInt& x) { return x.sign(); }

BigInt floor_div(const BigInt& a, const BigInt& b) {
    BigInt q = a / b;  // truncates toward zero
    if ((a % b != 0) && ((a.sign() < 0) != (b.sign() < 0))) q -= 1;
    return q;
}

/// Euclidean expansion of a rational in (0,1); a_0 = 0 is dropped.
std::vector<BigInt> rational_quotients(const BigRational& x, std::size_t cap) {
    std::vector<BigInt> out;
    BigInt num = boost::multiprecision::numerator(x);
    BigInt den = boost::multiprecision::denominator(x);
    // skip a_0
    BigInt a0 = floor_div(num, den);
    num -= a0 * den;
    while (num != 0 && out.size() < cap) {
        BigInt a = den / num;
        BigInt r = den - a * num;
        out.push_back(a);
        den = num;
        num = r;
    }
    return out;
}

struct SurdState {
    BigInt P, D, Q;
};

SurdState normalize_surd(const FrequencySpec& s) {
    if (s.c == 0) fail(Errc::invalid_argument, "quadratic surd with c = 0");
    if (s.d <= 0) fail(Errc::invalid_argument, "quadratic surd with d <= 0");
    BigInt a = s.a, b = s.b, c = s.c;
    if (b < 0) {
        a = -a;
        b = -b;
        c = -c;
    }
    const BigInt absc = abs(c);
    SurdState st;
    st.P = a * absc;
    st.D = b * b * s.d * c * c;
    st.Q = c * absc;
    return st;
}

bool is_square(const BigInt& n) {
    if (n < 0) return false;
    const BigInt r = isqrt(n);
    return r * r == n;
}

void fill_convergents(Frequency& f, std::size_t count) {
    f.p.clear();
    f.q.clear();
    if (count == 0) return;
    f.p.push_back(0);
    f.q.push_back(1);
    if (count == 1) return;
    f.p.push_back(1);
    f.q.push_back(f.partial_quotients.at(0));
    for (std::size_t k = 2; k < count; ++k) {
        const BigInt& a = f.partial_quotients.at(k - 1);
        f.p.push_back(a * f.p[k - 1] + f.p[k - 2]);
        f.q.push_back(a * f.q[k - 1] + f.q[k - 2]);
    }
}

void check_unit_interval(const AlphaModel& m) {
    if (sign_linear(m, 0, 1) <= 0 || sign_linear(m, -1, 1) >= 0)
        fail(Errc::invalid_argument, "frequency must lie in (0,1)");
}

void expand_surd(Frequency& f, std::size_t depth) {
    SurdState st = normalize_surd(f.spec);
    if (is_square(st.D)) {
        const BigInt r = isqrt(st.D);
        FrequencySpec rs = FrequencySpec::from_rational(st.P + r, st.Q);
        const auto saved = f.spec;
        f.spec = rs;
        f.model.surd = false;
        f.model.lo = f.model.hi = BigRational(st.P + r, st.Q);
        check_unit_interval(f.model);
        f.partial_quotients = rational_quotients(f.model.lo, depth);
        f.rational_input = true;
        fill_convergents(f, std::min(depth, f.partial_quotients.size() + 1));
        f.spec = saved;
        return;
    }
    f.model.surd = true;
    f.model.P = st.P;
    f.model.D = st.D;
    f.model.Q = st.Q;
    check_unit_interval(f.model);

    const BigInt s = isqrt(st.D);
    // x_1 = 1/alpha, since a_0 = 0.
    BigInt P = -st.P;
    BigInt Q = (st.D - st.P * st.P) / st.Q;
    std::map<std::pair<BigInt, BigInt>, std::size_t> seen;
    std::vector<BigInt> quotients;
    std::optional<std::size_t> period_start;
    const std::size_t cap = std::max<std::size_t>(depth, 1) + 2'000'000;
    while (quotients.size() < cap) {
        auto key = std::make_pair(P, Q);
        auto it = seen.find(key);
        if (it != seen.end()) {
            period_start = it->second;
            break;
        }
        seen.emplace(key, quotients.size());
        const BigInt a = Q > 0 ? floor_div(P + s, Q) : floor_div(P + s + 1, Q);
        quotients.push_back(a);
        const BigInt Pn = a * Q - P;
        Q = (st.D - Pn * Pn) / Q;
        P = Pn;
    }
    if (!period_start) fail(Errc::construction_failed, "quadratic surd period not found");
    f.model.pre_period.assign(quotients.begin(), quotients.begin() + static_cast<long>(*period_start));
    f.model.period.assign(quotients.begin() + static_cast<long>(*period_start), quotients.end());
    f.partial_quotients.clear();
    for (std::size_t k = 0; k < depth; ++k) {
        if (k < f.model.pre_period.size())
            f.partial_quotients.push_back(f.model.pre_period[k]);
        else
            f.partial_quotients.push_back(
                f.model.period[(k - f.model.pre_period.size()) % f.model.period.size()]);
    }
    fill_convergents(f, depth);
}

void expand_interval(Frequency& f, const BigRational& lo, const BigRational& hi, std::size_t depth) {
    f.model.surd = false;
    f.model.lo = lo;
    f.model.hi = hi;
    if (lo <= 0 || hi >= 1) fail(Errc::invalid_argument, "frequency interval must lie in (0,1)");
    if (lo == hi) {
        f.partial_quotients = rational_quotients(lo, depth);
        f.rational_input = true;
        fill_convergents(f, std::min(depth, f.partial_quotients.size() + 1));
        return;
    }
    const auto ql = rational_quotients(lo, depth + 1);
    const auto qh = rational_quotients(hi, depth + 1);
    std::size_t agree = 0;
    while (agree < ql.size() && agree < qh.size() && ql[agree] == qh[agree]) ++agree;
    // The last agreeing quotient of a terminating endpoint is not certain.
    if ((agree == ql.size() || agree == qh.size()) && agree > 0) --agree;
    if (agree < depth)
        fail(Errc::precision_exhausted,
             "decimal frequency certifies " + std::to_string(agree) + " quotients, " +
                 std::to_string(depth) + " requested");
    f.partial_quotients.assign(ql.begin(), ql.begin() + static_cast<long>(depth));
    fill_convergents(f, depth);
}

}  // namespace

FrequencySpec FrequencySpec::golden() { return quadratic_surd(-1, 1, 2, 5); }

FrequencySpec FrequencySpec::silver() { return quadratic_surd(-1, 1, 1, 2); }

FrequencySpec FrequencySpec::quadratic_surd(BigInt a, BigInt b, BigInt c, BigInt d) {
    FrequencySpec s;
    s.kind = Kind::quadratic;
    s.a = std::move(a);
    s.b = std::move(b);
    s.c = std::move(c);
    s.d = std::move(d);
    return s;
}

FrequencySpec FrequencySpec::from_quotients(std::vector<BigInt> q) {
    FrequencySpec s;
    s.kind = Kind::quotients;
    s.quotients = std::move(q);
    return s;
}

FrequencySpec FrequencySpec::from_decimal(std::string value, std::string uncertainty) {
    FrequencySpec s;
    s.kind = Kind::decimal;
    s.value = std::move(value);
    s.uncertainty = std::move(uncertainty);
    return s;
}

FrequencySpec FrequencySpec::from_rational(BigInt num, BigInt den) {
    FrequencySpec s;
    s.kind = Kind::rational;
    s.num = std::move(num);
    s.den = std::move(den);
    return s;
}

BigRational parse_decimal(const std::string& text) {
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    bool neg = false;
    if (i < n && (text[i] == '+' || text[i] == '-')) neg = text[i++] == '-';
    BigInt mant = 0;
    long exp10 = 0;
    bool digits = false;
    while (i < n && std::isdigit(static_cast<unsigned char>(text[i]))) {
        mant = mant * 10 + (text[i++] - '0');
        digits = true;
    }
    if (i < n && text[i] == '.') {
        ++i;
        while (i < n && std::isdigit(static_cast<unsigned char>(text[i]))) {
            mant = mant * 10 + (text[i++] - '0');
            --exp10;
            digits = true;
        }
    }
    if (!digits) fail(Errc::invalid_argument, "not a decimal literal: '" + text + "'");
    if (i < n && (text[i] == 'e' || text[i] == 'E')) {
        ++i;
        bool eneg = false;
        if (i < n && (text[i] == '+' || text[i] == '-')) eneg = text[i++] == '-';
        long e = 0;
        bool edigits = false;
        while (i < n && std::isdigit(static_cast<unsigned char>(text[i]))) {
            e = e * 10 + (text[i++] - '0');
            edigits = true;
        }
        if (!edigits) fail(Errc::invalid_argument, "bad exponent in '" + text + "'");
        exp10 += eneg ? -e : e;
    }
    while (i < n && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i != n) fail(Errc::invalid_argument, "trailing characters in '" + text + "'");
    BigInt p10 = 1;
    for (long k = 0; k < std::abs(exp10); ++k) p10 *= 10;
    BigRational r = exp10 >= 0 ? BigRational(mant * p10) : BigRational(mant, p10);
    return neg ? BigRational(-r) : r;
}

double Frequency::alpha() const { return alpha_big().convert_to<double>(); }

BigFloat Frequency::alpha_big() const {
    init_bigfloat();
    if (model.surd) {
        BigFloat P, D, Q;
        mpfr_set_z(P.backend().data(), model.P.backend().data(), MPFR_RNDN);
        mpfr_set_z(D.backend().data(), model.D.backend().data(), MPFR_RNDN);
        mpfr_set_z(Q.backend().data(), model.Q.backend().data(), MPFR_RNDN);
        return (P + sqrt(D)) / Q;
    }
    const BigRational mid = (model.lo + model.hi) / 2;
    BigFloat n, d;
    const BigInt nn = boost::multiprecision::numerator(mid);
    const BigInt dd = boost::multiprecision::denominator(mid);
    mpfr_set_z(n.backend().data(), nn.backend().data(), MPFR_RNDN);
    mpfr_set_z(d.backend().data(), dd.backend().data(), MPFR_RNDN);
    return n / d;
}

int sign_linear(const AlphaModel& m, const BigInt& u, const BigInt& v) {
    if (v == 0) return sgn(u);
    if (m.surd) {
        const BigInt A = u * m.Q + v * m.P;
        const int sA = sgn(A), sB = sgn(v);
        int s;
        if (sA >= 0 && sB > 0)
            s = (sA == 0 && sB == 0) ? 0 : 1;
        else if (sA <= 0 && sB < 0)
            s = -1;
        else
            s = (A * A > v * v * m.D) ? sA : sB;
        return s * sgn(m.Q);
    }
    const int s1 = sgn(boost::multiprecision::numerator(BigRational(u) + BigRational(v) * m.lo));
    if (m.lo == m.hi) return s1;
    const int s2 = sgn(boost::multiprecision::numerator(BigRational(u) + BigRational(v) * m.hi));
    if (s1 != s2 || s1 == 0)
        throw Error(kModule, Errc::depth_insufficient,
                    "alpha is not known precisely enough to decide a sign");
    return s1;
}

std::size_t certified_depth(const FrequencySpec& spec) {
    if (spec.kind == FrequencySpec::Kind::quadratic) return std::numeric_limits<std::size_t>::max();
    if (spec.kind == FrequencySpec::Kind::quotients) return spec.quotients.size();
    if (spec.kind == FrequencySpec::Kind::rational)
        return rational_quotients(BigRational(spec.num, spec.den), std::numeric_limits<std::size_t>::max())
            .size();
    const BigRational v = parse_decimal(spec.value);
    const BigRational u = abs(parse_decimal(spec.uncertainty));
    if (u == 0) return rational_quotients(v, std::numeric_limits<std::size_t>::max()).size();
    const auto ql = rational_quotients(v - u, 100000);
    const auto qh = rational_quotients(v + u, 100000);
    std::size_t agree = 0;
    while (agree < ql.size() && agree < qh.size() && ql[agree] == qh[agree]) ++agree;
    if ((agree == ql.size() || agree == qh.size()) && agree > 0) --agree;
    return agree;
}

Frequency expand_continued_fraction(const FrequencySpec& spec, std::size_t depth) {
    if (depth == 0) fail(Errc::invalid_argument, "depth must be positive");
    Frequency f;
    f.spec = spec;
    switch (spec.kind) {
        case FrequencySpec::Kind::quadratic:
            expand_surd(f, depth);
            break;
        case FrequencySpec::Kind::rational: {
            if (spec.den == 0) fail(Errc::invalid_argument, "rational with zero denominator");
            const BigRational r(spec.num, spec.den);
            expand_interval(f, r, r, depth);
            break;
        }
        case FrequencySpec::Kind::decimal: {
            const BigRational v = parse_decimal(spec.value);
            const BigRational u = abs(parse_decimal(spec.uncertainty));
            expand_interval(f, v - u, v + u, depth);
            break;
        }
        case FrequencySpec::Kind::quotients: {
            const auto& a = spec.quotients;
            if (a.empty()) fail(Errc::invalid_argument, "empty quotient list");
            for (const auto& x : a)
                if (x < 1) fail(Errc::invalid_argument, "partial quotients must be positive");
            if (depth > a.size())
                fail(Errc::precision_exhausted, "quotient list has " + std::to_string(a.size()) +
                                                    " entries, " + std::to_string(depth) + " requested");
            // alpha lies between p_L/q_L and (p_L+p_{L-1})/(q_L+q_{L-1}).
            BigInt p0 = 0, p1 = 1, q0 = 1, q1 = a[0];
            for (std::size_t k = 1; k < a.size(); ++k) {
                BigInt p2 = a[k] * p1 + p0, q2 = a[k] * q1 + q0;
                p0 = p1;
                p1 = p2;
                q0 = q1;
                q1 = q2;
            }
            const BigRational e1(p1, q1), e2(p1 + p0, q1 + q0);
            f.model.surd = false;
            f.model.lo = std::min(e1, e2);
            f.model.hi = std::max(e1, e2);
            f.partial_quotients.assign(a.begin(), a.begin() + static_cast<long>(depth));
            fill_convergents(f, depth);
            break;
        }
    }
    return f;
}

namespace {

/// ||k alpha|| as the positive linear form u + v alpha.
std::pair<BigInt, BigInt> torus_norm_form(const AlphaModel& m, const BigInt& k, double alpha) {
    BigInt fl(static_cast<long long>(std::floor(static_cast<double>(k) * alpha)));
    while (sign_linear(m, -fl, k) < 0) fl -= 1;
    while (sign_linear(m, -(fl + 1), k) >= 0) fl += 1;
    // kalpha - fl versus fl + 1 - kalpha
    if (sign_linear(m, -2 * fl - 1, 2 * k) <= 0) return {-fl, k};
    return {fl + 1, -k};
}

double form_value(const std::pair<BigInt, BigInt>& f, const BigFloat& alpha) {
    BigFloat u, v;
    mpfr_set_z(u.backend().data(), f.first.backend().data(), MPFR_RNDN);
    mpfr_set_z(v.backend().data(), f.second.backend().data(), MPFR_RNDN);
    return BigFloat(u + v * alpha).convert_to<double>();
}

}  // namespace

BestApproxReport verify_best_approx(const Frequency& freq, std::size_t n, std::uint64_t max_scan) {
    if (n + 1 >= freq.q.size())
        fail(Errc::depth_insufficient, "convergents needed through n+1 = " + std::to_string(n + 1));
    BestApproxReport rep;
    rep.n = n;
    const double alpha = freq.alpha();
    const BigFloat alpha_b = freq.alpha_big();
    const BigInt& qn = freq.q[n];
    const BigInt& qn1 = freq.q[n + 1];
    bool ok = true;
    rep.min_ratio = std::numeric_limits<double>::infinity();
    if (n >= 1 && qn > 1) {
        if (qn - 1 > BigInt(max_scan)) fail(Errc::invalid_argument, "best-approximation scan too large");
        const auto ref = torus_norm_form(freq.model, freq.q[n - 1], alpha);
        const double ref_v = form_value(ref, alpha_b);
        const std::uint64_t K = static_cast<std::uint64_t>(qn);
        for (std::uint64_t k = 1; k < K; ++k) {
            const BigInt kb(k);
            const auto f = torus_norm_form(freq.model, kb, alpha);
            if (sign_linear(freq.model, f.first - ref.first, f.second - ref.second) < 0) ok = false;
            rep.min_ratio = std::min(rep.min_ratio, form_value(f, alpha_b) / ref_v);
            ++rep.scanned;
        }
    }
    const auto fn = torus_norm_form(freq.model, qn, alpha);
    const BigInt s = qn + qn1;
    if (sign_linear(freq.model, s * fn.first - 1, s * fn.second) < 0) ok = false;
    if (sign_linear(freq.model, 1 - qn1 * fn.first, -qn1 * fn.second) < 0) ok = false;
    BigFloat sf, q1f;
    mpfr_set_z(sf.backend().data(), s.backend().data(), MPFR_RNDN);
    mpfr_set_z(q1f.backend().data(), qn1.backend().data(), MPFR_RNDN);
    BigFloat un, vn;
    mpfr_set_z(un.backend().data(), fn.first.backend().data(), MPFR_RNDN);
    mpfr_set_z(vn.backend().data(), fn.second.backend().data(), MPFR_RNDN);
    const BigFloat norm = un + vn * alpha_b;
    rep.lower_slack = BigFloat(norm - 1 / sf).convert_to<double>();
    rep.upper_slack = BigFloat(1 / q1f - norm).convert_to<double>();
    rep.pass = ok;
    return rep;
}

LiouvilleReport compute_liouville_exponents(const Frequency& freq, const CdSequence* seq,
                                            unsigned bridge_param) {
    if (freq.q.size() < 3) fail(Errc::depth_insufficient, "Liouville exponents need depth >= 3");
    LiouvilleReport rep;
    const double ln2 = std::log(2.0);
    std::size_t admissible = 0;
    for (std::size_t n = 0; n + 1 < freq.q.size(); ++n) {
        if (freq.q[n] < 2 || freq.q[n + 1] < 3) continue;
        ++admissible;
        const double v = std::log(log2_of(freq.q[n + 1]) * ln2) / (log2_of(freq.q[n]) * ln2);
        if (v > rep.u_tilde || admissible == 1) {
            rep.u_tilde = v;
            rep.attaining_n = n;
        }
    }
    if (admissible == 0) fail(Errc::depth_insufficient, "no admissible convergent pair");
    // A maximum near the end of the computed range may keep growing.
    rep.lower_bound_only = rep.attaining_n + 4 >= freq.q.size();
    rep.u = rep.u_tilde + 4.0 * std::log(static_cast<double>(bridge_param)) / ln2;
    if (seq) {
        const auto& t = seq->terms;
        for (std::size_t k = 1; k < t.size(); ++k)
            if (compare_pow(t[k - 1].Q, bridge_param, t[k].Q) > 0) rep.cd_growth_ok = false;
        for (std::size_t k = 1; k + 1 < t.size(); ++k) {
            if (t[k].Q < 2) continue;
            const double v = std::log(t[k + 1].log2_Q * ln2) / (t[k].log2_Q * ln2);
            rep.cd_sup = std::max(rep.cd_sup, v);
            if (v > rep.u) rep.cd_sup_ok = false;
        }
    }
    return rep;
}

DiophantineReport audit_diophantine(const BigFloat& rho, const Frequency& freq, double gamma,
                                    double tau, int L) {
    if (!(tau > 2.0) || !(gamma > 0.0) || L < 1)
        fail(Errc::invalid_argument, "audit needs tau > 2, gamma > 0, L >= 1");
    init_bigfloat();
    const BigFloat alpha_b = freq.alpha_big();
    const long double alpha = alpha_b.convert_to<long double>();
    const long double r = rho.convert_to<long double>();
    struct Cand {
        int k1, k2, l;
        long double m;
    };
    std::vector<Cand> cands;
    long double best = std::numeric_limits<long double>::infinity();
    for (int l = 1; l <= L; ++l) {
        const int rest = L - l;
        for (int k2 = -rest; k2 <= rest; ++k2) {
            const int span = rest - std::abs(k2);
            const long double base = k2 * alpha + l * r;
            // Only k1 near -base can be minimal for this (k2,l), but the
            // weight changes with |k1|, so scan the full admissible range.
            for (int k1 = -span; k1 <= span; ++k1) {
                const int deg = std::abs(k1) + std::abs(k2) + l;
                const long double m = std::fabs(k1 + base) * std::pow(static_cast<long double>(deg), tau);
                if (m <= best * (1 + 1e-9L) + 1e-15L * std::pow(static_cast<long double>(deg), tau)) {
                    if (m < best) best = m;
                    cands.push_back({k1, k2, l, m});
                }
            }
        }
    }
    DiophantineReport rep;
    rep.gamma = gamma;
    rep.tau = tau;
    rep.scan_bound = L;
    BigFloat best_b = -1;
    for (const auto& c : cands) {
        const int deg = std::abs(c.k1) + std::abs(c.k2) + c.l;
        if (c.m > best * (1 + 1e-9L) + 1e-15L * std::pow(static_cast<long double>(deg), tau)) continue;
        const BigFloat v = abs(BigFloat(c.k1) + BigFloat(c.k2) * alpha_b + BigFloat(c.l) * rho) *
                           pow(BigFloat(deg), BigFloat(tau));
        if (best_b < 0 || v < best_b) {
            best_b = v;
            rep.k1 = c.k1;
            rep.k2 = c.k2;
            rep.l = c.l;
        }
    }
    rep.min_margin = best_b.convert_to<double>();
    rep.pass = rep.min_margin >= gamma;
    return rep;
}

DiophantineReport audit_diophantine(double rho, const Frequency& freq, double gamma, double tau, int L) {
    init_bigfloat();
    return audit_diophantine(BigFloat(rho), freq, gamma, tau, L);
}

}  // namespace qpfkam
