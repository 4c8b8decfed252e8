#include "qpfkam/schedule.hpp"

#include "qpfkam/error.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>

namespace qpfkam {

namespace {

using std::size_t;

BigFloat bf(double x) { return BigFloat(x); }

std::string dec(const BigFloat& x) { return to_decimal(x, 16); }

/// Collects inequalities of the form exp(lhs) < exp(rhs) (or <=) given in log space.
class Ledger {
public:
    explicit Ledger(std::vector<AuditItem>& items) : items_(items) {}

    bool log_less(const std::string& group, const std::string& name, int n, long long nu, const BigFloat& ln_lhs,
                  const BigFloat& ln_rhs, bool strict = true) {
        const bool ok = strict ? ln_lhs < ln_rhs : ln_lhs <= ln_rhs;
        items_.push_back({group, name, n, nu, exp_to_decimal(ln_lhs), exp_to_decimal(ln_rhs), ok});
        return ok;
    }

    bool less(const std::string& group, const std::string& name, int n, long long nu, const BigFloat& lhs,
              const BigFloat& rhs, bool strict = true) {
        const bool ok = strict ? lhs < rhs : lhs <= rhs;
        items_.push_back({group, name, n, nu, dec(lhs), dec(rhs), ok});
        return ok;
    }

private:
    std::vector<AuditItem>& items_;
};

/// ln(e^a + e^b)
BigFloat log_add(const BigFloat& a, const BigFloat& b) {
    const BigFloat hi = a > b ? a : b;
    const BigFloat lo = a > b ? b : a;
    return hi + boost::multiprecision::log1p(boost::multiprecision::exp(lo - hi));
}

}  // namespace

BigInt q_star(const BigFloat& a) {
    if (!(a > 0)) throw Error("kamflow", Errc::invalid_argument, "Q_* needs a positive coefficient");
    // g(y) = a e^{y/4} - y with y = ln Q is convex; its largest root y* marks
    // the point beyond which ln Q < a Q^{1/4} holds for good.
    auto g = [&](const BigFloat& y) { return a * boost::multiprecision::exp(y / 4) - y; };
    // minimum of g sits at y_m = 4 ln(4/a)
    const BigFloat ym = 4 * boost::multiprecision::log(4 / a);
    if (g(ym) > 0) return BigInt(1);
    BigFloat lo = ym, hi = ym + 8;
    while (g(hi) <= 0) hi = ym + 2 * (hi - ym);
    for (int it = 0; it < 400; ++it) {
        const BigFloat mid = (lo + hi) / 2;
        (g(mid) > 0 ? hi : lo) = mid;
    }
    BigInt Q(boost::multiprecision::floor(boost::multiprecision::exp(hi)).convert_to<BigInt>());
    // settle the integer boundary exactly at working precision
    auto holds = [&](const BigInt& x) {
        return ln_of(x) < a * boost::multiprecision::pow(BigFloat(x), BigFloat(0.25));
    };
    while (!holds(Q)) ++Q;
    while (Q > 1 && holds(BigInt(Q - 1))) --Q;
    return Q;
}

ScheduleAudit audit_schedule(const Frequency& freq, const CdSequence& cd, const ScheduleParams& p) {
    using boost::multiprecision::exp;
    using boost::multiprecision::floor;
    using boost::multiprecision::log;
    init_bigfloat();
    if (p.n_max < 1) throw Error("kamflow", Errc::invalid_argument, "n_max must be at least 1");
    if (!(p.gamma > 0 && p.tau > 0 && p.s0 > 0 && p.r0 > 0))
        throw Error("kamflow", Errc::invalid_argument, "gamma, tau, s0, r0 must be positive");

    // Q_0 .. Q_{n_max+1}, the last one may come from the search lookahead
    std::vector<BigInt> Q;
    for (const auto& t : cd.terms) Q.push_back(t.Q);
    if (cd.lookahead) Q.push_back(cd.lookahead->Q);
    if (Q.size() < static_cast<size_t>(p.n_max) + 2)
        throw Error("kamflow", Errc::depth_insufficient,
                    "need " + std::to_string(p.n_max + 2) + " CD terms, have " + std::to_string(Q.size()));
    std::vector<BigFloat> lnQ;
    for (const auto& q : Q) lnQ.push_back(ln_of(q));

    ScheduleAudit out;
    const auto liou = compute_liouville_exponents(freq, &cd, p.bridge_param);
    out.u_tilde = liou.u_tilde;
    out.U = liou.u;
    out.c = p.c.value_or(1.01 * 10.0 * (p.tau + 3.0) / p.tau);
    out.c1 = out.c / (32.0 * (p.tau + 3.0) * std::log(3.0));
    out.ctauU = out.c * p.tau * out.U;
    if (!(out.c > 10.0 * (p.tau + 3.0) / p.tau))
        out.notes.push_back("c does not exceed 10 (tau+3)/tau");

    const BigFloat tau = bf(p.tau), gamma = bf(p.gamma), s0 = bf(p.s0);
    BigFloat r0 = bf(p.r0);
    const BigFloat ctauU = bf(out.c) * tau * bf(out.U);
    const BigFloat ln2 = log(BigFloat(2));

    // the standing assumptions 4 r_j < Delta_j and r_bar_j < Delta_j / 3 are
    // checked here; r0 is shrunk until both hold for every scheduled j
    for (int j = 1; j <= p.n_max + 1; ++j) {
        const BigFloat Delta = s0 / 10 / exp((j - 1) * ln2);
        const BigFloat Q3 = exp(3 * lnQ[j]);
        const BigFloat rmax = Delta * Q3 / 3;
        if (!(r0 < rmax)) {
            r0 = rmax / 2;
            out.notes.push_back("r0 shrunk to " + dec(r0) + " so that 4 r_j < Delta_j and r_bar_j < Delta_j/3");
        }
    }

    Ledger L(out.items);

    // Q_* and the small-parameter bound on eps_0
    const BigInt Qs = q_star(r0 / (40 * ctauU));
    out.ln_Qstar = ln_of(Qs);
    const BigFloat lnb1 = 12 * (tau + 3) * log(r0 * s0 * gamma) - log(boost::math::tgamma(tau + 1)) -
                          2 * ctauU * lnQ[1];
    const BigFloat lnb2 = -2 * ctauU;
    const BigFloat lnb3 = -40 * out.ln_Qstar * out.ln_Qstar * ctauU;
    out.ln_eps0_bound = std::min({lnb1, lnb2, lnb3});
    out.eps0_bound_decimal = exp_to_decimal(out.ln_eps0_bound, 16);
    out.ln_eps0 = p.ln_eps0.value_or(out.ln_eps0_bound - ln2);
    out.eps0_decimal = exp_to_decimal(out.ln_eps0, 16);
    const BigFloat le0 = out.ln_eps0;

    L.log_less("smallness", "eps0 < (r0 s0 gamma)^(12(tau+3)) / (tau! Q_1^(2 c tau U))", 0, 0, le0, lnb1);
    L.log_less("smallness", "eps0 < exp(-2 c tau U)", 0, 0, le0, lnb2);
    L.log_less("smallness", "eps0 < exp(-40 (ln Q_*)^2 c tau U)", 0, 0, le0, lnb3);
    // ln(1/eps0) < (1/eps0)^(1/(12(2 tau+3))), compared through logarithms
    L.log_less("smallness", "ln(1/eps0) < (1/eps0)^(1/(12(2tau+3)))", 0, 0, log(-le0), -le0 / (12 * (2 * tau + 3)));

    // sequences
    const int nm = p.n_max;
    std::vector<BigFloat> Delta(nm + 2), r(nm + 2), s(nm + 2), lne(nm + 2), lnet(nm + 2), lnK(nm + 2);
    r[0] = r0;
    s[0] = s0;
    lne[0] = le0;
    auto lnK_of = [&](const BigFloat& ln_eps) { return (2 * log(gamma) - log(BigFloat(4)) - ln_eps) / (2 * tau + 3); };
    lnK[0] = lnK_of(le0);
    for (int j = 1; j <= nm + 1; ++j) {
        Delta[j] = s0 / 10 / exp((j - 1) * ln2);
        r[j] = r0 / (4 * exp(3 * lnQ[j]));
        s[j] = s[j - 1] - Delta[j];
        if (j + 1 < static_cast<int>(lnQ.size()))
            lne[j] = lne[j - 1] - exp((j + 1) * ln2) * ctauU * lnQ[j + 1];
        lnet[j] = j == 1 ? lne[0] : log_add(lnet[j - 1], lne[j - 1]);
        lnK[j] = lnK_of(lne[j]);
    }

    for (int n = 0; n <= nm; ++n) {
        ScheduleRow row;
        row.n = n;
        row.log2_Q = log2_of(Q[n]);
        row.Delta = Delta[n];
        row.r = r[n];
        row.s = s[n];
        row.ln_eps = lne[n];
        row.ln_eps_tilde = n == 0 ? BigFloat(0) : lnet[n];
        row.ln_K = lnK[n];
        if (n >= 1) {
            row.r_bar = r0 / exp(3 * lnQ[n]);
            row.s_bar = s[n - 1] - Delta[n] / 3;
            row.inner_N = floor(exp(n * ln2) * bf(out.c1) * tau * bf(out.U) * lnQ[n]) + 1;
        }
        out.rows.push_back(row);
    }

    const BigFloat s_floor = s0 - 2 * (s0 / 10);
    for (int n = 1; n <= nm; ++n) {
        const std::string g = "sequence";
        L.less(g, "s_n > s0 - 2 s0/10", n, 0, s_floor, s[n]);
        L.less(g, "s_n < s_{n-1}", n, 0, s[n], s[n - 1]);
        L.less(g, "r_n < r_{n-1}", n, 0, r[n], r[n - 1]);
        L.log_less(g, "eps_n < eps_{n-1}", n, 0, lne[n], lne[n - 1]);
        L.log_less(g, "eps~_n < 2 eps_0", n, 0, lnet[n], le0 + ln2);
        L.less(g, "K^(n-1) <= K^(n)", n, 0, floor(exp(lnK[n - 1])), floor(exp(lnK[n])), false);
        L.less(g, "4 r_n < Delta_n", n, 0, 4 * r[n], Delta[n]);
        L.less(g, "r_bar_n < Delta_n/3", n, 0, out.rows[n].r_bar, Delta[n] / 3);
    }

    // step a: 64 Q_n eps0 / r_{n-1}^2 <= Q_n^{7/4} eps0^{1/2} and eps0^{1/2} / Q_n^{1/2} < Delta_n / 3
    for (int n = 1; n <= nm; ++n) {
        L.log_less("step-a", "64 Q_n eps0 / r_{n-1}^2 <= Q_n^(7/4) eps0^(1/2)", n, 0,
                   log(BigFloat(64)) + lnQ[n] + le0 - 2 * log(r[n - 1]), BigFloat(1.75) * lnQ[n] + le0 / 2, false);
        L.log_less("step-a", "eps0^(1/2) / Q_n^(1/2) < Delta_n/3", n, 0, le0 / 2 - lnQ[n] / 2, log(Delta[n] / 3));
    }

    // step b: the inner loop with eta = 2 eps_{n-1}. Lam(nu) = ln(1/eta_nu) = (3/2)^nu ln(1/eta).
    const BigFloat ln15 = log(BigFloat(1.5));
    for (int n = 1; n <= nm; ++n) {
        const std::string g = "inner";
        const BigFloat ln_eta = ln2 + lne[n - 1];
        const BigFloat Lam0 = -ln_eta;
        const BigFloat rbar = out.rows[n].r_bar;
        const BigFloat sigma1 = rbar / 4, delta1 = Delta[n] / 6;
        const BigFloat Nbig = out.rows[n].inner_N;
        const long long N = Nbig > BigFloat(4e18) ? static_cast<long long>(4e18) : Nbig.convert_to<long long>();
        const long long scan = std::min(N, p.full_scan_limit);
        const BigFloat lnKprev = lnK[n - 1];
        const BigFloat Kprev = floor(exp(lnKprev));
        bool all_scan = true;
        BigFloat ln_Kmax;
        for (long long nu = 1; nu <= scan; ++nu) {
            const BigFloat Lam = Lam0 * exp((nu - 1) * ln15);  // ln(1/eta_{nu-1})
            const BigFloat sigma = sigma1 / exp((nu - 1) * ln2);
            const BigFloat delta = delta1 / exp((nu - 1) * ln2);
            bool ok = true;
            ok &= -BigFloat(0.75) * Lam < log(delta / 2);
            ok &= sigma <= delta / 2;
            // 4 eta^2 / (gamma (sigma/2)^(3+tau)) <= (2/5) eta^(3/2)
            ok &= log(BigFloat(4)) - log(gamma) - (3 + tau) * log(sigma / 2) - log(BigFloat(0.4)) <= Lam / 2;
            const BigFloat lnKnu = log(Lam / sigma);
            ok &= floor(Lam / sigma) < Kprev;
            ln_Kmax = lnKnu;
            all_scan &= ok;
            if (!ok) {
                L.log_less(g, "eta_{nu-1}^(3/4) < delta_nu/2", n, nu, -BigFloat(0.75) * Lam, log(delta / 2));
                L.less(g, "sigma_nu <= delta_nu/2", n, nu, sigma, delta / 2, false);
                L.log_less(g, "4 eta^2/(gamma (sigma/2)^(3+tau)) <= (2/5) eta^(3/2)", n, nu,
                           log(BigFloat(4)) - 2 * Lam - log(gamma) - (3 + tau) * log(sigma / 2),
                           log(BigFloat(0.4)) - BigFloat(1.5) * Lam, false);
                L.log_less(g, "K_nu < K^(n-1)", n, nu, lnKnu, lnKprev);
            }
        }
        L.less(g, "all per-nu inequalities for nu <= " + std::to_string(scan), n, scan, BigFloat(all_scan ? 0 : 1),
               BigFloat(1));
        if (N > scan) {
            // Beyond the scan each margin is increasing in nu: Lam grows by 3/2 per
            // step while ln(delta), ln(sigma) drop by ln 2, so it suffices that
            // (1/2) * (3/4) Lam_scan >= ln 2 and (1/2) * (1/2) Lam_scan >= (3+tau) ln 2.
            const BigFloat Lam_s = Lam0 * exp((scan - 1) * ln15);
            L.less(g, "monotone tail: (3/8) Lam >= ln 2 and (1/4) Lam >= (3+tau) ln 2", n, scan,
                   std::max<BigFloat>(ln2 / BigFloat(0.375), (3 + tau) * ln2 / BigFloat(0.25)), Lam_s, false);
        }
        // K_nu = Lam_{nu-1}/sigma_nu is increasing in nu, so nu = N is the worst case
        const BigFloat ln_KN = log(Lam0) + (Nbig - 1) * ln15 - log(sigma1) + (Nbig - 1) * ln2;
        L.log_less(g, "K_N < K^(n-1)", n, N, ln_KN, lnKprev);
        // eta^{(3/2)^N} < eps_n, compared as ln ln
        L.log_less(g, "eta^((3/2)^N) < eps_n", n, N, log(-lne[n]), Nbig * ln15 + log(Lam0));
        // sum_nu eta_nu <= eta_1 / (1 - eta_1^(1/2)) < 4 eps_{n-1}
        const BigFloat ln_eta1 = BigFloat(1.5) * ln_eta;
        const BigFloat ln_sum = ln_eta1 - log(1 - exp(ln_eta1 / 2));
        L.log_less(g, "sum eta_nu < 4 eps_{n-1}", n, 0, ln_sum, log(BigFloat(4)) + lne[n - 1]);
        L.log_less(g, "2 eta^(3/4) <= 4 eps_{n-1}^(3/4)", n, 0, ln2 + BigFloat(0.75) * ln_eta,
                   log(BigFloat(4)) + BigFloat(0.75) * lne[n - 1], false);
    }

    // convergence of the conjugations
    BigFloat ln_prod = 0;
    for (int n = 1; n <= nm; ++n) {
        ln_prod += boost::multiprecision::log1p(4 * exp(BigFloat(0.75) * lne[n - 1]));
        L.log_less("convergence", "prod_{i<n} (1 + 4 eps_i^(3/4)) < 2", n, 0, ln_prod, ln2);
        for (int j = 1; j <= p.derivative_orders; ++j)
            L.log_less("convergence", "Q_{n+1}^(4|j|) eps_n^(3/4) < eps_n^(1/2), |j|=" + std::to_string(j), n, j,
                       4 * j * lnQ[n + 1] + BigFloat(0.75) * lne[n], lne[n] / 2);
    }

    out.all_hold = std::all_of(out.items.begin(), out.items.end(), [](const AuditItem& i) { return i.holds; });
    return out;
}

}  // namespace qpfkam
