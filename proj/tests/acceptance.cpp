// Acceptance suite: one PASS/FAIL line per criterion. Exit status 0 iff all pass.

#include "qpfkam/arithmetic.hpp"
#include "qpfkam/dynamics.hpp"
#include "qpfkam/error.hpp"
#include "qpfkam/homological.hpp"
#include "qpfkam/kamflow.hpp"
#include "qpfkam/schedule.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

using namespace qpfkam;

namespace {

using Clock = std::chrono::steady_clock;

// pinned tolerances
constexpr double kOracleRel = 1e-10;
constexpr double kOracleSeconds = 30.0;
constexpr double kContractionC = 10.0;
constexpr double kContractionP = 1.4;
constexpr double kMinDecay = 1e2;
constexpr double kKamSeconds = 300.0;
constexpr double kDefectTol = 1e-5;
constexpr double kAuditSeconds = 10.0;
constexpr double kPlateauHalfWidth = 0.01;
constexpr double kPlateauTol = 1e-3;
constexpr double kLyapunov = 0.1;
constexpr double kLyapunovTol = 1e-3;
constexpr double kLinearizableDistance = 1e-4;
constexpr double kLinearizableDefect = 1e-6;

int failures = 0;

void report(int id, const char* name, bool pass, const std::string& detail) {
    std::printf("[%s] %d %s: %s\n", pass ? "PASS" : "FAIL", id, name, detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", x);
    return buf;
}

const Frequency& golden() {
    static const Frequency fr = expand_continued_fraction(FrequencySpec::golden(), 60);
    return fr;
}

Omega golden_omega() { return {1.0, golden().alpha()}; }

/// Scales f so that its majorant on (s, r) equals eta.
TorusFunction scaled(TorusFunction f, double s, double r, double eta) {
    const double n = majorant(f, s, r);
    for (auto& [m, c] : f.modes) c *= eta / n;
    return f;
}

struct Instance {
    TorusFunction f;
    PhiFunction g;
    HomologicalParams p;
};

/// Random right-hand side with l != 0 and a random phi-only g, on an audited rho.
Instance random_instance(std::mt19937_64& rng, double log10_eta_f_lo, double log10_eta_f_hi, double log10_eta_g_lo,
                         double log10_eta_g_hi) {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::normal_distribution<double> N(0.0, 1.0);
    Instance in;
    HomologicalParams& p = in.p;
    p.omega = golden_omega();
    p.gamma = 0.01;
    p.tau = 3.0;
    p.K = 4 + static_cast<int>(U(rng) * 7);  // 4..10
    p.s = 0.5;
    p.r = 0.5;
    p.delta = 0.1 + 0.2 * U(rng);
    p.sigma = p.delta / 2 * (0.5 + 0.5 * U(rng));
    do p.rho = U(rng);
    while (!audit_diophantine(p.rho, golden(), p.gamma, p.tau, 40).pass);
    // f has degree < K, so its own tail beyond the truncation vanishes
    const int deg = 3;
    for (int l = 1; l <= deg; ++l)
        for (int k1 = -deg; k1 <= deg; ++k1)
            for (int k2 = -deg; k2 <= deg; ++k2)
                if (l + std::abs(k1) + std::abs(k2) <= deg && U(rng) < 0.6)
                    in.f.add_real_pair({l, k1, k2}, Complex(N(rng), N(rng)));
    if (in.f.modes.empty()) in.f.add_real_pair({1, 0, 0}, 1.0);
    for (int k1 = -deg; k1 <= deg; ++k1)
        for (int k2 = 0; k2 <= deg; ++k2)
            if ((k2 > 0 || k1 > 0) && std::abs(k1) + k2 <= deg && U(rng) < 0.6)
                in.g.add_real_pair({0, k1, k2}, Complex(N(rng), N(rng)));
    auto draw = [&](double lo, double hi) { return std::pow(10.0, lo + (hi - lo) * U(rng)); };
    in.f = scaled(in.f, p.s, p.r, draw(log10_eta_f_lo, log10_eta_f_hi));
    if (!in.g.modes.empty()) in.g = scaled(in.g, 0.0, p.r, draw(log10_eta_g_lo, log10_eta_g_hi));
    return in;
}

void criterion_oracle() {
    std::mt19937_64 rng(101);
    const auto t0 = Clock::now();
    double worst = 0.0;
    int solved = 0;
    for (int i = 0; i < 50; ++i) {
        Instance in = random_instance(rng, -12, -8, -12, -8);
        in.p.waive_degree_condition = true;
        const HomologicalSolution sol = solve_homological(in.f, in.g, in.p);
        const double r_prime = in.p.r - in.p.sigma;
        for (int l = -in.p.K + 1; l < in.p.K; ++l) {
            if (l == 0) continue;
            const ModeSystem sys = build_mode_system(in.g, l, in.p.K, in.p.rho, in.p.omega, r_prime, true);
            std::vector<Complex> rhs;
            for (const auto& [k1, k2] : sys.lattice) rhs.push_back(in.f.coeff({l, k1, k2}));
            const std::vector<Complex> x = dense_oracle_solve(sys, rhs);
            // discrepancy relative to the largest coefficient of the block
            double scale = 0.0, diff = 0.0;
            for (std::size_t j = 0; j < x.size(); ++j) {
                const Complex h = sol.h.coeff({l, sys.lattice[j].first, sys.lattice[j].second});
                scale = std::max(scale, std::abs(x[j]));
                diff = std::max(diff, std::abs(h - x[j]));
            }
            if (scale > 0.0) worst = std::max(worst, diff / scale);
        }
        ++solved;
    }
    const double secs = seconds_since(t0);
    report(1, "homological oracle equivalence", solved == 50 && worst <= kOracleRel && secs < kOracleSeconds,
           std::to_string(solved) + " instances, max rel discrepancy " + num(worst) + " (tol " + num(kOracleRel) +
               "), " + num(secs) + " s");
}

void criteria_bounds_and_dominance() {
    std::mt19937_64 rng(202);
    int audited = 0, bound_violations = 0, positive_margin = 0, dominance_violations = 0, skipped = 0;
    for (int i = 0; i < 100; ++i) {
        const Instance in = random_instance(rng, -44, -36, -46, -38);
        HomologicalSolution sol;
        try {
            sol = solve_homological(in.f, in.g, in.p);
        } catch (const Error&) {
            ++skipped;  // preconditions refused
            continue;
        }
        if (sol.audit.all_ok()) {
            ++audited;
            if (!(sol.h_norm <= sol.h_bound) || !(sol.P_norm <= sol.P_bound)) ++bound_violations;
        }
        if (sol.audit.dominance_margin > 0.0) {
            ++positive_margin;
            for (const auto& m : sol.modes)
                if (!(m.C < 0.5) || !(1.0 / (1.0 - m.C) < 2.0)) {
                    ++dominance_violations;
                    break;
                }
        }
    }
    report(2, "homological bound certification", audited == 100 && bound_violations == 0,
           std::to_string(audited) + " audited instances, " + std::to_string(bound_violations) + " violations, " +
               std::to_string(skipped) + " refused");
    report(3, "dominance implies invertibility", positive_margin == 100 && dominance_violations == 0,
           std::to_string(positive_margin) + " instances with positive margin, " +
               std::to_string(dominance_violations) + " violations");
}

struct Benchmark {
    QpfSystem initial;
    KamResult run;
    bool dc_pass = false;
    double seconds = 0.0;
};

QpfSystem benchmark_system() {
    QpfSystem sys = make_system(std::sqrt(2.0) - 1.0, PhiFunction{}, sine_mode({1, 1, 0}, 1e-3), golden_omega(), 0.5,
                                0.5);
    const RotationEstimate e = rotation_number(flow_of(sys), 1000.0);
    set_reference_rotation(sys, e.rho, e.error);
    return sys;
}

Benchmark run_benchmark() {
    const auto t0 = Clock::now();
    Benchmark b;
    b.initial = benchmark_system();
    EngineeringOptions eo;
    b.dc_pass = audit_diophantine(b.initial.rho_f, golden(), eo.gamma, eo.tau, 200).pass;
    CdOptions co;
    co.terms = 3;
    b.run = run_rotations_reducibility(b.initial, select_cd_sequence(golden(), co), 3, eo);
    b.seconds = seconds_since(t0);
    return b;
}

void criterion_contraction(const Benchmark& b) {
    bool ok = b.dc_pass && b.run.steps.size() == 3 && b.seconds < kKamSeconds;
    std::string detail = std::string("rho_f audited to L=200: ") + (b.dc_pass ? "pass" : "fail") + "; decay";
    for (const auto& s : b.run.steps) {
        const double decay = s.f_norm_in / s.f_norm_out;
        ok = ok && s.f_norm_out <= kContractionC * std::pow(s.f_norm_in, kContractionP) && decay >= kMinDecay;
        detail += " " + num(decay);
    }
    report(4, "engineering contraction", ok, detail + "; " + num(b.seconds) + " s");
}

void criterion_conjugacy(const Benchmark& b) {
    ConjugacyOptions o;
    o.samples = 100;
    o.T = 50.0;
    o.dt = 1e-3;
    o.rho_T = 1e4;
    const ConjugacyReport r = verify_conjugacy(b.run.chain, flow_of(b.initial), flow_of(b.run.system), o);
    report(5, "conjugacy defect", r.samples == 100 && r.max_defect <= kDefectTol && r.rho_within_error,
           "max defect " + num(r.max_defect) + " over " + std::to_string(r.samples) + " starts, |rho diff| " +
               num(r.rho_difference) + " vs error " + num(r.rho_a.error + r.rho_b.error));
}

void criterion_audit() {
    const auto t0 = Clock::now();
    CdOptions co;
    co.terms = 7;
    const CdSequence cd = select_cd_sequence(golden(), co);
    ScheduleParams p;
    p.gamma = 0.1;
    p.tau = 3.0;
    p.s0 = 1.0;
    p.r0 = 1.0;
    p.n_max = 6;
    const ScheduleAudit a = audit_schedule(golden(), cd, p);
    const double secs = seconds_since(t0);
    int inner = 0;
    for (const auto& it : a.items) inner += it.group == "inner";
    report(6, "paper-audit certification", a.all_hold && inner > 0 && secs < kAuditSeconds,
           std::to_string(a.items.size()) + " inequalities (" + std::to_string(inner) +
               " inner-chain), eps0 bound " + a.eps0_bound_decimal + ", " + num(secs) + " s");
}

void criterion_mode_locking() {
    const double eps = 0.2;
    const ModeLockedApproximant m = mode_locked_approximant(0.5, golden_omega(), eps);
    RotationOptions o;
    o.starts = 2;
    o.dt = 1e-2;
    const ModeLockScan sc = mode_lock_scan(CircleFlow{m.field, golden_omega()}, -0.02, 0.02, 21, 1e4, kPlateauTol, o);
    // the approximant is the projective action of diag(eps/2, -eps/2) up to a rotation
    const LyapunovEstimate ly = lyapunov_exponent(Sl2Flow::constant(eps / 2, 0.0, 0.0, -eps / 2, golden_omega()), 1e4);
    const bool ok = sc.half_width >= kPlateauHalfWidth && std::abs(ly.lambda - kLyapunov) <= kLyapunovTol;
    report(7, "mode-locking", ok,
           "k = (" + std::to_string(m.k1) + ", " + std::to_string(m.k2) + "), plateau half-width " +
               num(sc.half_width) + ", lambda " + num(ly.lambda) + " +- " + num(ly.error));
}

void criterion_arithmetic() {
    bool ok = true;
    std::string detail;
    for (int a : {1, 2}) {
        const Frequency fr = expand_continued_fraction(a == 1 ? FrequencySpec::golden() : FrequencySpec::silver(), 40);
        BigInt q0 = 1, q1 = a, p0 = 0, p1 = 1;
        ok = ok && fr.q.size() == 40 && fr.q[0] == q0 && fr.q[1] == q1 && fr.p[0] == p0 && fr.p[1] == p1;
        for (std::size_t n = 2; n < fr.q.size(); ++n) {
            const BigInt q2 = a * q1 + q0, p2 = a * p1 + p0;
            ok = ok && fr.q[n] == q2 && fr.p[n] == p2;
            q0 = q1, q1 = q2, p0 = p1, p1 = p2;
        }
        int checked = 0;
        for (std::size_t n = 1; n + 1 < fr.q.size() && fr.q[n] <= 10000; ++n, ++checked)
            ok = ok && verify_best_approx(fr, n).pass;
        detail += (a == 1 ? "golden " : "silver ") + std::to_string(checked) + " convergents checked; ";
    }
    std::mt19937_64 rng(808);
    std::uniform_int_distribution<int> Q(1, 6);
    int validated = 0;
    for (int i = 0; i < 20; ++i) {
        std::vector<BigInt> qs(1000);
        for (auto& x : qs) x = Q(rng);
        const Frequency fr = expand_continued_fraction(FrequencySpec::from_quotients(qs), 1000);
        try {
            CdOptions co;
            co.terms = 3;
            const CdSequence cd = select_cd_sequence(fr, co);
            const LiouvilleReport lv = compute_liouville_exponents(fr, &cd, cd.bridge_param);
            if (validate_cd_sequence(fr, cd).ok && lv.cd_growth_ok && lv.cd_sup_ok) ++validated;
        } catch (const Error&) {
        }
    }
    ok = ok && validated == 20;
    report(8, "arithmetic exactness", ok, detail + std::to_string(validated) + "/20 random bridge validations");
}

void criterion_linearizable() {
    const QpfSystem sys = benchmark_system();
    CdOptions co;
    co.terms = 5;
    const Omega om = golden_omega();
    const LinearizableApproximant la =
        linearizable_approximant(sys, select_cd_sequence(golden(), co), kLinearizableDistance, EngineeringOptions{});
    const PointEvaluator hl(la.h_lin);
    const auto map = [&](double th, double p1, double p2) {
        p1 -= std::floor(p1);
        p2 -= std::floor(p2);
        return la.chain.evaluate(th + hl.value(0.0, p1, p2), p1, p2);
    };
    ConjugacyOptions o;
    o.samples = 100;
    const ConjugacyReport r = verify_conjugacy(map, CircleFlow{la.field, om}, CircleFlow{constant(la.rho_bar), om}, o);
    report(9, "linearizable approximant", la.distance < kLinearizableDistance && r.max_defect <= kLinearizableDefect,
           "distance " + num(la.distance) + ", defect " + num(r.max_defect) + " over " + std::to_string(r.samples) +
               " starts");
}

void guarded(int id, const char* name, const std::function<void()>& f) {
    try {
        f();
    } catch (const std::exception& e) {
        report(id, name, false, std::string("threw ") + e.what());
    }
}

}  // namespace

int main() {
    guarded(1, "homological oracle equivalence", criterion_oracle);
    guarded(2, "homological bounds and dominance", criteria_bounds_and_dominance);
    guarded(4, "engineering benchmark", [] {
        const Benchmark b = run_benchmark();
        criterion_contraction(b);
        guarded(5, "conjugacy defect", [&] { criterion_conjugacy(b); });
    });
    guarded(6, "paper-audit certification", criterion_audit);
    guarded(7, "mode-locking", criterion_mode_locking);
    guarded(8, "arithmetic exactness", criterion_arithmetic);
    guarded(9, "linearizable approximant", criterion_linearizable);
    std::printf("%s: %d failed\n", failures == 0 ? "ALL PASS" : "FAILURES", failures);
    return failures == 0 ? 0 : 1;
}
