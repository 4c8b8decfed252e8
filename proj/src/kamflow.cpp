#include "qpfkam/kamflow.hpp"

#include "qpfkam/error.hpp"

#include <algorithm>
#include <chrono>
#include <climits>
#include <cmath>
#include <numbers>

namespace qpfkam {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int degree_cutoff(const BigInt& Q) { return Q > BigInt(INT_MAX / 2) ? INT_MAX / 2 : Q.convert_to<int>(); }

/// Modes 0 < |k| < Q of a phi function.
PhiFunction low_part(const PhiFunction& g, const BigInt& Q) { return truncate(g, degree_cutoff(Q)); }

void prune_relative(TorusFunction& f, double rel) { f.prune(rel * majorant(f, 0.0, 0.0)); }

GridOptions capped_grid(const EngineeringOptions& opt) {
    GridOptions g = opt.grid;
    if (g.max_degree < 0) g.max_degree = opt.degree_cap;
    return g;
}

/// Drops the smallest coefficients while their summed modulus stays <= budget.
double prune_mass(TorusFunction& f, double budget) {
    std::vector<std::pair<double, Mode>> mags;
    mags.reserve(f.size());
    for (const auto& [m, c] : f.modes) mags.emplace_back(std::abs(c), m);
    std::sort(mags.begin(), mags.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    double dropped = 0.0;
    for (const auto& [a, m] : mags) {
        if (dropped + a > budget) break;
        dropped += a;
        f.modes.erase(m);
    }
    return dropped;
}

/// Coefficient mass the linearizable correction may shed for evaluation speed.
constexpr double kCorrectionPrune = 1e-12;

TorusFunction with_strip(TorusFunction f, double s, double r) {
    f.s = s;
    f.r = r;
    return f;
}

}  // namespace

TorusFunction QpfSystem::vector_field() const {
    TorusFunction v = f + g;
    v.add({}, rho_f);
    v.s = s;
    v.r = r;
    return v;
}

QpfSystem make_system(double rho_tilde, PhiFunction g, TorusFunction f, const Omega& omega, double s, double r) {
    if (!g.phi_only()) throw Error("kamflow", Errc::invalid_argument, "g must depend on phi only");
    QpfSystem sys;
    sys.omega = omega;
    sys.load_shift = g.coeff({}).real();
    g.modes.erase(Mode{});
    sys.rho_f = rho_tilde + sys.load_shift;
    sys.g = with_strip(std::move(g), s, r);
    sys.f = with_strip(std::move(f), s, r);
    sys.s = s;
    sys.r = r;
    return sys;
}

void set_reference_rotation(QpfSystem& sys, double rho_f, double error) {
    const double rho_tilde = sys.rho_tilde();
    sys.rho_f = rho_f;
    sys.rho_f_error = error;
    sys.g.set({}, Complex(rho_tilde - rho_f, 0.0));
    sys.g.prune();
}

// ---------------------------------------------------------------------------
// chain

void ConjugationChain::append(ChainElement e) {
    elements_.push_back(std::move(e));
    dirty_ = true;
}

void ConjugationChain::append(const ConjugationChain& other) {
    for (const auto& e : other.elements_) elements_.push_back(e);
    dirty_ = true;
}

void ConjugationChain::rebuild() const {
    if (!dirty_) return;
    eval_.clear();
    for (const auto& e : elements_) eval_.emplace_back(e.h);
    dirty_ = false;
}

double ConjugationChain::evaluate(double theta_bar, double phi1, double phi2) const {
    rebuild();
    double x = theta_bar;
    for (std::size_t i = elements_.size(); i-- > 0;) x += eval_[i].value(x, phi1, phi2);
    return x;
}

double ConjugationChain::derivative(double theta_bar, double phi1, double phi2) const {
    rebuild();
    double x = theta_bar, d = 1.0;
    for (std::size_t i = elements_.size(); i-- > 0;) {
        const auto [v, dv] = eval_[i].value_dtheta(x, phi1, phi2);
        if (elements_[i].kind == ChainElement::Kind::near_identity) d *= 1.0 + dv;
        x += v;
    }
    return d;
}

double ConjugationChain::inverse(double theta, double phi1, double phi2) const {
    rebuild();
    double x = theta;
    for (std::size_t i = 0; i < elements_.size(); ++i) {
        if (elements_[i].kind == ChainElement::Kind::fiber_translation) {
            x -= eval_[i].value(0.0, phi1, phi2);
            continue;
        }
        // y + h(y) = x; contraction since |dh/dtheta| < 1/4
        double y = x;
        for (int it = 0; it < 200; ++it) {
            const double next = x - eval_[i].value(y, phi1, phi2);
            const bool done = std::abs(next - y) <= 1e-16 * (1.0 + std::abs(x));
            y = next;
            if (done) break;
        }
        x = y;
    }
    return x;
}

double ConjugationChain::derivative_product_bound() const {
    double p = 1.0;
    for (const auto& e : elements_)
        if (e.kind == ChainElement::Kind::near_identity) p *= 1.0 + e.dnorm;
    return p;
}

double ConjugationChain::cumulative_norm() const {
    double s = 0.0;
    for (const auto& e : elements_) s += e.norm;
    return s;
}

// ---------------------------------------------------------------------------
// steps

StepAResult step_a_eliminate(const QpfSystem& sys, const BigInt& Q, double s_bar, double r_bar, const GridOptions& grid,
                             StepReport* report) {
    StepAResult out;
    const int cut = degree_cutoff(Q);
    out.h = with_strip(solve_constant_coefficient(sys.g, sys.omega, cut), s_bar, r_bar);
    out.sys = sys;
    out.sys.g = with_strip(sys.g - low_part(sys.g, Q), s_bar, r_bar);
    out.sys.g.prune();
    out.sys.f = with_strip(sys.f.empty() || out.h.empty() ? sys.f : compose_fiber_shift(sys.f, out.h, grid).value, s_bar,
                           r_bar);
    out.sys.s = s_bar;
    out.sys.r = r_bar;
    if (report) {
        report->a_h_norm = majorant(out.h, 0.0, r_bar);
        report->a_imag_bound = split_real_imaginary_shift(out.h, r_bar).bound;
        report->a_tail_norm = majorant(out.sys.g - truncate(out.sys.g, 1), 0.0, r_bar);
    }
    return out;
}

StepBResult step_b_reduce(const QpfSystem& sys, double delta1, double sigma1, const EngineeringOptions& opt,
                          StepReport* report) {
    StepBResult out;
    out.sys = sys;
    QpfSystem& cur = out.sys;
    double delta = delta1, sigma = sigma1;
    const GridOptions grid = capped_grid(opt);
    for (int nu = 1; nu <= opt.inner_passes; ++nu, delta /= 2, sigma /= 2) {
        InnerPassReport pass;
        pass.nu = nu;
        pass.sigma = sigma;
        pass.delta = delta;
        // absorb the theta-mean of f into g
        cur.g += theta_average(cur.f);
        cur.g.prune();
        cur.f = theta_oscillation(cur.f);
        const double s_out = cur.s - delta, r_out = cur.r - sigma;
        pass.eta_in = majorant(cur.f, cur.s, cur.r);
        pass.eta_g = majorant(cur.g, 0.0, cur.r);
        if (cur.f.empty()) {
            cur.s = s_out;
            cur.r = r_out;
            cur.f = with_strip(cur.f, s_out, r_out);
            cur.g = with_strip(cur.g, s_out, r_out);
            if (report) report->inner.push_back(pass);
            continue;
        }
        int K = opt.degree_cap;
        if (pass.eta_in < 1.0) K = std::min<double>(K, std::floor(std::log(1.0 / pass.eta_in) / sigma));
        K = std::max(K, opt.min_degree);

        HomologicalParams hp;
        hp.rho = cur.rho_f;
        hp.omega = cur.omega;
        hp.s = cur.s;
        hp.r = cur.r;
        hp.delta = delta;
        hp.sigma = sigma;
        hp.gamma = opt.gamma;
        hp.tau = opt.tau;
        hp.waive_degree_condition = true;
        hp.threads = opt.threads;
        HomologicalSolution sol;
        for (;;) {
            hp.K = K;
            try {
                sol = solve_homological(cur.f, cur.g, hp);
                break;
            } catch (const Error& e) {
                const bool retry = e.code() == Errc::dominance_violated || e.code() == Errc::neumann_diverged;
                if (!retry || K <= opt.min_degree) throw;
                K = std::max(opt.min_degree, K * 3 / 4);
                ++pass.K_shrinks;
            }
        }
        pass.K = K;
        pass.dominance_margin = sol.audit.dominance_margin;
        for (const auto& m : sol.modes) pass.C_max = std::max(pass.C_max, m.C);
        pass.residual = sol.residual;
        pass.h_norm = sol.h_norm;
        pass.h_bound = sol.h_bound;
        pass.P_norm = sol.P_norm;
        pass.P_bound = sol.P_bound;
        pass.bounds_certified = sol.bounds_certified;

        TorusFunction h = with_strip(sol.h, cur.s, cur.r);
        prune_relative(h, opt.prune_rel);
        const TorusFunction ht = derive_theta(h);
        // f_new = (f(theta+h) - d_omega h - (rho + g) d_theta h) / (1 + d_theta h)
        TorusFunction num = cur.f + compose_fiber_shift_delta(cur.f, h, grid).value;
        num -= derive_omega(h, cur.omega);
        num -= Complex(cur.rho_f) * ht;
        num -= multiply(cur.g, ht, cur.g.max_degree() + ht.max_degree() + 1).product;
        num = with_strip(num, cur.s, cur.r);
        TorusFunction den = ht;
        den.add({}, 1.0);
        prune_relative(num, opt.prune_rel);
        TorusFunction fnew = quotient_on_grid(num, den, grid).value;
        prune_relative(fnew, opt.prune_rel);

        ChainElement el;
        el.kind = ChainElement::Kind::near_identity;
        el.h = h;
        el.norm = majorant(h, s_out, r_out);
        el.dnorm = majorant(ht, s_out, r_out);
        if (!(el.norm < 0.25 && el.dnorm < 0.25))
            throw Error("kamflow", Errc::contraction_failed,
                        "near-identity map too large to invert (N(h) = " + std::to_string(el.norm) + ")");
        el.step = report ? report->n : 0;
        out.chain.append(el);
        out.htilde = out.htilde.empty() ? h : h + compose_fiber_shift(out.htilde, h, grid).value;

        cur.f = with_strip(fnew, s_out, r_out);
        cur.g = with_strip(cur.g, s_out, r_out);
        cur.s = s_out;
        cur.r = r_out;
        pass.eta_out = majorant(cur.f, cur.s, cur.r);
        if (report) report->inner.push_back(pass);
    }
    out.htilde = with_strip(out.htilde, cur.s, cur.r);
    return out;
}

QpfSystem step_c_conjugate_back(const PhiFunction& g_before, const BigInt& Q, const PhiFunction& h,
                                const QpfSystem& reduced, const GridOptions& grid) {
    QpfSystem out = reduced;
    out.g = with_strip(low_part(g_before, Q) + reduced.g, reduced.s, reduced.r);
    out.g.prune();
    if (!h.empty() && !reduced.f.empty()) out.f = with_strip(compose_fiber_shift(reduced.f, -1.0 * h, grid).value, reduced.s, reduced.r);
    return out;
}

namespace {

KamResult run_steps(const QpfSystem& sys0, const CdSequence& cd, int steps, const EngineeringOptions& opt,
                    bool conjugate_back) {
    if (steps < 1) throw Error("kamflow", Errc::invalid_argument, "at least one step is required");
    if (cd.terms.size() < static_cast<std::size_t>(steps))
        throw Error("kamflow", Errc::depth_insufficient,
                    "CD sequence has " + std::to_string(cd.terms.size()) + " terms, " + std::to_string(steps) +
                        " steps requested");
    KamResult res;
    QpfSystem cur = sys0;
    const GridOptions grid = capped_grid(opt);
    const double s0 = sys0.s, r0 = sys0.r;
    for (int n = 0; n < steps; ++n) {
        const auto t0 = Clock::now();
        StepReport rep;
        rep.n = n;
        rep.f_norm_in = majorant(cur.f, cur.s, cur.r);
        ConjugationChain step_chain;
        if (n == 0) {
            // the first step reduces f directly
            rep.kind = "b";
            const double Delta = s0 / 10.0;
            const double delta1 = Delta / 6.0;
            const double sigma1 = std::min(r0 / 4.0, delta1 / 2.0);
            StepBResult b = step_b_reduce(cur, delta1, sigma1, opt, &rep);
            step_chain = b.chain;
            rep.htilde_norm = majorant(b.htilde, b.sys.s, b.sys.r);
            rep.dhtilde_norm = majorant(derive_theta(b.htilde), b.sys.s, b.sys.r);
            cur = b.sys;
        } else {
            const CdTerm& term = cd.terms[n];
            rep.kind = conjugate_back ? "abc" : "ab";
            rep.log2_Q = term.log2_Q;
            const double Delta = s0 / 10.0 / std::ldexp(1.0, n - 1);
            const double lnQ3 = 3.0 * term.log2_Q * std::log(2.0);
            const double s_bar = cur.s - Delta / 3.0;
            const double r_bar = std::min(r0 * std::exp(-lnQ3), cur.r / 2.0);
            StepAResult a = step_a_eliminate(cur, term.Q, s_bar, r_bar, grid, &rep);
            rep.a_h_bound = std::exp(1.75 * term.log2_Q * std::log(2.0)) * std::sqrt(majorant(sys0.f, s0, r0));
            const double delta1 = Delta / 6.0;
            const double sigma1 = std::min(r_bar / 4.0, delta1 / 2.0);
            StepBResult b = step_b_reduce(a.sys, delta1, sigma1, opt, &rep);
            ChainElement ea;
            ea.kind = ChainElement::Kind::fiber_translation;
            ea.h = a.h;
            ea.step = n;
            ea.norm = majorant(a.h, 0.0, r_bar);
            step_chain.append(ea);
            step_chain.append(b.chain);
            const double s_n = s_bar - Delta * 2.0 / 3.0;
            const double r_n = std::min(r0 * std::exp(-lnQ3) / 4.0, b.sys.r);
            if (conjugate_back) {
                cur = step_c_conjugate_back(cur.g, term.Q, a.h, b.sys, grid);
                ChainElement ec = ea;
                ec.h = -1.0 * a.h;
                step_chain.append(ec);
                const TorusFunction ht_back =
                    b.htilde.empty() ? b.htilde : compose_fiber_shift(b.htilde, -1.0 * a.h, grid).value;
                rep.htilde_norm = majorant(ht_back, s_n, r_n);
                rep.dhtilde_norm = majorant(derive_theta(ht_back), s_n, r_n);
            } else {
                cur = b.sys;
                rep.htilde_norm = majorant(b.htilde, s_n, r_n);
                rep.dhtilde_norm = majorant(derive_theta(b.htilde), s_n, r_n);
            }
            cur.s = s_n;
            cur.r = r_n;
            cur.f = with_strip(cur.f, s_n, r_n);
            cur.g = with_strip(cur.g, s_n, r_n);
        }
        res.chain.append(step_chain);
        rep.s = cur.s;
        rep.r = cur.r;
        rep.f_norm_out = majorant(cur.f, cur.s, cur.r);
        rep.g_norm = majorant(cur.g, 0.0, cur.r);
        rep.g0 = std::abs(cur.g.coeff({}));
        rep.contraction_ratio = rep.f_norm_in > 0.0 ? rep.f_norm_out / std::pow(rep.f_norm_in, 1.4) : 0.0;
        rep.seconds = seconds_since(t0);
        res.steps.push_back(std::move(rep));
        res.step_chains.push_back(std::move(step_chain));
        res.step_systems.push_back(cur);
    }
    res.system = cur;
    return res;
}

}  // namespace

KamResult run_rotations_reducibility(const QpfSystem& sys0, const CdSequence& cd, int steps,
                                     const EngineeringOptions& opt) {
    return run_steps(sys0, cd, steps, opt, true);
}

KamResult run_almost_reducibility(const QpfSystem& sys0, const CdSequence& cd, int steps,
                                  const EngineeringOptions& opt) {
    return run_steps(sys0, cd, steps, opt, false);
}

// ---------------------------------------------------------------------------
// approximants

LinearizableApproximant linearizable_approximant(const QpfSystem& sys, const CdSequence& cd, double epsilon,
                                                 const EngineeringOptions& opt, int max_steps) {
    if (!(epsilon > 0.0)) throw Error("kamflow", Errc::invalid_argument, "epsilon must be positive");
    const TorusFunction original = sys.vector_field();
    const int limit = std::min<int>(max_steps, static_cast<int>(cd.terms.size()) - 1);
    double best = HUGE_VAL;
    for (int N = 1; N <= limit; ++N) {
        const KamResult run = run_almost_reducibility(sys, cd, N, opt);
        const QpfSystem& fin = run.system;
        const BigInt& Q = cd.terms[std::max(N - 1, 1)].Q;
        const PhiFunction gT = low_part(fin.g, Q);
        // dropped part D = f_N + R_Q g_N; its constant stays in the reference rotation
        TorusFunction D = fin.f + (fin.g - gT);
        const double D0 = D.coeff({}).real();
        D.modes.erase(Mode{});
        D.prune();

        LinearizableApproximant out;
        out.steps_used = N;
        out.chain = run.chain;
        out.rho_bar = fin.rho_f + gT.coeff({}).real() + D0;
        out.h_lin = solve_constant_coefficient(gT, fin.omega, degree_cutoff(Q));
        out.reference_residual = majorant(derive_omega(out.h_lin, fin.omega) - gT, 0.0, fin.r);

        // correction(theta, phi) = (d theta / d theta_bar) D(theta_bar, phi), theta_bar = H^{-1}(theta)
        TorusFunction correction;
        if (!D.empty()) {
            const PointEvaluator dev(D);
            std::array<int, 3> bw{D.extent_l(), D.extent_k1(), D.extent_k2()};
            for (const auto& e : out.chain.elements()) {
                bw[0] += e.h.extent_l();
                bw[1] += e.h.extent_k1();
                bw[2] += e.h.extent_k2();
            }
            for (auto& b : bw) b = std::min(b, 2 * opt.degree_cap);
            GridOptions g = opt.grid;
            g.alias_tol = std::max(g.alias_tol, 1e-10);
            const auto series = series_from_samples(
                bw, majorant(D, 0.0, 0.0),
                [&](double th, double p1, double p2) {
                    const double tb = out.chain.inverse(th, p1, p2);
                    return out.chain.derivative(tb, p1, p2) * dev.value(tb, p1, p2);
                },
                g);
            correction = series.value;
            out.alias_residual = series.alias_residual + prune_mass(correction, kCorrectionPrune);
        }
        out.field = original - correction;
        out.field.s = fin.s;
        out.field.r = fin.r;
        out.distance = majorant(correction, fin.s, fin.r);
        best = std::min(best, out.distance);
        if (out.distance < epsilon) return out;
    }
    throw Error("kamflow", Errc::target_unreachable,
                "closest linearizable approximant found is at distance " + std::to_string(best));
}

ModeLockedApproximant mode_locked_approximant(double rho, const Omega& omega, double epsilon, int k_cap) {
    if (!(epsilon > 0.0)) throw Error("kamflow", Errc::invalid_argument, "epsilon must be positive");
    const double amp = epsilon / (4.0 * std::numbers::pi);
    // room left for the resonance error once the sine amplitude is paid for
    const double target = epsilon / 2.0 - amp;
    for (int d = 0; d <= k_cap; ++d) {
        for (int k2 = -d; k2 <= d; ++k2) {
            const int rest = d - std::abs(k2);
            for (int sgn : {1, -1}) {
                if (rest == 0 && sgn < 0) continue;
                const int k1 = sgn * rest;
                const double res = k1 * omega[0] + k2 * omega[1];
                if (std::abs(res - rho) < target) {
                    ModeLockedApproximant out;
                    out.k1 = k1;
                    out.k2 = k2;
                    out.resonance = res;
                    out.epsilon = epsilon;
                    out.field = constant(res);
                    // (eps/4pi) sin(4 pi (theta - k1 phi1 - k2 phi2))
                    out.field += sine_mode({2, -2 * k1, -2 * k2}, amp);
                    out.distance = std::abs(res - rho) + amp;
                    return out;
                }
            }
        }
    }
    throw Error("kamflow", Errc::search_budget_exceeded,
                "no k with |k| <= " + std::to_string(k_cap) + " brings <k,omega> close enough to rho");
}

}  // namespace qpfkam
