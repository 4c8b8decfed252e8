#include "qpfkam/dynamics.hpp"

#include "qpfkam/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace qpfkam {

namespace {

constexpr double kPi = std::numbers::pi;

double frac(double x) { return x - std::floor(x); }

/// Right-hand side with all angles reduced mod 1 before evaluation.
class Rhs {
public:
    Rhs(const CircleFlow& flow, std::array<double, 2> phi0) : ev_(flow.field), omega_(flow.omega), phi0_(phi0) {}

    double operator()(double theta, double t) const {
        return ev_.value(frac(theta), frac(phi0_[0] + t * omega_[0]), frac(phi0_[1] + t * omega_[1]));
    }

private:
    PointEvaluator ev_;
    Omega omega_;
    std::array<double, 2> phi0_;
};

struct StepOut {
    double theta;
    double increment;
    double k1;
};

StepOut rk4(const Rhs& f, double th, double t, double h) {
    const double k1 = f(th, t);
    const double k2 = f(th + 0.5 * h * k1, t + 0.5 * h);
    const double k3 = f(th + 0.5 * h * k2, t + 0.5 * h);
    const double k4 = f(th + h * k3, t + h);
    const double inc = h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    return {th + inc, inc, k1};
}

/// Drives RK4 over [0, T]; cb(i, t_i, theta_i, k1_i) sees every grid point
/// before the step taken from it, and once more at the end with k1 = f(theta_N).
template <class Callback>
double run(const Rhs& f, double theta0, double T, double dt, double check_fraction, double max_err, Callback&& cb) {
    if (!(dt > 0.0) || dt > 1e-2) throw Error("dynamics", Errc::invalid_argument, "dt must lie in (0, 1e-2]");
    if (!(T > 0.0)) throw Error("dynamics", Errc::invalid_argument, "T must be positive");
    const long long N = std::max<long long>(1, std::llround(T / dt));
    const double h = T / static_cast<double>(N);
    const long long every = check_fraction > 0.0 ? std::max<long long>(1, std::llround(1.0 / check_fraction)) : 0;
    double th = theta0, worst = 0.0;
    for (long long i = 0; i < N; ++i) {
        const double t = static_cast<double>(i) * h;
        const StepOut s = rk4(f, th, t, h);
        cb(i, t, th, s.k1);
        if (every && i % every == 0) {
            // increments, not lifts, so the estimate does not see the roundoff of a large theta
            const StepOut a = rk4(f, th, t, 0.5 * h);
            const StepOut b = rk4(f, a.theta, t + 0.5 * h, 0.5 * h);
            worst = std::max(worst, std::abs(s.increment - (a.increment + b.increment)) * 16.0 / 15.0 / h);
        }
        if (!(std::abs(s.increment) < 0.5))
            throw Error("dynamics", Errc::step_control_failure, "lift moved by half a turn in one step; reduce dt");
        th = s.theta;
    }
    cb(N, T, th, f(th, T));
    if (worst > max_err)
        throw Error("dynamics", Errc::step_control_failure,
                    "local error estimate " + std::to_string(worst) + " per unit time exceeds " + std::to_string(max_err));
    return worst;
}

double bump(double x) {
    if (x <= 0.0 || x >= 1.0) return 0.0;
    return std::exp(-1.0 / (x * (1.0 - x)));
}

double sup_bound(const TorusFunction& f) {
    double s = 0.0;
    for (const auto& [m, c] : f.modes)
        if (!m.is_zero()) s += std::abs(c);
    return s;
}

struct SingleEstimate {
    double rho = 0.0;
    double error = 0.0;
};

SingleEstimate estimate_one(const CircleFlow& flow, double theta0, std::array<double, 2> phi0, double T,
                            const RotationOptions& opt) {
    const Rhs f(flow, phi0);
    double wsum = 0.0, vsum = 0.0, whsum = 0.0, vhsum = 0.0, last = theta0;
    const double half = 0.5 * T;
    const double err_rate = run(f, theta0, T, opt.dt, 0.01, opt.max_error_per_time,
                                [&](long long, double t, double th, double k1) {
                                    const double w = bump(t / T);
                                    wsum += w;
                                    vsum += w * k1;
                                    if (t <= half) {
                                        const double wh = bump(t / half);
                                        whsum += wh;
                                        vhsum += wh * k1;
                                    }
                                    last = th;
                                });
    SingleEstimate e;
    if (opt.estimator == RotationEstimator::plain) {
        e.rho = (last - theta0) / T;
        e.error = 2.0 * (1.0 + sup_bound(flow.field)) / T;
    } else {
        e.rho = vsum / wsum;
        const double rho_half = vhsum / whsum;
        e.error = std::max(std::abs(e.rho - rho_half), err_rate) + 1e-13 * std::max(1.0, std::abs(e.rho));
    }
    return e;
}

}  // namespace

CircleFlow flow_of(const QpfSystem& sys) { return {sys.vector_field(), sys.omega}; }

double circle_distance(double a, double b) {
    const double d = frac(a - b);
    return std::min(d, 1.0 - d);
}

FlowTrajectory integrate(const CircleFlow& flow, double theta0, std::array<double, 2> phi0, double T,
                         const IntegrateOptions& opt) {
    FlowTrajectory tr;
    tr.phi0 = phi0;
    tr.omega = flow.omega;
    const Rhs f(flow, phi0);
    const long long N = std::max<long long>(1, std::llround(T / opt.dt));
    tr.dt = T / static_cast<double>(N);
    const int every = std::max(1, opt.sample_every);
    tr.error_per_time = run(f, theta0, T, opt.dt, opt.check_fraction, opt.max_error_per_time,
                            [&](long long i, double t, double th, double) {
                                if (i % every == 0 || i == N) {
                                    tr.t.push_back(t);
                                    tr.theta.push_back(th);
                                }
                            });
    return tr;
}

RotationEstimate rotation_number(const CircleFlow& flow, double T, const RotationOptions& opt) {
    if (T < 100.0) throw Error("dynamics", Errc::invalid_argument, "rotation numbers need T >= 100");
    std::mt19937_64 rng(opt.seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    RotationEstimate out;
    double sum = 0.0;
    for (int i = 0; i < std::max(1, opt.starts); ++i) {
        const double th = U(rng);
        const std::array<double, 2> phi{U(rng), U(rng)};
        const SingleEstimate e = estimate_one(flow, th, phi, T, opt);
        out.per_start.push_back(e.rho);
        out.error = std::max(out.error, e.error);
        sum += e.rho;
    }
    out.rho = sum / static_cast<double>(out.per_start.size());
    const auto [mn, mx] = std::minmax_element(out.per_start.begin(), out.per_start.end());
    out.spread = *mx - *mn;
    out.consistent = out.spread <= 3.0 * out.error;
    if (!out.consistent && opt.strict)
        throw Error("dynamics", Errc::inconsistent_starts,
                    "spread " + std::to_string(out.spread) + " exceeds three error bars " + std::to_string(out.error));
    return out;
}

ConjugacyReport verify_conjugacy(const std::function<double(double, double, double)>& map, const CircleFlow& a,
                                 const CircleFlow& b, const ConjugacyOptions& opt) {
    ConjugacyReport rep;
    std::mt19937_64 rng(opt.seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const long long N = std::max<long long>(1, std::llround(opt.T / opt.dt));
    const double h = opt.T / static_cast<double>(N);
    const long long every = std::max<long long>(1, std::llround(opt.check_interval / h));
    double total = 0.0;
    long long count = 0;
    for (int s = 0; s < opt.samples; ++s) {
        const double thb0 = U(rng);
        const std::array<double, 2> phi0{U(rng), U(rng)};
        const Rhs fa(a, phi0), fb(b, phi0);
        double ta = map(thb0, phi0[0], phi0[1]), tb = thb0;
        for (long long i = 0; i <= N; ++i) {
            const double t = static_cast<double>(i) * h;
            if (i % every == 0 || i == N) {
                const double d = circle_distance(map(tb, phi0[0] + t * b.omega[0], phi0[1] + t * b.omega[1]), ta);
                rep.max_defect = std::max(rep.max_defect, d);
                total += d;
                ++count;
            }
            if (i == N) break;
            ta = rk4(fa, ta, t, h).theta;
            tb = rk4(fb, tb, t, h).theta;
        }
    }
    rep.samples = opt.samples;
    rep.mean_defect = count ? total / static_cast<double>(count) : 0.0;
    if (opt.rho_T > 0.0) {
        RotationOptions ro;
        ro.dt = opt.rho_dt;
        ro.seed = opt.seed;
        rep.rho_a = rotation_number(a, opt.rho_T, ro);
        rep.rho_b = rotation_number(b, opt.rho_T, ro);
        rep.rho_difference = std::abs(rep.rho_a.rho - rep.rho_b.rho);
        rep.rho_within_error = rep.rho_difference <= rep.rho_a.error + rep.rho_b.error;
    }
    return rep;
}

ConjugacyReport verify_conjugacy(const ConjugationChain& chain, const CircleFlow& a, const CircleFlow& b,
                                 const ConjugacyOptions& opt) {
    return verify_conjugacy([&](double th, double p1, double p2) { return chain.evaluate(th, frac(p1), frac(p2)); },
                            a, b, opt);
}

// ---------------------------------------------------------------------------
// sl(2,R)

Sl2Flow Sl2Flow::constant(double m11, double m12, double m21, double m22, const Omega& omega) {
    Sl2Flow M;
    M.omega = omega;
    const double v[4] = {m11, m12, m21, m22};
    for (int i = 0; i < 4; ++i)
        if (v[i] != 0.0) M.m[i] = qpfkam::constant(v[i]);
    return M;
}

double Sl2Flow::trace_defect(int grid) const {
    double worst = 0.0;
    for (int i = 0; i < grid; ++i)
        for (int j = 0; j < grid; ++j) {
            const double p1 = static_cast<double>(i) / grid, p2 = static_cast<double>(j) / grid;
            worst = std::max(worst, std::abs(evaluate_real(m[0], 0.0, p1, p2) + evaluate_real(m[3], 0.0, p1, p2)));
        }
    return worst;
}

namespace {

struct MatrixRhs {
    std::array<PointEvaluator, 4> ev;
    Omega omega;
    std::array<double, 2> phi0;

    MatrixRhs(const Sl2Flow& M, std::array<double, 2> p0)
        : ev{PointEvaluator(M.m[0]), PointEvaluator(M.m[1]), PointEvaluator(M.m[2]), PointEvaluator(M.m[3])},
          omega(M.omega), phi0(p0) {}

    std::array<double, 2> operator()(const std::array<double, 2>& x, double t) const {
        const double p1 = frac(phi0[0] + t * omega[0]), p2 = frac(phi0[1] + t * omega[1]);
        const double a = ev[0].value(0.0, p1, p2), b = ev[1].value(0.0, p1, p2);
        const double c = ev[2].value(0.0, p1, p2), d = ev[3].value(0.0, p1, p2);
        return {a * x[0] + b * x[1], c * x[0] + d * x[1]};
    }
};

std::array<double, 2> rk4_vec(const MatrixRhs& f, const std::array<double, 2>& x, double t, double h) {
    auto axpy = [](const std::array<double, 2>& u, double s, const std::array<double, 2>& v) {
        return std::array<double, 2>{u[0] + s * v[0], u[1] + s * v[1]};
    };
    const auto k1 = f(x, t);
    const auto k2 = f(axpy(x, 0.5 * h, k1), t + 0.5 * h);
    const auto k3 = f(axpy(x, 0.5 * h, k2), t + 0.5 * h);
    const auto k4 = f(axpy(x, h, k3), t + h);
    return {x[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            x[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])};
}

}  // namespace

ProjectiveFlow projective_flow(const Sl2Flow& M, double validate_T, double tol) {
    if (M.trace_defect() > 1e-12) throw Error("dynamics", Errc::invalid_argument, "matrix field is not trace free");
    // psi' = (m21 - m12)/2 + (m21 + m12)/2 cos 2psi + (m22 - m11)/2 sin 2psi, theta = psi / pi
    const PhiFunction A = 0.5 * (M.m[2] + M.m[1]);
    const PhiFunction B = 0.5 * (M.m[3] - M.m[0]);
    TorusFunction field = (1.0 / (2.0 * kPi)) * (M.m[2] - M.m[1]);
    const Complex i2(0.0, 2.0);
    for (const auto& [m, c] : A.modes) {
        field.add({1, m.k1, m.k2}, c / 2.0 / kPi);
        field.add({-1, m.k1, m.k2}, c / 2.0 / kPi);
    }
    for (const auto& [m, c] : B.modes) {
        field.add({1, m.k1, m.k2}, c / i2 / kPi);
        field.add({-1, m.k1, m.k2}, -c / i2 / kPi);
    }
    field.prune();
    ProjectiveFlow out;
    out.flow = {field, M.omega};

    // direct linear integration of a few directions, angle lifted continuously
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const double h = 1e-3;
    const long long N = std::llround(validate_T / h);
    for (int trial = 0; trial < 3; ++trial) {
        const double psi0 = kPi * U(rng);
        const std::array<double, 2> phi0{U(rng), U(rng)};
        const MatrixRhs fx(M, phi0);
        const Rhs ft(out.flow, phi0);
        std::array<double, 2> x{std::cos(psi0), std::sin(psi0)};
        double psi = psi0, th = psi0 / kPi;
        for (long long i = 0; i < N; ++i) {
            const double t = static_cast<double>(i) * h;
            x = rk4_vec(fx, x, t, h);
            const double nrm = std::hypot(x[0], x[1]);
            x = {x[0] / nrm, x[1] / nrm};
            const double raw = std::atan2(x[1], x[0]);
            psi += std::remainder(raw - psi, 2.0 * kPi);
            th = rk4(ft, th, t, h).theta;
            out.validation_error = std::max(out.validation_error, std::abs(th - psi / kPi));
        }
    }
    if (!(out.validation_error <= tol))
        throw Error("dynamics", Errc::validation_failed,
                    "projective angle disagrees with linear integration by " + std::to_string(out.validation_error));
    return out;
}

LyapunovEstimate lyapunov_exponent(const Sl2Flow& M, double T, double dt, int frames, std::uint64_t seed) {
    if (T < 1e3) throw Error("dynamics", Errc::invalid_argument, "Lyapunov exponents need T >= 1e3");
    if (!(dt > 0.0) || dt > 1e-2) throw Error("dynamics", Errc::invalid_argument, "dt must lie in (0, 1e-2]");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    LyapunovEstimate out;
    const long long N = std::llround(T / dt);
    const double h = T / static_cast<double>(N);
    double sum = 0.0;
    for (int fidx = 0; fidx < std::max(1, frames); ++fidx) {
        const double a0 = 2.0 * kPi * U(rng);
        const std::array<double, 2> phi0{U(rng), U(rng)};
        const MatrixRhs f(M, phi0);
        std::array<double, 2> x{std::cos(a0), std::sin(a0)};
        double logsum = 0.0, log_half = 0.0;
        for (long long i = 0; i < N; ++i) {
            x = rk4_vec(f, x, static_cast<double>(i) * h, h);
            const double nrm = std::hypot(x[0], x[1]);
            logsum += std::log(nrm);
            x = {x[0] / nrm, x[1] / nrm};
            if (i + 1 == N / 2) log_half = logsum;
        }
        const double lam = logsum / T;
        const double lam_half = log_half / (static_cast<double>(N / 2) * h);
        out.per_frame.push_back(lam);
        out.error = std::max(out.error, std::abs(lam - lam_half));
        sum += lam;
    }
    out.lambda = sum / static_cast<double>(out.per_frame.size());
    return out;
}

ModeLockScan mode_lock_scan(const CircleFlow& flow, double lo, double hi, int n_points, double T, double tolerance,
                            const RotationOptions& opt) {
    if (n_points < 11) throw Error("dynamics", Errc::invalid_argument, "mode-lock scans need at least 11 points");
    if (!(lo < 0.0 && hi > 0.0)) throw Error("dynamics", Errc::invalid_argument, "the delta range must contain 0");
    ModeLockScan out;
    for (int i = 0; i < n_points; ++i) {
        const double d = lo + (hi - lo) * i / (n_points - 1);
        CircleFlow shifted = flow;
        shifted.field.add({}, d);
        const RotationEstimate e = rotation_number(shifted, T, opt);
        out.delta.push_back(d);
        out.rho.push_back(e.rho);
        out.error.push_back(e.error);
    }
    std::size_t i0 = 0;
    for (std::size_t i = 1; i < out.delta.size(); ++i)
        if (std::abs(out.delta[i]) < std::abs(out.delta[i0])) i0 = i;
    out.rho0 = out.rho[i0];
    std::size_t l = i0, r = i0;
    while (l > 0 && std::abs(out.rho[l - 1] - out.rho0) <= tolerance) --l;
    while (r + 1 < out.delta.size() && std::abs(out.rho[r + 1] - out.rho0) <= tolerance) ++r;
    out.plateau_lo = out.delta[l];
    out.plateau_hi = out.delta[r];
    out.half_width = std::max(0.0, std::min(-out.plateau_lo, out.plateau_hi));
    return out;
}

}  // namespace qpfkam
