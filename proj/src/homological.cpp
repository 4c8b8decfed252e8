#include "qpfkam/homological.hpp"

#include "qpfkam/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <thread>

namespace qpfkam {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr const char* kModule = "homological";

template <class... A>
std::string sci(const char* f, A... a) {
    char buf[160];
    std::snprintf(buf, sizeof buf, f, a...);
    return buf;
}

struct LatticeIndex {
    int M = 0;  // |k1|, |k2| <= M
    std::vector<int> pos;

    explicit LatticeIndex(const std::vector<std::pair<int, int>>& lat, int bound) : M(std::max(bound - 1, 0)) {
        pos.assign(static_cast<std::size_t>(2 * M + 1) * (2 * M + 1), -1);
        for (std::size_t i = 0; i < lat.size(); ++i) pos[slot(lat[i].first, lat[i].second)] = static_cast<int>(i);
    }
    [[nodiscard]] std::size_t slot(int k1, int k2) const {
        return static_cast<std::size_t>(k1 + M) * (2 * M + 1) + (k2 + M);
    }
    [[nodiscard]] int find(int k1, int k2) const {
        if (std::abs(k1) > M || std::abs(k2) > M) return -1;
        return pos[slot(k1, k2)];
    }
};

struct GMode {
    int m1, m2;
    Complex c;
};

std::vector<GMode> g_support(const PhiFunction& g) {
    std::vector<GMode> out;
    for (const auto& [m, c] : g.modes)
        if (c != Complex{}) out.push_back({m.k1, m.k2, c});
    return out;
}

struct ModeResult {
    std::vector<std::pair<Mode, Complex>> h;
    ModeDiagnostics diag;
};

ModeResult solve_mode(const TorusFunction& f, const std::vector<GMode>& gs, double eta_g, int l,
                      const HomologicalParams& p) {
    ModeResult res;
    const int bound = p.K - std::abs(l);
    const auto lat = mode_lattice(bound);
    const LatticeIndex index(lat, bound);
    const std::size_t n = lat.size();
    const double r_prime = p.r - p.sigma;

    std::vector<Complex> A(n), rhs(n, Complex{});
    std::vector<double> w(n);
    double margin = std::numeric_limits<double>::infinity();
    const double dom = std::sqrt(std::abs(l) * static_cast<double>(bound) * bound * eta_g);
    for (std::size_t i = 0; i < n; ++i) {
        const auto [k1, k2] = lat[i];
        const double d = k1 * p.omega[0] + k2 * p.omega[1] + l * p.rho;
        A[i] = Complex(0.0, kTwoPi * d);
        margin = std::min(margin, std::abs(d) - dom);
        w[i] = std::exp((std::abs(k1) + std::abs(k2) - (bound - 1)) * r_prime);  // relative weight
        rhs[i] = f.coeff({l, k1, k2});
    }
    res.diag.l = l;
    res.diag.lattice_size = n;
    res.diag.min_margin = margin;

    // Row-sum functional and column norm in weighted coordinates.
    std::vector<double> colsum(n, 0.0);
    double C = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const int kp = std::abs(lat[i].first) + std::abs(lat[i].second);
        double rowmax = 0.0;
        for (const auto& gm : gs) {
            const int j = index.find(lat[i].first - gm.m1, lat[i].second - gm.m2);
            if (j < 0) continue;
            const int kq = std::abs(lat[j].first) + std::abs(lat[j].second);
            const double v = std::abs(gm.c) * std::exp((kp - kq) * r_prime);
            rowmax = std::max(rowmax, v);
            colsum[j] += std::abs(l) * v;
        }
        C += kTwoPi * std::abs(l) * rowmax / std::abs(A[i]);
    }
    res.diag.C = C;
    res.diag.g_tilde_norm = n ? *std::max_element(colsum.begin(), colsum.end()) : 0.0;
    res.diag.g_tilde_bound = std::abs(l) * static_cast<double>(bound) * bound * eta_g;

    // Neumann iteration h <- A^{-1}(f - G h).
    std::vector<Complex> h(n), next(n);
    for (std::size_t i = 0; i < n; ++i) h[i] = rhs[i] / A[i];
    const Complex il(0.0, kTwoPi * l);
    int it = 0;
    bool converged = gs.empty();
    while (!converged && it < p.max_iterations) {
        ++it;
        double upd = 0.0, nrm = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            Complex gh{};
            for (const auto& gm : gs) {
                const int j = index.find(lat[i].first - gm.m1, lat[i].second - gm.m2);
                if (j >= 0) gh += gm.c * h[j];
            }
            next[i] = (rhs[i] - il * gh) / A[i];
            upd += w[i] * std::abs(next[i] - h[i]);
            nrm += w[i] * std::abs(next[i]);
        }
        h.swap(next);
        converged = nrm == 0.0 || upd <= p.neumann_tol * nrm;
    }
    if (!converged)
        throw Error(kModule, Errc::neumann_diverged,
                    "no convergence for l = " + std::to_string(l) + " after " + std::to_string(it) + " iterations");
    res.diag.iterations = it;
    double hn = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto [k1, k2] = lat[i];
        hn += std::abs(h[i]) * std::exp((std::abs(k1) + std::abs(k2)) * r_prime);
        if (h[i] != Complex{}) res.h.push_back({Mode{l, k1, k2}, h[i]});
    }
    res.diag.h_norm = hn;
    return res;
}

}  // namespace

std::vector<std::pair<int, int>> mode_lattice(int bound) {
    std::vector<std::pair<int, int>> out;
    for (int d = 0; d < bound; ++d)
        for (int k1 = -d; k1 <= d; ++k1) {
            const int k2 = d - std::abs(k1);
            out.emplace_back(k1, -k2);
            if (k2 != 0) out.emplace_back(k1, k2);
        }
    return out;
}

ModeSystem build_mode_system(const PhiFunction& g, int l, int K, double rho, const Omega& omega, double r_prime,
                             bool dense) {
    ModeSystem sys;
    sys.l = l;
    sys.K = K;
    sys.r_prime = r_prime;
    sys.lattice = mode_lattice(K - std::abs(l));
    const std::size_t n = sys.lattice.size();
    sys.A.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto [k1, k2] = sys.lattice[i];
        sys.A[i] = Complex(0.0, kTwoPi * (k1 * omega[0] + k2 * omega[1] + l * rho));
    }
    if (dense) {
        sys.G.assign(n * n, Complex{});
        const Complex il(0.0, kTwoPi * l);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                sys.G[i * n + j] = il * g.coeff({0, sys.lattice[i].first - sys.lattice[j].first,
                                                 sys.lattice[i].second - sys.lattice[j].second});
    }
    return sys;
}

std::vector<Complex> dense_oracle_solve(const ModeSystem& sys, const std::vector<Complex>& rhs) {
    const auto n = static_cast<Eigen::Index>(sys.size());
    if (static_cast<std::size_t>(n) != rhs.size()) throw Error(kModule, Errc::invalid_argument, "rhs size mismatch");
    if (sys.G.size() != sys.size() * sys.size())
        throw Error(kModule, Errc::invalid_argument, "dense solve needs the dense coupling matrix");
    Eigen::MatrixXcd M(n, n);
    Eigen::VectorXcd b(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        b(i) = rhs[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < n; ++j) M(i, j) = sys.G[static_cast<std::size_t>(i * n + j)];
        M(i, i) += sys.A[static_cast<std::size_t>(i)];
    }
    Eigen::FullPivLU<Eigen::MatrixXcd> lu(M);
    if (!lu.isInvertible()) throw Error(kModule, Errc::singular_matrix, "mode system is singular");
    const Eigen::VectorXcd x = lu.solve(b);
    return {x.data(), x.data() + n};
}

PreconditionAudit check_preconditions(double eta_g, double eta_f, double sigma, double gamma, double tau, int K,
                                      double rho, const Omega& omega) {
    if (!(tau > 2.0) || !(sigma > 0.0) || !(gamma > 0.0))
        throw Error(kModule, Errc::invalid_argument, "need tau > 2, sigma > 0, gamma > 0");
    PreconditionAudit a;
    a.K = K;
    const double kf = eta_f > 0.0 ? std::floor(std::log(1.0 / eta_f) / sigma) : std::numeric_limits<double>::infinity();
    a.K_formula = static_cast<int>(std::clamp(kf, -1e9, 1e9));
    a.degree_rhs = eta_g > 0.0 ? std::pow(gamma * gamma / eta_g, 1.0 / (2.0 * tau + 3.0))
                               : std::numeric_limits<double>::infinity();
    a.degree_ok = kf < a.degree_rhs;
    a.degree_slack = a.degree_rhs - kf;
    a.dominance_margin = std::numeric_limits<double>::infinity();
    a.dc_margin = std::numeric_limits<double>::infinity();
    for (int l = 1; l < K; ++l) {
        const int bound = K - l;
        const double dom = std::sqrt(l * static_cast<double>(bound) * bound * eta_g);
        for (const auto& [k1, k2] : mode_lattice(bound)) {
            const double d = std::abs(k1 * omega[0] + k2 * omega[1] + l * rho);
            if (d - dom < a.dominance_margin) {
                a.dominance_margin = d - dom;
                a.witness_l = l;
                a.witness_k1 = k1;
                a.witness_k2 = k2;
            }
            a.dc_margin = std::min(a.dc_margin, d * std::pow(std::abs(k1) + std::abs(k2) + l, tau));
        }
    }
    a.dominance_ok = a.dominance_margin > 0.0;
    a.dc_ok = a.dc_margin >= gamma;
    return a;
}

TorusFunction truncated_residual(const TorusFunction& h, const TorusFunction& f, const PhiFunction& g, double rho,
                                 const Omega& omega, int K) {
    const TorusFunction dth = derive_theta(h);
    TorusFunction res = derive_omega(h, omega);
    res += Complex(rho) * dth;
    res += truncate(multiply(g, dth, std::numeric_limits<int>::max()).product, K);
    res -= truncate(f, K);
    res.prune();
    return res;
}

HomologicalSolution solve_homological(const TorusFunction& f, const PhiFunction& g, const HomologicalParams& p) {
    if (p.K < 1) throw Error(kModule, Errc::invalid_argument, "K must be >= 1");
    if (!(p.tau > 2.0)) throw Error(kModule, Errc::invalid_argument, "tau must exceed 2");
    if (!(p.sigma > 0.0) || p.sigma > p.delta / 2.0 || !(p.delta > 0.0) || p.delta > p.s || !(p.r > p.sigma))
        throw Error(kModule, Errc::invalid_argument, "strip losses need 0 < sigma <= delta/2, delta <= s, sigma < r");
    if (!g.phi_only()) throw Error(kModule, Errc::invalid_argument, "g must depend on phi only");
    for (const auto& [m, c] : f.modes)
        if (m.l == 0 && c != Complex{})
            throw Error(kModule, Errc::invalid_argument, "f must have zero theta-average");

    const double eta_f = majorant(f, p.s, p.r);
    const double eta_g = majorant(g, 0.0, p.r);
    HomologicalSolution sol;
    sol.audit = check_preconditions(eta_g, eta_f, p.sigma, p.gamma > 0 ? p.gamma : 1e-300, p.tau, p.K, p.rho, p.omega);
    if (!sol.audit.dominance_ok)
        throw Error(kModule, Errc::dominance_violated,
                    "margin " + std::to_string(sol.audit.dominance_margin) + " at l = " +
                        std::to_string(sol.audit.witness_l) + ", k = (" + std::to_string(sol.audit.witness_k1) +
                        "," + std::to_string(sol.audit.witness_k2) + ")");
    if (!sol.audit.degree_ok && !p.waive_degree_condition)
        throw Error(kModule, Errc::invalid_argument, "truncation-degree condition fails and was not waived");

    const auto gs = g_support(g);
    std::vector<int> ls;
    for (int l = -(p.K - 1); l < p.K; ++l)
        if (l != 0) ls.push_back(l);
    std::vector<ModeResult> results(ls.size());
    const int nthreads = std::max(1, std::min<int>(p.threads, static_cast<int>(ls.size())));
    if (nthreads == 1) {
        for (std::size_t i = 0; i < ls.size(); ++i) results[i] = solve_mode(f, gs, eta_g, ls[i], p);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::exception_ptr> errors(ls.size());
        std::vector<std::thread> pool;
        for (int t = 0; t < nthreads; ++t)
            pool.emplace_back([&] {
                for (std::size_t i; (i = next++) < ls.size();) {
                    try {
                        results[i] = solve_mode(f, gs, eta_g, ls[i], p);
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                }
            });
        for (auto& th : pool) th.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }

    sol.h.s = f.s;
    sol.h.r = f.r;
    for (auto& r : results) {
        if (r.diag.C >= 0.5)
            throw Error(kModule, Errc::neumann_diverged,
                        "row-sum functional " + std::to_string(r.diag.C) + " >= 1/2 at l = " + std::to_string(r.diag.l));
        for (auto& [m, c] : r.h) sol.h.modes.emplace(m, c);
        sol.modes.push_back(r.diag);
    }

    const TorusFunction dth = derive_theta(sol.h);
    const TorusFunction gdh = multiply(g, dth, std::numeric_limits<int>::max()).product;
    sol.P = tail(f, p.K) - tail(gdh, p.K);
    sol.P.s = f.s;
    sol.P.r = f.r;
    sol.P.prune();

    sol.residual = majorant(truncated_residual(sol.h, f, g, p.rho, p.omega, p.K), p.s - p.delta, p.r - p.sigma);
    sol.h_norm = majorant(sol.h, p.s - p.delta, p.r - p.sigma);
    sol.P_norm = majorant(sol.P, p.s - p.delta, p.r - p.sigma);
    if (p.gamma > 0.0) {
        sol.h_bound = 2.0 * eta_f / (p.gamma * std::pow(p.sigma, 2.0 + p.tau));
        sol.P_bound = 4.0 * eta_f * eta_f / (p.gamma * std::pow(p.sigma, 3.0 + p.tau));
    }
    sol.bounds_certified = sol.audit.all_ok();
    if (sol.bounds_certified && (sol.h_norm > sol.h_bound || sol.P_norm > sol.P_bound))
        throw Error(kModule, Errc::bound_violated,
                    sci("N(h) = %.3e (bound %.3e), N(P) = %.3e (bound %.3e)", sol.h_norm, sol.h_bound, sol.P_norm,
                        sol.P_bound));
    return sol;
}

}  // namespace qpfkam
