#pragma once

#include "qpfkam/spectral.hpp"

#include <utility>
#include <vector>

namespace qpfkam {

/// Linear system for the theta-mode l of the truncated homological equation:
/// (A + G) h = f over the lattice |k| < K - |l|.
struct ModeSystem {
    int l = 0;
    int K = 0;
    std::vector<std::pair<int, int>> lattice;  ///< ordered by (|k|, k1, k2)
    std::vector<Complex> A;                     ///< 2 pi i (<k,omega> + l rho)
    std::vector<Complex> G;                     ///< dense row-major 2 pi i l g(p - q); empty unless requested
    double r_prime = 0.0;

    [[nodiscard]] std::size_t size() const { return lattice.size(); }
};

/// Lattice of k with |k|_1 < bound in canonical order.
[[nodiscard]] std::vector<std::pair<int, int>> mode_lattice(int bound);

[[nodiscard]] ModeSystem build_mode_system(const PhiFunction& g, int l, int K, double rho, const Omega& omega,
                                           double r_prime, bool dense);

/// Direct LU solve of (A + G) h = rhs. Needs a dense system.
/// Throws homological.singular-matrix.
[[nodiscard]] std::vector<Complex> dense_oracle_solve(const ModeSystem& sys, const std::vector<Complex>& rhs);

struct PreconditionAudit {
    int K = 0;                    ///< degree used for the dominance scan
    int K_formula = 0;            ///< floor(ln(1/eta_f) / sigma)
    double degree_rhs = 0.0;      ///< (gamma^2 / eta_g)^(1/(2 tau + 3))
    bool degree_ok = false;       ///< K_formula < degree_rhs
    double degree_slack = 0.0;    ///< degree_rhs - K_formula
    double dominance_margin = 0.0;  ///< min |<k,omega> + l rho| - sqrt(|l| (K-|l|)^2 eta_g)
    int witness_l = 0, witness_k1 = 0, witness_k2 = 0;
    bool dominance_ok = false;
    double dc_margin = 0.0;       ///< min |<k,omega> + l rho| (|k|+|l|)^tau over the same range
    bool dc_ok = false;           ///< dc_margin >= gamma
    [[nodiscard]] bool all_ok() const { return degree_ok && dominance_ok && dc_ok; }
};

/// Audits the degree condition K < (gamma^2/eta)^(1/(2 tau+3)) with
/// K = floor(ln(1/eta_f)/sigma), and scans the dominance inequality
/// |<k,omega> + l rho| > (|l| (K-|l|)^2 eta)^(1/2) over 0 < |k|+|l| < K, l != 0.
[[nodiscard]] PreconditionAudit check_preconditions(double eta_g, double eta_f, double sigma, double gamma,
                                                    double tau, int K, double rho, const Omega& omega);

struct HomologicalParams {
    double rho = 0.0;
    Omega omega{1.0, 0.0};
    int K = 8;
    double s = 0.0;
    double r = 0.0;
    double delta = 0.0;
    double sigma = 0.0;
    double gamma = 0.0;
    double tau = 3.0;
    /// Proceed when the degree condition fails (dominance is still enforced).
    bool waive_degree_condition = false;
    double neumann_tol = 1e-14;
    int max_iterations = 400;
    int threads = 1;
};

struct ModeDiagnostics {
    int l = 0;
    std::size_t lattice_size = 0;
    double min_margin = 0.0;     ///< dominance margin over this lattice
    double C = 0.0;              ///< sum_p max_q |(A^{-1} G)_pq| in weighted coordinates
    double g_tilde_norm = 0.0;   ///< max column sum of |G~| / (2 pi)
    double g_tilde_bound = 0.0;  ///< |l| (K-|l|)^2 ||g||_r
    int iterations = 0;
    double h_norm = 0.0;         ///< weighted l1 norm of h_l at r - sigma
};

struct HomologicalSolution {
    TorusFunction h;
    TorusFunction P;  ///< tail of (f - g dh/dtheta) at degree K
    PreconditionAudit audit;
    std::vector<ModeDiagnostics> modes;
    double h_norm = 0.0;     ///< N_{s-delta, r-sigma}(h)
    double h_bound = 0.0;    ///< 2 eta_f / (gamma sigma^(2+tau))
    double P_norm = 0.0;     ///< N_{s-delta, r-sigma}(P)
    double P_bound = 0.0;    ///< 4 eta_f^2 / (gamma sigma^(3+tau))
    double residual = 0.0;   ///< majorant of the truncated-equation residual
    bool bounds_certified = false;
};

/// Solves d_omega h + rho d_theta h + T_K(g d_theta h) = T_K f mode by mode by
/// Neumann iteration. Errors: homological.dominance-violated,
/// homological.neumann-diverged, homological.bound-violated.
[[nodiscard]] HomologicalSolution solve_homological(const TorusFunction& f, const PhiFunction& g,
                                                    const HomologicalParams& p);

/// Residual of the truncated equation for a given h.
[[nodiscard]] TorusFunction truncated_residual(const TorusFunction& h, const TorusFunction& f, const PhiFunction& g,
                                               double rho, const Omega& omega, int K);

}  // namespace qpfkam
