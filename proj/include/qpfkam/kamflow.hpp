#pragma once

#include "qpfkam/arithmetic.hpp"
#include "qpfkam/grid.hpp"
#include "qpfkam/homological.hpp"
#include "qpfkam/schedule.hpp"
#include "qpfkam/spectral.hpp"

#include <string>
#include <vector>

namespace qpfkam {

/// theta' = rho_f + g(phi) + f(theta, phi), phi' = omega. The reference
/// rotation rho_f is kept apart from g, so g(0) = rho_tilde - rho_f.
struct QpfSystem {
    Omega omega{1.0, 0.0};
    double rho_f = 0.0;
    double rho_f_error = 0.0;
    PhiFunction g;
    TorusFunction f;
    double s = 0.0;
    double r = 0.0;
    /// Mean of the user-supplied g moved into rho_tilde at load time.
    double load_shift = 0.0;

    [[nodiscard]] double rho_tilde() const { return rho_f + g.coeff({}).real(); }
    /// Full right-hand side rho_f + g + f as one series.
    [[nodiscard]] TorusFunction vector_field() const;
};

/// Builds a system from rho_tilde + g + f, moving the mean of g into
/// rho_tilde; rho_f starts at rho_tilde.
[[nodiscard]] QpfSystem make_system(double rho_tilde, PhiFunction g, TorusFunction f, const Omega& omega, double s,
                                    double r);

/// Changes the reference rotation while leaving the vector field unchanged.
void set_reference_rotation(QpfSystem& sys, double rho_f, double error = 0.0);

struct ChainElement {
    enum class Kind { fiber_translation, near_identity };
    Kind kind = Kind::fiber_translation;
    /// theta = theta_bar + h(phi) or theta = theta_bar + h(theta_bar, phi)
    TorusFunction h;
    int step = 0;
    double norm = 0.0;   ///< N(h) on its strip
    double dnorm = 0.0;  ///< N(d h / d theta)
};

/// Elementary changes of variables, outermost first: the original angle is
/// e_0(e_1(... e_m(theta_bar))).
class ConjugationChain {
public:
    void append(ChainElement e);
    void append(const ConjugationChain& other);
    [[nodiscard]] const std::vector<ChainElement>& elements() const { return elements_; }
    [[nodiscard]] bool empty() const { return elements_.empty(); }

    /// Original angle of the point (theta_bar, phi).
    [[nodiscard]] double evaluate(double theta_bar, double phi1, double phi2) const;
    /// d theta / d theta_bar at (theta_bar, phi).
    [[nodiscard]] double derivative(double theta_bar, double phi1, double phi2) const;
    /// theta_bar with evaluate(theta_bar, phi) = theta, by fixed-point inversion.
    [[nodiscard]] double inverse(double theta, double phi1, double phi2) const;
    /// prod (1 + N(d h_j / d theta)) over the near-identity elements.
    [[nodiscard]] double derivative_product_bound() const;
    /// sum of N(h_j) over all elements.
    [[nodiscard]] double cumulative_norm() const;

private:
    void rebuild() const;
    std::vector<ChainElement> elements_;
    mutable std::vector<PointEvaluator> eval_;
    mutable bool dirty_ = true;
};

struct EngineeringOptions {
    double gamma = 0.05;  ///< Diophantine constant of rho_f
    double tau = 3.0;
    int degree_cap = 64;
    int inner_passes = 1;
    int min_degree = 4;  ///< smallest truncation tried after dominance failures
    int threads = 1;
    /// Coefficients below prune_rel times the l1 mass of their series are dropped.
    double prune_rel = 1e-16;
    GridOptions grid{};
};

struct InnerPassReport {
    int nu = 0;
    int K = 0;
    double sigma = 0.0;
    double delta = 0.0;
    double eta_g = 0.0;
    double eta_in = 0.0;
    double eta_out = 0.0;
    double dominance_margin = 0.0;
    double C_max = 0.0;
    double residual = 0.0;
    double h_norm = 0.0;
    double h_bound = 0.0;
    double P_norm = 0.0;
    double P_bound = 0.0;
    bool bounds_certified = false;
    int K_shrinks = 0;
};

struct StepReport {
    int n = 0;
    std::string kind;  ///< "b", "abc" or "ab"
    double log2_Q = 0.0;
    double s = 0.0;
    double r = 0.0;
    double g_norm = 0.0;
    double g0 = 0.0;  ///< |g(0)| after the step
    double f_norm_in = 0.0;
    double f_norm_out = 0.0;
    double a_h_norm = 0.0;
    double a_h_bound = 0.0;          ///< Q_n^(7/4) eps_0^(1/2) with eps_0 = N(f_0)
    double a_imag_bound = 0.0;
    double a_tail_norm = 0.0;        ///< N(R_{Q_n} g)
    double htilde_norm = 0.0;
    double dhtilde_norm = 0.0;
    double contraction_ratio = 0.0;  ///< N(f_out) / N(f_in)^1.4
    std::vector<InnerPassReport> inner;
    double seconds = 0.0;
};

struct KamResult {
    ConjugationChain chain;
    QpfSystem system;  ///< conjugated system after the last step
    std::vector<StepReport> steps;
    /// Per-step chains and systems for the (a,b) iteration.
    std::vector<ConjugationChain> step_chains;
    std::vector<QpfSystem> step_systems;
};

struct StepAResult {
    PhiFunction h;
    QpfSystem sys;
};

/// Eliminates the modes 0 < |k| < Q of g by theta = theta_bar + h(phi).
[[nodiscard]] StepAResult step_a_eliminate(const QpfSystem& sys, const BigInt& Q, double s_bar, double r_bar,
                                           const GridOptions& grid = {}, StepReport* report = nullptr);

struct StepBResult {
    ConjugationChain chain;
    TorusFunction htilde;  ///< composed near-identity displacement
    QpfSystem sys;
};

/// Inner loop of near-identity conjugations that push f down quadratically.
[[nodiscard]] StepBResult step_b_reduce(const QpfSystem& sys, double delta1, double sigma1,
                                        const EngineeringOptions& opt, StepReport* report = nullptr);

/// Undoes the step-a translation: g_+ = T_Q g + g_bar_+, f_+ = f_bar_+(theta - h(phi), phi).
[[nodiscard]] QpfSystem step_c_conjugate_back(const PhiFunction& g_before, const BigInt& Q, const PhiFunction& h,
                                              const QpfSystem& reduced, const GridOptions& grid);

/// Engineering run of full steps: one b-only step from the initial system,
/// then (a, b, c) steps with Q_1, Q_2, ... of the CD sequence, until
/// `steps` steps are done.
[[nodiscard]] KamResult run_rotations_reducibility(const QpfSystem& sys0, const CdSequence& cd, int steps,
                                                   const EngineeringOptions& opt);

/// Same, but the step-a translation is never undone.
[[nodiscard]] KamResult run_almost_reducibility(const QpfSystem& sys0, const CdSequence& cd, int steps,
                                                const EngineeringOptions& opt);

struct LinearizableApproximant {
    /// rho_tilde + f_tilde written as one series in the original coordinates.
    TorusFunction field;
    double distance = 0.0;  ///< N(field - original field) on the output strip
    double rho_bar = 0.0;   ///< rotation of the linearized reference system
    /// theta = chain(theta_hat + h_lin(phi), phi) conjugates theta_hat' = rho_bar
    /// to the approximant.
    ConjugationChain chain;
    PhiFunction h_lin;
    double reference_residual = 0.0;  ///< N(d_omega h_lin - T_Q g)
    int steps_used = 0;
    double alias_residual = 0.0;  ///< sampling alias estimate plus the sup mass of pruned correction modes
};

/// Errors: kamflow.target-unreachable.
[[nodiscard]] LinearizableApproximant linearizable_approximant(const QpfSystem& sys, const CdSequence& cd,
                                                               double epsilon, const EngineeringOptions& opt,
                                                               int max_steps = 4);

struct ModeLockedApproximant {
    int k1 = 0, k2 = 0;
    double resonance = 0.0;  ///< <k, omega>
    double epsilon = 0.0;
    TorusFunction field;     ///< <k,omega> + (eps/4pi) sin(4 pi (theta - <k,phi>))
    double distance = 0.0;   ///< sup |field - rho| on the real torus
};

/// Errors: kamflow.search-budget-exceeded.
[[nodiscard]] ModeLockedApproximant mode_locked_approximant(double rho, const Omega& omega, double epsilon,
                                                            int k_cap = 100000);

}  // namespace qpfkam
