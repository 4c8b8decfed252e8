#pragma once

#include "qpfkam/kamflow.hpp"
#include "qpfkam/spectral.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

namespace qpfkam {

/// theta' = V(theta, phi), phi(t) = phi0 + t omega. V is the full right-hand
/// side (constant included) as a real Fourier series.
struct CircleFlow {
    TorusFunction field;
    Omega omega{1.0, 0.0};
};

[[nodiscard]] CircleFlow flow_of(const QpfSystem& sys);

struct FlowTrajectory {
    std::vector<double> t;
    std::vector<double> theta;  ///< continuous lift
    std::array<double, 2> phi0{};
    Omega omega{1.0, 0.0};
    double dt = 0.0;
    int order = 4;
    double error_per_time = 0.0;  ///< step-halving estimate, max over checked steps

    [[nodiscard]] std::array<double, 2> phi_at(double time) const {
        return {phi0[0] + time * omega[0], phi0[1] + time * omega[1]};
    }
};

struct IntegrateOptions {
    double dt = 1e-2;
    /// Keep every n-th sample (the final point is always kept).
    int sample_every = 1;
    /// Fraction of steps re-done with two half steps for the error estimate.
    double check_fraction = 0.01;
    double max_error_per_time = 1e-8;
};

/// Classical RK4. Errors: dynamics.step-control-failure, dynamics.invalid-argument.
[[nodiscard]] FlowTrajectory integrate(const CircleFlow& flow, double theta0, std::array<double, 2> phi0, double T,
                                       const IntegrateOptions& opt = {});

enum class RotationEstimator { plain, weighted_birkhoff };

struct RotationOptions {
    RotationEstimator estimator = RotationEstimator::weighted_birkhoff;
    double dt = 1e-2;
    int starts = 5;
    std::uint64_t seed = 1;
    double max_error_per_time = 1e-8;
    /// Throw dynamics.inconsistent-starts instead of only flagging it.
    bool strict = false;
};

struct RotationEstimate {
    double rho = 0.0;
    double error = 0.0;
    double spread = 0.0;  ///< max - min over starts
    bool consistent = true;
    std::vector<double> per_start;
};

/// Fibered rotation number. pre: T >= 100.
[[nodiscard]] RotationEstimate rotation_number(const CircleFlow& flow, double T, const RotationOptions& opt = {});

/// Circle distance min_k |a - b - k|.
[[nodiscard]] double circle_distance(double a, double b);

struct ConjugacyReport {
    double max_defect = 0.0;
    double mean_defect = 0.0;
    int samples = 0;
    RotationEstimate rho_a;
    RotationEstimate rho_b;
    double rho_difference = 0.0;
    bool rho_within_error = false;
};

struct ConjugacyOptions {
    int samples = 100;
    double T = 50.0;
    double dt = 1e-3;
    /// Time between defect checks along each trajectory.
    double check_interval = 0.01;
    std::uint64_t seed = 7;
    /// Horizon of the rotation-number comparison (0 skips it).
    double rho_T = 0.0;
    double rho_dt = 1e-2;
};

/// The chain maps B coordinates to A coordinates: theta_A = chain(theta_B, phi).
[[nodiscard]] ConjugacyReport verify_conjugacy(const ConjugationChain& chain, const CircleFlow& a, const CircleFlow& b,
                                               const ConjugacyOptions& opt = {});

/// Same, with theta_A = map(theta_B, phi) for an arbitrary callable map.
[[nodiscard]] ConjugacyReport verify_conjugacy(const std::function<double(double, double, double)>& map,
                                               const CircleFlow& a, const CircleFlow& b,
                                               const ConjugacyOptions& opt = {});

/// x' = M(phi) x with M = [[m11, m12], [m21, m22]], entries functions of phi.
struct Sl2Flow {
    std::array<PhiFunction, 4> m;
    Omega omega{1.0, 0.0};

    [[nodiscard]] static Sl2Flow constant(double m11, double m12, double m21, double m22, const Omega& omega);
    /// max |trace M| on a sample grid.
    [[nodiscard]] double trace_defect(int grid = 16) const;
};

struct ProjectiveFlow {
    CircleFlow flow;          ///< doubled-angle coordinate: theta = 2 psi / (2 pi) for x = (cos psi, sin psi)
    double validation_error = 0.0;
};

/// Induced flow on the projective line, checked against direct linear
/// integration over T = 100. Errors: dynamics.validation-failed.
[[nodiscard]] ProjectiveFlow projective_flow(const Sl2Flow& M, double validate_T = 100.0, double tol = 1e-8);

struct LyapunovEstimate {
    double lambda = 0.0;
    double error = 0.0;
    std::vector<double> per_frame;
};

/// Top Lyapunov exponent from renormalized RK4 integration. pre: T >= 1e3.
[[nodiscard]] LyapunovEstimate lyapunov_exponent(const Sl2Flow& M, double T, double dt = 1e-2, int frames = 3,
                                                 std::uint64_t seed = 3);

struct ModeLockScan {
    std::vector<double> delta;
    std::vector<double> rho;
    std::vector<double> error;
    double rho0 = 0.0;
    double plateau_lo = 0.0;  ///< plateau around delta = 0 is [plateau_lo, plateau_hi]
    double plateau_hi = 0.0;
    double half_width = 0.0;  ///< min(-plateau_lo, plateau_hi)
};

/// rho(omega, V + delta) on n_points equally spaced delta in [lo, hi].
[[nodiscard]] ModeLockScan mode_lock_scan(const CircleFlow& flow, double lo, double hi, int n_points, double T,
                                          double tolerance, const RotationOptions& opt = {});

}  // namespace qpfkam
