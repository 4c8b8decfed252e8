#pragma once

#include <array>
#include <complex>
#include <cstdlib>
#include <map>
#include <optional>
#include <utility>
#include <vector>

namespace qpfkam {

using Complex = std::complex<double>;
/// omega = (1, alpha)
using Omega = std::array<double, 2>;

/// Fourier index of the mode exp(2 pi i (l theta + k1 phi1 + k2 phi2)).
struct Mode {
    int l = 0;
    int k1 = 0;
    int k2 = 0;

    [[nodiscard]] int k_norm() const { return std::abs(k1) + std::abs(k2); }
    [[nodiscard]] int degree() const { return std::abs(l) + k_norm(); }
    [[nodiscard]] Mode operator-() const { return {-l, -k1, -k2}; }
    [[nodiscard]] Mode operator+(const Mode& o) const { return {l + o.l, k1 + o.k1, k2 + o.k2}; }
    [[nodiscard]] Mode operator-(const Mode& o) const { return {l - o.l, k1 - o.k1, k2 - o.k2}; }
    [[nodiscard]] bool is_zero() const { return l == 0 && k1 == 0 && k2 == 0; }
    bool operator==(const Mode&) const = default;
};

/// Canonical order: degree, then l, k1, k2.
struct CanonicalLess {
    bool operator()(const Mode& a, const Mode& b) const {
        const int da = a.degree(), db = b.degree();
        if (da != db) return da < db;
        if (a.l != b.l) return a.l < b.l;
        if (a.k1 != b.k1) return a.k1 < b.k1;
        return a.k2 < b.k2;
    }
};

using ModeMap = std::map<Mode, Complex, CanonicalLess>;

/// Sparse Fourier series on T^1 x T^2 with strip widths. s and r are in
/// nats per unit mode: the majorant weight of mode (l,k) is
/// exp(|l| s + |k| r), which bounds sup |f| over |Im theta| <= s/(2 pi),
/// |Im phi_j| <= r/(2 pi).
struct TorusFunction {
    ModeMap modes;
    double s = 0.0;
    double r = 0.0;

    [[nodiscard]] Complex coeff(const Mode& m) const;
    void add(const Mode& m, Complex c);
    void set(const Mode& m, Complex c);
    /// Adds c e(m) + conj(c) e(-m), or a real constant when m = 0.
    void add_real_pair(const Mode& m, Complex c);

    [[nodiscard]] bool empty() const { return modes.empty(); }
    [[nodiscard]] std::size_t size() const { return modes.size(); }
    [[nodiscard]] bool phi_only() const;
    [[nodiscard]] int max_degree() const;
    [[nodiscard]] int extent_l() const;
    [[nodiscard]] int extent_k1() const;
    [[nodiscard]] int extent_k2() const;

    /// Removes coefficients with |c| <= tol.
    void prune(double tol = 0.0);

    TorusFunction& operator+=(const TorusFunction& o);
    TorusFunction& operator-=(const TorusFunction& o);
    TorusFunction& operator*=(Complex c);
};

/// Functions of phi alone (every mode has l = 0).
using PhiFunction = TorusFunction;

[[nodiscard]] TorusFunction operator+(TorusFunction a, const TorusFunction& b);
[[nodiscard]] TorusFunction operator-(TorusFunction a, const TorusFunction& b);
[[nodiscard]] TorusFunction operator*(Complex c, TorusFunction a);

[[nodiscard]] TorusFunction constant(double c);
/// amp * sin(2 pi (l theta + <k, phi>))
[[nodiscard]] TorusFunction sine_mode(const Mode& m, double amp);
/// amp * cos(2 pi (l theta + <k, phi>))
[[nodiscard]] TorusFunction cosine_mode(const Mode& m, double amp);

/// sum |c| exp(|l| s + |k| r).
[[nodiscard]] double majorant(const TorusFunction& f, double s, double r);
[[nodiscard]] double majorant(const TorusFunction& f);
/// Same sum restricted to modes of degree >= N.
[[nodiscard]] double majorant_tail(const TorusFunction& f, double s, double r, int N);

/// max |c(-m) - conj(c(m))| divided by max |c| (0 for the zero function).
[[nodiscard]] double hermitian_defect(const TorusFunction& f);
/// Projects onto real-valued functions: c(m) <- (c(m) + conj(c(-m))) / 2.
[[nodiscard]] TorusFunction symmetrize(const TorusFunction& f);

[[nodiscard]] Complex mean(const TorusFunction& f);
/// Modes with 0 < degree < N.
[[nodiscard]] TorusFunction truncate(const TorusFunction& f, int N);
/// Modes with degree >= N.
[[nodiscard]] TorusFunction tail(const TorusFunction& f, int N);
/// l = 0 part, i.e. the theta-average [f]_theta.
[[nodiscard]] PhiFunction theta_average(const TorusFunction& f);
/// f - [f]_theta.
[[nodiscard]] TorusFunction theta_oscillation(const TorusFunction& f);

/// Coefficient times 2 pi i <k, omega>.
[[nodiscard]] TorusFunction derive_omega(const TorusFunction& f, const Omega& omega);
/// Coefficient times 2 pi i l.
[[nodiscard]] TorusFunction derive_theta(const TorusFunction& f);
/// Coefficient times 2 pi i k_j (j = 0, 1).
[[nodiscard]] TorusFunction derive_phi(const TorusFunction& f, int j);

struct ProductResult {
    TorusFunction product;        ///< modes of degree < cutoff
    double remainder_norm = 0.0;  ///< majorant of the dropped modes at the product strip
};

/// Coefficient convolution; the product strip is (min s, min r).
[[nodiscard]] ProductResult multiply(const TorusFunction& f, const TorusFunction& g, int cutoff);

[[nodiscard]] Complex evaluate(const TorusFunction& f, Complex theta, Complex phi1, Complex phi2);
[[nodiscard]] double evaluate_real(const TorusFunction& f, double theta, double phi1, double phi2);

/// Repeated real-point evaluation of a fixed series using power tables.
/// Holds scratch buffers, so one instance must not be shared across threads.
class PointEvaluator {
public:
    PointEvaluator() = default;
    /// Coefficients with |c| <= drop are skipped.
    explicit PointEvaluator(const TorusFunction& f, double drop = 0.0);

    [[nodiscard]] double value(double theta, double phi1, double phi2) const;
    /// Value and theta derivative.
    [[nodiscard]] std::pair<double, double> value_dtheta(double theta, double phi1, double phi2) const;
    [[nodiscard]] std::size_t size() const { return c_.size(); }
    /// sum of |c| over the skipped coefficients.
    [[nodiscard]] double dropped_mass() const { return dropped_; }

private:
    void fill(double theta, double phi1, double phi2) const;
    std::vector<int> l_, k1_, k2_;
    std::vector<Complex> c_;
    int L_ = 0, K1_ = 0, K2_ = 0;
    double dropped_ = 0.0;
    mutable std::vector<Complex> el_, e1_, e2_;
};

/// h with h(k) = g(k) / (2 pi i <k, omega>) for 0 < |k| < N.
/// Throws spectral.zero-divisor on an exactly vanishing divisor.
[[nodiscard]] PhiFunction solve_constant_coefficient(const PhiFunction& g, const Omega& omega, int N);

struct ImaginaryShiftSplit {
    PhiFunction h1;      ///< h on the real torus (real valued)
    double bound = 0.0;  ///< certified bound on sup |h - h1| over the strip r_target
};

/// Splits h into its real-torus restriction and the part generated by an
/// imaginary shift of phi, bounding the latter by
/// sum |h(k)| (exp(|k| r_target) - 1).
/// Throws spectral.bound-violation when `limit` is given and exceeded.
[[nodiscard]] ImaginaryShiftSplit split_real_imaginary_shift(const PhiFunction& h, double r_target,
                                                             std::optional<double> limit = std::nullopt);

}  // namespace qpfkam
