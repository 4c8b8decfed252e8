#include "qpfkam/spectral.hpp"

#include "qpfkam/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace qpfkam {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double weight(const Mode& m, double s, double r) { return std::exp(std::abs(m.l) * s + m.k_norm() * r); }

}  // namespace

Complex TorusFunction::coeff(const Mode& m) const {
    auto it = modes.find(m);
    return it == modes.end() ? Complex{} : it->second;
}

void TorusFunction::add(const Mode& m, Complex c) { modes[m] += c; }

void TorusFunction::set(const Mode& m, Complex c) { modes[m] = c; }

void TorusFunction::add_real_pair(const Mode& m, Complex c) {
    if (m.is_zero()) {
        modes[m] += Complex(c.real(), 0.0);
        return;
    }
    modes[m] += c;
    modes[-m] += std::conj(c);
}

bool TorusFunction::phi_only() const {
    return std::all_of(modes.begin(), modes.end(), [](const auto& kv) { return kv.first.l == 0; });
}

int TorusFunction::max_degree() const {
    int d = 0;
    for (const auto& [m, c] : modes) d = std::max(d, m.degree());
    return d;
}

int TorusFunction::extent_l() const {
    int d = 0;
    for (const auto& [m, c] : modes) d = std::max(d, std::abs(m.l));
    return d;
}

int TorusFunction::extent_k1() const {
    int d = 0;
    for (const auto& [m, c] : modes) d = std::max(d, std::abs(m.k1));
    return d;
}

int TorusFunction::extent_k2() const {
    int d = 0;
    for (const auto& [m, c] : modes) d = std::max(d, std::abs(m.k2));
    return d;
}

void TorusFunction::prune(double tol) {
    for (auto it = modes.begin(); it != modes.end();) {
        if (std::abs(it->second) <= tol)
            it = modes.erase(it);
        else
            ++it;
    }
}

TorusFunction& TorusFunction::operator+=(const TorusFunction& o) {
    for (const auto& [m, c] : o.modes) modes[m] += c;
    return *this;
}

TorusFunction& TorusFunction::operator-=(const TorusFunction& o) {
    for (const auto& [m, c] : o.modes) modes[m] -= c;
    return *this;
}

TorusFunction& TorusFunction::operator*=(Complex c) {
    for (auto& [m, v] : modes) v *= c;
    return *this;
}

TorusFunction operator+(TorusFunction a, const TorusFunction& b) { return a += b; }

TorusFunction operator-(TorusFunction a, const TorusFunction& b) { return a -= b; }

TorusFunction operator*(Complex c, TorusFunction a) { return a *= c; }

TorusFunction constant(double c) {
    TorusFunction f;
    f.set({}, c);
    return f;
}

TorusFunction sine_mode(const Mode& m, double amp) {
    // sin x = (e^{ix} - e^{-ix}) / 2i
    TorusFunction f;
    f.add_real_pair(m, Complex(0.0, -amp / 2.0));
    return f;
}

TorusFunction cosine_mode(const Mode& m, double amp) {
    TorusFunction f;
    if (m.is_zero())
        f.set(m, amp);
    else
        f.add_real_pair(m, Complex(amp / 2.0, 0.0));
    return f;
}

double majorant(const TorusFunction& f, double s, double r) {
    double sum = 0.0;
    for (const auto& [m, c] : f.modes) sum += std::abs(c) * weight(m, s, r);
    return sum;
}

double majorant(const TorusFunction& f) { return majorant(f, f.s, f.r); }

double majorant_tail(const TorusFunction& f, double s, double r, int N) {
    double sum = 0.0;
    for (const auto& [m, c] : f.modes)
        if (m.degree() >= N) sum += std::abs(c) * weight(m, s, r);
    return sum;
}

double hermitian_defect(const TorusFunction& f) {
    double scale = 0.0, worst = 0.0;
    for (const auto& [m, c] : f.modes) {
        scale = std::max(scale, std::abs(c));
        worst = std::max(worst, std::abs(f.coeff(-m) - std::conj(c)));
    }
    return scale == 0.0 ? 0.0 : worst / scale;
}

TorusFunction symmetrize(const TorusFunction& f) {
    TorusFunction g;
    g.s = f.s;
    g.r = f.r;
    for (const auto& [m, c] : f.modes) {
        const Complex v = 0.5 * (c + std::conj(f.coeff(-m)));
        g.modes[m] = v;
        g.modes[-m] = std::conj(v);
    }
    return g;
}

Complex mean(const TorusFunction& f) { return f.coeff({}); }

TorusFunction truncate(const TorusFunction& f, int N) {
    TorusFunction g;
    g.s = f.s;
    g.r = f.r;
    for (const auto& [m, c] : f.modes)
        if (!m.is_zero() && m.degree() < N) g.modes.emplace_hint(g.modes.end(), m, c);
    return g;
}

TorusFunction tail(const TorusFunction& f, int N) {
    TorusFunction g;
    g.s = f.s;
    g.r = f.r;
    for (const auto& [m, c] : f.modes)
        if (!m.is_zero() && m.degree() >= N) g.modes.emplace_hint(g.modes.end(), m, c);
    return g;
}

PhiFunction theta_average(const TorusFunction& f) {
    PhiFunction g;
    g.s = f.s;
    g.r = f.r;
    for (const auto& [m, c] : f.modes)
        if (m.l == 0) g.modes.emplace_hint(g.modes.end(), m, c);
    return g;
}

TorusFunction theta_oscillation(const TorusFunction& f) {
    TorusFunction g;
    g.s = f.s;
    g.r = f.r;
    for (const auto& [m, c] : f.modes)
        if (m.l != 0) g.modes.emplace_hint(g.modes.end(), m, c);
    return g;
}

TorusFunction derive_omega(const TorusFunction& f, const Omega& omega) {
    TorusFunction g;
    g.s = f.s;
    g.r = f.r;
    for (const auto& [m, c] : f.modes) {
        if (m.k1 == 0 && m.k2 == 0) continue;
        const double d = m.k1 * omega[0] + m.k2 * omega[1];
        g.modes.emplace_hint(g.modes.end(), m, c * Complex(0.0, kTwoPi * d));
    }
    return g;
}

TorusFunction derive_theta(const TorusFunction& f) {
    TorusFunction g;
    g.s = f.s;
    g.r = f.r;
    for (const auto& [m, c] : f.modes)
        if (m.l != 0) g.modes.emplace_hint(g.modes.end(), m, c * Complex(0.0, kTwoPi * m.l));
    return g;
}

TorusFunction derive_phi(const TorusFunction& f, int j) {
    TorusFunction g;
    g.s = f.s;
    g.r = f.r;
    for (const auto& [m, c] : f.modes) {
        const int k = j == 0 ? m.k1 : m.k2;
        if (k != 0) g.modes.emplace_hint(g.modes.end(), m, c * Complex(0.0, kTwoPi * k));
    }
    return g;
}

ProductResult multiply(const TorusFunction& f, const TorusFunction& g, int cutoff) {
    if (cutoff < 1) throw Error("spectral", Errc::invalid_argument, "cutoff must be >= 1");
    ProductResult out;
    out.product.s = std::min(f.s, g.s);
    out.product.r = std::min(f.r, g.r);
    ModeMap dropped;
    for (const auto& [a, ca] : f.modes)
        for (const auto& [b, cb] : g.modes) {
            const Mode m = a + b;
            if (m.degree() < cutoff)
                out.product.modes[m] += ca * cb;
            else
                dropped[m] += ca * cb;
        }
    for (const auto& [m, c] : dropped) out.remainder_norm += std::abs(c) * weight(m, out.product.s, out.product.r);
    return out;
}

Complex evaluate(const TorusFunction& f, Complex theta, Complex phi1, Complex phi2) {
    Complex sum{};
    const Complex i2pi(0.0, kTwoPi);
    for (const auto& [m, c] : f.modes)
        sum += c * std::exp(i2pi * (static_cast<double>(m.l) * theta + static_cast<double>(m.k1) * phi1 +
                                    static_cast<double>(m.k2) * phi2));
    return sum;
}

double evaluate_real(const TorusFunction& f, double theta, double phi1, double phi2) {
    double sum = 0.0;
    for (const auto& [m, c] : f.modes) {
        const double x = kTwoPi * (m.l * theta + m.k1 * phi1 + m.k2 * phi2);
        sum += c.real() * std::cos(x) - c.imag() * std::sin(x);
    }
    return sum;
}

PointEvaluator::PointEvaluator(const TorusFunction& f, double drop) {
    for (const auto& [m, c] : f.modes) {
        if (std::abs(c) <= drop) {
            dropped_ += std::abs(c);
            continue;
        }
        l_.push_back(m.l);
        k1_.push_back(m.k1);
        k2_.push_back(m.k2);
        c_.push_back(c);
        L_ = std::max(L_, std::abs(m.l));
        K1_ = std::max(K1_, std::abs(m.k1));
        K2_ = std::max(K2_, std::abs(m.k2));
    }
    el_.resize(2 * L_ + 1);
    e1_.resize(2 * K1_ + 1);
    e2_.resize(2 * K2_ + 1);
}

namespace {

void powers(std::vector<Complex>& e, int K, double x) {
    const Complex w = std::polar(1.0, kTwoPi * x);
    e[K] = 1.0;
    for (int k = 1; k <= K; ++k) {
        e[K + k] = e[K + k - 1] * w;
        e[K - k] = std::conj(e[K + k]);
    }
}

}  // namespace

void PointEvaluator::fill(double theta, double phi1, double phi2) const {
    powers(el_, L_, theta);
    powers(e1_, K1_, phi1);
    powers(e2_, K2_, phi2);
}

double PointEvaluator::value(double theta, double phi1, double phi2) const {
    fill(theta, phi1, phi2);
    double sum = 0.0;
    for (std::size_t i = 0; i < c_.size(); ++i)
        sum += (c_[i] * el_[L_ + l_[i]] * e1_[K1_ + k1_[i]] * e2_[K2_ + k2_[i]]).real();
    return sum;
}

std::pair<double, double> PointEvaluator::value_dtheta(double theta, double phi1, double phi2) const {
    fill(theta, phi1, phi2);
    double v = 0.0, d = 0.0;
    for (std::size_t i = 0; i < c_.size(); ++i) {
        const Complex z = c_[i] * el_[L_ + l_[i]] * e1_[K1_ + k1_[i]] * e2_[K2_ + k2_[i]];
        v += z.real();
        d -= kTwoPi * l_[i] * z.imag();
    }
    return {v, d};
}

PhiFunction solve_constant_coefficient(const PhiFunction& g, const Omega& omega, int N) {
    if (!g.phi_only()) throw Error("spectral", Errc::invalid_argument, "constant-coefficient solve needs a function of phi");
    PhiFunction h;
    h.s = g.s;
    h.r = g.r;
    for (const auto& [m, c] : g.modes) {
        if (m.is_zero() || m.k_norm() >= N) continue;
        const double d = m.k1 * omega[0] + m.k2 * omega[1];
        if (d == 0.0)
            throw Error("spectral", Errc::zero_divisor,
                        "<k,omega> = 0 at k = (" + std::to_string(m.k1) + "," + std::to_string(m.k2) + ")");
        h.modes.emplace_hint(h.modes.end(), m, c / Complex(0.0, kTwoPi * d));
    }
    return h;
}

ImaginaryShiftSplit split_real_imaginary_shift(const PhiFunction& h, double r_target, std::optional<double> limit) {
    if (!h.phi_only()) throw Error("spectral", Errc::invalid_argument, "imaginary-shift split needs a function of phi");
    ImaginaryShiftSplit out;
    out.h1 = symmetrize(h);
    for (const auto& [m, c] : h.modes) out.bound += std::abs(c) * std::expm1(m.k_norm() * r_target);
    if (limit && out.bound > *limit)
        throw Error("spectral", Errc::bound_violation,
                    "imaginary part bound " + std::to_string(out.bound) + " exceeds " + std::to_string(*limit));
    return out;
}

}  // namespace qpfkam
