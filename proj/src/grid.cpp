#include "qpfkam/grid.hpp"

#include "qpfkam/error.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <mutex>
#include <numbers>

namespace qpfkam {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

int good_size(int n) {
    for (int m = std::max(n, 1);; ++m) {
        int x = m;
        for (int p : {2, 3, 5})
            while (x % p == 0) x /= p;
        if (x == 1) return m;
    }
}

/// In-place 3-D transform; sign FFTW_BACKWARD synthesizes, FFTW_FORWARD analyzes.
void transform(std::vector<Complex>& data, const std::array<int, 3>& n, int sign) {
    auto* p = reinterpret_cast<fftw_complex*>(data.data());
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(planner_mutex());
        plan = fftw_plan_dft_3d(n[0], n[1], n[2], p, p, sign, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(plan);
}

int wrap(int k, int n) {
    const int m = k % n;
    return m < 0 ? m + n : m;
}

/// Signed frequency of grid index i, or nullopt for an even-size Nyquist bin.
std::optional<int> unwrap(int i, int n) {
    if (n % 2 == 0 && i == n / 2) return std::nullopt;
    return i <= (n - 1) / 2 ? i : i - n;
}

bool resolves(const TorusFunction& f, const std::array<int, 3>& n) {
    return 2 * f.extent_l() < n[0] && 2 * f.extent_k1() < n[1] && 2 * f.extent_k2() < n[2];
}

std::vector<Complex> compose_on_grid(const TorusFunction& f, const TorusFunction& h, const std::array<int, 3>& n,
                                     bool delta) {
    const std::size_t n12 = static_cast<std::size_t>(n[1]) * n[2];
    const std::size_t total = static_cast<std::size_t>(n[0]) * n12;
    const int L = f.extent_l();

    // F_l(phi) on the phi grid, one slab per l in [-L, L].
    std::vector<std::vector<Complex>> F(2 * L + 1);
    std::vector<bool> present(2 * L + 1, false);
    for (const auto& [m, c] : f.modes) {
        auto& slab = F[m.l + L];
        if (slab.empty()) slab.assign(n12, Complex{});
        present[m.l + L] = true;
        slab[static_cast<std::size_t>(wrap(m.k1, n[1])) * n[2] + wrap(m.k2, n[2])] += c;
    }
    for (int l = -L; l <= L; ++l)
        if (present[l + L]) transform(F[l + L], {1, n[1], n[2]}, FFTW_BACKWARD);

    std::vector<Complex> H = synthesize(h, n);
    const bool real_h = hermitian_defect(h) < 1e-12;

    std::vector<Complex> out(total);
    std::vector<Complex> wpos(L + 1), wneg(L + 1);
    std::vector<Complex> etheta(2 * L + 1);
    for (int i = 0; i < n[0]; ++i) {
        const double theta = static_cast<double>(i) / n[0];
        for (int l = -L; l <= L; ++l) etheta[l + L] = std::polar(1.0, kTwoPi * l * theta);
        for (std::size_t jk = 0; jk < n12; ++jk) {
            const std::size_t idx = static_cast<std::size_t>(i) * n12 + jk;
            // w(l) = exp(2 pi i l h) - 1, built by w(l+1) = w(l) + w(1) + w(l) w(1)
            Complex w1p, w1n;
            if (real_h) {
                const double x = H[idx].real();
                const double sh = std::sin(std::numbers::pi * x);
                w1p = Complex(-2.0 * sh * sh, std::sin(kTwoPi * x));
                w1n = std::conj(w1p);
            } else {
                const Complex ih = Complex(0.0, kTwoPi) * H[idx];
                w1p = std::exp(ih) - 1.0;
                w1n = std::exp(-ih) - 1.0;
            }
            wpos[0] = wneg[0] = 0.0;
            for (int l = 1; l <= L; ++l) {
                wpos[l] = wpos[l - 1] + w1p + wpos[l - 1] * w1p;
                wneg[l] = wneg[l - 1] + w1n + wneg[l - 1] * w1n;
            }
            Complex acc{};
            for (int l = -L; l <= L; ++l) {
                if (!present[l + L]) continue;
                const Complex w = l >= 0 ? wpos[l] : wneg[-l];
                acc += F[l + L][jk] * etheta[l + L] * (delta ? w : w + 1.0);
            }
            out[idx] = acc;
        }
    }
    return out;
}

using GridValues = std::function<std::vector<Complex>(const std::array<int, 3>&)>;

/// Evaluates on a grid sized for the extents, compares against the doubled grid,
/// and refines until the two agree to opt.alias_tol relative to scale.
ComposeResult two_grid(const std::array<int, 3>& ef, const std::array<int, 3>& eh, double scale, bool hermitian,
                       double s, double r, const GridOptions& opt, const GridValues& values) {
    ComposeResult res;
    std::array<int, 3> n{};
    for (int a = 0; a < 3; ++a) {
        const int e = ef[a] + eh[a];
        n[a] = e == 0 ? 1 : good_size(std::max(2 * ef[a] + 1, 2 * static_cast<int>(std::ceil(0.5 * opt.factor * e)) + 1));
    }
    TorusFunction coarse = analyze(values(n), n);
    for (int attempt = 0;; ++attempt) {
        std::array<int, 3> n2 = n;
        for (int a = 0; a < 3; ++a)
            if (n[a] > 1) n2[a] = good_size(2 * n[a]);
        TorusFunction fine = analyze(values(n2), n2);
        double resid = 0.0;
        for (const auto& [m, c] : fine.modes) resid = std::max(resid, std::abs(c - coarse.coeff(m)));
        for (const auto& [m, c] : coarse.modes)
            if (fine.modes.find(m) == fine.modes.end()) resid = std::max(resid, std::abs(c));
        resid /= scale;
        if (resid <= opt.alias_tol) {
            res.alias_residual = resid;
            res.grid = n;
            TorusFunction out;
            out.s = s;
            out.r = r;
            const double drop = opt.drop_rel * scale;
            for (const auto& [m, c] : fine.modes) {
                if (opt.max_degree >= 0 && m.degree() > opt.max_degree) continue;
                if (std::abs(c) <= drop) continue;
                out.modes.emplace_hint(out.modes.end(), m, c);
            }
            res.value = hermitian ? symmetrize(out) : out;
            return res;
        }
        if (attempt >= opt.max_refinements)
            throw Error("spectral", Errc::insufficient_grid,
                        "two-grid aliasing residual " + std::to_string(resid) + " above tolerance");
        n = n2;
        coarse = std::move(fine);
    }
}

std::array<int, 3> extents(const TorusFunction& f) { return {f.extent_l(), f.extent_k1(), f.extent_k2()}; }

ComposeResult compose_impl(const TorusFunction& f, const TorusFunction& h, const GridOptions& opt, bool delta) {
    ComposeResult res;
    if (opt.strip_margin) {
        const double nh = majorant(h);
        if (!(nh < *opt.strip_margin))
            throw Error("spectral", Errc::strip_overflow,
                        "N(h) = " + std::to_string(nh) + " exceeds strip margin " + std::to_string(*opt.strip_margin));
    }
    if (f.empty() || (h.empty() && delta)) {
        res.value.s = f.s;
        res.value.r = f.r;
        if (!delta) res.value = f;
        return res;
    }
    const double scale = std::max(majorant(f, 0.0, 0.0), 1e-300);
    const bool hermitian = hermitian_defect(f) < 1e-12 && hermitian_defect(h) < 1e-12;
    return two_grid(extents(f), extents(h), scale, hermitian, f.s, f.r, opt,
                    [&](const std::array<int, 3>& n) { return compose_on_grid(f, h, n, delta); });
}

}  // namespace

std::vector<Complex> synthesize(const TorusFunction& f, const std::array<int, 3>& n) {
    if (!resolves(f, n)) throw Error("spectral", Errc::insufficient_grid, "grid too small for the modes of f");
    const std::size_t n12 = static_cast<std::size_t>(n[1]) * n[2];
    std::vector<Complex> v(static_cast<std::size_t>(n[0]) * n12);
    for (const auto& [m, c] : f.modes)
        v[static_cast<std::size_t>(wrap(m.l, n[0])) * n12 + static_cast<std::size_t>(wrap(m.k1, n[1])) * n[2] +
          wrap(m.k2, n[2])] += c;
    transform(v, n, FFTW_BACKWARD);
    return v;
}

TorusFunction analyze(const std::vector<Complex>& values, const std::array<int, 3>& n, double drop_abs) {
    std::vector<Complex> v = values;
    transform(v, n, FFTW_FORWARD);
    const double inv = 1.0 / static_cast<double>(v.size());
    TorusFunction f;
    for (int i = 0; i < n[0]; ++i) {
        const auto l = unwrap(i, n[0]);
        if (!l) continue;
        for (int j = 0; j < n[1]; ++j) {
            const auto k1 = unwrap(j, n[1]);
            if (!k1) continue;
            for (int k = 0; k < n[2]; ++k) {
                const auto k2 = unwrap(k, n[2]);
                if (!k2) continue;
                const Complex c = v[(static_cast<std::size_t>(i) * n[1] + j) * n[2] + k] * inv;
                if (std::abs(c) > drop_abs) f.modes[{*l, *k1, *k2}] = c;
            }
        }
    }
    return f;
}

ComposeResult compose_fiber_shift(const TorusFunction& f, const TorusFunction& h, const GridOptions& opt) {
    return compose_impl(f, h, opt, false);
}

ComposeResult compose_fiber_shift_delta(const TorusFunction& f, const TorusFunction& h, const GridOptions& opt) {
    return compose_impl(f, h, opt, true);
}

ComposeResult series_from_samples(const std::array<int, 3>& bandwidth, double scale,
                                  const std::function<double(double, double, double)>& fn, const GridOptions& opt) {
    return two_grid(bandwidth, {0, 0, 0}, std::max(scale, 1e-300), true, 0.0, 0.0, opt,
                    [&](const std::array<int, 3>& n) {
                        std::vector<Complex> v(static_cast<std::size_t>(n[0]) * n[1] * n[2]);
                        std::size_t idx = 0;
                        for (int i = 0; i < n[0]; ++i)
                            for (int j = 0; j < n[1]; ++j)
                                for (int k = 0; k < n[2]; ++k)
                                    v[idx++] = fn(static_cast<double>(i) / n[0], static_cast<double>(j) / n[1],
                                                  static_cast<double>(k) / n[2]);
                        return v;
                    });
}

ComposeResult quotient_on_grid(const TorusFunction& num, const TorusFunction& den, const GridOptions& opt) {
    if (num.empty()) {
        ComposeResult res;
        res.value.s = num.s;
        res.value.r = num.r;
        return res;
    }
    const double scale = std::max(majorant(num, 0.0, 0.0), 1e-300);
    const bool hermitian = hermitian_defect(num) < 1e-12 && hermitian_defect(den) < 1e-12;
    return two_grid(extents(num), extents(den), scale, hermitian, num.s, num.r, opt,
                    [&](const std::array<int, 3>& n) {
                        std::vector<Complex> a = synthesize(num, n);
                        const std::vector<Complex> b = synthesize(den, n);
                        for (std::size_t i = 0; i < a.size(); ++i) {
                            if (b[i] == 0.0) throw Error("spectral", Errc::zero_divisor, "denominator vanishes on the grid");
                            a[i] /= b[i];
                        }
                        return a;
                    });
}

}  // namespace qpfkam
