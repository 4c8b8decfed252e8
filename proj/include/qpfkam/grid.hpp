#pragma once

#include "qpfkam/spectral.hpp"

#include <array>
#include <functional>
#include <optional>

namespace qpfkam {

struct GridOptions {
    /// Grid points per axis relative to the combined bandwidth of f and h.
    double factor = 4.0;
    /// Relative two-grid residual above which the composition is rejected.
    double alias_tol = 1e-12;
    /// Output keeps modes with degree <= max_degree (negative: all resolved modes).
    int max_degree = -1;
    /// Coefficients with |c| <= drop_rel * N(f) are discarded.
    double drop_rel = 1e-18;
    /// When set, N_{s,r}(h) must stay below this strip margin.
    std::optional<double> strip_margin;
    /// Grid doublings attempted before giving up.
    int max_refinements = 2;
};

struct ComposeResult {
    TorusFunction value;
    double alias_residual = 0.0;  ///< relative difference between two grid resolutions
    std::array<int, 3> grid{};     ///< sizes of the coarser accepted grid
};

/// Fourier expansion of (theta, phi) -> f(theta + h(theta, phi), phi).
/// Errors: spectral.insufficient-grid, spectral.strip-overflow.
[[nodiscard]] ComposeResult compose_fiber_shift(const TorusFunction& f, const TorusFunction& h,
                                                const GridOptions& opt = {});

/// Same as compose_fiber_shift but returns f(theta + h, phi) - f(theta, phi),
/// computed without cancellation.
[[nodiscard]] ComposeResult compose_fiber_shift_delta(const TorusFunction& f, const TorusFunction& h,
                                                      const GridOptions& opt = {});

/// Fourier expansion of num / den from grid values. Errors as for
/// compose_fiber_shift, plus spectral.zero-divisor.
[[nodiscard]] ComposeResult quotient_on_grid(const TorusFunction& num, const TorusFunction& den,
                                             const GridOptions& opt = {});

/// Fourier expansion of a real function given pointwise, starting from a grid
/// that resolves `bandwidth` modes per axis; scale sets the relative tolerances.
[[nodiscard]] ComposeResult series_from_samples(const std::array<int, 3>& bandwidth, double scale,
                                                const std::function<double(double, double, double)>& fn,
                                                const GridOptions& opt = {});

/// Values of f on a regular (n0, n1, n2) grid, row-major with theta slowest.
[[nodiscard]] std::vector<Complex> synthesize(const TorusFunction& f, const std::array<int, 3>& n);

/// Fourier coefficients from grid values, keeping modes resolved by the grid.
[[nodiscard]] TorusFunction analyze(const std::vector<Complex>& values, const std::array<int, 3>& n,
                                    double drop_abs = 0.0);

}  // namespace qpfkam
