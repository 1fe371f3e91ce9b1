#pragma once

// Screening regions: given K unit charges, the unit-density patch Sigma of area K
// whose potential cancels them outside Sigma. Computed as the divisible sandpile
// (partial balayage) of the point masses onto density one.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "laughlin/core/convolution.hpp"
#include "laughlin/core/grid.hpp"
#include "laughlin/core/parallel.hpp"
#include "laughlin/core/types.hpp"

namespace laughlin {

/// Mean of log|x| over a square of unit side centered at the origin:
/// (pi/2 - 3 - ln 2) / 2.
inline constexpr double kMeanLogUnitCell = (std::numbers::pi / 2.0 - 3.0 - std::numbers::ln2) / 2.0;

struct ScreeningOptions {
    double excess_tol = 1e-10;  ///< stop when no cell carries more than this mass off the obstacle condition
    double omega = 0.0;         ///< over-relaxation; 0 picks 2 / (1 + sin(pi / n))
    long max_sweeps = 400000;
    bool reverse_order = false;  ///< sweep cells in reverse order (the fixed point does not depend on it)
    bool cascade = true;         ///< warm start from a solve on a grid twice as coarse
};

struct ScreeningRegion {
    Grid2D grid;
    std::vector<double> occupancy;  ///< in [0, 1]; interior cells are 1
    std::vector<double> odometer;   ///< total mass emitted per unit area; Phi = 2 pi odometer
    std::vector<Point> sources;
    long sweeps = 0;
    double residual = 0.0;

    double area() const {
        double s = 0.0;
        for (double v : occupancy) s += v;
        return s * grid.cell_area();
    }

    bool full(std::size_t k, double eps = 1e-6) const { return occupancy[k] >= 1.0 - eps; }
    bool empty(std::size_t k, double eps = 1e-6) const { return occupancy[k] <= eps; }
};

namespace detail {

/// Cloud-in-cell deposit of unit masses; returns mass per unit area.
inline std::vector<double> deposit_sources(const Grid2D& g, std::span<const Point> pts) {
    std::vector<double> mu(g.size(), 0.0);
    const double inv_area = 1.0 / g.cell_area();
    for (const auto& p : pts) {
        const Point s = (p - g.origin) / g.h - Point(0.5, 0.5);
        const int ix = static_cast<int>(std::floor(s.real()));
        const int iy = static_cast<int>(std::floor(s.imag()));
        const double fx = s.real() - ix, fy = s.imag() - iy;
        const double w[4] = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};
        const int dx[4] = {0, 1, 0, 1}, dy[4] = {0, 0, 1, 1};
        for (int k = 0; k < 4; ++k) {
            const int cx = ix + dx[k], cy = iy + dy[k];
            if (cx < 1 || cy < 1 || cx >= g.nx - 1 || cy >= g.ny - 1)
                throw InputError("screening_region: source too close to the grid boundary");
            mu[g.index(cx, cy)] += w[k] * inv_area;
        }
    }
    return mu;
}

inline double occupancy_at(const Grid2D& g, const std::vector<double>& u, const std::vector<double>& mu, int ix,
                           int iy) {
    auto U = [&](int x, int y) { return (x < 0 || y < 0 || x >= g.nx || y >= g.ny) ? 0.0 : u[g.index(x, y)]; };
    const double lap = U(ix - 1, iy) + U(ix + 1, iy) + U(ix, iy - 1) + U(ix, iy + 1) - 4.0 * U(ix, iy);
    return mu[g.index(ix, iy)] + lap / g.cell_area();
}

/// Max violation, as mass per cell, of: occupancy <= 1 everywhere, occupancy == 1
/// where the odometer is positive.
inline double obstacle_residual(const Grid2D& g, const std::vector<double>& u, const std::vector<double>& mu) {
    double r = 0.0;
    for (int iy = 1; iy < g.ny - 1; ++iy)
        for (int ix = 1; ix < g.nx - 1; ++ix) {
            const double nu = occupancy_at(g, u, mu, ix, iy);
            r = std::max(r, nu - 1.0);
            if (u[g.index(ix, iy)] > 0.0) r = std::max(r, 1.0 - nu);
        }
    return r * g.cell_area();
}

inline std::vector<double> prolongate(const Grid2D& coarse, const std::vector<double>& uc, const Grid2D& fine) {
    std::vector<double> uf(fine.size(), 0.0);
    for (int iy = 1; iy < fine.ny - 1; ++iy)
        for (int ix = 1; ix < fine.nx - 1; ++ix) {
            const Point s = (fine.center(ix, iy) - coarse.origin) / coarse.h - Point(0.5, 0.5);
            const int cx = static_cast<int>(std::floor(s.real())), cy = static_cast<int>(std::floor(s.imag()));
            const double fx = s.real() - cx, fy = s.imag() - cy;
            auto U = [&](int x, int y) {
                return (x < 0 || y < 0 || x >= coarse.nx || y >= coarse.ny) ? 0.0 : uc[coarse.index(x, y)];
            };
            uf[fine.index(ix, iy)] = (1 - fx) * (1 - fy) * U(cx, cy) + fx * (1 - fy) * U(cx + 1, cy) +
                                     (1 - fx) * fy * U(cx, cy + 1) + fx * fy * U(cx + 1, cy + 1);
        }
    return uf;
}

}  // namespace detail

/// Divisible sandpile of unit masses at `points`, capped at density one.
/// The odometer u solves the obstacle problem u >= 0, occupancy = mu + Lap u <= 1,
/// u (1 - occupancy) = 0; it is found by projected SOR, a toppling schedule whose
/// fixed point is order independent.
inline ScreeningRegion screening_region(std::span<const Point> points, const Grid2D& grid,
                                        const ScreeningOptions& opts = {}) {
    grid.validate();
    require_finite(points, "screening_region");
    if (points.empty()) throw InputError("screening_region: no source points");
    if (grid.nx < 5 || grid.ny < 5) throw InputError("screening_region: grid too small");
    const auto mu = detail::deposit_sources(grid, points);
    const double h2 = grid.cell_area();

    std::vector<double> u(grid.size(), 0.0);
    if (opts.cascade && std::min(grid.nx, grid.ny) > 48) {
        Grid2D coarse{grid.origin, 2.0 * grid.h, (grid.nx + 1) / 2, (grid.ny + 1) / 2};
        ScreeningOptions copts = opts;
        copts.excess_tol = std::max(opts.excess_tol, 1e-6);
        try {
            const auto c = screening_region(points, coarse, copts);
            u = detail::prolongate(coarse, c.odometer, grid);
        } catch (const InputError&) {
            // Coarse grid too tight for the sources; start cold.
        }
    }

    // Relaxation tuned to the size of the region rather than the box.
    const double blob = 2.0 * std::sqrt(points.size() / kPi) / grid.h + 4.0;
    const double n = std::min<double>(std::min(grid.nx, grid.ny), blob);
    const double omega = opts.omega > 0.0 ? opts.omega : 2.0 / (1.0 + std::sin(kPi / n));
    ScreeningRegion out;
    out.grid = grid;
    out.sources.assign(points.begin(), points.end());
    const int nx = grid.nx, ny = grid.ny;

    // Per-row column ranges that can change: cells within two cells of mass.
    std::vector<int> lo(ny), hi(ny);
    auto update_ranges = [&] {
        std::vector<int> a(ny, nx), b(ny, -1);
        for (int iy = 0; iy < ny; ++iy)
            for (int ix = 0; ix < nx; ++ix) {
                const std::size_t k = static_cast<std::size_t>(iy) * nx + ix;
                if (u[k] > 0.0 || mu[k] > 0.0) {
                    a[iy] = std::min(a[iy], ix);
                    b[iy] = std::max(b[iy], ix);
                }
            }
        for (int iy = 0; iy < ny; ++iy) {
            lo[iy] = nx;
            hi[iy] = -1;
            for (int d = -2; d <= 2; ++d) {
                const int y = iy + d;
                if (y < 0 || y >= ny || b[y] < 0) continue;
                lo[iy] = std::min(lo[iy], a[y] - 2);
                hi[iy] = std::max(hi[iy], b[y] + 2);
            }
            lo[iy] = std::max(lo[iy], 1);
            hi[iy] = std::min(hi[iy], nx - 2);
        }
    };
    update_ranges();

    long sweep = 0;
    double res = std::numeric_limits<double>::infinity();
    for (; sweep < opts.max_sweeps; ++sweep) {
        for (int jy = 1; jy < ny - 1; ++jy) {
            const int iy = opts.reverse_order ? ny - 1 - jy : jy;
            for (int jx = lo[iy]; jx <= hi[iy]; ++jx) {
                const int ix = opts.reverse_order ? lo[iy] + hi[iy] - jx : jx;
                const std::size_t k = static_cast<std::size_t>(iy) * nx + ix;
                const double nb = u[k - 1] + u[k + 1] + u[k - nx] + u[k + nx];
                const double gs = 0.25 * (nb - h2 * (1.0 - mu[k]));
                const double v = u[k] + omega * (gs - u[k]);
                u[k] = v > 0.0 ? v : 0.0;
            }
        }
        if (sweep % 8 == 7) {
            res = detail::obstacle_residual(grid, u, mu);
            if (res < opts.excess_tol) break;
            update_ranges();
        }
    }
    if (!(res < opts.excess_tol))
        throw NumericalError("screening_region: sandpile did not settle (residual " + std::to_string(res) + ")");
    out.sweeps = sweep + 1;
    out.residual = res;

    out.occupancy.assign(grid.size(), 0.0);
    for (int iy = 0; iy < grid.ny; ++iy)
        for (int ix = 0; ix < grid.nx; ++ix) {
            const double nu = detail::occupancy_at(grid, u, mu, ix, iy);
            const bool frame = ix == 0 || iy == 0 || ix == grid.nx - 1 || iy == grid.ny - 1;
            if (frame && nu > 1e-12) throw InputError("screening_region: region touches the grid boundary; enlarge the grid");
            out.occupancy[grid.index(ix, iy)] = std::clamp(nu, 0.0, 1.0);
        }
    out.odometer = std::move(u);
    return out;
}

/// Square grid of spacing h around the points, with a margin of the expected
/// region radius sqrt(K / pi) times `margin_factor` plus 6 cells.
inline Grid2D screening_grid(std::span<const Point> points, double h, double margin_factor = 1.0) {
    if (points.empty()) throw InputError("screening_grid: no points");
    if (!(h > 0.0)) throw InputError("screening_grid: spacing must be positive");
    double x0 = points[0].real(), x1 = x0, y0 = points[0].imag(), y1 = y0;
    for (const auto& p : points) {
        x0 = std::min(x0, p.real());
        x1 = std::max(x1, p.real());
        y0 = std::min(y0, p.imag());
        y1 = std::max(y1, p.imag());
    }
    const double margin = margin_factor * std::sqrt(points.size() / kPi) + 6.0 * h;
    Grid2D g;
    g.h = h;
    g.origin = Point(x0 - margin, y0 - margin);
    g.nx = static_cast<int>(std::ceil((x1 - x0 + 2 * margin) / h));
    g.ny = static_cast<int>(std::ceil((y1 - y0 + 2 * margin) / h));
    return g;
}

/// screening_region on an automatically sized grid, enlarged until the region fits.
inline ScreeningRegion screening_region_auto(std::span<const Point> points, double h, const ScreeningOptions& opts = {}) {
    double factor = 1.0;
    for (int attempt = 0; attempt < 6; ++attempt, factor *= 1.6) {
        try {
            return screening_region(points, screening_grid(points, h, factor), opts);
        } catch (const InputError& e) {
            if (std::string(e.what()).find("touches") == std::string::npos) throw;
        }
    }
    throw InputError("screening_region_auto: region keeps touching the grid boundary");
}

// ---------------------------------------------------------------------------
// Electrostatic potential Phi = -log|.| * (sum_k delta_{x_k} - 1_Sigma)
// ---------------------------------------------------------------------------

struct PotentialField {
    Grid2D grid;
    std::vector<double> values;

    /// Bilinear interpolation of the cell-center values.
    double at(Point p) const {
        const Point s = (p - grid.origin) / grid.h - Point(0.5, 0.5);
        int ix = static_cast<int>(std::floor(s.real())), iy = static_cast<int>(std::floor(s.imag()));
        ix = std::clamp(ix, 0, grid.nx - 2);
        iy = std::clamp(iy, 0, grid.ny - 2);
        const double fx = s.real() - ix, fy = s.imag() - iy;
        return (1 - fx) * (1 - fy) * values[grid.index(ix, iy)] + fx * (1 - fy) * values[grid.index(ix + 1, iy)] +
               (1 - fx) * fy * values[grid.index(ix, iy + 1)] + fx * fy * values[grid.index(ix + 1, iy + 1)];
    }
};

/// Log kernel against the point charges (direct) and the occupied cells (FFT).
/// The self-cell kernel is the cell average of -log|.|.
inline PotentialField potential_field(const ScreeningRegion& region, std::size_t threads = 1) {
    const Grid2D& g = region.grid;
    const double h = g.h;
    const double self = -(std::log(h) + kMeanLogUnitCell);
    const GridConvolver conv(g.nx, g.ny, [&](int dx, int dy) {
        return (dx == 0 && dy == 0) ? self : -std::log(h * std::hypot(double(dx), double(dy)));
    });
    std::vector<double> mass(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) mass[k] = region.occupancy[k] * g.cell_area();
    PotentialField f{g, conv.apply(mass)};
    parallel_chunks(g.size(), threads, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t k = lo; k < hi; ++k) {
            const Point c = g.center(k);
            double phi = 0.0;
            for (const auto& s : region.sources) {
                const double d = std::abs(c - s);
                phi += d < 0.5 * h ? self : -std::log(d);
            }
            f.values[k] = phi - f.values[k];
        }
    });
    return f;
}

/// Tolerance for sign checks on Phi: 10 h (1 + log(1/h)) K.
inline double potential_tolerance(double h, std::size_t K) {
    return 10.0 * h * (1.0 + std::log(1.0 / h)) * static_cast<double>(K);
}

/// Cells within `band` cells of a cell with different fullness.
inline std::vector<bool> boundary_band(const ScreeningRegion& r, int band) {
    const Grid2D& g = r.grid;
    std::vector<int> state(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) state[k] = r.full(k) ? 1 : (r.empty(k) ? 0 : 2);
    std::vector<bool> near(g.size(), false);
    for (int iy = 0; iy < g.ny; ++iy)
        for (int ix = 0; ix < g.nx; ++ix) {
            const int s = state[g.index(ix, iy)];
            bool mixed = s == 2;
            for (int dy = -band; dy <= band && !mixed; ++dy)
                for (int dx = -band; dx <= band && !mixed; ++dx) {
                    const int x = ix + dx, y = iy + dy;
                    if (x < 0 || y < 0 || x >= g.nx || y >= g.ny) continue;
                    mixed = state[g.index(x, y)] != s;
                }
            near[g.index(ix, iy)] = mixed;
        }
    return near;
}

struct SignCheck {
    double tol = 0.0;
    std::size_t violations = 0;     ///< outside the boundary band
    std::size_t band_cells = 0;
    std::size_t checked_cells = 0;
    double min_phi = 0.0;           ///< over all cells except source cells
    double max_abs_outside = 0.0;   ///< over cells outside Sigma and the band
};

/// Phi > -tol on Sigma and |Phi| < tol off Sigma, ignoring a band of `band` cells
/// around the region boundary.
inline SignCheck sign_dichotomy(const ScreeningRegion& r, const PotentialField& f, int band = 2) {
    SignCheck s;
    s.tol = potential_tolerance(r.grid.h, r.sources.size());
    const auto near = boundary_band(r, band);
    s.min_phi = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < r.grid.size(); ++k) {
        s.min_phi = std::min(s.min_phi, f.values[k]);
        if (near[k]) {
            ++s.band_cells;
            continue;
        }
        ++s.checked_cells;
        if (r.full(k)) {
            if (!(f.values[k] > -s.tol)) ++s.violations;
        } else {
            s.max_abs_outside = std::max(s.max_abs_outside, std::abs(f.values[k]));
            if (!(std::abs(f.values[k]) < s.tol)) ++s.violations;
        }
    }
    return s;
}

// ---------------------------------------------------------------------------
// Support bound: Sigma inside D(a, r + C sqrt(max_{|x-a|=r} |Phi|))
// ---------------------------------------------------------------------------

/// Calibrated on 100 clouds of 20 points uniform in D(0, rho), rho = sqrt(20 / pi),
/// tested on the circle of radius rho + 0.2: 95th percentile of C_est was 0.525.
inline constexpr double kDefaultSupportConstant = 0.6;

struct SupportBoundReport {
    double max_phi_on_circle = 0.0;
    double predicted_radius = 0.0;
    double region_radius = 0.0;  ///< max distance from a to a cell with occupancy >= 1/2
    bool contained = false;
    double c_est = 0.0;          ///< smallest C giving containment
};

inline SupportBoundReport support_bound_check(const PotentialField& f, const ScreeningRegion& region, Point a, double r,
                                              double C = kDefaultSupportConstant) {
    if (!(r > 0.0)) throw InputError("support_bound_check: radius must be positive");
    const Grid2D& g = f.grid;
    if (!g.contains_disk(a, r + g.h)) throw InputError("support_bound_check: circle leaves the grid");
    for (const auto& s : region.sources)
        if (std::abs(std::abs(s - a) - r) < g.h) throw InputError("support_bound_check: circle passes through a source");
    const int samples = std::max(256, static_cast<int>(4.0 * kPi * r / g.h));
    SupportBoundReport rep;
    for (int k = 0; k < samples; ++k)
        rep.max_phi_on_circle = std::max(rep.max_phi_on_circle, std::abs(f.at(a + std::polar(r, 2.0 * kPi * k / samples))));
    for (std::size_t k = 0; k < g.size(); ++k)
        if (region.occupancy[k] >= 0.5) rep.region_radius = std::max(rep.region_radius, std::abs(g.center(k) - a));
    rep.predicted_radius = r + C * std::sqrt(rep.max_phi_on_circle);
    rep.contained = rep.region_radius <= rep.predicted_radius;
    if (rep.region_radius <= r) rep.c_est = 0.0;
    else if (rep.max_phi_on_circle > 0.0) rep.c_est = (rep.region_radius - r) / std::sqrt(rep.max_phi_on_circle);
    else rep.c_est = std::numeric_limits<double>::infinity();
    return rep;
}

}  // namespace laughlin
