#pragma once

// Capped-density variational problem
//   E^flo = inf { int V rho + (lambda/2) iint rho(x) W(x - y) rho(y) : 0 <= rho <= cap, int rho = N }
// on a uniform grid. lambda = 0 is the bathtub problem, solved exactly by a
// sorted fill; lambda != 0 uses Frank-Wolfe whose linear step is that fill.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "laughlin/core/convolution.hpp"
#include "laughlin/core/grid.hpp"
#include "laughlin/core/parallel.hpp"
#include "laughlin/core/types.hpp"

namespace laughlin {

/// Cell averages of f by 3 x 3 Gauss-Legendre quadrature (exact for degree <= 5).
inline std::vector<double> cell_average(const Grid2D& g, const std::function<double(Point)>& f) {
    static constexpr double node[3] = {-0.7745966692414834, 0.0, 0.7745966692414834};
    static constexpr double weight[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
    std::vector<double> out(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) {
        const Point c = g.center(k);
        double s = 0.0;
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b)
                s += weight[a] * weight[b] * f(c + 0.5 * g.h * Point(node[a], node[b]));
        out[k] = s;
    }
    return out;
}

struct DensityProfile {
    Grid2D grid;
    std::vector<double> rho;

    double mass() const {
        double s = 0.0;
        for (double r : rho) s += r;
        return s * grid.cell_area();
    }

    double at(Point p) const {
        auto k = grid.cell_of(p);
        return k ? rho[*k] : 0.0;
    }
};

struct BathtubResult {
    DensityProfile density;
    double fill_level = 0.0;  ///< mu: V of the fractional (last filled) cell
    double energy = 0.0;
};

namespace detail {

inline void check_problem(const Grid2D& g, std::span<const double> V, double cap, double N) {
    g.validate();
    if (V.size() != g.size()) throw InputError("bathtub: potential has wrong length");
    for (double v : V)
        if (!std::isfinite(v)) throw InputError("bathtub: potential must be finite");
    if (!(cap > 0.0) || !std::isfinite(cap)) throw InputError("bathtub: cap must be positive");
    if (!(N > 0.0) || !std::isfinite(N)) throw InputError("bathtub: mass must be positive");
    if (cap * g.cell_area() * g.size() < N * (1.0 - 1e-12))
        throw InputError("bathtub: insufficient grid capacity (cap * area < N)");
}

inline double linear_energy(const Grid2D& g, std::span<const double> V, std::span<const double> rho) {
    double s = 0.0;
    for (std::size_t k = 0; k < rho.size(); ++k) s += V[k] * rho[k];
    return s * g.cell_area();
}

/// Fill into `rho`; returns the fill level.
inline double fill(const Grid2D& g, std::span<const double> V, double cap, double N, std::vector<std::size_t>& order,
                   std::vector<double>& rho) {
    order.resize(V.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return V[a] < V[b]; });
    const double cells = N / (cap * g.cell_area());
    std::size_t full = static_cast<std::size_t>(std::floor(cells));
    double frac = cells - static_cast<double>(full);
    if (full >= order.size()) {
        full = order.size();
        frac = 0.0;
    }
    rho.assign(V.size(), 0.0);
    for (std::size_t i = 0; i < full; ++i) rho[order[i]] = cap;
    double mu = full > 0 ? V[order[full - 1]] : V[order[0]];
    if (frac > 0.0 && full < order.size()) {
        rho[order[full]] = frac * cap;
        mu = V[order[full]];
    }
    return mu;
}

}  // namespace detail

/// Exact minimizer of int V rho under 0 <= rho <= cap, int rho = N: fill the
/// cells in increasing V (ties in row-major order), the last one fractionally.
inline BathtubResult bathtub_fill(const Grid2D& g, std::span<const double> V, double cap, double N) {
    detail::check_problem(g, V, cap, N);
    BathtubResult out;
    out.density.grid = g;
    std::vector<std::size_t> order;
    out.fill_level = detail::fill(g, V, cap, N, order, out.density.rho);
    out.energy = detail::linear_energy(g, V, out.density.rho);
    return out;
}

/// K rho with K_ij = W(c_i - c_j) on the grid. Direct sums on small grids, FFT otherwise.
class PairKernel {
  public:
    PairKernel(const Grid2D& g, const std::function<double(Point)>& W, std::size_t direct_limit = 4096) : grid_(g) {
        auto k = [W, h = g.h](int dx, int dy) {
            const double v = W(Point(dx * h, dy * h));
            if (!std::isfinite(v)) throw InputError("pair potential is not finite on the grid");
            return v;
        };
        entry_fn_ = k;
        if (g.size() <= direct_limit) {
            table_.resize(static_cast<std::size_t>(2 * g.nx - 1) * (2 * g.ny - 1));
            for (int dy = -(g.ny - 1); dy < g.ny; ++dy)
                for (int dx = -(g.nx - 1); dx < g.nx; ++dx) table_[slot(dx, dy)] = k(dx, dy);
        } else {
            fft_.emplace(g.nx, g.ny, k);
        }
    }

    std::vector<double> apply(std::span<const double> rho) const {
        if (fft_) return fft_->apply(std::vector<double>(rho.begin(), rho.end()));
        const Grid2D& g = grid_;
        std::vector<double> out(g.size(), 0.0);
        for (int iy = 0; iy < g.ny; ++iy)
            for (int ix = 0; ix < g.nx; ++ix) {
                double s = 0.0;
                for (int jy = 0; jy < g.ny; ++jy)
                    for (int jx = 0; jx < g.nx; ++jx) {
                        const double r = rho[g.index(jx, jy)];
                        if (r != 0.0) s += table_[slot(ix - jx, iy - jy)] * r;
                    }
                out[g.index(ix, iy)] = s;
            }
        return out;
    }

    double entry(std::size_t i, std::size_t j) const {
        const int dx = static_cast<int>(i % grid_.nx) - static_cast<int>(j % grid_.nx);
        const int dy = static_cast<int>(i / grid_.nx) - static_cast<int>(j / grid_.nx);
        return table_.empty() ? entry_fn_(dx, dy) : table_[slot(dx, dy)];
    }

  private:
    std::size_t slot(int dx, int dy) const {
        return static_cast<std::size_t>(dy + grid_.ny - 1) * (2 * grid_.nx - 1) + (dx + grid_.nx - 1);
    }

    Grid2D grid_;
    std::vector<double> table_;
    std::optional<GridConvolver> fft_;
    std::function<double(int, int)> entry_fn_;
};

struct FlockingOptions {
    double gap_tol = 1e-8;  ///< duality gap stopping tolerance
    int max_iters = 20000;
    bool polish = true;      ///< active-set refinement of the fractional cells
    std::size_t max_free = 3000;
    std::size_t direct_limit = 4096;
};

struct FlockingResult {
    DensityProfile density;
    double energy = 0.0;
    double fill_level = 0.0;
    double gap = 0.0;
    int iterations = 0;
    bool converged = false;
    bool monotone = true;  ///< energy never increased across iterations
    std::vector<double> energy_trace;
};

/// E(rho) = h^2 <V, rho> + (lambda/2) h^4 <rho, K rho>.
inline double flocking_energy(const Grid2D& g, std::span<const double> V, const PairKernel& K, double lambda,
                              std::span<const double> rho) {
    double e = detail::linear_energy(g, V, rho);
    if (lambda != 0.0) {
        const auto kr = K.apply(rho);
        double q = 0.0;
        for (std::size_t i = 0; i < rho.size(); ++i) q += rho[i] * kr[i];
        e += 0.5 * lambda * g.cell_area() * g.cell_area() * q;
    }
    return e;
}

namespace detail {

/// Solves the KKT system for the cells strictly between 0 and cap, holding the
/// others fixed, and re-classifies until consistent. Returns false if it fails
/// to settle or the free set grows too large.
inline bool polish_active_set(const Grid2D& g, std::span<const double> V, const PairKernel& K, double lambda, double cap,
                              double N, std::vector<double>& rho, std::size_t max_free) {
    const double h2 = g.cell_area();
    const std::size_t n = rho.size();
    std::vector<double> x = rho;
    // 0: zero, 1: free, 2: cap
    std::vector<int> state(n);
    for (std::size_t i = 0; i < n; ++i) state[i] = x[i] <= 0.0 ? 0 : (x[i] >= cap ? 2 : 1);
    for (int round = 0; round < 50; ++round) {
        std::vector<std::size_t> F;
        for (std::size_t i = 0; i < n; ++i)
            if (state[i] == 1) F.push_back(i);
        if (F.size() > max_free) return false;
        std::vector<double> fixed(n, 0.0);
        double fixed_mass = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (state[i] == 2) {
                fixed[i] = cap;
                fixed_mass += cap * h2;
            }
        const auto kfixed = K.apply(fixed);
        const std::size_t m = F.size();
        double mu = 0.0;
        if (m > 0) {
            // [lambda h^2 K_FF  -1] [rho_F]   [-V_F - lambda h^2 (K rho_fixed)_F]
            // [h^2 1^T            0] [mu   ] = [N - fixed mass                   ]
            Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m + 1, m + 1);
            Eigen::VectorXd b(m + 1);
            for (std::size_t a = 0; a < m; ++a) {
                for (std::size_t c = 0; c < m; ++c) A(a, c) = lambda * h2 * K.entry(F[a], F[c]);
                A(a, m) = -1.0;
                A(m, a) = h2;
                b(a) = -V[F[a]] - lambda * h2 * kfixed[F[a]];
            }
            b(m) = N - fixed_mass;
            const Eigen::VectorXd sol = A.colPivHouseholderQr().solve(b);
            if (!sol.allFinite()) return false;
            for (std::size_t a = 0; a < m; ++a) x[F[a]] = sol(a);
            mu = sol(m);
        } else {
            return false;
        }
        for (std::size_t i = 0; i < n; ++i)
            if (state[i] != 1) x[i] = fixed[i];
        const auto kx = K.apply(x);
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            const double veff = V[i] + lambda * h2 * kx[i];
            if (state[i] == 1) {
                if (x[i] < 0.0) state[i] = 0, changed = true;
                else if (x[i] > cap) state[i] = 2, changed = true;
            } else if (state[i] == 0 && veff < mu) {
                state[i] = 1, changed = true;
            } else if (state[i] == 2 && veff > mu) {
                state[i] = 1, changed = true;
            }
        }
        if (!changed) {
            rho = std::move(x);
            return true;
        }
    }
    return false;
}

}  // namespace detail

/// Frank-Wolfe with exact line search; every linear subproblem is a bathtub
/// fill of the effective potential V + lambda h^2 K rho. Stops on duality gap.
inline FlockingResult flocking_solve(const Grid2D& g, std::span<const double> V, const std::function<double(Point)>& W,
                                     double lambda, double cap, double N, const FlockingOptions& opts = {}) {
    detail::check_problem(g, V, cap, N);
    if (!std::isfinite(lambda)) throw InputError("flocking_solve: lambda must be finite");
    FlockingResult out;
    out.density.grid = g;
    std::vector<std::size_t> order;
    out.fill_level = detail::fill(g, V, cap, N, order, out.density.rho);
    if (lambda == 0.0) {
        out.energy = detail::linear_energy(g, V, out.density.rho);
        out.energy_trace = {out.energy};
        out.converged = true;
        return out;
    }
    const PairKernel K(g, W, opts.direct_limit);
    const double h2 = g.cell_area();
    auto& rho = out.density.rho;
    auto krho = K.apply(rho);
    auto energy_of = [&](const std::vector<double>& r, const std::vector<double>& kr) {
        double lin = 0.0, q = 0.0;
        for (std::size_t i = 0; i < r.size(); ++i) {
            lin += V[i] * r[i];
            q += r[i] * kr[i];
        }
        return h2 * lin + 0.5 * lambda * h2 * h2 * q;
    };
    out.energy = energy_of(rho, krho);
    out.energy_trace.push_back(out.energy);
    std::vector<double> veff(V.size()), s;
    bool polished = false;
    int it = 0;
    for (; it < opts.max_iters; ++it) {
        for (std::size_t i = 0; i < V.size(); ++i) veff[i] = V[i] + lambda * h2 * krho[i];
        out.fill_level = detail::fill(g, veff, cap, N, order, s);
        double gap = 0.0;
        for (std::size_t i = 0; i < V.size(); ++i) gap += veff[i] * (rho[i] - s[i]);
        gap *= h2;
        out.gap = gap;
        if (gap < opts.gap_tol) {
            out.converged = true;
            break;
        }
        if (opts.polish && !polished && gap < 1e-3 * std::max(1.0, std::abs(out.energy))) {
            polished = true;
            auto trial = rho;
            if (detail::polish_active_set(g, V, K, lambda, cap, N, trial, opts.max_free)) {
                auto ktrial = K.apply(trial);
                const double e = energy_of(trial, ktrial);
                if (e <= out.energy) {
                    rho = std::move(trial);
                    krho = std::move(ktrial);
                    out.energy = e;
                    out.energy_trace.push_back(e);
                    continue;
                }
            }
        }
        const auto ks = K.apply(s);
        double curv = 0.0;
        std::vector<double> kd(V.size());
        for (std::size_t i = 0; i < V.size(); ++i) {
            kd[i] = ks[i] - krho[i];
            curv += (s[i] - rho[i]) * kd[i];
        }
        curv *= lambda * h2 * h2;
        double gamma = 1.0;
        if (curv > 0.0) gamma = std::min(1.0, gap / curv);
        for (std::size_t i = 0; i < V.size(); ++i) {
            rho[i] += gamma * (s[i] - rho[i]);
            krho[i] += gamma * kd[i];
        }
        const double e = energy_of(rho, krho);
        if (e > out.energy + 1e-12 * std::abs(out.energy)) out.monotone = false;
        out.energy = e;
        out.energy_trace.push_back(e);
    }
    out.iterations = it;
    // Recompute from scratch to drop the drift of the incremental K rho.
    out.energy = flocking_energy(g, V, K, lambda, rho);
    return out;
}

}  // namespace laughlin
