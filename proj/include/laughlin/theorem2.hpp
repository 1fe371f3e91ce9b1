#pragma once

// Upper-bound side of the Laughlin-phase energy comparison: the flocking energy
// E^flo against the best quasi-hole trial energy found by a greedy search over
// hole sets (positions by Nelder-Mead, integer multiplicities), all energies
// estimated by Monte Carlo on |Psi_f|^2.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "laughlin/bathtub.hpp"
#include "laughlin/core/types.hpp"
#include "laughlin/model.hpp"
#include "laughlin/plasma_sampler.hpp"

namespace laughlin {

/// Minimizes f over R^n from x0 with initial simplex edge `step`.
inline std::vector<double> nelder_mead(const std::function<double(const std::vector<double>&)>& f, std::vector<double> x0,
                                       double step, int max_evals, double ftol = 1e-9) {
    const std::size_t n = x0.size();
    std::vector<std::vector<double>> s(n + 1, x0);
    std::vector<double> fv(n + 1);
    for (std::size_t i = 0; i < n; ++i) s[i + 1][i] += step;
    int evals = 0;
    for (std::size_t i = 0; i <= n; ++i) fv[i] = f(s[i]), ++evals;
    auto point = [&](const std::vector<double>& c, const std::vector<double>& w, double t) {
        std::vector<double> p(n);
        for (std::size_t i = 0; i < n; ++i) p[i] = c[i] + t * (w[i] - c[i]);
        return p;
    };
    while (evals < max_evals) {
        std::vector<std::size_t> idx(n + 1);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return fv[a] < fv[b]; });
        std::vector<std::vector<double>> s2;
        std::vector<double> f2;
        for (auto i : idx) s2.push_back(s[i]), f2.push_back(fv[i]);
        s = std::move(s2);
        fv = std::move(f2);
        if (std::abs(fv[n] - fv[0]) <= ftol * (std::abs(fv[0]) + 1e-30)) break;
        std::vector<double> c(n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) c[j] += s[i][j] / n;
        const auto xr = point(c, s[n], -1.0);
        const double fr = f(xr);
        ++evals;
        if (fr < fv[0]) {
            const auto xe = point(c, s[n], -2.0);
            const double fe = f(xe);
            ++evals;
            if (fe < fr) s[n] = xe, fv[n] = fe;
            else s[n] = xr, fv[n] = fr;
        } else if (fr < fv[n - 1]) {
            s[n] = xr, fv[n] = fr;
        } else {
            const auto xc = fr < fv[n] ? point(c, s[n], -0.5) : point(c, s[n], 0.5);
            const double fc = f(xc);
            ++evals;
            if (fc < std::min(fr, fv[n])) {
                s[n] = xc, fv[n] = fc;
            } else {
                for (std::size_t i = 1; i <= n; ++i) {
                    s[i] = point(s[0], s[i], 0.5);
                    fv[i] = f(s[i]);
                    ++evals;
                }
            }
        }
    }
    const auto best = std::min_element(fv.begin(), fv.end()) - fv.begin();
    return s[best];
}

struct Theorem2Options {
    int max_holes = 8;
    int max_multiplicity = 0;  ///< 0 selects 2 ell
    ChainConfig search_chain{4000, 500, 0.0, 1, 2, 1, 100};
    ChainConfig final_chain{52000, 2000, 0.0, 1, 4, 1, 100};
    int nm_evals = 30;
    int grid_cells = 512;
    double grid_margin = 1.35;  ///< grid half width in units of the droplet radius
    FlockingOptions flocking{};
    double window_hi = 1.3;
    std::size_t threads = 1;

    void validate() const {
        if (max_holes < 0 || max_holes > 8) throw InputError("theorem2: max_holes must be in [0, 8]");
        if (max_multiplicity < 0) throw InputError("theorem2: max_multiplicity must be >= 0");
        if (nm_evals < 0) throw InputError("theorem2: nm_evals must be >= 0");
        if (grid_cells < 8) throw InputError("theorem2: grid too small");
        if (!(grid_margin > 1.0)) throw InputError("theorem2: grid_margin must exceed 1");
        search_chain.validate();
        final_chain.validate();
    }
};

struct HoleTrial {
    QuasiHoleSet holes;
    EnergyEstimate energy;
};

struct Theorem2Report {
    PlasmaParams params;
    double lambda = 0.0;
    FlockingResult flo;
    Grid2D grid;
    double e_flo = 0.0;
    EnergyEstimate e_est;  ///< long run on the best hole set
    double ratio = 0.0;
    double ratio_se = 0.0;
    double window_lo = 0.0, window_hi = 0.0;
    bool within_window = false;
    QuasiHoleSet best;
    std::vector<HoleTrial> search_log;
};

/// Flocking energy E^flo(N, lambda) on a square grid around the origin.
inline FlockingResult flocking_energy_for(const PlasmaParams& p, const ScaledPotentials& pots, const Theorem2Options& o,
                                          Grid2D* grid_out = nullptr) {
    const double half = o.grid_margin * p.droplet_radius();
    const auto g = Grid2D::centered(0.0, half, o.grid_cells);
    const auto V = cell_average(g, pots.V);
    if (grid_out) *grid_out = g;
    return flocking_solve(g, V, pots.W, pots.lambda, p.cap_density(), p.N, o.flocking);
}

inline EnergyEstimate hole_set_energy(const PlasmaParams& p, const ScaledPotentials& pots, const QuasiHoleSet& holes,
                                      const ChainConfig& cfg, std::size_t threads) {
    TrialEnergyAccumulator acc(pots);
    run_chains(p, CorrelationFactor::quasi_holes(holes), cfg, threads, acc);
    return acc.result();
}

/// Greedy search: add the single hole (multiplicity, position) that lowers the
/// trial energy most, refine its position by Nelder-Mead, stop when no
/// candidate improves by more than twice the search standard error.
/// All search evaluations share the same seed (common random numbers).
inline Theorem2Report theorem2_harness(const PlasmaParams& p, const PotentialSpec& spec, const Theorem2Options& o) {
    p.validate();
    o.validate();
    const auto pots = scaled_potentials(spec, p.N);
    Theorem2Report rep;
    rep.params = p;
    rep.lambda = spec.lambda;
    rep.flo = flocking_energy_for(p, pots, o, &rep.grid);
    rep.e_flo = rep.flo.energy;

    const int mmax = o.max_multiplicity > 0 ? o.max_multiplicity : 2 * p.ell;
    const double R = p.droplet_radius();
    auto eval = [&](const QuasiHoleSet& h) {
        const auto e = hole_set_energy(p, pots, h, o.search_chain, o.threads);
        rep.search_log.push_back({h, e});
        return e;
    };

    QuasiHoleSet best;
    EnergyEstimate best_e = eval(best);
    // Candidate positions: the center, and 6 points on rings at R/3 and 2R/3.
    std::vector<Point> candidates = {Point(0.0, 0.0)};
    for (double r : {R / 3.0, 2.0 * R / 3.0})
        for (int k = 0; k < 6; ++k) candidates.push_back(std::polar(r, 2.0 * kPi * k / 6.0));

    for (int k = 0; k < o.max_holes; ++k) {
        QuasiHoleSet step_best;
        EnergyEstimate step_e{kInf, 0.0, 0, 0};
        for (int m = 1; m <= mmax; ++m)
            for (const auto& c : candidates) {
                QuasiHoleSet t = best;
                t.holes.push_back({c, m});
                const auto e = eval(t);
                if (e.mean < step_e.mean) step_e = e, step_best = t;
            }
        if (o.nm_evals > 0) {
            const int m = step_best.holes.back().multiplicity;
            const Point start = step_best.holes.back().position;
            double refined_mean = step_e.mean;
            const auto x = nelder_mead(
                [&](const std::vector<double>& v) {
                    QuasiHoleSet t = best;
                    t.holes.push_back({Point(v[0], v[1]), m});
                    const auto e = eval(t);
                    if (e.mean < refined_mean) refined_mean = e.mean, step_e = e, step_best = t;
                    return e.mean;
                },
                {start.real(), start.imag()}, 0.1 * R, o.nm_evals);
            (void)x;
        }
        const double se = std::hypot(step_e.std_error, best_e.std_error);
        if (!(step_e.mean < best_e.mean - 2.0 * se)) break;
        best = step_best;
        best_e = step_e;
    }

    rep.best = best;
    rep.e_est = hole_set_energy(p, pots, best, o.final_chain, o.threads);
    rep.ratio = rep.e_est.mean / rep.e_flo;
    rep.ratio_se = rep.e_est.std_error / std::abs(rep.e_flo);
    rep.window_lo = 1.0 - 2.0 * rep.ratio_se;
    rep.window_hi = o.window_hi;
    rep.within_window = rep.ratio >= rep.window_lo && rep.ratio <= rep.window_hi;
    return rep;
}

/// Averages b x b blocks of cells (trailing partial blocks dropped).
inline std::pair<Grid2D, std::vector<double>> block_average(const Grid2D& g, std::span<const double> v, int b) {
    if (b < 1) throw InputError("block_average: block must be >= 1");
    Grid2D c{g.origin, g.h * b, g.nx / b, g.ny / b};
    if (c.nx < 1 || c.ny < 1) throw InputError("block_average: block larger than the grid");
    std::vector<double> out(c.size(), 0.0);
    for (int iy = 0; iy < c.ny * b; ++iy)
        for (int ix = 0; ix < c.nx * b; ++ix) out[c.index(ix / b, iy / b)] += v[g.index(ix, iy)] / (b * b);
    return {c, out};
}

/// Jaccard index of the low-density sets {rho < cap / 2} inside D(0, r) for
/// two densities sampled on the same grid, after b x b block averaging.
inline double low_density_overlap(const Grid2D& g, std::span<const double> a, std::span<const double> b, double cap,
                                  double r, int block = 1) {
    const auto [cg, ca] = block_average(g, a, block);
    const auto cb = block_average(g, b, block).second;
    std::size_t inter = 0, uni = 0;
    for (std::size_t k = 0; k < cg.size(); ++k) {
        if (std::abs(cg.center(k)) > r) continue;
        const bool x = ca[k] < 0.5 * cap, y = cb[k] < 0.5 * cap;
        inter += x && y;
        uni += x || y;
    }
    return uni == 0 ? 1.0 : static_cast<double>(inter) / uni;
}

}  // namespace laughlin
