#pragma once

// Ground states of the cleaned Coulomb Hamiltonian, disk counts, and the
// exclusion-rule audit against screening regions of subsets.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "laughlin/core/parallel.hpp"
#include "laughlin/core/seed.hpp"
#include "laughlin/core/types.hpp"
#include "laughlin/model.hpp"
#include "laughlin/screening.hpp"

namespace laughlin {

enum class InitKind { random_disk, lattice, explicit_points };

inline std::string to_string(InitKind k) {
    switch (k) {
        case InitKind::random_disk: return "random";
        case InitKind::lattice: return "lattice";
        case InitKind::explicit_points: return "explicit";
    }
    return "?";
}

struct MinimizeOptions {
    int max_iters = 20000;
    double gradient_tol = 1e-6;  ///< on max_j |grad_j|
    InitKind init = InitKind::random_disk;
    double init_radius = 0.0;  ///< <= 0 selects sqrt(N / pi)
    std::vector<Point> initial;
    int restarts = 4;
    std::uint64_t seed = 1;
    bool quasi_newton = true;
    int memory = 10;

    void validate(int N) const {
        if (N < 1) throw InputError("minimize: N must be >= 1");
        if (!(gradient_tol > 0.0)) throw InputError("MinimizeOptions: gradient_tol must be > 0");
        if (max_iters < 1) throw InputError("MinimizeOptions: max_iters must be >= 1");
        if (restarts < 1) throw InputError("MinimizeOptions: restarts must be >= 1");
        if (memory < 1) throw InputError("MinimizeOptions: memory must be >= 1");
        if (!std::isfinite(init_radius)) throw InputError("MinimizeOptions: bad init_radius");
        if (init == InitKind::explicit_points) {
            if (initial.size() != static_cast<std::size_t>(N))
                throw InputError("MinimizeOptions: explicit initial configuration has wrong length");
            require_finite(initial, "MinimizeOptions.initial");
        }
    }
};

struct MinimizeResult {
    std::vector<Point> points;
    double energy = kInf;
    double gradient_norm = kInf;
    double initial_energy = kInf;
    bool converged = false;  ///< false: best configuration found, tolerance not met
    int iterations = 0;
    int best_restart = 0;
    std::vector<double> restart_energies;
    std::vector<double> energy_trace;  ///< accepted-step energies of the best restart
};

inline double sup_norm(std::span<const Point> g) {
    double m = 0.0;
    for (const auto& v : g) m = std::max(m, std::abs(v));
    return m;
}

/// N sites of the unit-density triangular lattice closest to the origin.
inline std::vector<Point> lattice_sites(int N) {
    const double a = std::sqrt(2.0 / std::sqrt(3.0));
    const int span = static_cast<int>(std::ceil(std::sqrt(N / kPi) / a)) + 3;
    std::vector<Point> sites;
    for (int j = -span; j <= span; ++j)
        for (int i = -span; i <= span; ++i) sites.push_back(a * (Point(i, 0) + double(j) * Point(0.5, std::sqrt(3.0) / 2.0)));
    std::stable_sort(sites.begin(), sites.end(), [](Point p, Point q) {
        const double dp = norm2(p), dq = norm2(q);
        if (std::abs(dp - dq) > 1e-12) return dp < dq;
        return std::arg(p) < std::arg(q);
    });
    sites.resize(N);
    return sites;
}

namespace detail {

/// Moves points off each other and off phantom charges by 1e-6.
inline void jitter_coincident(std::vector<Point>& x, const SuperharmonicPotential& W, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int pass = 0; pass < 8; ++pass) {
        bool moved = false;
        for (std::size_t j = 0; j < x.size(); ++j) {
            bool hit = false;
            for (std::size_t i = 0; i < j && !hit; ++i) hit = x[i] == x[j];
            if (const auto* p = W.phantoms_or_null())
                for (const auto& c : p->charges) hit = hit || (c.charge > 0.0 && x[j] == c.position);
            if (hit) {
                x[j] += 1e-6 * Point(u(rng), u(rng));
                moved = true;
            }
        }
        if (!moved) return;
    }
}

inline std::vector<Point> initial_configuration(int N, const MinimizeOptions& o, int restart, std::mt19937_64& rng) {
    const double radius = o.init_radius > 0.0 ? o.init_radius : std::sqrt(N / kPi);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Point> x;
    switch (o.init) {
        case InitKind::random_disk:
            for (int j = 0; j < N; ++j) x.push_back(std::polar(radius * std::sqrt(u(rng)), 2.0 * kPi * u(rng)));
            break;
        case InitKind::lattice:
            x = lattice_sites(N);
            if (restart > 0)
                for (auto& p : x) p += 0.2 * Point(u(rng) - 0.5, u(rng) - 0.5);
            break;
        case InitKind::explicit_points:
            x = o.initial;
            if (restart > 0)
                for (auto& p : x) p += 0.05 * Point(u(rng) - 0.5, u(rng) - 0.5);
            break;
    }
    return x;
}

inline double dot(std::span<const Point> a, std::span<const Point> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i].real() * b[i].real() + a[i].imag() * b[i].imag();
    return s;
}

struct Descent {
    std::vector<Point> x;
    double energy = kInf, gnorm = kInf, initial_energy = kInf;
    int iterations = 0;
    std::vector<double> trace;
};

/// Backtracking (Armijo) descent along L-BFGS or steepest-descent directions.
/// Steps are accepted only if the energy does not increase beyond rounding.
inline Descent descend(std::vector<Point> x, const SuperharmonicPotential& W, const MinimizeOptions& o) {
    Descent d;
    double f = cleaned_hamiltonian(x, W);
    auto g = cleaned_gradient(x, W);
    d.initial_energy = f;
    d.trace.push_back(f);
    std::deque<std::pair<std::vector<Point>, std::vector<Point>>> mem;
    double alpha0 = 0.1;
    int stalls = 0;
    int it = 0;
    for (; it < o.max_iters && sup_norm(g) > o.gradient_tol; ++it) {
        std::vector<Point> dir(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) dir[i] = -g[i];
        bool qn = o.quasi_newton && !mem.empty();
        if (qn) {
            // Two-loop recursion.
            std::vector<double> rho(mem.size()), a(mem.size());
            for (std::size_t k = mem.size(); k-- > 0;) {
                rho[k] = 1.0 / dot(mem[k].first, mem[k].second);
                a[k] = rho[k] * dot(mem[k].first, dir);
                for (std::size_t i = 0; i < dir.size(); ++i) dir[i] -= a[k] * mem[k].second[i];
            }
            const auto& [s, y] = mem.back();
            const double gamma = dot(s, y) / dot(y, y);
            for (auto& v : dir) v *= gamma;
            for (std::size_t k = 0; k < mem.size(); ++k) {
                const double b = rho[k] * dot(mem[k].second, dir);
                for (std::size_t i = 0; i < dir.size(); ++i) dir[i] += (a[k] - b) * mem[k].first[i];
            }
            if (!(dot(dir, g) < 0.0)) {
                mem.clear();
                qn = false;
                for (std::size_t i = 0; i < g.size(); ++i) dir[i] = -g[i];
            }
        }
        const double slope = dot(dir, g);
        double step = qn ? 1.0 : alpha0;
        // Keep a step from moving any particle by more than half a unit.
        const double longest = sup_norm(dir);
        if (step * longest > 0.5) step = 0.5 / longest;
        std::vector<Point> xn(x.size());
        double fn = kInf;
        bool accepted = false;
        for (int bt = 0; bt < 60; ++bt) {
            for (std::size_t i = 0; i < x.size(); ++i) xn[i] = x[i] + step * dir[i];
            fn = cleaned_hamiltonian(xn, W);
            const double slack = 8.0 * std::numeric_limits<double>::epsilon() * std::abs(f);
            if (std::isfinite(fn) && fn <= f + 1e-4 * step * slope + slack) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            if (!mem.empty()) {
                mem.clear();
                continue;
            }
            break;  // no descent possible at working precision
        }
        auto gn = cleaned_gradient(xn, W);
        std::vector<Point> s(x.size()), y(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            s[i] = xn[i] - x[i];
            y[i] = gn[i] - g[i];
        }
        if (dot(s, y) > 1e-12 * std::sqrt(dot(s, s) * dot(y, y))) {
            mem.emplace_back(std::move(s), std::move(y));
            if (static_cast<int>(mem.size()) > o.memory) mem.pop_front();
        }
        if (!qn) alpha0 = std::min(1.0, step * 2.0);
        stalls = fn < f ? 0 : stalls + 1;
        x = std::move(xn);
        f = fn;
        g = std::move(gn);
        d.trace.push_back(f);
        if (stalls > 20) break;
    }
    d.x = std::move(x);
    d.energy = f;
    d.gnorm = sup_norm(g);
    d.iterations = it;
    return d;
}

}  // namespace detail

/// Local minimizer of the cleaned Hamiltonian (pi/2) sum|x|^2 - sum log|x_i - x_j| + W,
/// best of `restarts` independent descents. Deterministic for a given seed.
inline MinimizeResult minimize(int N, const SuperharmonicPotential& W, const MinimizeOptions& opts, std::size_t threads = 1) {
    opts.validate(N);
    std::vector<detail::Descent> runs(opts.restarts);
    parallel_for(runs.size(), threads, [&](std::size_t r) {
        std::mt19937_64 rng(chain_seed(opts.seed, static_cast<int>(r)));
        auto x = detail::initial_configuration(N, opts, static_cast<int>(r), rng);
        detail::jitter_coincident(x, W, rng);
        runs[r] = detail::descend(std::move(x), W, opts);
    });
    MinimizeResult out;
    for (std::size_t r = 0; r < runs.size(); ++r) {
        out.restart_energies.push_back(runs[r].energy);
        if (runs[r].energy < out.energy) {
            out.energy = runs[r].energy;
            out.best_restart = static_cast<int>(r);
        }
    }
    auto& best = runs[out.best_restart];
    out.points = std::move(best.x);
    out.gradient_norm = best.gnorm;
    out.initial_energy = best.initial_energy;
    out.iterations = best.iterations;
    out.energy_trace = std::move(best.trace);
    out.converged = out.gradient_norm <= opts.gradient_tol;
    return out;
}

// ---------------------------------------------------------------------------
// Disk counts
// ---------------------------------------------------------------------------

struct DiskCount {
    Point center{};
    double radius = 0.0;
    int count = 0;
    double bound = 0.0;   ///< pi R^2
    double excess = 0.0;  ///< count / (pi R^2) - 1
};

struct CountBoundReport {
    std::vector<DiskCount> entries;
    std::map<double, double> max_excess;  ///< g_meas(R) per radius

    double g(double R) const {
        auto it = max_excess.find(R);
        if (it == max_excess.end()) throw InputError("CountBoundReport: radius not tested");
        return it->second;
    }
};

inline CountBoundReport count_in_disks(std::span<const Point> config, std::span<const Point> centers,
                                       std::span<const double> radii) {
    require_finite(config, "count_in_disks");
    require_finite(centers, "count_in_disks centers");
    CountBoundReport rep;
    for (double R : radii) {
        if (!(R > 0.0) || !std::isfinite(R)) throw InputError("count_in_disks: radii must be positive");
        double worst = -1.0;
        for (const auto& a : centers) {
            DiskCount d{a, R, 0, kPi * R * R, 0.0};
            for (const auto& x : config) d.count += std::abs(x - a) <= R;
            d.excess = d.count / d.bound - 1.0;
            worst = std::max(worst, d.excess);
            rep.entries.push_back(d);
        }
        rep.max_excess[R] = worst;
    }
    return rep;
}

/// The configuration points plus a square lattice of the given spacing over their bounding box.
inline std::vector<Point> count_centers(std::span<const Point> config, double spacing) {
    if (config.empty()) return {};
    if (!(spacing > 0.0)) throw InputError("count_centers: spacing must be positive");
    double x0 = kInf, x1 = -kInf, y0 = kInf, y1 = -kInf;
    for (const auto& p : config) {
        x0 = std::min(x0, p.real());
        x1 = std::max(x1, p.real());
        y0 = std::min(y0, p.imag());
        y1 = std::max(y1, p.imag());
    }
    std::vector<Point> c(config.begin(), config.end());
    for (double y = y0; y <= y1 + 1e-12; y += spacing)
        for (double x = x0; x <= x1 + 1e-12; x += spacing) c.emplace_back(x, y);
    return c;
}

// ---------------------------------------------------------------------------
// Exclusion audit
// ---------------------------------------------------------------------------

struct AuditOptions {
    double h = 0.025;
    std::vector<double> disk_radii{1.2, 2.0};
    double disk_stride = 1.0;
    std::vector<int> random_sizes{1, 2, 5, 10};
    int random_per_size = 25;
    std::vector<int> neighbor_sizes{3, 4, 6};
    std::vector<std::vector<std::size_t>> explicit_subsets;
    bool sliding_disks = true;
    bool random_subsets = true;
    bool nearest_neighbors = true;
    std::uint64_t seed = 1;
    double excess_tol = 1e-9;

    void validate() const {
        if (!(h > 0.0)) throw InputError("AuditOptions: h must be > 0");
        if (!(disk_stride > 0.0)) throw InputError("AuditOptions: disk_stride must be > 0");
        for (double r : disk_radii)
            if (!(r > 0.0)) throw InputError("AuditOptions: disk radii must be > 0");
        if (random_per_size < 0) throw InputError("AuditOptions: random_per_size must be >= 0");
    }
};

struct AuditSubset {
    std::string strategy;
    std::vector<std::size_t> members;
};

enum class Membership { outside, inside, inconclusive };

struct AuditFinding {
    std::size_t subset = 0;
    std::size_t point = 0;
    Membership status = Membership::inside;
    double depth_cells = 0.0;  ///< distance to the nearest non-full cell, in cells
};

struct AuditReport {
    std::vector<AuditSubset> subsets;
    std::vector<AuditFinding> violations;
    std::vector<AuditFinding> inconclusive;
    std::size_t point_tests = 0;
    std::map<std::string, std::size_t> subsets_by_strategy;
};

/// Membership of p in the region: inside if the 3 x 3 block of cells around
/// p is full, outside if it is empty, otherwise inconclusive at this resolution.
inline Membership region_membership(const ScreeningRegion& r, Point p) {
    const Grid2D& g = r.grid;
    const auto k = g.cell_of(p);
    if (!k) return Membership::outside;
    const int ix = static_cast<int>(*k % g.nx), iy = static_cast<int>(*k / g.nx);
    int full = 0, empty = 0;
    for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
            const int x = ix + dx, y = iy + dy;
            if (x < 0 || y < 0 || x >= g.nx || y >= g.ny) {
                ++empty;
                continue;
            }
            const auto c = g.index(x, y);
            full += r.full(c);
            empty += r.empty(c);
        }
    if (full == 9) return Membership::inside;
    if (empty == 9) return Membership::outside;
    return Membership::inconclusive;
}

inline double penetration_depth_cells(const ScreeningRegion& r, Point p) {
    const Grid2D& g = r.grid;
    double best = kInf;
    for (std::size_t k = 0; k < g.size(); ++k)
        if (!r.full(k)) best = std::min(best, std::abs(g.center(k) - p) / g.h);
    return best;
}

/// Subsets tested by the audit, in a deterministic order without duplicates.
inline std::vector<AuditSubset> audit_subsets(std::span<const Point> config, const AuditOptions& o) {
    const std::size_t N = config.size();
    std::vector<AuditSubset> out;
    std::set<std::vector<std::size_t>> seen;
    auto add = [&](const std::string& strategy, std::vector<std::size_t> m) {
        std::sort(m.begin(), m.end());
        m.erase(std::unique(m.begin(), m.end()), m.end());
        if (m.empty() || m.size() >= N) return;
        if (!seen.insert(m).second) return;
        out.push_back({strategy, std::move(m)});
    };
    if (o.sliding_disks) {
        for (const auto& c : count_centers(config, o.disk_stride)) {
            for (double R : o.disk_radii) {
                std::vector<std::size_t> m;
                for (std::size_t i = 0; i < N; ++i)
                    if (std::abs(config[i] - c) <= R) m.push_back(i);
                add("disk", std::move(m));
            }
        }
    }
    if (o.random_subsets) {
        std::mt19937_64 rng(chain_seed(o.seed, 0));
        std::vector<std::size_t> idx(N);
        std::iota(idx.begin(), idx.end(), 0);
        for (int K : o.random_sizes) {
            if (K < 1 || static_cast<std::size_t>(K) >= N) continue;
            for (int t = 0; t < o.random_per_size; ++t) {
                std::vector<std::size_t> m;
                std::sample(idx.begin(), idx.end(), std::back_inserter(m), K, rng);
                add("random", std::move(m));
            }
        }
    }
    if (o.nearest_neighbors) {
        for (std::size_t j = 0; j < N; ++j) {
            std::vector<std::size_t> order;
            for (std::size_t i = 0; i < N; ++i)
                if (i != j) order.push_back(i);
            std::stable_sort(order.begin(), order.end(),
                             [&](auto a, auto b) { return std::abs(config[a] - config[j]) < std::abs(config[b] - config[j]); });
            for (int K : o.neighbor_sizes)
                if (K >= 1 && static_cast<std::size_t>(K) < N)
                    add("neighbors", std::vector<std::size_t>(order.begin(), order.begin() + K));
        }
    }
    for (const auto& m : o.explicit_subsets) {
        for (auto i : m)
            if (i >= N) throw InputError("audit_exclusion: explicit subset index out of range");
        add("explicit", m);
    }
    return out;
}

/// For each subset S and each point y of the configuration outside S, checks
/// that y does not lie inside the screening region of S.
inline AuditReport audit_exclusion(std::span<const Point> config, const AuditOptions& opts, std::size_t threads = 1) {
    opts.validate();
    require_finite(config, "audit_exclusion");
    AuditReport rep;
    rep.subsets = audit_subsets(config, opts);
    for (const auto& s : rep.subsets) ++rep.subsets_by_strategy[s.strategy];
    struct Local {
        std::vector<AuditFinding> viol, inconc;
        std::size_t tests = 0;
    };
    std::vector<Local> local(rep.subsets.size());
    ScreeningOptions so;
    so.excess_tol = opts.excess_tol;
    parallel_for(rep.subsets.size(), threads, [&](std::size_t s) {
        const auto& members = rep.subsets[s].members;
        std::vector<Point> pts;
        for (auto i : members) pts.push_back(config[i]);
        const auto region = screening_region_auto(pts, opts.h, so);
        std::vector<bool> in(config.size(), false);
        for (auto i : members) in[i] = true;
        for (std::size_t j = 0; j < config.size(); ++j) {
            if (in[j]) continue;
            ++local[s].tests;
            switch (region_membership(region, config[j])) {
                case Membership::outside: break;
                case Membership::inside:
                    local[s].viol.push_back({s, j, Membership::inside, penetration_depth_cells(region, config[j])});
                    break;
                case Membership::inconclusive:
                    local[s].inconc.push_back({s, j, Membership::inconclusive, 0.0});
                    break;
            }
        }
    });
    for (auto& l : local) {
        rep.point_tests += l.tests;
        rep.violations.insert(rep.violations.end(), l.viol.begin(), l.viol.end());
        rep.inconclusive.insert(rep.inconclusive.end(), l.inconc.begin(), l.inconc.end());
    }
    return rep;
}

/// Moves point `mover` to the centroid of point `seed` and its k - 1 nearest
/// neighbours (excluding the mover). Returns the cluster indices.
inline std::vector<std::size_t> plant_violation(std::vector<Point>& config, std::size_t seed, std::size_t mover, int k = 4) {
    if (seed >= config.size() || mover >= config.size() || seed == mover) throw InputError("plant_violation: bad indices");
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < config.size(); ++i)
        if (i != mover) order.push_back(i);
    std::stable_sort(order.begin(), order.end(),
                     [&](auto a, auto b) { return std::abs(config[a] - config[seed]) < std::abs(config[b] - config[seed]); });
    if (k < 1 || static_cast<std::size_t>(k) > order.size()) throw InputError("plant_violation: bad cluster size");
    order.resize(k);
    Point c{};
    for (auto i : order) c += config[i];
    config[mover] = c / double(k);
    return order;
}

}  // namespace laughlin
