#pragma once

// Metropolis sampling of |Psi_F|^2 = exp(-H_F) / Z and the observables built on it:
// one-body densities, coarse-grained density maxima, quasi-hole charge deficits
// and trial energies.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <span>
#include <tuple>
#include <vector>

#include "laughlin/core/grid.hpp"
#include "laughlin/core/parallel.hpp"
#include "laughlin/core/seed.hpp"
#include "laughlin/core/types.hpp"
#include "laughlin/model.hpp"

namespace laughlin {

struct ChainConfig {
    long sweeps = 10000;  ///< total sweeps per chain, burn-in included
    long burn_in = 1000;
    double proposal_scale = 0.0;  ///< <= 0 selects the magnetic length sqrt(2/B)
    std::uint64_t seed = 1;
    int chains = 1;
    int thin = 1;                ///< record every `thin`-th sweep after burn-in
    int diagnostic_window = 100; ///< sweeps without a single acceptance trigger an error

    void validate() const {
        if (!(sweeps > burn_in) || burn_in < 0) throw InputError("ChainConfig: need sweeps > burn_in >= 0");
        if (!(proposal_scale >= 0.0) || !std::isfinite(proposal_scale)) throw InputError("ChainConfig: bad proposal_scale");
        if (chains < 1) throw InputError("ChainConfig: chains must be >= 1");
        if (thin < 1) throw InputError("ChainConfig: thin must be >= 1");
        if (diagnostic_window < 1) throw InputError("ChainConfig: diagnostic_window must be >= 1");
    }

    double scale_for(const PlasmaParams& p) const { return proposal_scale > 0.0 ? proposal_scale : p.magnetic_length(); }
    long recorded_per_chain() const { return (sweeps - burn_in) / thin; }
};

struct ChainStats {
    std::vector<double> acceptance;  ///< post burn-in acceptance rate per chain
    std::vector<std::uint64_t> seeds;  ///< derived per-chain seeds
    long recorded = 0;                  ///< samples handed to the accumulators

    double mean_acceptance() const {
        if (acceptance.empty()) return 0.0;
        return std::accumulate(acceptance.begin(), acceptance.end(), 0.0) / acceptance.size();
    }
};

/// Single-particle Gaussian-proposal Metropolis chain targeting exp(-H_F).
class MetropolisChain {
  public:
    MetropolisChain(const PlasmaParams& params, const CorrelationFactor& corr, double proposal_scale, std::uint64_t seed)
        : params_(params), corr_(corr), scale_(proposal_scale), rng_(seed) {
        params_.validate();
        if (!(scale_ > 0.0)) throw InputError("MetropolisChain: proposal_scale must be positive");
        initialize();
    }

    std::span<const Point> points() const { return pts_; }

    /// N single-particle proposals in index order; returns the number accepted.
    int sweep() {
        int accepted = 0;
        const int n = params_.N;
        for (int j = 0; j < n; ++j) {
            const Point from = pts_[j];
            const Point to = from + Point(scale_ * gauss_(rng_), scale_ * gauss_(rng_));
            const double dlog = log_weight_change(j, from, to);
            if (dlog >= 0.0 || std::log(uniform_(rng_)) < dlog) {
                pts_[j] = to;
                ++accepted;
            }
        }
        return accepted;
    }

    /// log w(after) - log w(before) for moving particle j.
    double log_weight_change(int j, Point from, Point to) const {
        const double dtrap = -0.5 * params_.B * (norm2(to) - norm2(from));
        // Product of squared-distance ratios, renormalized to avoid over/underflow.
        double mant = 1.0;
        long expo = 0;
        const int n = params_.N;
        for (int i = 0; i < n; ++i) {
            if (i == j) continue;
            const double num = norm2(to - pts_[i]);
            if (num == 0.0) return -kInf;
            mant *= num / norm2(from - pts_[i]);
            if ((i & 7) == 7) {
                int e;
                mant = std::frexp(mant, &e);
                expo += e;
            }
        }
        const double log_ratio = std::log(mant) + expo * std::numbers::ln2;
        double dF = 0.0;
        if (!corr_.is_trivial()) {
            dF = corr_.log_modulus_change(pts_, static_cast<std::size_t>(j), to);
            if (dF == -kInf) return -kInf;
        }
        return dtrap + params_.ell * log_ratio + 2.0 * dF;
    }

  private:
    void initialize() {
        const int n = params_.N;
        const double r0 = params_.droplet_radius();
        std::uniform_real_distribution<double> u(0.0, 1.0);
        pts_.assign(n, Point{});
        for (int attempt = 0; attempt < 1000; ++attempt) {
            for (auto& p : pts_) p = std::polar(r0 * std::sqrt(u(rng_)), 2.0 * kPi * u(rng_));
            if (std::isfinite(log_plasma_weight(pts_, params_, corr_))) return;
        }
        throw NumericalError("MetropolisChain: could not find a configuration with finite weight");
    }

    PlasmaParams params_;
    CorrelationFactor corr_;
    double scale_;
    std::mt19937_64 rng_;
    std::normal_distribution<double> gauss_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
    std::vector<Point> pts_;
};

/// Runs `cfg.chains` independent chains (concurrently, up to `threads`) and
/// feeds each recorded configuration to per-chain copies of the accumulators.
/// Copies are merged back in chain order, so results do not depend on `threads`.
/// Accumulators provide `observe(std::span<const Point>)` and `merge(const T&)`.
template <class... Acc>
ChainStats run_chains(const PlasmaParams& params, const CorrelationFactor& corr, const ChainConfig& cfg,
                      std::size_t threads, Acc&... acc) {
    params.validate();
    cfg.validate();
    const double scale = cfg.scale_for(params);
    ChainStats stats;
    stats.acceptance.assign(cfg.chains, 0.0);
    stats.seeds.resize(cfg.chains);
    for (int c = 0; c < cfg.chains; ++c) stats.seeds[c] = chain_seed(cfg.seed, c);

    std::vector<std::tuple<Acc...>> local(cfg.chains, std::tuple<Acc...>(acc...));
    parallel_for(static_cast<std::size_t>(cfg.chains), threads, [&](std::size_t c) {
        MetropolisChain chain(params, corr, scale, stats.seeds[c]);
        long accepted = 0, proposed = 0, window_accepted = 0;
        for (long s = 0; s < cfg.sweeps; ++s) {
            const int a = chain.sweep();
            window_accepted += a;
            if ((s + 1) % cfg.diagnostic_window == 0) {
                if (window_accepted == 0)
                    throw NumericalError("plasma sampler: no move accepted in " + std::to_string(cfg.diagnostic_window) +
                                         " sweeps; reduce proposal_scale");
                window_accepted = 0;
            }
            if (s < cfg.burn_in) continue;
            accepted += a;
            proposed += params.N;
            if ((s - cfg.burn_in) % cfg.thin == 0)
                std::apply([&](auto&... a2) { (a2.observe(chain.points()), ...); }, local[c]);
        }
        stats.acceptance[c] = proposed ? static_cast<double>(accepted) / proposed : 0.0;
    });
    for (int c = 0; c < cfg.chains; ++c) {
        auto& t = local[c];
        [&]<std::size_t... I>(std::index_sequence<I...>) { (acc.merge(std::get<I>(t)), ...); }
        (std::index_sequence_for<Acc...>{});
    }
    stats.recorded = cfg.recorded_per_chain() * cfg.chains;
    return stats;
}

// ---------------------------------------------------------------------------
// Stored samples
// ---------------------------------------------------------------------------

struct SampleSet {
    std::vector<std::vector<Point>> configs;

    void observe(std::span<const Point> x) { configs.emplace_back(x.begin(), x.end()); }
    void merge(const SampleSet& o) { configs.insert(configs.end(), o.configs.begin(), o.configs.end()); }
    std::size_t size() const { return configs.size(); }
    bool empty() const { return configs.empty(); }
};

// ---------------------------------------------------------------------------
// One-body density
// ---------------------------------------------------------------------------

/// Histogram estimate of the one-body density (particles per unit area).
struct DensityGrid {
    Grid2D grid;
    std::vector<double> values;
    double total_weight = 0.0;  ///< number of configurations accumulated

    double at(int ix, int iy) const { return values[grid.index(ix, iy)]; }

    /// h^2 * sum of values: the mean number of particles inside the grid.
    double integral() const { return grid.cell_area() * std::accumulate(values.begin(), values.end(), 0.0); }

    /// Integral of the density over D(c, r), with fractional edge cells.
    double integral_over_disk(Point c, double r) const {
        const auto w = disk_cover_fractions(grid, c, r);
        double s = 0.0;
        for (std::size_t k = 0; k < values.size(); ++k) s += w[k] * values[k];
        return s * grid.cell_area();
    }

    /// Mean density over D(c, r).
    double mean_over_disk(Point c, double r) const {
        const auto w = disk_cover_fractions(grid, c, r);
        double s = 0.0, a = 0.0;
        for (std::size_t k = 0; k < values.size(); ++k) {
            s += w[k] * values[k];
            a += w[k];
        }
        return a > 0.0 ? s / a : 0.0;
    }
};

class DensityAccumulator {
  public:
    explicit DensityAccumulator(Grid2D grid) : grid_(grid), counts_(grid.size(), 0.0) { grid_.validate(); }

    void observe(std::span<const Point> x) {
        for (const auto& p : x)
            if (auto k = grid_.cell_of(p)) counts_[*k] += 1.0;
        samples_ += 1.0;
    }

    void merge(const DensityAccumulator& o) {
        if (!(o.grid_ == grid_)) throw InputError("DensityAccumulator: merging different grids");
        for (std::size_t k = 0; k < counts_.size(); ++k) counts_[k] += o.counts_[k];
        samples_ += o.samples_;
    }

    double samples() const { return samples_; }

    DensityGrid result() const {
        if (samples_ <= 0.0) throw InputError("estimate_density: empty sample set");
        DensityGrid d{grid_, std::vector<double>(counts_.size()), samples_};
        const double norm = 1.0 / (samples_ * grid_.cell_area());
        for (std::size_t k = 0; k < counts_.size(); ++k) d.values[k] = counts_[k] * norm;
        return d;
    }

  private:
    Grid2D grid_;
    std::vector<double> counts_;
    double samples_ = 0.0;
};

inline DensityGrid estimate_density(const SampleSet& samples, const Grid2D& grid) {
    if (samples.empty()) throw InputError("estimate_density: empty sample set");
    DensityAccumulator acc(grid);
    for (const auto& c : samples.configs) acc.observe(c);
    return acc.result();
}

// ---------------------------------------------------------------------------
// Incompressibility: coarse-grained maxima against the cap density
// ---------------------------------------------------------------------------

struct IncompressibilityReport {
    double coarse_radius = 0.0;
    double max_coarse_density = 0.0;
    double cap = 0.0;
    double excess_ratio = 0.0;
    std::vector<Point> argmax;  ///< centers attaining the maximum
};

/// Default coarse-graining radius: three mean inter-particle spacings.
inline double default_coarse_radius(const PlasmaParams& p) { return 3.0 * p.mean_spacing(); }

/// Density averaged over D(center, radius) at every cell center whose disk lies
/// inside the grid; NaN elsewhere.
inline DensityGrid coarse_grained(const DensityGrid& d, double radius) {
    const Grid2D& g = d.grid;
    const int reach = static_cast<int>(std::ceil(radius / g.h)) + 1;
    struct Tap {
        int dx, dy;
        double w;
    };
    std::vector<Tap> taps;
    {
        // Mask centered on a cell center, built on a local grid.
        Grid2D local{Point(-(reach + 0.5) * g.h, -(reach + 0.5) * g.h), g.h, 2 * reach + 1, 2 * reach + 1};
        const auto w = disk_cover_fractions(local, Point{}, radius);
        for (int iy = 0; iy < local.ny; ++iy)
            for (int ix = 0; ix < local.nx; ++ix)
                if (double wk = w[local.index(ix, iy)]; wk > 0.0) taps.push_back({ix - reach, iy - reach, wk});
    }
    double wsum = 0.0;
    for (const auto& t : taps) wsum += t.w;
    DensityGrid out{g, std::vector<double>(g.size(), std::numeric_limits<double>::quiet_NaN()), d.total_weight};
    for (int iy = 0; iy < g.ny; ++iy)
        for (int ix = 0; ix < g.nx; ++ix) {
            if (!g.contains_disk(g.center(ix, iy), radius)) continue;
            double s = 0.0;
            for (const auto& t : taps) s += t.w * d.values[g.index(ix + t.dx, iy + t.dy)];
            out.values[g.index(ix, iy)] = s / wsum;
        }
    return out;
}

inline IncompressibilityReport incompressibility_check(const DensityGrid& d, const PlasmaParams& params,
                                                       double coarse_radius) {
    params.validate();
    if (!(coarse_radius >= 2.0 * params.mean_spacing()))
        throw InputError("incompressibility_check: coarse_radius below twice the mean inter-particle spacing");
    if (!(coarse_radius >= 2.0 * d.grid.h)) throw InputError("incompressibility_check: coarse_radius below grid resolution");
    const auto cg = coarse_grained(d, coarse_radius);
    IncompressibilityReport r;
    r.coarse_radius = coarse_radius;
    r.cap = params.cap_density();
    double best = -1.0;
    for (std::size_t k = 0; k < cg.values.size(); ++k)
        if (std::isfinite(cg.values[k])) best = std::max(best, cg.values[k]);
    if (best < 0.0) throw InputError("incompressibility_check: grid too small for the coarse-graining disk");
    for (std::size_t k = 0; k < cg.values.size(); ++k)
        if (std::isfinite(cg.values[k]) && cg.values[k] >= best * (1.0 - 1e-12)) r.argmax.push_back(cg.grid.center(k));
    r.max_coarse_density = best;
    r.excess_ratio = best / r.cap;
    return r;
}

/// Integral of (baseline - density) over D(hole position, probe_radius).
/// Approaches m / ell once the probe disk contains the screening cloud.
inline double quasihole_deficit(const DensityGrid& density, const DensityGrid& baseline, const QuasiHole& hole,
                                double probe_radius) {
    if (!(density.grid == baseline.grid)) throw InputError("quasihole_deficit: densities on different grids");
    if (!(probe_radius > 0.0)) throw InputError("quasihole_deficit: probe_radius must be positive");
    if (!density.grid.contains_disk(hole.position, probe_radius))
        throw InputError("quasihole_deficit: probe disk leaves the grid");
    return baseline.integral_over_disk(hole.position, probe_radius) -
           density.integral_over_disk(hole.position, probe_radius);
}

// ---------------------------------------------------------------------------
// Trial energies
// ---------------------------------------------------------------------------

struct EnergyEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    int batches = 0;
    long samples = 0;
};

/// sum_j V(x_j) + lambda sum_{i<j} W(x_i - x_j) for one configuration.
inline double configuration_energy(std::span<const Point> x, const ScaledPotentials& pots) {
    double e = 0.0;
    for (const auto& p : x) e += pots.V(p);
    if (pots.lambda != 0.0) {
        double pair = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i)
            for (std::size_t j = i + 1; j < x.size(); ++j) pair += pots.W(x[i] - x[j]);
        e += pots.lambda * pair;
    }
    return e;
}

/// Batch-means mean and standard error of a time series.
inline EnergyEstimate batch_means(std::span<const double> series, int batches = 20) {
    if (batches < 10) throw InputError("batch_means: fewer than 10 batches");
    if (static_cast<long>(series.size()) < batches) throw InputError("batch_means: fewer samples than batches");
    const std::size_t len = series.size() / batches;
    const std::size_t start = series.size() - len * batches;
    std::vector<double> means(batches);
    for (int b = 0; b < batches; ++b) {
        double s = 0.0;
        for (std::size_t k = 0; k < len; ++k) s += series[start + b * len + k];
        means[b] = s / len;
    }
    const double m = std::accumulate(means.begin(), means.end(), 0.0) / batches;
    double var = 0.0;
    for (double x : means) var += (x - m) * (x - m);
    var /= (batches - 1);
    return {m, std::sqrt(var / batches), batches, static_cast<long>(len * batches)};
}

class TrialEnergyAccumulator {
  public:
    explicit TrialEnergyAccumulator(ScaledPotentials pots) : pots_(std::move(pots)) {}

    void observe(std::span<const Point> x) { series_.push_back(configuration_energy(x, pots_)); }
    void merge(const TrialEnergyAccumulator& o) { series_.insert(series_.end(), o.series_.begin(), o.series_.end()); }

    const std::vector<double>& series() const { return series_; }
    EnergyEstimate result(int batches = 20) const { return batch_means(series_, batches); }

  private:
    ScaledPotentials pots_;
    std::vector<double> series_;
};

inline EnergyEstimate trial_energy(const SampleSet& samples, const ScaledPotentials& pots, int batches = 20) {
    TrialEnergyAccumulator acc(pots);
    for (const auto& c : samples.configs) acc.observe(c);
    return acc.result(batches);
}

}  // namespace laughlin
