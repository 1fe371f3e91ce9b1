#pragma once

// Spectral gap sigma(N, ell) of H(ell - 2, N) over the sectors L <= ell N (N - 1) / 2.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "laughlin/core/parallel.hpp"
#include "laughlin/ed/basis.hpp"
#include "laughlin/ed/hamiltonian.hpp"
#include "laughlin/ed/spectrum.hpp"

namespace laughlin::ed {

inline Statistics statistics_for(int ell) { return ell % 2 == 0 ? Statistics::bosonic : Statistics::fermionic; }
inline int laughlin_momentum(int N, int ell) { return ell * N * (N - 1) / 2; }

struct SectorSpectrum {
    int N = 0, ell = 0, L = 0;
    std::size_t dim = 0;
    SpectrumResult spectrum;
};

struct GapOptions {
    int k = 4;
    /// Sectors up to scan_factor * L_Lau are diagonalized; sigma itself only uses L <= L_Lau.
    double scan_factor = 1.0;
    std::size_t dense_limit = 2000;
    bool force_lanczos = false;
    LanczosOptions lanczos;
    std::size_t threads = 1;

    void validate() const {
        if (k < 1) throw InputError("gap: k must be >= 1");
        if (!(scan_factor >= 1.0) || !std::isfinite(scan_factor)) throw InputError("gap: scan factor must be >= 1");
    }
};

struct GapReport {
    int N = 0, ell = 0, m = 0;
    Statistics statistics = Statistics::bosonic;
    int L_laughlin = 0;
    double zero_tol = 0.0;
    std::vector<SectorSpectrum> sectors;  ///< ascending L
    std::optional<double> sigma;          ///< min nonzero eigenvalue over L <= L_Lau
    int sigma_L = -1;
    std::optional<double> sigma_scan;     ///< same over all scanned sectors
    bool laughlin_zero_mode = false;
};

/// Spectrum of H(m, N) on one sector. Lanczos runs on the factorized D^T D.
inline SpectrumResult sector_spectrum(const MomentumSector& sec, int m, const SpectrumOptions& so,
                                      std::size_t threads = 1) {
    const FockBasis basis = enumerate_basis(sec);
    if (basis.size() == 0) return SpectrumResult{};
    FactorizedOperator H(pair_removal_operator(basis, m), threads);
    return lowest_spectrum(H, so);
}

inline GapReport spectral_gap(int N, int ell, const GapOptions& o = {}) {
    o.validate();
    if (N < 2) throw InputError("gap: N must be >= 2");
    if (ell < 2) throw InputError("gap: ell must be >= 2");
    GapReport rep;
    rep.N = N;
    rep.ell = ell;
    rep.m = ell - 2;
    rep.statistics = statistics_for(ell);
    rep.L_laughlin = laughlin_momentum(N, ell);
    rep.zero_tol = zero_tolerance(N);
    const MomentumSector probe{N, 0, rep.statistics};
    const int L_lo = probe.L_min();
    const int L_hi = static_cast<int>(std::floor(o.scan_factor * rep.L_laughlin + 1e-9));
    const int count = L_hi - L_lo + 1;
    rep.sectors.resize(static_cast<std::size_t>(count));
    const std::size_t outer = std::min<std::size_t>(o.threads, static_cast<std::size_t>(count));
    const std::size_t inner = outer > 1 ? 1 : o.threads;
    parallel_for(static_cast<std::size_t>(count), outer, [&](std::size_t i) {
        const int L = L_lo + static_cast<int>(i);
        SpectrumOptions so;
        so.k = o.k;
        so.zero_tol = rep.zero_tol;
        so.dense_limit = o.dense_limit;
        so.force_lanczos = o.force_lanczos;
        so.lanczos = o.lanczos;
        so.lanczos.seed = o.lanczos.seed + 1000003ULL * static_cast<std::uint64_t>(L);
        auto& s = rep.sectors[i];
        s.N = N;
        s.ell = ell;
        s.L = L;
        s.spectrum = sector_spectrum(MomentumSector{N, L, rep.statistics}, rep.m, so, inner);
        s.dim = s.spectrum.dim;
    });
    for (const auto& s : rep.sectors) {
        if (s.L == rep.L_laughlin && s.spectrum.zero_mode_count > 0) rep.laughlin_zero_mode = true;
        if (!s.spectrum.lowest_nonzero) continue;
        const double v = *s.spectrum.lowest_nonzero;
        if (s.L <= rep.L_laughlin && (!rep.sigma || v < *rep.sigma)) {
            rep.sigma = v;
            rep.sigma_L = s.L;
        }
        if (!rep.sigma_scan || v < *rep.sigma_scan) rep.sigma_scan = v;
    }
    return rep;
}

}  // namespace laughlin::ed
