#pragma once

// Fixed-angular-momentum Fock bases of lowest-Landau-level orbitals
// phi_m(z) = z^m e^{-|z|^2/4} / sqrt(2 pi 2^m m!)  (B = 1).

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "laughlin/core/types.hpp"

namespace laughlin::ed {

/// Orbital indices of the N particles, nonincreasing (strictly decreasing for fermions).
using Orbitals = std::vector<std::uint8_t>;

struct MomentumSector {
    int N = 2;
    int L = 0;
    Statistics statistics = Statistics::bosonic;
    int m_max = -1;  ///< highest orbital; < 0 selects L

    int L_min() const { return statistics == Statistics::fermionic ? N * (N - 1) / 2 : 0; }
    int max_orbital() const { return m_max < 0 ? L : m_max; }

    void validate() const {
        if (N < 1) throw InputError("MomentumSector: N must be >= 1");
        if (L < 0) throw InputError("MomentumSector: L must be >= 0");
        if (L < L_min()) throw InputError("MomentumSector: fermionic sector needs L >= N(N-1)/2");
        if (max_orbital() > 255) throw InputError("MomentumSector: orbital index above 255");
    }
};

/// Number of partitions of n into at most k parts.
inline long long partition_count(int n, int k) {
    if (n < 0 || k < 0) return 0;
    // p[j][i]: partitions of i into parts of size <= j (= into at most j parts).
    std::vector<long long> p(n + 1, 0);
    p[0] = 1;
    for (int part = 1; part <= k; ++part)
        for (int i = part; i <= n; ++i) p[i] += p[i - part];
    return p[n];
}

class FockBasis {
  public:
    FockBasis() = default;
    FockBasis(MomentumSector s, std::vector<Orbitals> states) : sector_(s), states_(std::move(states)) {}

    const MomentumSector& sector() const { return sector_; }
    std::size_t size() const { return states_.size(); }
    const Orbitals& operator[](std::size_t i) const { return states_[i]; }
    const std::vector<Orbitals>& states() const { return states_; }

    std::optional<std::size_t> find(const Orbitals& o) const {
        auto it = std::lower_bound(states_.begin(), states_.end(), o);
        if (it == states_.end() || *it != o) return std::nullopt;
        return static_cast<std::size_t>(it - states_.begin());
    }

    /// Occupation numbers n_0..n_{m_max}.
    std::vector<int> occupations(std::size_t i) const {
        std::vector<int> n(sector_.max_orbital() + 1, 0);
        for (auto o : states_[i]) ++n[o];
        return n;
    }

  private:
    MomentumSector sector_;
    std::vector<Orbitals> states_;
};

inline constexpr std::size_t kDimensionGuard = 10'000'000;

/// All occupation states of the sector, sorted lexicographically by orbital list.
inline FockBasis enumerate_basis(const MomentumSector& s, std::size_t guard = kDimensionGuard) {
    s.validate();
    const long long expect = s.m_max < 0 ? partition_count(s.L - s.L_min(), s.N) : -1;
    if (expect > static_cast<long long>(guard))
        throw InputError("enumerate_basis: dimension " + std::to_string(expect) + " exceeds the guard");
    std::vector<Orbitals> out;
    Orbitals cur(s.N);
    const bool fermi = s.statistics == Statistics::fermionic;
    // Place particle i with orbital <= hi; remaining momentum rem.
    auto rec = [&](auto&& self, int i, int hi, int rem) -> void {
        const int left = s.N - i;
        if (left == 0) {
            if (rem == 0) {
                out.push_back(cur);
                if (out.size() > guard) throw InputError("enumerate_basis: dimension exceeds the guard");
            }
            return;
        }
        // Minimum momentum the remaining particles below `o` must carry.
        for (int o = std::min(hi, rem); o >= 0; --o) {
            const int rest = left - 1;
            const int min_rest = fermi ? rest * (rest - 1) / 2 : 0;
            const int max_rest = fermi ? (2 * o - rest - 1) * rest / 2 : o * rest;
            if (rem - o < min_rest) continue;
            if (rem - o > max_rest) break;
            cur[i] = static_cast<std::uint8_t>(o);
            self(self, i + 1, fermi ? o - 1 : o, rem - o);
        }
    };
    rec(rec, 0, s.max_orbital(), s.L);
    std::sort(out.begin(), out.end());
    return FockBasis(s, std::move(out));
}

}  // namespace laughlin::ed
