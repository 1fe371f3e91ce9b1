#pragma once

// Contact (delta) interaction projected on the bosonic lowest Landau level,
// applied by midpoint substitution on the analytic factor:
//   A -> (1/2pi) sum_{i<j} A(.., (z_i+z_j)/2, .., (z_i+z_j)/2, ..).
// Vectors are coefficients in the normalized occupation basis of a FockBasis.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "laughlin/core/types.hpp"
#include "laughlin/ed/basis.hpp"
#include "laughlin/ed/hamiltonian.hpp"

namespace laughlin::ed {

/// delta_action = kDeltaScale * H(0, N) with the projector normalization of H.
inline constexpr double kDeltaScale = 1.0 / (2.0 * kPi);

/// log of kappa with |n> = kappa * m_lambda(z) * exp(-sum |z|^2 / 4), m_lambda the
/// monomial symmetric polynomial of the orbital list.
inline double log_state_normalization(const Orbitals& o) {
    const int N = static_cast<int>(o.size());
    double lk = -std::lgamma(N + 1.0);
    for (std::size_t i = 0; i < o.size();) {
        std::size_t j = i;
        while (j < o.size() && o[j] == o[i]) ++j;
        lk += std::lgamma(static_cast<double>(j - i) + 1.0);
        i = j;
    }
    lk *= 0.5;
    for (auto m : o) lk -= 0.5 * (std::log(2.0 * kPi) + m * std::log(2.0) + std::lgamma(m + 1.0));
    return lk;
}

inline Eigen::VectorXd delta_action(const FockBasis& basis, const Eigen::VectorXd& y) {
    if (basis.sector().statistics != Statistics::bosonic) throw InputError("delta_action: bosonic input required");
    if (static_cast<std::size_t>(y.size()) != basis.size()) throw InputError("delta_action: vector size mismatch");
    const int N = basis.sector().N;
    std::vector<double> logk(basis.size());
    for (std::size_t i = 0; i < basis.size(); ++i) logk[i] = log_state_normalization(basis[i]);
    const int smax = 2 * basis.sector().max_orbital();
    // binom[s][k] = 2^{-s} C(s, k)
    std::vector<std::vector<double>> binom(smax + 1);
    for (int s = 0; s <= smax; ++s) {
        binom[s].assign(s + 1, std::ldexp(1.0, -s));
        for (int k = 1; k < s; ++k) binom[s][k] = 0.5 * (binom[s - 1][k - 1] + binom[s - 1][k]);
    }
    // Result coefficients on monomials z^nu, nu nonincreasing, in units of the
    // reference scale exp(ref) to keep the normalization factors in range.
    const double ref = basis.size() ? *std::max_element(logk.begin(), logk.end()) : 0.0;
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(y.size());
    Orbitals e, f;
    for (std::size_t mu = 0; mu < basis.size(); ++mu) {
        if (y[mu] == 0.0) continue;
        const double c = y[mu] * std::exp(logk[mu] - ref);
        e = basis[mu];
        std::sort(e.begin(), e.end());
        do {
            for (int i = 0; i < N; ++i)
                for (int j = i + 1; j < N; ++j) {
                    const int s = e[i] + e[j];
                    f = e;
                    for (int k = 0; k <= s; ++k) {
                        f[i] = static_cast<std::uint8_t>(k);
                        f[j] = static_cast<std::uint8_t>(s - k);
                        if (!std::is_sorted(f.begin(), f.end(), std::greater<>())) continue;
                        const auto nu = basis.find(f);
                        if (nu) acc[static_cast<Eigen::Index>(*nu)] += c * binom[s][k];
                    }
                }
        } while (std::next_permutation(e.begin(), e.end()));
    }
    Eigen::VectorXd out(y.size());
    for (std::size_t nu = 0; nu < basis.size(); ++nu)
        out[static_cast<Eigen::Index>(nu)] = acc[static_cast<Eigen::Index>(nu)] * std::exp(ref - logk[nu]) / (2.0 * kPi);
    return out;
}

/// Least-squares scalar s with delta_action(y) ~ s * H(0, N) y.
inline double calibrate_delta_scale(const FockBasis& basis, const Eigen::VectorXd& y) {
    const SparseOperator H = build_hamiltonian(basis, 0);
    Eigen::VectorXd hy;
    H.apply(y, hy);
    const double d = hy.squaredNorm();
    if (d == 0.0) throw InputError("calibrate_delta_scale: vector lies in the kernel of H(0, N)");
    return hy.dot(delta_action(basis, y)) / d;
}

struct DeltaTrial {
    int N = 0, L = 0;
    std::size_t dim = 0;
    double error = 0.0;  ///< ||delta(y) - s H y|| / ||y||
};

struct DeltaCheckReport {
    double scale = 0.0;  ///< calibrated once, on the first trial
    double max_error = 0.0;
    std::vector<DeltaTrial> trials;
};

/// Random vectors in sectors L = L_lo .. L_hi (cycled), compared with the m = 0 matrix path.
inline DeltaCheckReport delta_equivalence(int N, int trials, std::uint64_t seed, int L_lo = 2, int L_hi = 6) {
    if (N < 2) throw InputError("delta check: N must be >= 2");
    if (trials < 1) throw InputError("delta check: trials must be >= 1");
    if (L_lo < 0 || L_hi < L_lo) throw InputError("delta check: invalid momentum range");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    DeltaCheckReport rep;
    bool calibrated = false;
    for (int t = 0; t < trials; ++t) {
        const int L = L_lo + t % (L_hi - L_lo + 1);
        const FockBasis basis = enumerate_basis(MomentumSector{N, L, Statistics::bosonic});
        Eigen::VectorXd y(static_cast<Eigen::Index>(basis.size()));
        for (Eigen::Index i = 0; i < y.size(); ++i) y[i] = g(rng);
        y.normalize();
        if (!calibrated) {
            rep.scale = calibrate_delta_scale(basis, y);
            calibrated = true;
        }
        const SparseOperator H = build_hamiltonian(basis, 0);
        Eigen::VectorXd hy;
        H.apply(y, hy);
        DeltaTrial tr{N, L, basis.size(), (delta_action(basis, y) - rep.scale * hy).norm()};
        rep.max_error = std::max(rep.max_error, tr.error);
        rep.trials.push_back(tr);
    }
    return rep;
}

}  // namespace laughlin::ed
