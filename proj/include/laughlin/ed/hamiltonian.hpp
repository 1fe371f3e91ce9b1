#pragma once

// Haldane pseudo-potential Hamiltonian H(m, N) = sum_{i<j} P_m(ij), with P_m the
// projector of the pair on relative angular momentum m, assembled as D^T D
// where D maps an N-particle state to (N-2)-particle states by removing a pair
// weighted with its relative-momentum-m amplitude.

#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "laughlin/core/parallel.hpp"
#include "laughlin/ed/basis.hpp"

namespace laughlin::ed {

/// <M, m | m1, m2>: overlap of the product orbital phi_{m1}(z1) phi_{m2}(z2) with the
/// state of center-of-mass momentum M = m1 + m2 - m and relative momentum m, in
/// z_R = (z1 + z2)/sqrt2, z_r = (z1 - z2)/sqrt2.
inline double pair_amplitude(int m1, int m2, int m) {
    const int M = m1 + m2 - m;
    if (m1 < 0 || m2 < 0 || m < 0 || M < 0) return 0.0;
    long double sum = 0.0L;
    for (int j = 0; j <= std::min(m, m2); ++j) {
        const int k = m - j;
        if (k > m1) continue;
        const long double term = std::exp(std::lgamma(m1 + 1.0L) - std::lgamma(k + 1.0L) - std::lgamma(m1 - k + 1.0L) +
                                          std::lgamma(m2 + 1.0L) - std::lgamma(j + 1.0L) - std::lgamma(m2 - j + 1.0L));
        sum += (j % 2 == 0 ? term : -term);
    }
    const long double log_pref = 0.5L * (std::lgamma(M + 1.0L) + std::lgamma(m + 1.0L) - std::lgamma(m1 + 1.0L) -
                                         std::lgamma(m2 + 1.0L)) -
                                 0.5L * (m1 + m2) * std::log(2.0L);
    return static_cast<double>(std::exp(log_pref) * sum);
}

/// Relative-momentum-m amplitude of the normalized (anti)symmetrized pair state of
/// orbitals a <= b: bosons (|ab> + |ba>)/sqrt2 or |aa>, fermions (|ab> - |ba>)/sqrt2.
inline double pair_state_amplitude(int a, int b, int m, Statistics s) {
    if (a > b) std::swap(a, b);
    if (s == Statistics::fermionic) {
        if (a == b) return 0.0;
        return (pair_amplitude(a, b, m) - pair_amplitude(b, a, m)) / std::sqrt(2.0);
    }
    if (a == b) return pair_amplitude(a, a, m);
    return (pair_amplitude(a, b, m) + pair_amplitude(b, a, m)) / std::sqrt(2.0);
}

/// <(c, d)| P_m |(a, b)> between normalized pair states; zero unless a + b = c + d.
inline double two_body_element(int m, int a, int b, int c, int d, Statistics s) {
    if (a + b != c + d) return 0.0;
    return pair_state_amplitude(c, d, m, s) * pair_state_amplitude(a, b, m, s);
}

/// True when P_m acts trivially for the statistics (odd m on bosons, even m on fermions).
inline bool parity_mismatch(int m, Statistics s) { return (m % 2 == 0) != (s == Statistics::bosonic); }

using RowSparse = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Pair-removal operator D with H(m, N) = D^T D on the sector.
inline RowSparse pair_removal_operator(const FockBasis& basis, int m) {
    if (m < 0) throw InputError("pseudo-potential index must be >= 0");
    const auto& sec = basis.sector();
    const bool fermi = sec.statistics == Statistics::fermionic;
    std::vector<Eigen::Triplet<double>> trip;
    std::unordered_map<std::string, int> rows;
    std::vector<double> amp_cache;
    const int mo = sec.max_orbital();
    // Pair amplitudes A(a, b) for a <= b.
    std::vector<double> A(static_cast<std::size_t>(mo + 1) * (mo + 1), 0.0);
    for (int a = 0; a <= mo; ++a)
        for (int b = a; b <= mo; ++b) A[a * (mo + 1) + b] = pair_state_amplitude(a, b, m, sec.statistics);
    for (std::size_t col = 0; col < basis.size(); ++col) {
        const Orbitals& o = basis[col];
        const auto n = basis.occupations(col);
        // Distinct orbitals in increasing order.
        std::vector<int> occ;
        for (int q = 0; q <= mo; ++q)
            if (n[q] > 0) occ.push_back(q);
        for (std::size_t ia = 0; ia < occ.size(); ++ia)
            for (std::size_t ib = ia; ib < occ.size(); ++ib) {
                const int a = occ[ia], b = occ[ib];
                double amp;
                if (a == b) {
                    if (fermi || n[a] < 2) continue;
                    amp = std::sqrt(n[a] * (n[a] - 1) / 2.0);
                } else if (fermi) {
                    // c_b c_a on c+_{o ascending}|0>: sign from the occupied orbitals below each.
                    amp = ((ia + ib - 1) % 2 == 0) ? 1.0 : -1.0;
                } else {
                    amp = std::sqrt(static_cast<double>(n[a]) * n[b]);
                }
                const double w = A[a * (mo + 1) + b];
                if (w == 0.0) continue;
                Orbitals rest;
                rest.reserve(o.size() - 2);
                bool skip_a = true, skip_b = true;
                for (auto v : o) {
                    if (skip_b && v == b) {
                        skip_b = false;
                        continue;
                    }
                    if (skip_a && v == a) {
                        skip_a = false;
                        continue;
                    }
                    rest.push_back(v);
                }
                std::string key(rest.begin(), rest.end());
                auto [it, fresh] = rows.try_emplace(std::move(key), static_cast<int>(rows.size()));
                trip.emplace_back(it->second, static_cast<int>(col), w * amp);
            }
    }
    RowSparse D(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(basis.size()));
    D.setFromTriplets(trip.begin(), trip.end());
    return D;
}

/// Explicitly assembled symmetric matrix (full storage, row major).
class SparseOperator {
  public:
    SparseOperator() = default;
    explicit SparseOperator(RowSparse h) : h_(std::move(h)) {}

    std::size_t dim() const { return static_cast<std::size_t>(h_.rows()); }
    const RowSparse& matrix() const { return h_; }
    std::size_t nonzeros() const { return static_cast<std::size_t>(h_.nonZeros()); }

    void apply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const { y.noalias() = h_ * x; }
    template <class X, class Y>
    void apply_block(const X& x, Y& y) const {
        y.noalias() = h_ * x;
    }
    Eigen::MatrixXd dense() const { return Eigen::MatrixXd(h_); }
    double entry(std::size_t i, std::size_t j) const { return h_.coeff(i, j); }

  private:
    RowSparse h_;
};

/// Matrix-free D^T D; rows of D and of D^T are processed in parallel.
class FactorizedOperator {
  public:
    FactorizedOperator(RowSparse D, std::size_t threads = 1) : d_(std::move(D)), dt_(d_.transpose()), threads_(threads) {}

    std::size_t dim() const { return static_cast<std::size_t>(d_.cols()); }

    void apply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const {
        Eigen::VectorXd z(d_.rows());
        row_product(d_, x, z);
        y.resize(d_.cols());
        row_product(dt_, z, y);
    }

    template <class X, class Y>
    void apply_block(const X& x, Y& y) const {
        Eigen::MatrixXd z(d_.rows(), x.cols());
        block_product(d_, x, z);
        block_product(dt_, z, y);
    }

    Eigen::MatrixXd dense() const { return Eigen::MatrixXd(RowSparse(dt_ * d_)); }
    SparseOperator assemble() const { return SparseOperator(RowSparse(dt_ * d_)); }

  private:
    void row_product(const RowSparse& A, const Eigen::VectorXd& x, Eigen::VectorXd& y) const {
        parallel_chunks(static_cast<std::size_t>(A.rows()), threads_, [&](std::size_t lo, std::size_t hi) {
            for (std::size_t r = lo; r < hi; ++r) {
                double s = 0.0;
                for (RowSparse::InnerIterator it(A, static_cast<Eigen::Index>(r)); it; ++it) s += it.value() * x[it.col()];
                y[static_cast<Eigen::Index>(r)] = s;
            }
        });
    }

    template <class X, class Y>
    void block_product(const RowSparse& A, const X& x, Y& y) const {
        parallel_chunks(static_cast<std::size_t>(A.rows()), threads_, [&](std::size_t lo, std::size_t hi) {
            const auto l = static_cast<Eigen::Index>(lo), c = static_cast<Eigen::Index>(hi - lo);
            y.middleRows(l, c).noalias() = A.middleRows(l, c) * x;
        });
    }

    RowSparse d_, dt_;
    std::size_t threads_;
};

/// H(m, N) on the sector as an assembled sparse matrix. A parity mismatch gives
/// the zero operator; `warning` is set when provided.
inline SparseOperator build_hamiltonian(const FockBasis& basis, int m, std::string* warning = nullptr) {
    if (parity_mismatch(m, basis.sector().statistics) && warning)
        *warning = "pseudo-potential index " + std::to_string(m) + " acts trivially on " +
                   to_string(basis.sector().statistics) + " states";
    const RowSparse D = pair_removal_operator(basis, m);
    RowSparse H = RowSparse(D.transpose() * D);
    H.prune(0.0);
    return SparseOperator(std::move(H));
}

}  // namespace laughlin::ed
