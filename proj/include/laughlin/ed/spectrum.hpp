#pragma once

// Lowest eigenpairs of symmetric positive semidefinite operators: dense
// diagonalization for small dimensions, restarted Lanczos with full
// reorthogonalization and locking otherwise.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "laughlin/core/types.hpp"

namespace laughlin::ed {

struct LanczosOptions {
    double tol = 1e-10;       ///< residual ||H u - theta u|| per eigenpair, scaled by max(1, ||H||)
    int max_krylov = 80;
    int keep = 40;  ///< Ritz vectors carried across a restart
    int block = 2;
    int max_restarts = 500;
    std::uint64_t seed = 0x5eed;
};

struct SpectrumOptions {
    int k = 4;
    double zero_tol = 1e-10;
    std::size_t dense_limit = 2000;
    bool force_lanczos = false;
    /// Keep going past the zero modes until a nonzero eigenvalue is found, so
    /// that zero_mode_count is the full kernel dimension.
    bool require_nonzero = true;
    int max_eigenpairs = 256;
    LanczosOptions lanczos;
};

struct SpectrumResult {
    std::size_t dim = 0;
    std::vector<double> eigenvalues;  ///< ascending
    int zero_mode_count = 0;
    std::optional<double> lowest_nonzero;
    double residual = 0.0;  ///< worst residual over the returned eigenpairs
    int restarts = 0;
    int matvecs = 0;
    std::string method;
};

inline void count_modes(SpectrumResult& r, double zero_tol) {
    r.zero_mode_count = 0;
    r.lowest_nonzero.reset();
    for (double e : r.eigenvalues) {
        if (e < zero_tol)
            ++r.zero_mode_count;
        else if (!r.lowest_nonzero)
            r.lowest_nonzero = e;
    }
}

inline SpectrumResult dense_spectrum(const Eigen::MatrixXd& H, double zero_tol) {
    SpectrumResult r;
    r.dim = static_cast<std::size_t>(H.rows());
    r.method = "dense";
    if (H.rows() == 0) return r;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
    if (es.info() != Eigen::Success) throw NumericalError("dense eigensolver failed");
    r.eigenvalues.assign(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
    Eigen::MatrixXd R = H * es.eigenvectors() - es.eigenvectors() * es.eigenvalues().asDiagonal();
    r.residual = R.rows() ? R.colwise().norm().maxCoeff() : 0.0;
    count_modes(r, zero_tol);
    return r;
}

namespace detail {

/// Orthonormal columns, grown on demand.
struct ColumnSet {
    Eigen::MatrixXd cols;
    Eigen::Index used = 0;

    ColumnSet(Eigen::Index n, Eigen::Index cap) : cols(n, cap) {}
    auto view() const { return cols.leftCols(used); }
    void orthogonalize(Eigen::VectorXd& w) const {
        if (used > 0) w.noalias() -= view() * (view().transpose() * w);
    }
    void push(const Eigen::VectorXd& v) {
        if (used == cols.cols()) cols.conservativeResize(Eigen::NoChange, std::max<Eigen::Index>(8, 2 * used));
        cols.col(used++) = v;
    }
};

template <class Op, class X, class Y>
void apply_block(const Op& op, const X& x, Y&& y) {
    if constexpr (requires { op.apply_block(x, y); }) {
        op.apply_block(x, y);
    } else {
        Eigen::VectorXd in, out;
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            in = x.col(j);
            op.apply(in, out);
            y.col(j) = out;
        }
    }
}

}  // namespace detail

/// Thick-restart block Lanczos with full reorthogonalization and locking. Each
/// cycle extends the kept Ritz vectors by a block Krylov space in the complement
/// of the locked eigenvectors, performs Rayleigh-Ritz, locks the converged
/// leading Ritz pairs and restarts from the next ones. When enough pairs are
/// locked a cold random block confirms that nothing below them was missed.
template <class Op>
SpectrumResult lanczos_lowest(const Op& op, const SpectrumOptions& so) {
    const auto& o = so.lanczos;
    const auto n = static_cast<Eigen::Index>(op.dim());
    SpectrumResult res;
    res.dim = op.dim();
    res.method = "lanczos";
    if (n == 0) return res;
    std::mt19937_64 rng(o.seed);
    std::normal_distribution<double> gauss;
    auto random_vector = [&] {
        Eigen::VectorXd v(n);
        for (Eigen::Index i = 0; i < n; ++i) v[i] = gauss(rng);
        return v;
    };

    const Eigen::Index block = std::max(1, o.block);
    detail::ColumnSet locked(n, 16);
    std::vector<double> locked_vals, locked_res;
    const std::size_t target_min = static_cast<std::size_t>(std::max(1, so.k));
    auto enough = [&] {
        if (locked.used >= n) return true;
        if (locked_vals.size() < target_min) return false;
        if (!so.require_nonzero) return true;
        for (double v : locked_vals)
            if (v >= so.zero_tol) return true;
        return static_cast<int>(locked_vals.size()) >= so.max_eigenpairs;
    };

    const Eigen::Index cap = std::max<Eigen::Index>(2 * block + 2, o.max_krylov);
    Eigen::MatrixXd Q(n, cap), HQ(n, cap), T(cap, cap);
    Eigen::MatrixXd kept, kept_h;  // Ritz vectors carried over and their images
    Eigen::MatrixXd frontier(n, block);
    for (Eigen::Index b = 0; b < block; ++b) frontier.col(b) = random_vector();
    double norm_est = 0.0;
    bool verifying = false, done = false;
    double verify_floor = 0.0;

    for (int cycle = 0; cycle < o.max_restarts && !done; ++cycle) {
        res.restarts = cycle;
        const Eigen::Index room = std::min<Eigen::Index>(cap, n - locked.used);
        Eigen::Index s = 0;
        for (Eigen::Index j = 0; j < kept.cols() && s < room; ++j, ++s) {
            Q.col(s) = kept.col(j);
            HQ.col(s) = kept_h.col(j);
        }
        // Appends the part of the candidate columns orthogonal to the basis and
        // the locked vectors; returns the number of columns kept.
        auto add = [&](Eigen::MatrixXd C) -> Eigen::Index {
            if (C.cols() > room - s) C.conservativeResize(Eigen::NoChange, room - s);
            if (C.cols() == 0) return 0;
            const Eigen::VectorXd c0 = C.colwise().norm();
            for (int pass = 0; pass < 2; ++pass) {
                if (s > 0) C.noalias() -= Q.leftCols(s) * (Q.leftCols(s).transpose() * C);
                if (locked.used > 0) C.noalias() -= locked.view() * (locked.view().transpose() * C);
            }
            Eigen::Index added = 0;
            for (Eigen::Index j = 0; j < C.cols(); ++j) {
                Eigen::VectorXd v = C.col(j);
                for (int pass = 0; pass < 2 && added > 0; ++pass)
                    v.noalias() -= Q.middleCols(s, added) * (Q.middleCols(s, added).transpose() * v);
                const double vn = v.norm();
                if (!(vn > 1e-10 * c0[j])) continue;
                Q.col(s + added) = v / vn;
                ++added;
            }
            if (added == 0) return 0;
            detail::apply_block(op, Q.middleCols(s, added), HQ.middleCols(s, added));
            res.matvecs += static_cast<int>(added);
            s += added;
            return added;
        };
        auto random_block = [&] {
            Eigen::MatrixXd R(n, block);
            for (Eigen::Index b = 0; b < block; ++b) R.col(b) = random_vector();
            return R;
        };
        Eigen::Index first_new = s;
        if (add(std::move(frontier)) == 0 && s < room) add(random_block());
        while (s < room) {
            const Eigen::Index lo = first_new, hi = s;
            if (lo == hi) break;
            first_new = s;
            if (add(HQ.middleCols(lo, hi - lo)) == 0 && add(random_block()) == 0) break;
        }
        if (s == 0) break;
        T.topLeftCorner(s, s).noalias() = Q.leftCols(s).transpose() * HQ.leftCols(s);
        const Eigen::MatrixXd Ts = 0.5 * (T.topLeftCorner(s, s) + T.topLeftCorner(s, s).transpose());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> rr(Ts);
        const Eigen::VectorXd theta = rr.eigenvalues();
        norm_est = std::max(norm_est, theta.cwiseAbs().maxCoeff());
        const double tol = o.tol * std::max(1.0, norm_est);

        const Eigen::Index keep = std::min<Eigen::Index>(std::max<Eigen::Index>(o.keep, block), s - 1);
        const Eigen::Index need = std::min<Eigen::Index>(s, keep + block + static_cast<Eigen::Index>(target_min) + 1);
        const Eigen::MatrixXd U = Q.leftCols(s) * rr.eigenvectors().leftCols(need);
        const Eigen::MatrixXd HU = HQ.leftCols(s) * rr.eigenvectors().leftCols(need);

        if (verifying) {
            // Cold run: stop once the lowest Ritz value sits clearly above the locked maximum.
            const double r0 = (HU.col(0) - theta[0] * U.col(0)).norm();
            if (theta[0] - r0 > verify_floor + tol) {
                done = true;
                break;
            }
        }
        Eigen::Index i = 0;
        int new_locks = 0;
        double min_new = std::numeric_limits<double>::infinity();
        for (; i < need; ++i) {
            const double r = (HU.col(i) - theta[i] * U.col(i)).norm();
            if (r > tol || (!verifying && enough())) break;
            locked.push(U.col(i));
            locked_vals.push_back(theta[i]);
            locked_res.push_back(r);
            min_new = std::min(min_new, theta[i]);
            ++new_locks;
        }
        if (verifying && new_locks > 0) {
            if (min_new >= verify_floor - tol) {
                done = true;
                break;
            }
            verifying = false;
        }
        if (!verifying && enough()) {
            if (locked.used >= n) {
                done = true;
                break;
            }
            verifying = true;
            verify_floor = *std::max_element(locked_vals.begin(), locked_vals.end());
            kept.resize(n, 0);
            kept_h.resize(n, 0);
            frontier.resize(n, block);
            for (Eigen::Index b = 0; b < block; ++b) frontier.col(b) = random_vector();
            continue;
        }
        const Eigen::Index nk = std::min<Eigen::Index>(keep, need - i);
        kept = U.middleCols(i, nk);
        kept_h = HU.middleCols(i, nk);
        frontier.resize(n, std::min(block, nk));
        for (Eigen::Index b = 0; b < frontier.cols(); ++b)
            frontier.col(b) = HU.col(i + b) - theta[i + b] * U.col(i + b);
    }
    if (!done) {
        double worst = 0.0;
        for (double r : locked_res) worst = std::max(worst, r);
        throw NumericalError("Lanczos did not converge: " + std::to_string(locked_vals.size()) +
                             " eigenpairs locked after " + std::to_string(o.max_restarts) +
                             " restarts, achieved residual " + std::to_string(worst));
    }
    std::vector<std::size_t> idx(locked_vals.size());
    for (std::size_t q = 0; q < idx.size(); ++q) idx[q] = q;
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return locked_vals[a] < locked_vals[b]; });
    for (auto q : idx) {
        res.eigenvalues.push_back(locked_vals[q]);
        res.residual = std::max(res.residual, locked_res[q]);
    }
    count_modes(res, so.zero_tol);
    return res;
}

/// Dense below `dense_limit`, Lanczos above. Op needs dim(), apply(x, y) and dense().
template <class Op>
SpectrumResult lowest_spectrum(const Op& op, const SpectrumOptions& so) {
    if (so.k < 1) throw InputError("lowest_spectrum: k must be >= 1");
    if (!(so.zero_tol > 0.0)) throw InputError("lowest_spectrum: zero_tol must be > 0");
    if (op.dim() <= so.dense_limit && !so.force_lanczos) return dense_spectrum(op.dense(), so.zero_tol);
    return lanczos_lowest(op, so);
}

/// Zero threshold relative to the norm bound N(N-1)/2 of H(m, N).
inline double zero_tolerance(int N) { return 1e-10 * std::max(1.0, N * (N - 1) / 2.0); }

}  // namespace laughlin::ed
