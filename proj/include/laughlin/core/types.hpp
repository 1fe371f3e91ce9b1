#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace laughlin {

/// A planar point, identified with a complex number z = x + iy.
using Point = std::complex<double>;

/// Malformed or out-of-contract input. Maps to CLI exit code 2.
class InputError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A numerical procedure failed to reach its tolerance. Maps to CLI exit code 3.
class NumericalError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

inline constexpr double kPi = std::numbers::pi;

inline bool is_finite(Point p) { return std::isfinite(p.real()) && std::isfinite(p.imag()); }

inline double norm2(Point p) { return std::norm(p); }

enum class Statistics { bosonic, fermionic };

inline const char* to_string(Statistics s) { return s == Statistics::bosonic ? "bosonic" : "fermionic"; }

/// Field strength B, Jastrow exponent ell and particle number N.
struct PlasmaParams {
    double B = 1.0;
    int ell = 1;
    int N = 1;

    void validate() const {
        if (!(B > 0.0) || !std::isfinite(B)) throw InputError("PlasmaParams: B must be positive and finite");
        if (ell < 1) throw InputError("PlasmaParams: ell must be >= 1");
        if (N < 1) throw InputError("PlasmaParams: N must be >= 1");
    }

    Statistics statistics() const { return ell % 2 == 1 ? Statistics::fermionic : Statistics::bosonic; }

    /// Ceiling density B / (2 pi ell).
    double cap_density() const { return B / (2.0 * kPi * ell); }

    /// Radius sqrt(2 ell N / B) of the disk carrying the bulk of the Laughlin density.
    double droplet_radius() const { return std::sqrt(2.0 * ell * N / B); }

    /// Radius of the disk holding one particle at the cap density.
    double mean_spacing() const { return std::sqrt(2.0 * kPi * ell / B) / std::sqrt(kPi); }

    double magnetic_length() const { return std::sqrt(2.0 / B); }
};

struct QuasiHole {
    Point position{};
    int multiplicity = 1;
};

/// Zeros a_k of multiplicity m_k of the one-body factor f(z) = prod_k (z - a_k)^{m_k}.
struct QuasiHoleSet {
    std::vector<QuasiHole> holes;

    void validate() const {
        for (const auto& h : holes) {
            if (h.multiplicity < 1) throw InputError("QuasiHoleSet: multiplicities must be >= 1");
            if (!is_finite(h.position)) throw InputError("QuasiHoleSet: hole positions must be finite");
        }
    }

    int total_degree() const {
        int d = 0;
        for (const auto& h : holes) d += h.multiplicity;
        return d;
    }

    bool empty() const { return holes.empty(); }
};

inline void require_finite(std::span<const Point> pts, const char* what) {
    for (const auto& p : pts)
        if (!is_finite(p)) throw InputError(std::string(what) + ": non-finite coordinate");
}

/// Map between physical (B, ell) coordinates and the cleaned units in which the
/// neutral background has density one: x = z * sqrt(B / (2 pi ell)).
inline double cleaned_length_scale(const PlasmaParams& p) { return std::sqrt(p.B / (2.0 * kPi * p.ell)); }

inline std::vector<Point> to_cleaned_units(std::span<const Point> z, const PlasmaParams& p) {
    const double s = cleaned_length_scale(p);
    std::vector<Point> out(z.begin(), z.end());
    for (auto& x : out) x *= s;
    return out;
}

inline std::vector<Point> from_cleaned_units(std::span<const Point> x, const PlasmaParams& p) {
    const double s = 1.0 / cleaned_length_scale(p);
    std::vector<Point> out(x.begin(), x.end());
    for (auto& z : out) z *= s;
    return out;
}

}  // namespace laughlin
