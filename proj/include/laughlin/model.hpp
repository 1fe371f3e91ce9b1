#pragma once

// State family, effective plasma Hamiltonians and potential scalings.

#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "laughlin/core/types.hpp"

namespace laughlin {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

class SingularInputError : public InputError {
  public:
    using InputError::InputError;
};

// ---------------------------------------------------------------------------
// Correlation factor F (analytic, symmetric); only log|F| is ever needed.
// ---------------------------------------------------------------------------

struct NoCorrelation {};

/// F = prod_j prod_k (z_j - a_k)^{m_k}.
struct QuasiHoleProduct {
    QuasiHoleSet holes;
};

/// Arbitrary log|F| evaluator. The caller asserts that -2 log|F| is
/// superharmonic in each variable and that the evaluator returns -inf exactly
/// at the zeros of F.
struct CustomLogModulus {
    std::function<double(std::span<const Point>)> log_modulus;
};

class CorrelationFactor {
  public:
    using Variant = std::variant<NoCorrelation, QuasiHoleProduct, CustomLogModulus>;

    CorrelationFactor() = default;
    CorrelationFactor(NoCorrelation v) : v_(v) {}
    CorrelationFactor(QuasiHoleProduct v) : v_(std::move(v)) { std::get<QuasiHoleProduct>(v_).holes.validate(); }
    CorrelationFactor(CustomLogModulus v) : v_(std::move(v)) {
        if (!std::get<CustomLogModulus>(v_).log_modulus) throw InputError("CorrelationFactor: empty evaluator");
    }

    static CorrelationFactor none() { return {}; }
    static CorrelationFactor quasi_holes(QuasiHoleSet h) { return CorrelationFactor(QuasiHoleProduct{std::move(h)}); }

    const Variant& variant() const { return v_; }
    bool is_trivial() const { return std::holds_alternative<NoCorrelation>(v_); }
    /// True when log|F| splits into a sum of one-body terms.
    bool is_one_body() const { return !std::holds_alternative<CustomLogModulus>(v_); }

    const QuasiHoleSet* quasi_holes_or_null() const {
        if (auto* q = std::get_if<QuasiHoleProduct>(&v_)) return &q->holes;
        return nullptr;
    }

    /// log|F(z_1..z_N)|.
    double log_modulus(std::span<const Point> z) const {
        return std::visit(
            [&](const auto& f) -> double {
                using T = std::decay_t<decltype(f)>;
                if constexpr (std::is_same_v<T, NoCorrelation>) {
                    return 0.0;
                } else if constexpr (std::is_same_v<T, QuasiHoleProduct>) {
                    double s = 0.0;
                    for (const auto& zj : z) s += one_body(f.holes, zj);
                    return s;
                } else {
                    return f.log_modulus(z);
                }
            },
            v_);
    }

    /// log|F| after moving particle j to `to`, minus log|F| before.
    double log_modulus_change(std::span<const Point> z, std::size_t j, Point to) const {
        return std::visit(
            [&](const auto& f) -> double {
                using T = std::decay_t<decltype(f)>;
                if constexpr (std::is_same_v<T, NoCorrelation>) {
                    return 0.0;
                } else if constexpr (std::is_same_v<T, QuasiHoleProduct>) {
                    return one_body(f.holes, to) - one_body(f.holes, z[j]);
                } else {
                    std::vector<Point> moved(z.begin(), z.end());
                    moved[j] = to;
                    const double after = f.log_modulus(moved);
                    const double before = f.log_modulus(z);
                    if (after == before) return 0.0;
                    return after - before;
                }
            },
            v_);
    }

    static double one_body(const QuasiHoleSet& holes, Point z) {
        double s = 0.0;
        for (const auto& h : holes.holes) s += h.multiplicity * std::log(std::abs(z - h.position));
        return s;
    }

  private:
    Variant v_{};
};

/// log |Psi_F|^2 up to normalization, i.e. -H_F:
///   -(B/2) sum |z_j|^2 + 2 ell sum_{i<j} log|z_i - z_j| + 2 log|F|.
/// Returns -inf when two points coincide or F vanishes.
inline double log_plasma_weight(std::span<const Point> z, const PlasmaParams& params, const CorrelationFactor& corr) {
    params.validate();
    if (static_cast<int>(z.size()) != params.N) throw InputError("log_plasma_weight: configuration length != N");
    require_finite(z, "log_plasma_weight");
    double trap = 0.0;
    for (const auto& p : z) trap += norm2(p);
    double jastrow = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i)
        for (std::size_t j = i + 1; j < z.size(); ++j) {
            const double d2 = norm2(z[i] - z[j]);
            if (d2 == 0.0) return -kInf;
            jastrow += 0.5 * std::log(d2);
        }
    const double logF = corr.log_modulus(z);
    if (logF == -kInf) return -kInf;
    return -0.5 * params.B * trap + 2.0 * params.ell * jastrow + 2.0 * logF;
}

// ---------------------------------------------------------------------------
// Cleaned Hamilton function in units where the background density is one.
// ---------------------------------------------------------------------------

struct PhantomCharge {
    Point position{};
    double charge = 1.0;
};

/// A potential W(x_1..x_N) that is superharmonic in each variable.
class SuperharmonicPotential {
  public:
    struct Zero {};
    /// W = -sum_j sum_k q_k log|x_j - a_k| with q_k >= 0.
    struct Phantoms {
        std::vector<PhantomCharge> charges;
    };
    /// Caller-supplied value and gradient; superharmonicity is asserted, not checked.
    struct Custom {
        std::function<double(std::span<const Point>)> value;
        std::function<std::vector<Point>(std::span<const Point>)> gradient;
    };

    SuperharmonicPotential() = default;
    SuperharmonicPotential(Phantoms p) : v_(std::move(p)) {
        for (const auto& c : std::get<Phantoms>(v_).charges)
            if (!(c.charge >= 0.0) || !is_finite(c.position)) throw InputError("phantom charges must be finite and >= 0");
    }
    SuperharmonicPotential(Custom c) : v_(std::move(c)) {}

    static SuperharmonicPotential zero() { return {}; }

    /// W = -2 log|f(x_j)| summed over particles, for f with the given zeros.
    static SuperharmonicPotential quasi_holes(const QuasiHoleSet& holes) {
        holes.validate();
        Phantoms p;
        for (const auto& h : holes.holes) p.charges.push_back({h.position, 2.0 * h.multiplicity});
        return SuperharmonicPotential(std::move(p));
    }

    bool is_zero() const { return std::holds_alternative<Zero>(v_); }
    const Phantoms* phantoms_or_null() const { return std::get_if<Phantoms>(&v_); }

    double value(std::span<const Point> x) const {
        if (std::holds_alternative<Zero>(v_)) return 0.0;
        if (auto* p = std::get_if<Phantoms>(&v_)) {
            double s = 0.0;
            for (const auto& xj : x)
                for (const auto& c : p->charges) {
                    const double d2 = norm2(xj - c.position);
                    if (d2 == 0.0) {
                        if (c.charge > 0.0) return kInf;
                        continue;
                    }
                    s -= 0.5 * c.charge * std::log(d2);
                }
            return s;
        }
        return std::get<Custom>(v_).value(x);
    }

    std::vector<Point> gradient(std::span<const Point> x) const {
        std::vector<Point> g(x.size(), Point{});
        if (std::holds_alternative<Zero>(v_)) return g;
        if (auto* p = std::get_if<Phantoms>(&v_)) {
            for (std::size_t j = 0; j < x.size(); ++j)
                for (const auto& c : p->charges) {
                    const Point d = x[j] - c.position;
                    const double d2 = norm2(d);
                    if (d2 == 0.0) throw SingularInputError("gradient evaluated on a phantom charge");
                    g[j] -= c.charge * d / d2;
                }
            return g;
        }
        const auto& c = std::get<Custom>(v_);
        if (!c.gradient) throw InputError("custom superharmonic potential has no gradient");
        g = c.gradient(x);
        if (g.size() != x.size()) throw InputError("custom gradient has wrong length");
        return g;
    }

  private:
    std::variant<Zero, Phantoms, Custom> v_{};
};

/// (pi/2) sum |x_j|^2 - sum_{i<j} log|x_i - x_j| + W. +inf at coincidences.
inline double cleaned_hamiltonian(std::span<const Point> x, const SuperharmonicPotential& W = {}) {
    require_finite(x, "cleaned_hamiltonian");
    double trap = 0.0;
    for (const auto& p : x) trap += norm2(p);
    double pair = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = i + 1; j < x.size(); ++j) {
            const double d2 = norm2(x[i] - x[j]);
            if (d2 == 0.0) return kInf;
            pair -= 0.5 * std::log(d2);
        }
    return 0.5 * kPi * trap + pair + W.value(x);
}

/// Component j: pi x_j - sum_{i != j} (x_j - x_i)/|x_j - x_i|^2 + grad_j W.
inline std::vector<Point> cleaned_gradient(std::span<const Point> x, const SuperharmonicPotential& W = {}) {
    require_finite(x, "cleaned_gradient");
    std::vector<Point> g = W.gradient(x);
    for (std::size_t j = 0; j < x.size(); ++j) g[j] += kPi * x[j];
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = i + 1; j < x.size(); ++j) {
            const Point d = x[j] - x[i];
            const double d2 = norm2(d);
            if (d2 == 0.0) throw SingularInputError("cleaned_gradient: coincident points");
            const Point f = d / d2;
            g[j] -= f;
            g[i] += f;
        }
    return g;
}

// ---------------------------------------------------------------------------
// External and pair potentials, selected by name.
// ---------------------------------------------------------------------------

/// A named potential with numeric parameters, as it appears in configuration files.
struct PotentialChoice {
    std::string name = "zero";
    std::map<std::string, double> params;

    double param(const std::string& key, double fallback) const {
        auto it = params.find(key);
        return it == params.end() ? fallback : it->second;
    }
};

using ExternalPotential = std::function<double(Point)>;
/// Radial pair potential as a function of distance.
using RadialPotential = std::function<double(double)>;

/// Known names: zero, constant{c}, quadratic{a}, mexican_hat{c}, double_well{d}.
inline ExternalPotential make_external_potential(const PotentialChoice& c) {
    if (c.name == "zero") return [](Point) { return 0.0; };
    if (c.name == "constant") {
        const double v = c.param("c", 1.0);
        return [v](Point) { return v; };
    }
    if (c.name == "quadratic") {
        const double a = c.param("a", 1.0);
        return [a](Point x) { return a * norm2(x); };
    }
    if (c.name == "mexican_hat") {
        // (|x|^2 - c)^2: a non-degenerate maximum at the origin, minimum on a ring.
        const double r2 = c.param("c", 1.0);
        return [r2](Point x) {
            const double t = norm2(x) - r2;
            return t * t;
        };
    }
    if (c.name == "double_well") {
        // (x^2 - d^2)^2 + y^2: equal minima at (+-d, 0).
        const double d = c.param("d", 1.0);
        return [d](Point x) {
            const double t = x.real() * x.real() - d * d;
            return t * t + x.imag() * x.imag();
        };
    }
    throw InputError("unknown external potential '" + c.name + "'");
}

/// Known names: zero, constant{c}, gaussian{amplitude, width}.
inline RadialPotential make_pair_potential(const PotentialChoice& c) {
    if (c.name == "zero") return [](double) { return 0.0; };
    if (c.name == "constant") {
        const double v = c.param("c", 1.0);
        return [v](double) { return v; };
    }
    if (c.name == "gaussian") {
        const double a = c.param("amplitude", 1.0);
        const double s = c.param("width", 1.0);
        if (!(s > 0.0)) throw InputError("gaussian pair potential: width must be positive");
        return [a, s](double r) { return a * std::exp(-r * r / (2.0 * s * s)); };
    }
    if (c.name == "coulomb") throw InputError("coulomb pair potential is not supported (non-smooth at the origin)");
    throw InputError("unknown pair potential '" + c.name + "'");
}

/// Unscaled external potential v, radial pair interaction w and coupling lambda.
struct PotentialSpec {
    ExternalPotential v = [](Point) { return 0.0; };
    RadialPotential w = [](double) { return 0.0; };
    double lambda = 0.0;

    static PotentialSpec from_choices(const PotentialChoice& v, const PotentialChoice& w, double lambda) {
        return {make_external_potential(v), make_pair_potential(w), lambda};
    }
};

/// V(x) = v(x / sqrt N) and W(x) = w(|x| / sqrt N) / N, with the same lambda.
struct ScaledPotentials {
    ExternalPotential V;
    std::function<double(Point)> W;
    double lambda = 0.0;
};

inline ScaledPotentials scaled_potentials(const PotentialSpec& spec, int N) {
    if (N < 1) throw InputError("scaled_potentials: N must be >= 1");
    const double s = 1.0 / std::sqrt(static_cast<double>(N));
    const double inv_n = 1.0 / N;
    ScaledPotentials out;
    out.V = [v = spec.v, s](Point x) { return v(x * s); };
    out.W = [w = spec.w, s, inv_n](Point d) { return inv_n * w(std::abs(d) * s); };
    out.lambda = spec.lambda;
    return out;
}

}  // namespace laughlin
