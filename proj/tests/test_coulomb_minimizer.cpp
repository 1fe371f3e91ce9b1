#include <catch_amalgamated.hpp>

#include <random>

#include "laughlin/coulomb_minimizer.hpp"

using namespace laughlin;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

double golden_min(const std::function<double(double)>& f, double a, double b) {
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - phi * (b - a), d = a + phi * (b - a);
    for (int i = 0; i < 200; ++i) {
        if (f(c) < f(d)) b = d;
        else a = c;
        c = b - phi * (b - a);
        d = a + phi * (b - a);
    }
    return 0.5 * (a + b);
}

MinimizeOptions opts(std::uint64_t seed = 1, int restarts = 2) {
    MinimizeOptions o;
    o.seed = seed;
    o.restarts = restarts;
    o.gradient_tol = 1e-8;
    return o;
}

}  // namespace

TEST_CASE("minimize option validation", "[minimizer]") {
    MinimizeOptions o;
    CHECK_THROWS_AS(minimize(0, {}, o), InputError);
    o.gradient_tol = 0.0;
    CHECK_THROWS_AS(minimize(3, {}, o), InputError);
    o = {};
    o.max_iters = 0;
    CHECK_THROWS_AS(minimize(3, {}, o), InputError);
    o = {};
    o.init = InitKind::explicit_points;
    o.initial = {Point(0, 0)};
    CHECK_THROWS_AS(minimize(3, {}, o), InputError);
}

TEST_CASE("single particle sits at the origin", "[minimizer]") {
    const auto r = minimize(1, {}, opts());
    REQUIRE(r.converged);
    CHECK(std::abs(r.points[0]) < 1e-8);
    CHECK_THAT(r.energy, WithinAbs(0.0, 1e-14));
}

TEST_CASE("pair separation matches the one-dimensional minimizer", "[minimizer]") {
    // E(s) = (pi/2)(2 (s/2)^2) - log s for an antipodal pair at separation s.
    const double s_star = golden_min([](double s) { return 0.25 * kPi * s * s - std::log(s); }, 0.1, 3.0);
    CHECK_THAT(s_star, WithinAbs(std::sqrt(2.0 / kPi), 1e-7));
    const auto r = minimize(2, {}, opts());
    REQUIRE(r.converged);
    CHECK_THAT(std::abs(r.points[0] - r.points[1]), WithinAbs(s_star, 1e-6));
    CHECK(std::abs(r.points[0] + r.points[1]) < 1e-6);
}

TEST_CASE("three particles form an equilateral triangle", "[minimizer]") {
    auto energy = [](double rho) {
        std::vector<Point> x;
        for (int k = 0; k < 3; ++k) x.push_back(std::polar(rho, 2.0 * kPi * k / 3.0));
        return cleaned_hamiltonian(x);
    };
    // Stationarity of the radial profile by bisection on a central difference.
    auto dE = [&](double rho) { return (energy(rho + 1e-6) - energy(rho - 1e-6)) / 2e-6; };
    double a = 0.2, b = 2.0;
    for (int i = 0; i < 100; ++i) (dE(0.5 * (a + b)) > 0 ? b : a) = 0.5 * (a + b);
    const double rho = 0.5 * (a + b);
    const auto r = minimize(3, {}, opts());
    REQUIRE(r.converged);
    Point c{};
    for (auto p : r.points) c += p / 3.0;
    CHECK(std::abs(c) < 1e-8);
    for (auto p : r.points) CHECK_THAT(std::abs(p), WithinAbs(rho, 1e-6));
    for (int i = 0; i < 3; ++i) CHECK_THAT(std::abs(r.points[i] - r.points[(i + 1) % 3]), WithinAbs(std::sqrt(3.0) * rho, 1e-6));
}

TEST_CASE("descent is monotone and deterministic", "[minimizer]") {
    MinimizeOptions o = opts(9, 3);
    o.gradient_tol = 1e-6;
    const auto a = minimize(20, {}, o, 1);
    const auto b = minimize(20, {}, o, 3);
    REQUIRE(a.converged);
    CHECK(a.points == b.points);
    CHECK(a.energy == b.energy);
    CHECK(a.energy <= a.initial_energy);
    for (std::size_t i = 1; i < a.energy_trace.size(); ++i)
        CHECK(a.energy_trace[i] <= a.energy_trace[i - 1] + 1e-12 * std::abs(a.energy_trace[i - 1]));
    CHECK(a.gradient_norm <= o.gradient_tol);
    CHECK_THAT(sup_norm(cleaned_gradient(a.points)), WithinAbs(a.gradient_norm, 1e-12));

    MinimizeOptions gd = o;
    gd.quasi_newton = false;
    gd.restarts = 1;
    gd.gradient_tol = 1e-4;
    const auto c = minimize(12, {}, gd);
    CHECK(c.converged);
    for (std::size_t i = 1; i < c.energy_trace.size(); ++i)
        CHECK(c.energy_trace[i] <= c.energy_trace[i - 1] + 1e-12 * std::abs(c.energy_trace[i - 1]));
}

TEST_CASE("minimizers are stable under small perturbations", "[minimizer]") {
    MinimizeOptions o = opts(4, 2);
    o.init = InitKind::lattice;
    const auto base = minimize(30, {}, o);
    std::mt19937_64 rng(8);
    std::normal_distribution<double> n(0.0, 1e-3);
    MinimizeOptions again = opts(5, 1);
    again.init = InitKind::explicit_points;
    again.initial = base.points;
    for (auto& p : again.initial) p += Point(n(rng), n(rng));
    const auto r = minimize(30, {}, again);
    CHECK_THAT(r.energy, WithinAbs(base.energy, 1e-4));
}

TEST_CASE("coincident starting points are separated", "[minimizer]") {
    MinimizeOptions o = opts(2, 1);
    o.init = InitKind::explicit_points;
    o.initial.assign(5, Point(0.3, 0.3));
    o.gradient_tol = 1e-6;
    const auto r = minimize(5, {}, o);
    CHECK(std::isfinite(r.energy));
    CHECK(r.converged);
}

TEST_CASE("a large phantom charge carves a hole", "[minimizer]") {
    const int m = 6;
    const auto W = SuperharmonicPotential::quasi_holes(QuasiHoleSet{{{Point(0, 0), m}}});
    MinimizeOptions o = opts(6, 2);
    o.gradient_tol = 1e-6;
    const auto r = minimize(40, W, o);
    REQUIRE(r.converged);
    for (auto p : r.points) CHECK(std::abs(p) > std::sqrt(m / kPi) * 0.95);
}

TEST_CASE("disk counts", "[minimizer]") {
    const std::vector<Point> cfg = {Point(0, 0), Point(1, 0), Point(0, 1), Point(3, 3)};
    const Point centers[] = {Point(10, 10), Point(0, 0), Point(1.5, 1.5)};
    const double radii[] = {1.0, 10.0};
    const auto rep = count_in_disks(cfg, centers, radii);
    REQUIRE(rep.entries.size() == 6);
    CHECK(rep.entries[0].count == 0);
    CHECK(rep.entries[1].count == 3);
    CHECK(rep.entries[2].count == 0);
    CHECK(rep.entries[4].count == 4);
    CHECK_THAT(rep.entries[1].excess, WithinAbs(3.0 / kPi - 1.0, 1e-15));
    CHECK_THAT(rep.g(1.0), WithinAbs(3.0 / kPi - 1.0, 1e-15));
    CHECK_THROWS_AS(rep.g(2.0), InputError);
    const double bad[] = {-1.0};
    CHECK_THROWS_AS(count_in_disks(cfg, centers, bad), InputError);
}

TEST_CASE("minimizer disk counts stay below the sanity ceiling", "[minimizer]") {
    MinimizeOptions o = opts(3, 2);
    o.gradient_tol = 1e-6;
    const auto r = minimize(40, {}, o);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    std::vector<Point> centers;
    for (int i = 0; i < 8; ++i) centers.emplace_back(u(rng), u(rng));
    const double radii[] = {2.0, 3.0, 4.0};
    for (const auto& e : count_in_disks(r.points, centers, radii).entries) CHECK(e.count <= 2.0 * e.bound);
}

TEST_CASE("region membership on a unit disk", "[audit]") {
    const Point src[] = {Point(0, 0)};
    const auto region = screening_region_auto(src, 0.025);
    CHECK(region_membership(region, Point(0.1, 0.0)) == Membership::inside);
    CHECK(region_membership(region, Point(0.9, 0.0)) == Membership::outside);
    CHECK(region_membership(region, Point(1.0 / std::sqrt(kPi), 0.0)) == Membership::inconclusive);
    CHECK(region_membership(region, Point(50.0, 0.0)) == Membership::outside);
    CHECK_THAT(penetration_depth_cells(region, Point(0, 0)), WithinAbs(1.0 / std::sqrt(kPi) / 0.025, 2.0));
}

TEST_CASE("exclusion audit on a minimizer and a planted violation", "[audit]") {
    MinimizeOptions o = opts(7, 2);
    o.gradient_tol = 1e-6;
    const auto r = minimize(20, {}, o);
    REQUIRE(r.converged);

    // Single-point regions are unit disks: no neighbour closer than pi^{-1/2}.
    for (std::size_t i = 0; i < r.points.size(); ++i)
        for (std::size_t j = i + 1; j < r.points.size(); ++j)
            CHECK(std::abs(r.points[i] - r.points[j]) > 1.0 / std::sqrt(kPi) - 2 * 0.025);

    AuditOptions a;
    a.random_per_size = 10;
    a.disk_stride = 1.5;
    const auto rep = audit_exclusion(r.points, a);
    CHECK(rep.subsets.size() >= 50);
    CHECK(rep.subsets_by_strategy.count("disk") == 1);
    CHECK(rep.subsets_by_strategy.count("random") == 1);
    CHECK(rep.violations.empty());

    auto planted = r.points;
    const auto cluster = plant_violation(planted, 0, 19, 4);
    AuditOptions only;
    only.sliding_disks = only.random_subsets = only.nearest_neighbors = false;
    only.explicit_subsets = {cluster};
    const auto bad = audit_exclusion(planted, only);
    REQUIRE(bad.violations.size() >= 1);
    CHECK(bad.violations[0].point == 19);
    CHECK(bad.violations[0].depth_cells > 1.0);

    AuditOptions nn;
    nn.sliding_disks = nn.random_subsets = false;
    CHECK_FALSE(audit_exclusion(planted, nn).violations.empty());

    only.explicit_subsets = {{0, 25}};
    CHECK_THROWS_AS(audit_exclusion(planted, only), InputError);
}
