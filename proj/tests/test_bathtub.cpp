#include <catch_amalgamated.hpp>

#include <random>

#include "laughlin/bathtub.hpp"
#include "laughlin/model.hpp"
#include "projected_gradient.hpp"

using namespace laughlin;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("cell averages are exact for quadratics", "[bathtub]") {
    const auto g = Grid2D::centered(Point(0.3, -0.1), 2.0, 16);
    const auto avg = cell_average(g, [](Point x) { return norm2(x); });
    for (std::size_t k = 0; k < g.size(); ++k) CHECK_THAT(avg[k], WithinAbs(norm2(g.center(k)) + g.h * g.h / 6.0, 1e-13));
}

TEST_CASE("constant potential: energy is c N", "[bathtub]") {
    const auto g = Grid2D::centered(0.0, 3.0, 40);
    const std::vector<double> V(g.size(), 2.5);
    const auto r = bathtub_fill(g, V, 0.5, 7.3);
    CHECK_THAT(r.energy, WithinRel(2.5 * 7.3, 1e-13));
    CHECK_THAT(r.density.mass(), WithinRel(7.3, 1e-12));
    CHECK(r.fill_level == 2.5);
    // Ties fill in row-major order.
    CHECK(r.density.rho[0] == 0.5);
}

TEST_CASE("quadratic trap: uniform disk and closed-form energy", "[bathtub]") {
    const double N = 64.0, cap = 1.0 / (4.0 * kPi);
    const double R = std::sqrt(N / (kPi * cap));
    const auto g = Grid2D::centered(0.0, 1.25 * R, 256);
    const auto V = cell_average(g, [](Point x) { return norm2(x); });
    const auto r = bathtub_fill(g, V, cap, N);
    CHECK_THAT(r.energy, WithinRel(N * N / (2.0 * kPi * cap), 1e-3));
    CHECK_THAT(r.fill_level, WithinAbs(R * R, 2.0 * R * g.h));
    for (std::size_t k = 0; k < g.size(); ++k) {
        const double d = std::abs(g.center(k));
        if (d < R - g.h) CHECK(r.density.rho[k] == cap);
        if (d > R + g.h) CHECK(r.density.rho[k] == 0.0);
    }
}

TEST_CASE("double well: symmetric two-disk fill", "[bathtub]") {
    const auto g = Grid2D::centered(0.0, 2.5, 100);
    const auto dw = make_external_potential({"double_well", {{"d", 1.2}}});
    const auto V = cell_average(g, dw);
    const auto r = bathtub_fill(g, V, 1.0, 2.0);
    double left = 0.0, right = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) (g.center(k).real() < 0 ? left : right) += r.density.rho[k] * g.cell_area();
    CHECK_THAT(left, WithinAbs(1.0, g.cell_area()));
    CHECK_THAT(right, WithinAbs(1.0, g.cell_area()));
    // Swapping the wells (x -> -x) leaves the energy unchanged.
    std::vector<double> swapped(g.size());
    for (int iy = 0; iy < g.ny; ++iy)
        for (int ix = 0; ix < g.nx; ++ix) swapped[g.index(ix, iy)] = V[g.index(g.nx - 1 - ix, iy)];
    CHECK_THAT(bathtub_fill(g, swapped, 1.0, 2.0).energy, WithinRel(r.energy, 1e-12));
}

TEST_CASE("bathtub energy is invariant under permutation of tied cells", "[bathtub]") {
    const auto g = Grid2D::centered(0.0, 2.0, 30);
    std::vector<double> V(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) V[k] = std::floor(2.0 * norm2(g.center(k)));
    const auto a = bathtub_fill(g, V, 1.0, 3.7);
    std::mt19937_64 rng(4);
    auto perm = V;
    std::shuffle(perm.begin(), perm.end(), rng);
    const auto b = bathtub_fill(g, perm, 1.0, 3.7);
    CHECK_THAT(b.energy, WithinRel(a.energy, 1e-12));
    CHECK(b.fill_level == a.fill_level);
    // Pointwise in V: cells below the fill level are full, above are empty.
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (V[k] < a.fill_level) CHECK(a.density.rho[k] == 1.0);
        if (V[k] > a.fill_level) CHECK(a.density.rho[k] == 0.0);
    }
}

TEST_CASE("bathtub input errors", "[bathtub]") {
    const auto g = Grid2D::centered(0.0, 1.0, 10);
    const std::vector<double> V(g.size(), 0.0);
    CHECK_THROWS_WITH(bathtub_fill(g, V, 1.0, 5.0), Catch::Matchers::ContainsSubstring("capacity"));
    CHECK_THROWS_AS(bathtub_fill(g, V, 0.0, 1.0), InputError);
    CHECK_THROWS_AS(bathtub_fill(g, V, 1.0, -1.0), InputError);
    CHECK_THROWS_AS(bathtub_fill(g, std::vector<double>(3, 0.0), 1.0, 1.0), InputError);
    auto bad = V;
    bad[4] = std::nan("");
    CHECK_THROWS_AS(bathtub_fill(g, bad, 1.0, 1.0), InputError);
}

TEST_CASE("flocking at lambda = 0 is the bathtub fill", "[flocking]") {
    const auto g = Grid2D::centered(0.0, 3.0, 64);
    const auto V = cell_average(g, [](Point x) { return norm2(x) + 0.3 * x.real(); });
    const auto W = [](Point d) { return std::exp(-norm2(d)); };
    const auto b = bathtub_fill(g, V, 0.8, 5.0);
    const auto f = flocking_solve(g, V, W, 0.0, 0.8, 5.0);
    CHECK(f.converged);
    CHECK_THAT(f.energy, WithinAbs(b.energy, 1e-12));
    CHECK(f.density.rho == b.density.rho);
}

TEST_CASE("flocking improves on the lambda = 0 profile", "[flocking]") {
    const auto g = Grid2D::centered(0.0, 3.0, 48);
    const auto V = cell_average(g, [](Point x) { return norm2(x); });
    const auto W = [](Point d) { return std::exp(-norm2(d) / (2.0 * 0.25)); };
    const double lambda = 0.1, cap = 1.0, N = 6.0;
    const auto f = flocking_solve(g, V, W, lambda, cap, N);
    CHECK(f.converged);
    CHECK(f.gap < 1e-8);
    CHECK(f.monotone);
    const auto b = bathtub_fill(g, V, cap, N);
    const PairKernel K(g, W);
    CHECK(f.energy <= flocking_energy(g, V, K, lambda, b.density.rho));
    CHECK_THAT(f.density.mass(), WithinRel(N, 1e-6));
    for (double r : f.density.rho) CHECK((r >= -1e-12 && r <= cap + 1e-12));
    for (std::size_t i = 1; i < f.energy_trace.size(); ++i)
        CHECK(f.energy_trace[i] <= f.energy_trace[i - 1] + 1e-12 * std::abs(f.energy_trace[i - 1]));
}

TEST_CASE("flocking matches a projected-gradient oracle on a small grid", "[flocking]") {
    const auto g = Grid2D::centered(0.0, 1.0, 20);
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> V(g.size());
    for (auto& v : V) v = u(rng);
    const auto W = [](Point d) { return std::exp(-norm2(d) / (2.0 * 0.09)); };
    const double lambda = 0.05, cap = 1.0, N = 1.5;
    const auto oracle = oracle::projected_gradient(g, V, W, lambda, cap, N, 20000);
    const auto f = flocking_solve(g, V, W, lambda, cap, N);
    CHECK(f.converged);
    CHECK_THAT(f.energy, WithinAbs(oracle.energy, 1e-6));
    CHECK(f.energy <= oracle.energy + 1e-12);
}

TEST_CASE("FFT and direct pair kernels agree", "[flocking]") {
    const auto g = Grid2D::centered(Point(0.2, 0.1), 2.0, 70);
    const auto W = [](Point d) { return 1.0 / (1.0 + norm2(d)); };
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> rho(g.size());
    for (auto& r : rho) r = u(rng);
    const PairKernel direct(g, W, g.size());
    const PairKernel fft(g, W, 0);
    const auto a = direct.apply(rho), b = fft.apply(rho);
    for (std::size_t k = 0; k < g.size(); ++k) CHECK_THAT(b[k], WithinAbs(a[k], 1e-9 * std::abs(a[k]) + 1e-12));
    CHECK(direct.entry(5, 300) == fft.entry(5, 300));
}
