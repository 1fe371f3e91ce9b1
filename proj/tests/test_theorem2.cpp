#include <catch_amalgamated.hpp>

#include "laughlin/theorem2.hpp"

using namespace laughlin;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("Nelder-Mead minimizes a shifted quadratic", "[theorem2]") {
    int calls = 0;
    const auto x = nelder_mead(
        [&](const std::vector<double>& v) {
            ++calls;
            return (v[0] - 1.5) * (v[0] - 1.5) + 3.0 * (v[1] + 0.5) * (v[1] + 0.5) + 2.0;
        },
        {0.0, 0.0}, 0.5, 400, 1e-14);
    CHECK_THAT(x[0], WithinAbs(1.5, 1e-4));
    CHECK_THAT(x[1], WithinAbs(-0.5, 1e-4));
    CHECK(calls <= 402);
}

TEST_CASE("low-density overlap", "[theorem2]") {
    const auto g = Grid2D::centered(0.0, 2.0, 40);
    std::vector<double> a(g.size(), 1.0), b(g.size(), 1.0);
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (std::abs(g.center(k)) < 1.0) a[k] = 0.0;
        if (std::abs(g.center(k) - Point(0.1, 0.0)) < 1.0) b[k] = 0.0;
    }
    CHECK(low_density_overlap(g, a, a, 1.0, 1.5) == 1.0);
    const double j = low_density_overlap(g, a, b, 1.0, 1.5);
    CHECK(j > 0.8);
    CHECK(j < 1.0);
    CHECK(low_density_overlap(g, std::vector<double>(g.size(), 1.0), std::vector<double>(g.size(), 1.0), 1.0, 1.5) == 1.0);
}

TEST_CASE("flocking energy of the quadratic trap matches the Laughlin moment identity", "[theorem2]") {
    // v = |y|^2, V = |x|^2 / N: E^flo = N / (2 pi cap) = ell (N - 1) + 2 + O(1/N) correction-free at lambda = 0
    // up to the discrete N^2 / (2 pi cap) / N.
    const PlasmaParams p{1.0, 2, 16};
    Theorem2Options o;
    o.grid_cells = 256;
    const auto pots = scaled_potentials(PotentialSpec::from_choices({"quadratic", {}}, {"zero", {}}, 0.0), p.N);
    const auto f = flocking_energy_for(p, pots, o);
    CHECK_THAT(f.energy, WithinRel(p.N / (2.0 * kPi * p.cap_density()), 1e-3));
}

TEST_CASE("radial increasing potential: no hole helps", "[theorem2]") {
    const PlasmaParams p{1.0, 2, 12};
    Theorem2Options o;
    o.grid_cells = 128;
    o.max_holes = 2;
    o.nm_evals = 0;
    o.search_chain = ChainConfig{2000, 200, 0.0, 3, 2, 1, 100};
    o.final_chain = ChainConfig{6000, 500, 0.0, 5, 2, 1, 100};
    const auto r = theorem2_harness(p, PotentialSpec::from_choices({"quadratic", {}}, {"zero", {}}, 0.0), o);
    CHECK(r.best.empty());
    // Exact Laughlin moment: <sum |z|^2> / N = (ell (N - 1) + 2) / B for the bare Laughlin state.
    CHECK_THAT(r.e_est.mean, WithinAbs(p.ell * (p.N - 1) + 2.0, 4.0 * r.e_est.std_error + 1e-9));
    CHECK(r.within_window);
    CHECK(r.search_log.size() == 1 + 2 * p.ell * 13);
}

TEST_CASE("Mexican hat: the hole sits at the potential maximum", "[theorem2][slow]") {
    const PlasmaParams p{1.0, 2, 32};
    const int m = 4;
    const double c = p.ell / p.B + 2.0 * m / (p.N * p.B);
    Theorem2Options o;
    o.grid_cells = 256;
    o.max_holes = 2;
    o.nm_evals = 12;
    o.search_chain = ChainConfig{2000, 300, 0.0, 7, 2, 1, 100};
    o.final_chain = ChainConfig{10000, 1000, 0.0, 7, 2, 1, 100};
    const auto r = theorem2_harness(p, PotentialSpec::from_choices({"mexican_hat", {{"c", c}}}, {"zero", {}}, 0.0), o);
    REQUIRE_FALSE(r.best.empty());
    for (const auto& h : r.best.holes) UNSCOPED_INFO("hole " << h.position << " m=" << h.multiplicity);
    int total = 0;
    for (const auto& h : r.best.holes) {
        CHECK(std::abs(h.position) < 0.25 * p.droplet_radius());
        total += h.multiplicity;
    }
    CHECK(total >= m - 1);
    DensityAccumulator acc(r.grid);
    run_chains(p, CorrelationFactor::quasi_holes(r.best), o.final_chain, 1, acc);
    const double overlap =
        low_density_overlap(r.grid, acc.result().values, r.flo.density.rho, p.cap_density(), std::sqrt(p.N * c), 4);
    CHECK(overlap >= 0.8);
    CHECK(r.ratio < 1.3);
}

TEST_CASE("harness option validation", "[theorem2]") {
    Theorem2Options o;
    o.max_holes = 9;
    CHECK_THROWS_AS(o.validate(), InputError);
    o = {};
    o.grid_margin = 0.9;
    CHECK_THROWS_AS(o.validate(), InputError);
}
