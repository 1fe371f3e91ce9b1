#include <catch_amalgamated.hpp>

#include <algorithm>
#include <random>

#include "laughlin/plasma_sampler.hpp"

using namespace laughlin;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

struct Nothing {
    void observe(std::span<const Point>) {}
    void merge(const Nothing&) {}
};

ChainConfig chain(long sweeps, long burn, std::uint64_t seed, int chains = 1, int thin = 1) {
    ChainConfig c;
    c.sweeps = sweeps;
    c.burn_in = burn;
    c.seed = seed;
    c.chains = chains;
    c.thin = thin;
    return c;
}

// Exact one-body density of the filled lowest Landau level (ell = 1):
// (B / 2 pi) e^{-B r^2 / 2} sum_{m < N} (B r^2 / 2)^m / m!.
double filled_lll_density(double B, int N, double r) {
    const double t = 0.5 * B * r * r;
    double term = 1.0, sum = 0.0;
    for (int m = 0; m < N; ++m) {
        sum += term;
        term *= t / (m + 1);
    }
    return B / (2.0 * kPi) * std::exp(-t) * sum;
}

}  // namespace

TEST_CASE("chain config validation", "[sampler]") {
    ChainConfig c = chain(10, 10, 1);
    CHECK_THROWS_AS(c.validate(), InputError);
    c = chain(10, 2, 1);
    c.chains = 0;
    CHECK_THROWS_AS(c.validate(), InputError);
}

TEST_CASE("identical seed gives an identical sample stream", "[sampler]") {
    PlasmaParams p{1.0, 2, 6};
    QuasiHoleSet holes{{{Point(0.5, 0.0), 1}}};
    SampleSet a, b, c;
    run_chains(p, CorrelationFactor::quasi_holes(holes), chain(200, 20, 42, 3), 1, a);
    run_chains(p, CorrelationFactor::quasi_holes(holes), chain(200, 20, 42, 3), 3, b);
    run_chains(p, CorrelationFactor::quasi_holes(holes), chain(200, 20, 43, 3), 1, c);
    REQUIRE(a.size() == b.size());
    CHECK(a.configs == b.configs);
    CHECK(a.configs != c.configs);
}

TEST_CASE("Metropolis increment equals the log-weight difference", "[sampler][property]") {
    PlasmaParams p{1.3, 3, 9};
    QuasiHoleSet holes{{{Point(-0.4, 0.9), 2}}};
    const auto corr = CorrelationFactor::quasi_holes(holes);
    MetropolisChain mc(p, corr, 1.0, 5);
    for (int s = 0; s < 5; ++s) mc.sweep();
    std::vector<Point> x(mc.points().begin(), mc.points().end());
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g(0.0, 1.5);
    for (int t = 0; t < 100; ++t) {
        const int j = t % p.N;
        const Point to = x[j] + Point(g(rng), g(rng));
        auto y = x;
        y[j] = to;
        const double direct = log_plasma_weight(y, p, corr) - log_plasma_weight(x, p, corr);
        CHECK_THAT(mc.log_weight_change(j, x[j], to), WithinAbs(direct, 1e-9 * std::max(1.0, std::abs(direct))));
    }
}

TEST_CASE("single particle samples the Gaussian one-body density", "[sampler]") {
    // N = 1: radial CDF 1 - exp(-B r^2 / 2).
    PlasmaParams p{1.0, 3, 1};
    SampleSet s;
    run_chains(p, {}, chain(100000 * 3 + 1000, 1000, 17, 1, 3), 1, s);
    REQUIRE(s.size() == 100000);
    std::vector<double> r;
    for (const auto& c : s.configs) r.push_back(std::abs(c[0]));
    std::sort(r.begin(), r.end());
    double ks = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        const double F = 1.0 - std::exp(-0.5 * p.B * r[i] * r[i]);
        ks = std::max({ks, std::abs(F - double(i) / r.size()), std::abs(F - double(i + 1) / r.size())});
    }
    CHECK(ks < 0.02);

    const Grid2D g = Grid2D::centered(Point{}, 8.0, 64);
    const auto d = estimate_density(s, g);
    CHECK_THAT(d.integral(), WithinAbs(1.0, 0.01));
}

TEST_CASE("recommended proposal scale has acceptance in [0.2, 0.6]", "[sampler]") {
    for (int ell : {1, 2, 3}) {
        PlasmaParams p{1.0, ell, 64};
        Nothing n;
        const auto st = run_chains(p, {}, chain(1200, 200, 3), 1, n);
        INFO("ell = " << ell << " acceptance " << st.mean_acceptance());
        CHECK(st.mean_acceptance() >= 0.2);
        CHECK(st.mean_acceptance() <= 0.6);
    }
}

TEST_CASE("zero acceptance raises a diagnostic", "[sampler]") {
    PlasmaParams p{1.0, 3, 30};
    ChainConfig c = chain(500, 100, 1);
    c.proposal_scale = 1e8;
    c.diagnostic_window = 20;
    Nothing n;
    CHECK_THROWS_AS(run_chains(p, {}, c, 1, n), NumericalError);
}

TEST_CASE("filled Landau level density matches the exact finite-N profile", "[sampler]") {
    PlasmaParams p{1.0, 1, 16};
    const Grid2D g = Grid2D::centered(Point{}, 9.0, 60);
    DensityAccumulator acc(g);
    run_chains(p, {}, chain(20000, 1000, 99, 2), 1, acc);
    const auto d = acc.result();
    CHECK_THAT(d.integral(), WithinAbs(16.0, 0.05));
    // Compare ring averages with the exact density.
    for (double r : {0.5, 1.5, 2.5, 3.5, 4.5, 5.5, 6.5}) {
        double mc = 0.0, ex = 0.0, area = 0.0;
        for (int iy = 0; iy < g.ny; ++iy)
            for (int ix = 0; ix < g.nx; ++ix) {
                const double rr = std::abs(g.center(ix, iy));
                if (std::abs(rr - r) > 0.5) continue;
                mc += d.at(ix, iy);
                ex += filled_lll_density(p.B, p.N, rr);
                area += 1.0;
            }
        INFO("r = " << r);
        CHECK_THAT(mc / area, WithinAbs(ex / area, 0.03 * p.cap_density() + 0.02 * ex / area));
    }
}

TEST_CASE("two-particle one-body density matches brute-force quadrature", "[sampler]") {
    // N = 2, ell = 2 with a quasi-hole of multiplicity 1 at the origin.
    PlasmaParams p{1.0, 2, 2};
    QuasiHoleSet holes{{{Point(0, 0), 1}}};
    const auto corr = CorrelationFactor::quasi_holes(holes);

    // Quadrature oracle on a polar-symmetric problem: radial density rho(r).
    const double L = 7.0;
    const int n = 140;
    const double hq = 2 * L / n;
    auto weight = [&](Point a, Point b) { return std::exp(log_plasma_weight(std::vector<Point>{a, b}, p, corr)); };
    std::vector<double> radii{0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5};
    std::vector<double> marg(radii.size(), 0.0);
    double Z = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const Point y(-L + (i + 0.5) * hq, -L + (j + 0.5) * hq);
            for (std::size_t k = 0; k < radii.size(); ++k) marg[k] += weight(Point(radii[k], 0), y);
        }
    // Z by radial quadrature in the first particle; rho(x) = 2 int w(x, y) dy / Z.
    const int nr = 400;
    const double rmax = 8.0;
    for (int i = 0; i < nr; ++i) {
        const double r = (i + 0.5) * rmax / nr;
        double inner = 0.0;
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) inner += weight(Point(r, 0), Point(-L + (a + 0.5) * hq, -L + (b + 0.5) * hq));
        Z += 2 * kPi * r * (rmax / nr) * inner * hq * hq;
    }

    const Grid2D g = Grid2D::centered(Point{}, 6.0, 48);
    DensityAccumulator acc(g);
    run_chains(p, corr, chain(200000, 1000, 5, 2), 1, acc);
    const auto d = acc.result();
    for (std::size_t k = 0; k < radii.size(); ++k) {
        const double exact = 2.0 * marg[k] * hq * hq / Z;
        double mc = 0.0, cnt = 0.0;
        for (int iy = 0; iy < g.ny; ++iy)
            for (int ix = 0; ix < g.nx; ++ix)
                if (std::abs(std::abs(g.center(ix, iy)) - radii[k]) < 0.125) {
                    mc += d.at(ix, iy);
                    cnt += 1.0;
                }
        INFO("r = " << radii[k] << " exact " << exact << " mc " << mc / cnt);
        CHECK_THAT(mc / cnt, WithinAbs(exact, 0.06 * exact + 0.002));
    }
}

TEST_CASE("mean square radius obeys the angular momentum identity", "[sampler]") {
    // Any LLL state of total angular momentum L has <sum |z|^2> = 2 (L + N) / B.
    for (int m : {0, 2}) {
        PlasmaParams p{1.0, 2, 16};
        QuasiHoleSet holes;
        if (m) holes.holes.push_back({Point(0, 0), m});
        PotentialSpec spec = PotentialSpec::from_choices({"quadratic", {}}, {"zero", {}}, 0.0);
        TrialEnergyAccumulator e(scaled_potentials(spec, p.N));
        run_chains(p, CorrelationFactor::quasi_holes(holes), chain(40000, 2000, 21, 2), 1, e);
        const auto est = e.result();
        const double L = p.ell * p.N * (p.N - 1) / 2.0 + m * p.N;
        const double expected = 2.0 * (L + p.N) / p.B / p.N;  // V = |x|^2 / N
        INFO("m = " << m << " est " << est.mean << " +- " << est.std_error);
        CHECK(std::abs(est.mean - expected) < 4.0 * est.std_error + 1e-3 * expected);
    }
}

TEST_CASE("trial energy agrees with density and pair-histogram integrals", "[sampler]") {
    PlasmaParams p{1.0, 2, 16};
    const double lambda = 0.1;
    PotentialSpec spec =
        PotentialSpec::from_choices({"quadratic", {}}, {"gaussian", {{"amplitude", 1.0}, {"width", 0.5}}}, lambda);
    const auto pots = scaled_potentials(spec, p.N);

    const Grid2D g = Grid2D::centered(Point{}, 14.0, 280);
    DensityAccumulator dens(g);
    TrialEnergyAccumulator energy(pots);
    // Pair-distance histogram, an independent route to the interaction energy.
    struct PairHistogram {
        double dr = 0.02;
        std::vector<double> counts = std::vector<double>(1500, 0.0);
        double samples = 0;
        void observe(std::span<const Point> x) {
            for (std::size_t i = 0; i < x.size(); ++i)
                for (std::size_t j = i + 1; j < x.size(); ++j) {
                    const auto b = static_cast<std::size_t>(std::abs(x[i] - x[j]) / dr);
                    if (b < counts.size()) counts[b] += 1.0;
                }
            samples += 1;
        }
        void merge(const PairHistogram& o) {
            for (std::size_t k = 0; k < counts.size(); ++k) counts[k] += o.counts[k];
            samples += o.samples;
        }
    } pairs;
    // Separate accumulator for the external part alone.
    PotentialSpec vonly = PotentialSpec::from_choices({"quadratic", {}}, {"zero", {}}, 0.0);
    TrialEnergyAccumulator external(scaled_potentials(vonly, p.N));
    run_chains(p, {}, chain(30000, 2000, 8, 2), 1, dens, energy, pairs, external);

    const auto d = dens.result();
    double vint = 0.0;
    for (std::size_t k = 0; k < d.values.size(); ++k) vint += pots.V(g.center(k)) * d.values[k] * g.cell_area();
    const auto ext = external.result();
    INFO("external " << ext.mean << " +- " << ext.std_error << " density integral " << vint);
    CHECK(std::abs(ext.mean - vint) < 3.0 * ext.std_error + 2e-3 * ext.mean);

    double wint = 0.0;
    for (std::size_t b = 0; b < pairs.counts.size(); ++b)
        wint += pots.W(Point((b + 0.5) * pairs.dr, 0)) * pairs.counts[b] / pairs.samples;
    const auto tot = energy.result();
    INFO("total " << tot.mean << " +- " << tot.std_error << " oracle " << ext.mean + lambda * wint);
    CHECK(std::abs(tot.mean - (ext.mean + lambda * wint)) < 3.0 * tot.std_error + 1e-4 * tot.mean);
}

TEST_CASE("trial energy edge cases", "[sampler]") {
    PlasmaParams p{1.0, 2, 5};
    PotentialSpec spec = PotentialSpec::from_choices({"constant", {{"c", 2.5}}}, {"zero", {}}, 0.0);
    SampleSet s;
    run_chains(p, {}, chain(300, 50, 2), 1, s);
    const auto e = trial_energy(s, scaled_potentials(spec, p.N));
    CHECK(e.mean == 2.5 * p.N);
    CHECK(e.std_error == 0.0);
    CHECK_THROWS_AS(trial_energy(s, scaled_potentials(spec, p.N), 5), InputError);
    SampleSet few;
    run_chains(p, {}, chain(12, 5, 2), 1, few);
    CHECK_THROWS_AS(trial_energy(few, scaled_potentials(spec, p.N)), InputError);
    CHECK_THROWS_AS(estimate_density(SampleSet{}, Grid2D::centered({}, 1.0, 4)), InputError);
}

TEST_CASE("uniform density at the cap has excess ratio one", "[sampler]") {
    PlasmaParams p{1.0, 3, 64};
    const Grid2D g = Grid2D::centered(Point{}, 30.0, 120);
    DensityGrid d{g, std::vector<double>(g.size(), p.cap_density()), 1.0};
    const auto r = incompressibility_check(d, p, default_coarse_radius(p));
    CHECK_THAT(r.excess_ratio, WithinAbs(1.0, 1e-12));
    CHECK(r.cap == p.cap_density());
    CHECK_THROWS_AS(incompressibility_check(d, p, 0.5 * p.mean_spacing()), InputError);
    const Grid2D coarse = Grid2D::centered(Point{}, 30.0, 4);
    DensityGrid dc{coarse, std::vector<double>(coarse.size(), 0.0), 1.0};
    CHECK_THROWS_AS(incompressibility_check(dc, p, 2.0 * p.mean_spacing()), InputError);
}

TEST_CASE("quasi-hole deficit errors and null hole", "[sampler]") {
    PlasmaParams p{1.0, 2, 12};
    const Grid2D g = Grid2D::centered(Point{}, 10.0, 40);
    DensityAccumulator a(g), b(g);
    run_chains(p, {}, chain(20000, 1000, 1, 2), 1, a);
    run_chains(p, {}, chain(20000, 1000, 2, 2), 1, b);
    const double deficit = quasihole_deficit(a.result(), b.result(), {Point(0, 0), 1}, 3.0);
    CHECK(std::abs(deficit) < 0.1);
    CHECK_THROWS_AS(quasihole_deficit(a.result(), b.result(), {Point(0, 0), 1}, 12.0), InputError);
    DensityAccumulator other(Grid2D::centered(Point{}, 10.0, 20));
    other.observe(std::vector<Point>{Point(0, 0)});
    CHECK_THROWS_AS(quasihole_deficit(a.result(), other.result(), {Point(0, 0), 1}, 3.0), InputError);
}

TEST_CASE("density is radial for a centered quasi-hole", "[sampler][property]") {
    PlasmaParams p{1.0, 2, 12};
    QuasiHoleSet holes{{{Point(0, 0), 2}}};
    const double R = p.droplet_radius();
    // Angular Fourier modes of sampled positions in an annulus, k = 1..4.
    struct Modes {
        double rin, rout;
        std::vector<std::vector<Point>> per_batch;
        std::vector<Point> cur = std::vector<Point>(5);
        long n = 0, count = 0;
        void observe(std::span<const Point> x) {
            for (auto z : x) {
                const double r = std::abs(z);
                if (r < rin || r > rout) continue;
                const double th = std::arg(z);
                for (int k = 1; k <= 4; ++k) cur[k] += std::polar(1.0, k * th);
                ++count;
            }
            if (++n % 500 == 0) {
                per_batch.push_back(cur);
                cur.assign(5, Point{});
            }
        }
        void merge(const Modes& o) { per_batch.insert(per_batch.end(), o.per_batch.begin(), o.per_batch.end()); }
    } modes{0.3 * R, 0.9 * R};
    run_chains(p, CorrelationFactor::quasi_holes(holes), chain(20500, 500, 4, 2), 1, modes);
    REQUIRE(modes.per_batch.size() >= 20);
    for (int k = 1; k <= 4; ++k) {
        Point mean{};
        for (const auto& b : modes.per_batch) mean += b[k];
        mean /= double(modes.per_batch.size());
        double var = 0.0;
        for (const auto& b : modes.per_batch) var += std::norm(b[k] - mean);
        var /= (modes.per_batch.size() - 1);
        const double noise = std::sqrt(var / modes.per_batch.size());
        INFO("k = " << k << " |c_k| " << std::abs(mean) << " noise " << noise);
        CHECK(std::abs(mean) < 3.0 * noise);
    }
}
