#include <catch_amalgamated.hpp>

#include <algorithm>
#include <random>

#include "laughlin/screening.hpp"

using namespace laughlin;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const double kR1 = 1.0 / std::sqrt(kPi);

// Potential of a unit point charge at 0 minus a unit-area uniform disk centered at 0.
double disk_phi(double r) {
    if (r >= kR1) return 0.0;
    return -std::log(r) + std::log(kR1) + 0.5 * kPi * (r * r - kR1 * kR1);
}

// Cells on the region boundary: partially filled, or full with an empty neighbour.
std::vector<std::size_t> boundary_cells(const ScreeningRegion& r) {
    const Grid2D& g = r.grid;
    std::vector<std::size_t> out;
    for (int iy = 1; iy < g.ny - 1; ++iy)
        for (int ix = 1; ix < g.nx - 1; ++ix) {
            const auto k = g.index(ix, iy);
            if (r.empty(k)) continue;
            bool edge = !r.full(k);
            for (auto n : {k - 1, k + 1, k - g.nx, k + g.nx}) edge = edge || r.empty(n);
            if (edge) out.push_back(k);
        }
    return out;
}

double hausdorff_to_circle(const ScreeningRegion& r, Point c, double radius) {
    double d = 0.0;
    for (auto k : boundary_cells(r)) d = std::max(d, std::abs(std::abs(r.grid.center(k) - c) - radius));
    return d;
}

bool full_within_one_cell(const ScreeningRegion& r, Point p) {
    const Grid2D& g = r.grid;
    for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx)
            if (auto k = g.cell_of(p + Point(dx * g.h, dy * g.h)); k && !r.empty(*k)) return true;
    return false;
}

std::vector<Point> random_cloud(std::mt19937_64& rng, int K, double radius) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Point> pts;
    for (int i = 0; i < K; ++i) pts.push_back(std::polar(radius * std::sqrt(u(rng)), 2.0 * kPi * u(rng)));
    return pts;
}

}  // namespace

TEST_CASE("closed-form disk potential oracle", "[screening]") {
    // Continuity and zero slope at the edge, positive inside.
    CHECK_THAT(disk_phi(kR1 * (1 - 1e-9)), WithinAbs(0.0, 1e-12));
    const double eps = 1e-6;
    CHECK_THAT((disk_phi(kR1 - eps) - disk_phi(kR1 - 2 * eps)) / eps, WithinAbs(0.0, 1e-5));
    CHECK(disk_phi(0.1) > disk_phi(0.3));
    CHECK(disk_phi(0.5) > 0.0);
}

TEST_CASE("single source gives the unit disk", "[screening]") {
    const Point src[] = {Point(0.0, 0.0)};
    const auto r = screening_region_auto(src, 0.02);
    CHECK_THAT(r.area(), WithinAbs(1.0, 0.01));
    CHECK(hausdorff_to_circle(r, 0.0, kR1) <= 2 * r.grid.h);
    for (double o : r.occupancy) CHECK((o >= 0.0 && o <= 1.0));
}

TEST_CASE("coincident sources give a disk of area K", "[screening]") {
    const Point a(0.3, -0.2);
    const std::vector<Point> src(4, a);
    const auto r = screening_region_auto(src, 0.02);
    CHECK_THAT(r.area(), WithinAbs(4.0, 0.04));
    CHECK(hausdorff_to_circle(r, a, std::sqrt(4.0 / kPi)) <= 2 * r.grid.h);
}

TEST_CASE("far sources give disjoint unit disks", "[screening]") {
    const Point src[] = {Point(-5.0, 0.0), Point(5.0, 0.0)};
    const auto r = screening_region_auto(src, 0.04);
    const Grid2D& g = r.grid;
    double left = 0.0, right = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
        const Point c = g.center(k);
        if (r.empty(k)) continue;
        CHECK(std::min(std::abs(c - src[0]), std::abs(c - src[1])) < kR1 + 2 * g.h);
        (c.real() < 0 ? left : right) += r.occupancy[k] * g.cell_area();
    }
    CHECK_THAT(left, WithinAbs(1.0, 0.01));
    CHECK_THAT(right, WithinAbs(1.0, 0.01));
    const auto f = potential_field(r);
    const double tol = potential_tolerance(g.h, 2);
    for (double t = 0; t < 2 * kPi; t += 0.3) {
        CHECK(std::abs(f.at(src[0] + std::polar(3.0, t))) < tol);
        CHECK(std::abs(f.at(src[1] + std::polar(3.0, t))) < tol);
    }
}

TEST_CASE("potential of the unit disk matches the closed form", "[screening]") {
    const Point src[] = {Point(0.0, 0.0)};
    const auto r = screening_region_auto(src, 0.02);
    const auto f = potential_field(r);
    const Grid2D& g = r.grid;
    const double tol = potential_tolerance(g.h, 1);
    for (std::size_t k = 0; k < g.size(); ++k) {
        const double d = std::abs(g.center(k));
        if (d < 2 * g.h) continue;
        INFO("r = " << d);
        CHECK(std::abs(f.values[k] - disk_phi(d)) < tol);
        CHECK(f.values[k] > -tol);
    }
    // Neutrality: the frame sees no field.
    for (int ix = 0; ix < g.nx; ++ix) {
        CHECK(std::abs(f.values[g.index(ix, 0)]) < tol);
        CHECK(std::abs(f.values[g.index(ix, g.ny - 1)]) < tol);
    }
}

TEST_CASE("potential equals 2 pi times the odometer", "[screening]") {
    const Point src[] = {Point(0.1, 0.0), Point(-0.4, 0.3), Point(0.2, 0.5)};
    const auto r = screening_region_auto(src, 0.02);
    const auto f = potential_field(r);
    const Grid2D& g = r.grid;
    const double tol = potential_tolerance(g.h, 3);
    for (std::size_t k = 0; k < g.size(); ++k) {
        bool near_src = false;
        for (auto s : src) near_src = near_src || std::abs(g.center(k) - s) < 3 * g.h;
        if (near_src) continue;
        CHECK(std::abs(f.values[k] - 2 * kPi * r.odometer[k]) < tol);
    }
}

TEST_CASE("sign dichotomy outside the boundary band", "[screening]") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 3; ++trial) {
        const auto pts = random_cloud(rng, 6, 1.5);
        const auto r = screening_region_auto(pts, 0.03);
        const auto f = potential_field(r);
        const auto s = sign_dichotomy(r, f);
        CHECK(s.violations <= s.band_cells);
        CHECK(s.violations == 0);
        CHECK(s.min_phi > -s.tol);
    }
}

TEST_CASE("area identity on random inputs", "[screening]") {
    std::mt19937_64 rng(11);
    const double h = 0.03;
    for (int K : {1, 2, 3, 5, 8, 10}) {
        const auto pts = random_cloud(rng, K, 2.0);
        const auto r = screening_region_auto(pts, h);
        INFO("K = " << K);
        CHECK(std::abs(r.area() - K) <= std::max(0.01 * K, 4.0 * K * h));
    }
}

TEST_CASE("toppling order and warm start do not change the region", "[screening]") {
    const Point src[] = {Point(0.0, 0.0), Point(0.7, 0.1), Point(0.2, -0.9), Point(0.2, -0.9)};
    const Grid2D g = screening_grid(src, 0.03, 1.5);
    ScreeningOptions fwd, rev, cold;
    rev.reverse_order = true;
    cold.cascade = false;
    const auto a = screening_region(src, g, fwd);
    const auto b = screening_region(src, g, rev);
    const auto c = screening_region(src, g, cold);
    for (std::size_t k = 0; k < g.size(); ++k) {
        CHECK_THAT(a.occupancy[k], WithinAbs(b.occupancy[k], 1e-5));
        CHECK_THAT(a.occupancy[k], WithinAbs(c.occupancy[k], 1e-5));
    }
}

TEST_CASE("translation equivariance", "[screening]") {
    const std::vector<Point> src = {Point(0.0, 0.0), Point(0.8, 0.2), Point(-0.3, 0.6)};
    const Point t(1.237, -0.581);
    std::vector<Point> moved;
    for (auto p : src) moved.push_back(p + t);
    const auto a = screening_region_auto(src, 0.03);
    const auto b = screening_region_auto(moved, 0.03);
    CHECK_THAT(a.area(), WithinAbs(b.area(), 1e-3));
    for (std::size_t k = 0; k < a.grid.size(); ++k)
        if (a.full(k)) CHECK(full_within_one_cell(b, a.grid.center(k) + t));
    for (std::size_t k = 0; k < b.grid.size(); ++k)
        if (b.full(k)) CHECK(full_within_one_cell(a, b.grid.center(k) - t));
}

TEST_CASE("adding a source only grows the region", "[screening]") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 3; ++trial) {
        auto pts = random_cloud(rng, 5, 1.2);
        const Grid2D g = screening_grid(pts, 0.03, 2.5);
        const auto small = screening_region(pts, g);
        pts.push_back(random_cloud(rng, 1, 1.0)[0]);
        const auto big = screening_region(pts, g);
        for (std::size_t k = 0; k < g.size(); ++k)
            if (small.full(k)) CHECK(full_within_one_cell(big, g.center(k)));
    }
}

TEST_CASE("screening input errors", "[screening]") {
    const Point src[] = {Point(0.0, 0.0)};
    CHECK_THROWS_AS(screening_region(std::span<const Point>{}, Grid2D::centered(0.0, 1.0, 50)), InputError);
    // Too small a box: region reaches the frame.
    CHECK_THROWS_WITH(screening_region(src, Grid2D::centered(0.0, 0.5, 50)), Catch::Matchers::ContainsSubstring("enlarge"));
    const Point outside[] = {Point(3.0, 0.0)};
    CHECK_THROWS_AS(screening_region(outside, Grid2D::centered(0.0, 1.0, 50)), InputError);
    const Point nan[] = {Point(std::nan(""), 0.0)};
    CHECK_THROWS_AS(screening_region(nan, Grid2D::centered(0.0, 1.0, 50)), InputError);
}

TEST_CASE("support bound", "[screening]") {
    SECTION("single source, circle outside the disk") {
        const Point src[] = {Point(0.0, 0.0)};
        const auto r = screening_region(src, Grid2D::centered(0.0, 1.5, 100));
        const auto f = potential_field(r);
        const auto rep = support_bound_check(f, r, 0.0, 1.0);
        CHECK(rep.max_phi_on_circle < potential_tolerance(r.grid.h, 1));
        CHECK(rep.contained);
        CHECK(rep.c_est == 0.0);
    }
    SECTION("nine coincident sources, circle inside") {
        const std::vector<Point> src(9, Point(0.0, 0.0));
        const auto r = screening_region(src, Grid2D::centered(0.0, 2.4, 160));
        const auto f = potential_field(r);
        const auto rep = support_bound_check(f, r, 0.0, 0.5);
        CHECK(rep.max_phi_on_circle > 0.0);
        CHECK(std::isfinite(rep.c_est));
        CHECK(rep.region_radius > 0.5);
        CHECK_THAT(rep.region_radius, WithinAbs(std::sqrt(9.0 / kPi), 2 * r.grid.h));
        CHECK(rep.contained == (rep.c_est <= kDefaultSupportConstant));
    }
    SECTION("circle through a source is rejected") {
        const Point src[] = {Point(0.5, 0.0)};
        const auto r = screening_region(src, Grid2D::centered(0.0, 1.5, 100));
        const auto f = potential_field(r);
        CHECK_THROWS_AS(support_bound_check(f, r, 0.0, 0.5), InputError);
        CHECK_THROWS_AS(support_bound_check(f, r, 0.0, -1.0), InputError);
    }
}

TEST_CASE("default support constant covers random 20-point clouds", "[screening][slow]") {
    std::mt19937_64 rng(777);
    const double rho = std::sqrt(20.0 / kPi);
    int contained = 0;
    for (int i = 0; i < 100; ++i) {
        const auto pts = random_cloud(rng, 20, rho);
        const auto r = screening_region_auto(pts, 0.05);
        const auto rep = support_bound_check(potential_field(r), r, 0.0, rho + 0.2);
        contained += rep.contained;
    }
    CHECK(contained >= 95);
}
