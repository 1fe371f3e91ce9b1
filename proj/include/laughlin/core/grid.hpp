#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "laughlin/core/types.hpp"

namespace laughlin {

/// Uniform cell grid; `origin` is the lower-left corner of cell (0, 0).
/// Cells are stored row-major: index = iy * nx + ix.
struct Grid2D {
    Point origin{};
    double h = 1.0;
    int nx = 0;
    int ny = 0;

    static Grid2D centered(Point center, double half_width, int cells_per_side) {
        if (!(half_width > 0.0) || cells_per_side < 1) throw InputError("Grid2D: bad extent");
        Grid2D g;
        g.h = 2.0 * half_width / cells_per_side;
        g.nx = g.ny = cells_per_side;
        g.origin = center - Point(half_width, half_width);
        return g;
    }

    void validate() const {
        if (!(h > 0.0) || !std::isfinite(h)) throw InputError("Grid2D: spacing must be positive");
        if (nx < 1 || ny < 1) throw InputError("Grid2D: empty grid");
        if (!is_finite(origin)) throw InputError("Grid2D: non-finite origin");
    }

    std::size_t size() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }
    std::size_t index(int ix, int iy) const { return static_cast<std::size_t>(iy) * nx + ix; }
    double cell_area() const { return h * h; }
    double width() const { return nx * h; }
    double height() const { return ny * h; }

    Point center(int ix, int iy) const { return origin + Point((ix + 0.5) * h, (iy + 0.5) * h); }
    Point center(std::size_t k) const { return center(static_cast<int>(k % nx), static_cast<int>(k / nx)); }

    bool contains(Point p) const {
        const Point d = p - origin;
        return d.real() >= 0.0 && d.imag() >= 0.0 && d.real() < width() && d.imag() < height();
    }

    std::optional<std::size_t> cell_of(Point p) const {
        if (!contains(p)) return std::nullopt;
        const Point d = (p - origin) / h;
        const int ix = std::min(nx - 1, static_cast<int>(std::floor(d.real())));
        const int iy = std::min(ny - 1, static_cast<int>(std::floor(d.imag())));
        return index(ix, iy);
    }

    /// True when the closed disk D(c, r) lies inside the grid rectangle.
    bool contains_disk(Point c, double r) const {
        const Point d = c - origin;
        return d.real() - r >= 0.0 && d.imag() - r >= 0.0 && d.real() + r <= width() && d.imag() + r <= height();
    }

    friend bool operator==(const Grid2D&, const Grid2D&) = default;
};

/// Fraction of each cell's area covered by D(c, r), estimated on a
/// `sub` x `sub` midpoint lattice per cell; exact for fully covered cells.
inline std::vector<double> disk_cover_fractions(const Grid2D& g, Point c, double r, int sub = 8) {
    std::vector<double> w(g.size(), 0.0);
    const double half_diag = g.h * std::sqrt(0.5);
    const int ix0 = std::max(0, static_cast<int>(std::floor((c.real() - r - g.origin.real()) / g.h)));
    const int ix1 = std::min(g.nx - 1, static_cast<int>(std::floor((c.real() + r - g.origin.real()) / g.h)));
    const int iy0 = std::max(0, static_cast<int>(std::floor((c.imag() - r - g.origin.imag()) / g.h)));
    const int iy1 = std::min(g.ny - 1, static_cast<int>(std::floor((c.imag() + r - g.origin.imag()) / g.h)));
    for (int iy = iy0; iy <= iy1; ++iy)
        for (int ix = ix0; ix <= ix1; ++ix) {
            const Point cc = g.center(ix, iy);
            const double d = std::abs(cc - c);
            double f;
            if (d + half_diag <= r) {
                f = 1.0;
            } else if (d - half_diag >= r) {
                f = 0.0;
            } else {
                int in = 0;
                for (int a = 0; a < sub; ++a)
                    for (int b = 0; b < sub; ++b) {
                        const Point q = g.origin + Point((ix + (a + 0.5) / sub) * g.h, (iy + (b + 0.5) / sub) * g.h);
                        if (std::abs(q - c) <= r) ++in;
                    }
                f = static_cast<double>(in) / (sub * sub);
            }
            w[g.index(ix, iy)] = f;
        }
    return w;
}

}  // namespace laughlin
