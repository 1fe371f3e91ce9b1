#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <vector>

#include <unsupported/Eigen/FFT>

namespace laughlin {

/// Smallest n' >= n whose only prime factors are 2, 3 and 5.
inline int fft_size(int n) {
    for (int m = std::max(n, 1);; ++m) {
        int r = m;
        for (int p : {2, 3, 5})
            while (r % p == 0) r /= p;
        if (r == 1) return m;
    }
}

/// Aperiodic convolution on an nx x ny row-major grid with a translation
/// invariant kernel: out[i] = sum_j k(i - j) in[j]. Zero padded FFT.
class GridConvolver {
public:
    GridConvolver(int nx, int ny, const std::function<double(int, int)>& kernel)
        : nx_(nx), ny_(ny), px_(fft_size(2 * nx - 1)), py_(fft_size(2 * ny - 1)),
          khat_(static_cast<std::size_t>(px_) * py_) {
        std::vector<std::complex<double>> k(khat_.size(), 0.0);
        for (int dy = -(ny - 1); dy <= ny - 1; ++dy)
            for (int dx = -(nx - 1); dx <= nx - 1; ++dx)
                k[slot(dx, dy)] = kernel(dx, dy);
        transform(k, false);
        khat_ = std::move(k);
    }

    std::vector<double> apply(const std::vector<double>& in) const {
        std::vector<std::complex<double>> a(khat_.size(), 0.0);
        for (int iy = 0; iy < ny_; ++iy)
            for (int ix = 0; ix < nx_; ++ix) a[static_cast<std::size_t>(iy) * px_ + ix] = in[static_cast<std::size_t>(iy) * nx_ + ix];
        transform(a, false);
        for (std::size_t i = 0; i < a.size(); ++i) a[i] *= khat_[i];
        transform(a, true);
        std::vector<double> out(static_cast<std::size_t>(nx_) * ny_);
        for (int iy = 0; iy < ny_; ++iy)
            for (int ix = 0; ix < nx_; ++ix)
                out[static_cast<std::size_t>(iy) * nx_ + ix] = a[static_cast<std::size_t>(iy) * px_ + ix].real();
        return out;
    }

private:
    std::size_t slot(int dx, int dy) const {
        const int x = dx < 0 ? dx + px_ : dx, y = dy < 0 ? dy + py_ : dy;
        return static_cast<std::size_t>(y) * px_ + x;
    }

    void transform(std::vector<std::complex<double>>& a, bool inverse) const {
        Eigen::FFT<double> fft;
        std::vector<std::complex<double>> line, res;
        line.resize(px_);
        for (int y = 0; y < py_; ++y) {
            std::copy_n(a.begin() + static_cast<std::ptrdiff_t>(y) * px_, px_, line.begin());
            if (inverse) fft.inv(res, line);
            else fft.fwd(res, line);
            std::copy(res.begin(), res.end(), a.begin() + static_cast<std::ptrdiff_t>(y) * px_);
        }
        line.resize(py_);
        for (int x = 0; x < px_; ++x) {
            for (int y = 0; y < py_; ++y) line[y] = a[static_cast<std::size_t>(y) * px_ + x];
            if (inverse) fft.inv(res, line);
            else fft.fwd(res, line);
            for (int y = 0; y < py_; ++y) a[static_cast<std::size_t>(y) * px_ + x] = res[y];
        }
    }

    int nx_, ny_, px_, py_;
    std::vector<std::complex<double>> khat_;
};

}  // namespace laughlin
