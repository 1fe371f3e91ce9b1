// Writes the reference gap table used by the acceptance suite.
//   make_gap_golden <out.csv> [N_lo N_hi ell dense_limit]

#include <cstdlib>
#include <iostream>

#include "gap_golden.hpp"

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: make_gap_golden <out.csv> [N_lo N_hi ell dense_limit]\n";
        return 2;
    }
    const int lo = argc > 2 ? std::atoi(argv[2]) : 3;
    const int hi = argc > 3 ? std::atoi(argv[3]) : 8;
    const int ell = argc > 4 ? std::atoi(argv[4]) : 2;
    const std::size_t dense = argc > 5 ? std::strtoul(argv[5], nullptr, 10) : 4500;
    try {
        std::vector<golden::GapRow> all;
        for (int N = lo; N <= hi; ++N) {
            auto rows = golden::generate(N, ell, dense, &std::cerr);
            all.insert(all.end(), rows.begin(), rows.end());
        }
        golden::write(argv[1], all);
    } catch (const laughlin::InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const laughlin::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
