#pragma once

#include <limits>
#include <vector>

#include "hbflow/types.hpp"

namespace testsup {

// Brute-force min-l1 solution of Xw = y for small d: the optimum of this LP
// sits at a basic solution, so enumerating all n-column supports and solving
// the square systems covers every candidate vertex.
inline hbflow::Vec min_l1_solution(const hbflow::Mat& X, const hbflow::Vec& y) {
    const int n = static_cast<int>(X.rows());
    const int d = static_cast<int>(X.cols());
    hbflow::Vec best;
    double best_norm = std::numeric_limits<double>::infinity();

    std::vector<int> support(n);
    // Enumerate d choose n supports via a simple odometer.
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = i;
    while (true) {
        hbflow::Mat Xs(n, n);
        for (int c = 0; c < n; ++c) Xs.col(c) = X.col(idx[c]);
        const Eigen::FullPivLU<hbflow::Mat> lu(Xs);
        if (lu.isInvertible()) {
            const hbflow::Vec ws = lu.solve(y);
            if ((Xs * ws - y).norm() <= 1e-10 * (1.0 + y.norm())) {
                const double l1 = ws.cwiseAbs().sum();
                if (l1 < best_norm) {
                    best_norm = l1;
                    best = hbflow::Vec::Zero(d);
                    for (int c = 0; c < n; ++c) best[idx[c]] = ws[c];
                }
            }
        }
        // next combination
        int pos = n - 1;
        while (pos >= 0 && idx[pos] == d - n + pos) --pos;
        if (pos < 0) break;
        ++idx[pos];
        for (int c = pos + 1; c < n; ++c) idx[c] = idx[c - 1] + 1;
    }
    return best;
}

}  // namespace testsup
