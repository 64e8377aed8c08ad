#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "simba/matrix.hpp"

namespace simba::test {

inline Matrix randn(Index rows, Index cols, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> normal(0.0, scale);
    Matrix m(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
    return m;
}

/// Central differences of `f` with respect to every entry of leaves[which].
inline Matrix central_difference(const std::function<double(const std::vector<Matrix>&)>& f,
                                 std::vector<Matrix> leaves, std::size_t which, double h) {
    Matrix g(leaves[which].rows(), leaves[which].cols());
    for (Index j = 0; j < g.cols(); ++j) {
        for (Index i = 0; i < g.rows(); ++i) {
            const double saved = leaves[which](i, j);
            leaves[which](i, j) = saved + h;
            const double up = f(leaves);
            leaves[which](i, j) = saved - h;
            const double down = f(leaves);
            leaves[which](i, j) = saved;
            g(i, j) = (up - down) / (2.0 * h);
        }
    }
    return g;
}

/// Largest |a − b| / max(|a|, |b|) over entries where max(|a|, |b|) > floor.
inline double max_relative_error(const Matrix& a, const Matrix& b, double floor = 1e-8) {
    double worst = 0.0;
    for (Index j = 0; j < a.cols(); ++j) {
        for (Index i = 0; i < a.rows(); ++i) {
            const double scale = std::max(std::abs(a(i, j)), std::abs(b(i, j)));
            if (scale > floor) worst = std::max(worst, std::abs(a(i, j) - b(i, j)) / scale);
        }
    }
    return worst;
}

}  // namespace simba::test
