// Test-only oracles, deliberately independent of the production solver path:
// eigenvalues come from Sylvester inertia counts driven by bisection, and the
// quadratic forms are brute-force double loops.
#pragma once

#include <cmath>
#include <vector>

#include "mscd/linalg.hpp"
#include "mscd/random.hpp"
#include "mscd/spectral.hpp"

namespace oracles {

// Number of eigenvalues of `a` strictly below x, by counting negative pivots
// of the shifted matrix under symmetric Gaussian elimination.
inline int eigen_count_below(mscd::linalg::Matrix a, double x) {
    const int n = a.size();
    const double scale = std::max(a.frobenius_norm(), 1e-300);
    for (int i = 0; i < n; ++i) a.at(i, i) -= x;
    int negatives = 0;
    for (int k = 0; k < n; ++k) {
        double pivot = a.at(k, k);
        if (std::abs(pivot) < 1e-15 * scale)
            pivot = (pivot >= 0.0 ? 1.0 : -1.0) * 1e-15 * scale;
        if (pivot < 0.0) ++negatives;
        for (int i = k + 1; i < n; ++i) {
            const double f = a.at(i, k) / pivot;
            for (int j = k; j < n; ++j) a.at(i, j) -= f * a.at(k, j);
        }
    }
    return negatives;
}

// k-th smallest eigenvalue (0-based) by bisection on the inertia count.
inline double eigenvalue_by_bisection(const mscd::linalg::Matrix& a, int k) {
    const int n = a.size();
    double radius = 1.0;
    for (int i = 0; i < n; ++i) {
        double row = std::abs(a.at(i, i));
        for (int j = 0; j < n; ++j)
            if (j != i) row += std::abs(a.at(i, j));
        radius = std::max(radius, row);
    }
    double lo = -radius - 1.0, hi = radius + 1.0;
    for (int iter = 0; iter < 200 && hi - lo > 1e-15 * radius; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (eigen_count_below(a, mid) >= k + 1)
            hi = mid;
        else
            lo = mid;
    }
    return 0.5 * (lo + hi);
}

inline double oracle_lambda2(const mscd::linalg::Matrix& laplacian) {
    return eigenvalue_by_bisection(laplacian, 1);
}

// Brute-force both sides of the vector Poincare inequality.
inline double pair_sum(const mscd::spectral::SymmetricArray& a,
                       const mscd::spectral::WeightVector& w,
                       const std::vector<std::vector<double>>& x, bool with_coupling,
                       bool off_diagonal_only) {
    const int n = a.size();
    double s = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (off_diagonal_only && i == j) continue;
            double d2 = 0.0;
            for (std::size_t d = 0; d < x[i].size(); ++d) {
                const double diff = x[i][d] - x[j][d];
                d2 += diff * diff;
            }
            s += (with_coupling ? a(i, j) : 1.0) * d2 * w[i] * w[j];
        }
    return s;
}

// Random connected coupling array: a random ring plus extra random edges,
// zero diagonal unless asked otherwise.
inline mscd::spectral::SymmetricArray random_connected_array(mscd::rng::Generator& gen, int n,
                                                             double extra_edge_probability = 0.4) {
    auto a = mscd::spectral::SymmetricArray::zero(n);
    for (int i = 0; i < n; ++i) a.set(i, (i + 1) % n, gen.uniform(0.2, 2.0));
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (gen.uniform01() < extra_edge_probability)
                a.set(i, j, gen.uniform(0.0, 2.0));
    return a;
}

inline mscd::spectral::WeightVector random_weights(mscd::rng::Generator& gen, int n) {
    std::vector<double> w(n);
    for (double& v : w) v = gen.uniform(0.2, 3.0);
    return mscd::spectral::WeightVector(std::move(w));
}

} // namespace oracles
