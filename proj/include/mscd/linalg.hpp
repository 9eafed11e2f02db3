#pragma once

#include <stdexcept>
#include <vector>

namespace mscd::linalg {

// Dense square matrix, row-major. Sizes here are small (species counts),
// so no effort is made to be clever about storage.
class Matrix {
public:
    Matrix() = default;
    explicit Matrix(int n) : n_(n), a_(static_cast<std::size_t>(n) * n, 0.0) {
        if (n < 1) throw std::invalid_argument("Matrix: size must be >= 1");
    }

    int size() const { return n_; }
    double& at(int i, int j) { return a_[static_cast<std::size_t>(i) * n_ + j]; }
    double at(int i, int j) const { return a_[static_cast<std::size_t>(i) * n_ + j]; }
    const std::vector<double>& data() const { return a_; }

    bool is_symmetric(double tol = 0.0) const;
    double frobenius_norm() const;
    std::vector<double> multiply(const std::vector<double>& x) const;

private:
    int n_ = 0;
    std::vector<double> a_;
};

struct EigenSystem {
    std::vector<double> values;               // ascending
    std::vector<std::vector<double>> vectors; // vectors[k] pairs with values[k], orthonormal
    int sweeps = 0;
};

// Cyclic Jacobi rotations on a symmetric matrix. Unconditionally convergent
// for symmetric input; stops when the off-diagonal Frobenius norm falls below
// tol * ||A||_F. Throws on non-symmetric input or if max_sweeps is exhausted
// (the exception message carries the sweep count).
EigenSystem jacobi_eigensystem(Matrix a, int max_sweeps = 100, double tol = 1e-12);

double dot(const std::vector<double>& a, const std::vector<double>& b);
double norm2(const std::vector<double>& a);

} // namespace mscd::linalg
