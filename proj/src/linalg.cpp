#include "mscd/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace mscd::linalg {

bool Matrix::is_symmetric(double tol) const {
    for (int i = 0; i < n_; ++i)
        for (int j = i + 1; j < n_; ++j)
            if (std::abs(at(i, j) - at(j, i)) > tol) return false;
    return true;
}

double Matrix::frobenius_norm() const {
    double s = 0.0;
    for (double v : a_) s += v * v;
    return std::sqrt(s);
}

std::vector<double> Matrix::multiply(const std::vector<double>& x) const {
    if (static_cast<int>(x.size()) != n_)
        throw std::invalid_argument("Matrix::multiply: dimension mismatch");
    std::vector<double> y(n_, 0.0);
    for (int i = 0; i < n_; ++i) {
        double s = 0.0;
        for (int j = 0; j < n_; ++j) s += at(i, j) * x[j];
        y[i] = s;
    }
    return y;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("dot: dimension mismatch");
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
}

double norm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

namespace {

double off_diagonal_norm(const Matrix& a) {
    double s = 0.0;
    const int n = a.size();
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) s += 2.0 * a.at(i, j) * a.at(i, j);
    return std::sqrt(s);
}

} // namespace

EigenSystem jacobi_eigensystem(Matrix a, int max_sweeps, double tol) {
    const int n = a.size();
    if (!a.is_symmetric(0.0))
        throw std::invalid_argument("jacobi_eigensystem: matrix is not symmetric");

    Matrix v(n);
    for (int i = 0; i < n; ++i) v.at(i, i) = 1.0;

    const double scale = a.frobenius_norm();
    const double threshold = tol * scale;

    int sweep = 0;
    if (n > 1 && scale > 0.0) {
        for (; sweep < max_sweeps; ++sweep) {
            if (off_diagonal_norm(a) <= threshold) break;
            for (int p = 0; p < n - 1; ++p) {
                for (int q = p + 1; q < n; ++q) {
                    const double apq = a.at(p, q);
                    if (apq == 0.0) continue;
                    const double app = a.at(p, p);
                    const double aqq = a.at(q, q);
                    // Rotation angle per the standard two-sided Jacobi formulas.
                    const double tau = (aqq - app) / (2.0 * apq);
                    const double t = (tau >= 0.0)
                                         ? 1.0 / (tau + std::sqrt(1.0 + tau * tau))
                                         : 1.0 / (tau - std::sqrt(1.0 + tau * tau));
                    const double c = 1.0 / std::sqrt(1.0 + t * t);
                    const double s = t * c;

                    for (int k = 0; k < n; ++k) {
                        const double akp = a.at(k, p);
                        const double akq = a.at(k, q);
                        a.at(k, p) = c * akp - s * akq;
                        a.at(k, q) = s * akp + c * akq;
                    }
                    for (int k = 0; k < n; ++k) {
                        const double apk = a.at(p, k);
                        const double aqk = a.at(q, k);
                        a.at(p, k) = c * apk - s * aqk;
                        a.at(q, k) = s * apk + c * aqk;
                    }
                    for (int k = 0; k < n; ++k) {
                        const double vkp = v.at(k, p);
                        const double vkq = v.at(k, q);
                        v.at(k, p) = c * vkp - s * vkq;
                        v.at(k, q) = s * vkp + c * vkq;
                    }
                }
            }
        }
        if (off_diagonal_norm(a) > threshold)
            throw std::runtime_error("jacobi_eigensystem: no convergence after " +
                                     std::to_string(sweep) + " sweeps");
    }

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int i, int j) { return a.at(i, i) < a.at(j, j); });

    EigenSystem out;
    out.sweeps = sweep;
    out.values.resize(n);
    out.vectors.assign(n, std::vector<double>(n, 0.0));
    for (int k = 0; k < n; ++k) {
        out.values[k] = a.at(order[k], order[k]);
        for (int i = 0; i < n; ++i) out.vectors[k][i] = v.at(i, order[k]);
    }
    return out;
}

} // namespace mscd::linalg
