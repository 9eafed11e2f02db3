#include "mscd/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mscd::spectral {

namespace {

constexpr double kLambda1ClampScale = 1e-10;
constexpr double kPsdToleranceScale = 1e-10;

bool all_finite(const std::vector<double>& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

} // namespace

WeightVector::WeightVector(std::vector<double> w) : w_(std::move(w)) {
    if (w_.empty()) throw std::invalid_argument("WeightVector: needs at least one weight");
    if (!all_finite(w_)) throw std::invalid_argument("WeightVector: non-finite weight");
    max_ = w_[0];
    min_ = w_[0];
    for (double x : w_) {
        if (x <= 0.0) throw std::invalid_argument("WeightVector: weights must be positive");
        total_ += x;
        max_ = std::max(max_, x);
        min_ = std::min(min_, x);
    }
    if (!std::isfinite(total_) || total_ <= 0.0)
        throw std::invalid_argument("WeightVector: total weight must be finite and positive");
    zeta_ = 1.0 - max_ / total_;
}

std::vector<double> WeightVector::sqrt_values() const {
    std::vector<double> s(w_.size());
    for (std::size_t i = 0; i < w_.size(); ++i) s[i] = std::sqrt(w_[i]);
    return s;
}

SymmetricArray::SymmetricArray(int n, bool flag) : n_(n), offdiag_nonneg_(flag) {
    if (n < 1) throw std::invalid_argument("SymmetricArray: size must be >= 1");
    upper_.assign(static_cast<std::size_t>(n) * (n + 1) / 2, 0.0);
}

SymmetricArray SymmetricArray::zero(int n, bool off_diagonal_non_negative) {
    return SymmetricArray(n, off_diagonal_non_negative);
}

SymmetricArray SymmetricArray::from_dense(const std::vector<std::vector<double>>& a,
                                          bool off_diagonal_non_negative) {
    const int n = static_cast<int>(a.size());
    SymmetricArray out(n, off_diagonal_non_negative);
    for (int i = 0; i < n; ++i) {
        if (static_cast<int>(a[i].size()) != n)
            throw std::invalid_argument("SymmetricArray: input is not square");
        for (int j = 0; j < n; ++j) {
            if (!std::isfinite(a[i][j]))
                throw std::invalid_argument("SymmetricArray: non-finite entry");
            if (j > i && a[i][j] != a[j][i])
                throw std::invalid_argument("SymmetricArray: input is not symmetric");
        }
    }
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) out.set(i, j, a[i][j]);
    return out;
}

std::size_t SymmetricArray::index(int i, int j) const {
    check_range(i, j);
    if (i > j) std::swap(i, j);
    // row-packed upper triangle
    return static_cast<std::size_t>(i) * n_ - static_cast<std::size_t>(i) * (i - 1) / 2 +
           static_cast<std::size_t>(j - i);
}

void SymmetricArray::check_range(int i, int j) const {
    if (i < 0 || j < 0 || i >= n_ || j >= n_)
        throw std::out_of_range("SymmetricArray: index out of range");
}

void SymmetricArray::set(int i, int j, double value) {
    check_range(i, j);
    if (!std::isfinite(value)) throw std::invalid_argument("SymmetricArray: non-finite entry");
    if (i != j && offdiag_nonneg_ && value < 0.0)
        throw std::invalid_argument("SymmetricArray: negative off-diagonal entry");
    upper_[index(i, j)] = value;
}

double SymmetricArray::diagonal_floor() const {
    double floor = upper_[index(0, 0)];
    for (int i = 1; i < n_; ++i) floor = std::min(floor, (*this)(i, i));
    return floor;
}

double SymmetricArray::max_abs() const {
    double m = 0.0;
    for (int i = 0; i < n_; ++i)
        for (int j = i; j < n_; ++j) m = std::max(m, std::abs((*this)(i, j)));
    return m;
}

WeightedLaplacian::WeightedLaplacian(linalg::Matrix m, WeightVector w, linalg::EigenSystem eig)
    : matrix_(std::move(m)), weights_(std::move(w)), eigen_(std::move(eig)) {
    norm_ = matrix_.frobenius_norm();

    const int n = matrix_.size();
    if (static_cast<int>(eigen_.values.size()) != n)
        throw std::invalid_argument("WeightedLaplacian: eigen system size mismatch");

    // lambda1 is the kernel eigenvalue; clamp the numerical residue to zero.
    if (std::abs(eigen_.values[0]) <= kLambda1ClampScale * norm_) eigen_.values[0] = 0.0;
    if (eigen_.values[0] < -kPsdToleranceScale * norm_)
        throw std::runtime_error("WeightedLaplacian: matrix is not positive semi-definite");

    const std::vector<double> sw = weights_.sqrt_values();
    const double residual = linalg::norm2(matrix_.multiply(sw));
    if (residual > 1e-10 * std::max(norm_, 1e-300) * linalg::norm2(sw))
        throw std::runtime_error("WeightedLaplacian: sqrt(w) is not in the kernel");

    if (n >= 2) {
        // Fiedler direction: eigenvector of lambda2, re-orthogonalized against
        // sqrt(w) so that degenerate lambda1 = lambda2 = 0 cases stay clean.
        fiedler_ = eigen_.vectors[1];
        const double swn = linalg::norm2(sw);
        const double proj = linalg::dot(fiedler_, sw) / (swn * swn);
        for (int i = 0; i < n; ++i) fiedler_[i] -= proj * sw[i];
        const double fn = linalg::norm2(fiedler_);
        if (fn > 1e-12) {
            for (double& x : fiedler_) x /= fn;
        } else {
            fiedler_.assign(n, 0.0);
        }
    }
}

double WeightedLaplacian::lambda2() const {
    if (matrix_.size() < 2)
        throw std::invalid_argument("WeightedLaplacian::lambda2: needs at least two species");
    return eigen_.values[1];
}

bool WeightedLaplacian::connected(double threshold_scale) const {
    return lambda2() > threshold_scale * std::max(norm_, 1e-300);
}

WeightedLaplacian build_weighted_laplacian(const SymmetricArray& a, const WeightVector& w) {
    const int n = a.size();
    if (n != w.size())
        throw std::invalid_argument("build_weighted_laplacian: dimension mismatch");

    const std::vector<double> sw = w.sqrt_values();
    linalg::Matrix m(n);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double aij = a(i, j);
            if (aij < 0.0)
                throw std::invalid_argument(
                    "build_weighted_laplacian: negative off-diagonal coupling");
            const double entry = -aij * sw[i] * sw[j];
            m.at(i, j) = entry; // mirrored, so symmetry is exact
            m.at(j, i) = entry;
        }
    }
    for (int i = 0; i < n; ++i) {
        double diag = 0.0;
        for (int j = 0; j < n; ++j)
            if (j != i) diag += a(i, j) * w[j]; // input diagonal a_aa never enters
        m.at(i, i) = diag;
    }
    linalg::EigenSystem eig = linalg::jacobi_eigensystem(m);
    return WeightedLaplacian(std::move(m), w, std::move(eig));
}

Lambda2Result lambda2(const WeightedLaplacian& laplacian) {
    return Lambda2Result{laplacian.lambda2(), laplacian.fiedler_vector()};
}

namespace {

double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size())
        throw std::invalid_argument("poincare: vector dimension mismatch");
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double d = a[k] - b[k];
        s += d * d;
    }
    return s;
}

} // namespace

PoincareVectorsResult poincare_gap_vectors(const SymmetricArray& a, const WeightVector& w,
                                           const std::vector<std::vector<double>>& x) {
    const int n = a.size();
    if (n != w.size() || static_cast<int>(x.size()) != n)
        throw std::invalid_argument("poincare_gap_vectors: dimension mismatch");

    double lhs = 0.0;
    double fluctuation = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            const double d2 = squared_distance(x[i], x[j]) * w[i] * w[j];
            lhs += a(i, j) * d2;
            fluctuation += d2;
        }
    }
    const WeightedLaplacian lap = build_weighted_laplacian(a, w);
    const double rhs = lap.lambda2() / w.total() * fluctuation;
    return PoincareVectorsResult{lhs, rhs};
}

PoincareFunctionsResult poincare_gap_functions(const SymmetricArray& a, const WeightVector& w,
                                               const std::vector<SpeciesSamples>& samples) {
    const int n = a.size();
    if (n != w.size() || static_cast<int>(samples.size()) != n)
        throw std::invalid_argument("poincare_gap_functions: dimension mismatch");
    for (int i = 0; i < n; ++i) {
        if (samples[i].empty())
            throw std::invalid_argument("poincare_gap_functions: empty species sample");
        for (const Atom& atom : samples[i])
            if (atom.mass <= 0.0)
                throw std::invalid_argument("poincare_gap_functions: atom masses must be positive");
    }

    const WeightedLaplacian lap = build_weighted_laplacian(a, w);
    const double rate = lap.lambda2() * w.zeta() / w.total();

    // Pairwise double sums over the atomic measures.
    PoincareFunctionsResult out;
    out.rate = rate;
    double total_fluctuation = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            double pair_sum = 0.0;
            for (const Atom& ai : samples[i])
                for (const Atom& aj : samples[j])
                    pair_sum += ai.mass * aj.mass * squared_distance(ai.value, aj.value);
            total_fluctuation += pair_sum;
            if (i != j) out.lhs_off_diagonal += a(i, j) * pair_sum;
            out.lhs_full += a(i, j) * pair_sum;
        }
    }
    out.rhs = rate * total_fluctuation;
    return out;
}

DegreeBoundResult degree_lower_bound(const SymmetricArray& a, const WeightVector& w, int gamma) {
    const int n = a.size();
    if (n != w.size())
        throw std::invalid_argument("degree_lower_bound: dimension mismatch");
    if (gamma < 0 || gamma >= n)
        throw std::out_of_range("degree_lower_bound: species index out of range");

    double degree = 0.0;
    for (int b = 0; b < n; ++b)
        if (b != gamma) degree += a(gamma, b) * w[b];

    const WeightedLaplacian lap = build_weighted_laplacian(a, w);
    return DegreeBoundResult{degree, w.zeta() * lap.lambda2()};
}

SandwichResult sandwich_bound(const SymmetricArray& a, const WeightVector& w) {
    const int n = a.size();
    if (n < 2) throw std::invalid_argument("sandwich_bound: needs at least two species");
    if (n != w.size()) throw std::invalid_argument("sandwich_bound: dimension mismatch");

    SandwichResult out;
    const WeightedLaplacian weighted = build_weighted_laplacian(a, w);
    const WeightVector unit(std::vector<double>(n, 1.0));
    const WeightedLaplacian plain = build_weighted_laplacian(a, unit);
    out.lambda2_weighted = weighted.lambda2();
    out.lambda2_unweighted = plain.lambda2();

    if (!plain.connected()) {
        out.disconnected = true;
        return out;
    }
    const double kappa = w.max_weight() / w.min_weight();
    out.ratio = out.lambda2_weighted / out.lambda2_unweighted;
    out.lower = w.total() / (kappa * kappa * n);
    out.upper = w.total() * kappa * kappa / n;
    return out;
}

double dealignment_margin(const SymmetricArray& a, const WeightVector& w) {
    const WeightedLaplacian lap = build_weighted_laplacian(a, w);
    return -0.5 * lap.lambda2() * w.zeta() / w.total();
}

} // namespace mscd::spectral
