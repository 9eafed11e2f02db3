#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mscd/linalg.hpp"

namespace mscd::spectral {

// Positive per-species weights (masses or sizes). The quantity
// zeta = 1 - max_a w_a / sum_b w_b is the "all-but-heaviest" mass fraction
// that enters every decay rate.
class WeightVector {
public:
    explicit WeightVector(std::vector<double> w);

    int size() const { return static_cast<int>(w_.size()); }
    double operator[](int i) const { return w_[i]; }
    const std::vector<double>& values() const { return w_; }

    double total() const { return total_; }
    double zeta() const { return zeta_; }
    double max_weight() const { return max_; }
    double min_weight() const { return min_; }
    std::vector<double> sqrt_values() const;

private:
    std::vector<double> w_;
    double total_ = 0.0, zeta_ = 0.0, max_ = 0.0, min_ = 0.0;
};

// Symmetric n x n array of coupling amplitudes, stored as the upper triangle
// so that symmetry is structural rather than checked. Off-diagonal entries
// must be non-negative when the flag is set (the default); diagonal entries
// are unconstrained and never enter the weighted Laplacian.
class SymmetricArray {
public:
    static SymmetricArray zero(int n, bool off_diagonal_non_negative = true);
    static SymmetricArray from_dense(const std::vector<std::vector<double>>& a,
                                     bool off_diagonal_non_negative = true);

    int size() const { return n_; }
    double operator()(int i, int j) const { return upper_[index(i, j)]; }
    void set(int i, int j, double value);

    bool off_diagonal_non_negative() const { return offdiag_nonneg_; }
    double diagonal_floor() const; // smallest diagonal entry
    double max_abs() const;

private:
    SymmetricArray(int n, bool flag);
    std::size_t index(int i, int j) const;
    void check_range(int i, int j) const;

    int n_ = 0;
    bool offdiag_nonneg_ = true;
    std::vector<double> upper_; // packed upper triangle, diagonal included
};

// The symmetric weighted graph Laplacian: off-diagonals -a_ab sqrt(w_a w_b),
// diagonals sum_{g != a} a_ag w_g. Its kernel contains sqrt(w); all other
// eigenvalues are non-negative, and the second-smallest one is positive
// exactly when the off-diagonal sparsity pattern is connected.
class WeightedLaplacian {
public:
    WeightedLaplacian(linalg::Matrix m, WeightVector w, linalg::EigenSystem eig);

    const linalg::Matrix& matrix() const { return matrix_; }
    const WeightVector& weights() const { return weights_; }
    const std::vector<double>& eigenvalues() const { return eigen_.values; }
    const linalg::EigenSystem& eigen() const { return eigen_; }

    double norm() const { return norm_; }
    double lambda2() const;
    const std::vector<double>& fiedler_vector() const { return fiedler_; }
    int solver_sweeps() const { return eigen_.sweeps; }

    // lambda2 > threshold_scale * ||matrix|| declares the interaction graph
    // connected; the cutoff turns a strict-positivity statement into a
    // numerical verdict.
    bool connected(double threshold_scale = 1e-9) const;

private:
    linalg::Matrix matrix_;
    WeightVector weights_;
    linalg::EigenSystem eigen_;
    std::vector<double> fiedler_;
    double norm_ = 0.0;
};

WeightedLaplacian build_weighted_laplacian(const SymmetricArray& a, const WeightVector& w);

struct Lambda2Result {
    double value = 0.0;
    std::vector<double> fiedler;
};

Lambda2Result lambda2(const WeightedLaplacian& laplacian);

// Both sides of the weighted Poincare inequality for vectors:
//   sum_ab a_ab |x_a - x_b|^2 w_a w_b  >=  (lambda2 / sum w) sum_ab |x_a - x_b|^2 w_a w_b.
struct PoincareVectorsResult {
    double lhs = 0.0;
    double rhs = 0.0;
};

PoincareVectorsResult poincare_gap_vectors(const SymmetricArray& a, const WeightVector& w,
                                           const std::vector<std::vector<double>>& x);

// One point mass of a discrete species measure: (weight, value in R^d).
struct Atom {
    double mass = 0.0;
    std::vector<double> value;
};
using SpeciesSamples = std::vector<Atom>;

// Vector-function version over atomic measures. The left side sums only
// cross-species terms; the right side includes the self-fluctuation terms,
// scaled by rate = lambda2 * zeta / total weight. lhs_full adds the diagonal
// amplitudes a_aa back in, which is what the de-alignment variant bounds.
struct PoincareFunctionsResult {
    double lhs_off_diagonal = 0.0;
    double lhs_full = 0.0;
    double rhs = 0.0;
    double rate = 0.0;
};

PoincareFunctionsResult poincare_gap_functions(const SymmetricArray& a, const WeightVector& w,
                                               const std::vector<SpeciesSamples>& samples);

struct DegreeBoundResult {
    double degree = 0.0;
    double bound = 0.0;
};

// Node degree sum_{b != g} a_gb w_b against its lower bound zeta * lambda2.
DegreeBoundResult degree_lower_bound(const SymmetricArray& a, const WeightVector& w, int gamma);

// Ratio of the weighted to the unweighted Fiedler number together with the
// condition-number sandwich sum(w)/(k^2 n) <= ratio <= sum(w) k^2 / n.
struct SandwichResult {
    bool disconnected = false;
    double lower = 0.0;
    double ratio = 0.0;
    double upper = 0.0;
    double lambda2_weighted = 0.0;
    double lambda2_unweighted = 0.0;
};

SandwichResult sandwich_bound(const SymmetricArray& a, const WeightVector& w);

// Most negative admissible self-interaction amplitude: -(1/2) lambda2 * zeta / sum w.
double dealignment_margin(const SymmetricArray& a, const WeightVector& w);

} // namespace mscd::spectral
