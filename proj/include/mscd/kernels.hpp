#pragma once

#include <limits>
#include <string>
#include <vector>

#include "mscd/spectral.hpp"

namespace mscd::kernels {

enum class KernelFamily { Zero, Constant, Pareto, Cutoff, Tabulated };

std::string family_name(KernelFamily family);

// A radial, monotone non-increasing communication kernel phi(r) >= 0.
// The one sanctioned exception is a flagged negative constant, usable only
// as a self-interaction (diagonal) entry within the de-alignment margin.
class RadialKernel {
public:
    static RadialKernel zero();
    static RadialKernel constant(double c, bool allow_negative = false);
    static RadialKernel pareto(double c, double theta); // c * (1+r)^(-theta)
    static RadialKernel cutoff(double c, double radius); // c * indicator(r <= radius)
    static RadialKernel tabulated(std::vector<double> knots, std::vector<double> values);

    double operator()(double r) const;
    double max_abs() const { return max_abs_; } // |phi(0)|

    KernelFamily family() const { return family_; }
    bool is_zero() const;
    bool negative_constant() const;
    const std::vector<double>& parameters() const { return params_; }
    const std::vector<double>& knots() const { return knots_; }
    const std::vector<double>& values() const { return values_; }

private:
    RadialKernel() = default;

    KernelFamily family_ = KernelFamily::Zero;
    std::vector<double> params_; // family-specific, see factories
    std::vector<double> knots_;
    std::vector<double> values_;
    double max_abs_ = 0.0;
};

// Reads a two-column text file (r, value) with '#' comments.
RadialKernel load_tabulated_kernel(const std::string& path);

// Symmetric array of kernels with shared upper-triangle storage, so
// phi_ab and phi_ba are the same object by construction.
class CommunicationArray {
public:
    explicit CommunicationArray(int n);

    int size() const { return n_; }
    void set(int i, int j, RadialKernel kernel);
    const RadialKernel& kernel(int i, int j) const;

    // Pointwise evaluation Phi(r) as a symmetric coupling array.
    spectral::SymmetricArray array_at(double r) const;

    double max_kernel_value() const; // max over entries of |phi(0)|
    bool has_negative_diagonal() const;

private:
    std::size_t index(int i, int j) const;
    int n_ = 0;
    std::vector<RadialKernel> upper_;
};

struct ProfilePoint {
    double r = 0.0;
    double lambda2 = 0.0;
};

// lambda2 of the weighted Laplacian of Phi(r) along an ascending r grid.
// Decreasing kernels force a non-increasing profile; that is re-checked and
// a violation reported as a solver failure.
std::vector<ProfilePoint> connectivity_profile(const CommunicationArray& phi,
                                               const spectral::WeightVector& w,
                                               const std::vector<double>& r_grid);

// Variant composed with the linear diameter envelope D(t) = d0 + delta_v0 * t,
// i.e. lambda2(Phi(D(t))) sampled on a t grid.
std::vector<ProfilePoint> connectivity_profile_at_diameter(const CommunicationArray& phi,
                                                           const spectral::WeightVector& w,
                                                           const std::vector<double>& t_grid,
                                                           double d0, double delta_v0);

struct TailFit {
    double theta = 0.0;
    double c = 0.0;
    bool pareto_certified = false;
    std::string reason;
};

// Least-squares fit of log lambda2 against -log(1+r). Certification demands
// theta < 1 - margin and that every sample dominates c (1+r)^(-theta) up to
// the fit slack.
TailFit estimate_tail_exponent(const std::vector<ProfilePoint>& profile,
                               double r_min = 0.0,
                               double r_max = std::numeric_limits<double>::infinity());

} // namespace mscd::kernels
