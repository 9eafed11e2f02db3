#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mscd/kernels.hpp"
#include "mscd/spectral.hpp"

namespace mscd::threshold2d {

// One species sampled on a uniform rectangular grid: density plus the two
// velocity components, row-major with index i * ny + j.
struct SpeciesField {
    std::vector<double> rho;
    std::vector<double> u1;
    std::vector<double> u2;
};

struct Field2D {
    int nx = 0;
    int ny = 0;
    double spacing = 0.0;
    std::vector<SpeciesField> species;

    std::size_t cells() const { return static_cast<std::size_t>(nx) * ny; }
    double x(int i) const { return (i + 0.5) * spacing; }
    double y(int j) const { return (j + 0.5) * spacing; }
    void validate() const; // compact support: rho vanishes on the boundary ring
    double species_mass(int s) const;
    std::vector<double> masses() const;
};

// Direct quadrature (phi * rho)(x_i) = sum_j phi(|x_i - x_j|) rho_j dA,
// restricted to the support of rho.
std::vector<double> convolve2d(const kernels::RadialKernel& kernel, const Field2D& field,
                               int species);

// Eigenvalue gap of the symmetrized velocity gradient, in closed form:
// eta = sqrt((d1u1 - d2u2)^2 + (d2u1 + d1u2)^2). Central differences on the
// interior; the boundary ring is left at zero.
std::vector<double> spectral_gap_field(const Field2D& field, int species);

// C1 = (1/sqrt(2)) min_a sum_b phi_ab(D_inf) M_b, decreasing in D_inf.
double compute_c1(const kernels::CommunicationArray& phi, const std::vector<double>& masses,
                  double d_infinity);

enum class Verdict { Subcritical, Supercritical, Indeterminate };

std::string verdict_name(Verdict verdict);

struct ThresholdSpecies2D {
    double min_div_plus_conv = 0.0;
    double max_spectral_gap = 0.0;
};

struct ThresholdReport2D {
    bool c1_available = false;
    double c1 = 0.0;
    double d_infinity = 0.0;
    double delta_v0 = 0.0;
    double eps_grid = 0.0;
    std::vector<ThresholdSpecies2D> species;
    bool divergence_condition = false;   // min(div u + phi*rho) > eps_grid, every species
    bool spectral_gap_condition = false; // max eta < C1 / 2
    bool fluctuation_condition = false;  // delta_v0 <= C1
    Verdict verdict = Verdict::Indeterminate;
    std::string note;
};

struct ClassifyOptions {
    std::optional<double> user_d_infinity; // overrides the forecast
    double profile_r_max = 50.0;           // tail-fit window for the forecast
    int profile_samples = 48;
};

ThresholdReport2D classify(const Field2D& field, const kernels::CommunicationArray& phi,
                           const ClassifyOptions& options = {});

} // namespace mscd::threshold2d
