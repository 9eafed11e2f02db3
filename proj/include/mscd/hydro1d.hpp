#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mscd/kernels.hpp"

namespace mscd::hydro1d {

// Per-species cell averages of density and velocity on a uniform periodic grid.
struct HydroSpecies {
    std::vector<double> rho;
    std::vector<double> u;
};

struct HydroState1D {
    int n_cells = 0;
    double length = 0.0;
    double t = 0.0;
    std::vector<HydroSpecies> species;

    double dx() const { return length / n_cells; }
    double cell_center(int i) const { return (i + 0.5) * dx(); }
    void validate() const;
    double species_mass(int s) const;
    double total_mass() const;
    double total_momentum() const;
    double vacuum_floor() const; // 1e-10 * (total mass / length)
};

double torus_distance(double a, double b, double length);

// Direct quadrature of (phi * rho)(x_i) = sum_j phi(d(x_i, x_j)) rho_j dx
// with the wrapped torus distance.
std::vector<double> periodic_convolve(const kernels::RadialKernel& kernel,
                                      const std::vector<double>& rho, double length);

// e_a = du_a/dx + sum_b phi_ab * rho_b, the transported threshold quantity.
std::vector<double> e_field(const HydroState1D& state, const kernels::CommunicationArray& phi,
                            int species);

struct ThresholdSpecies1D {
    double min_e = 0.0;
    int worst_cell = 0;
};

struct ThresholdReport1D {
    std::vector<ThresholdSpecies1D> species;
    bool subcritical = false;
    double eps_grid = 0.0; // O(dx) slack from differencing e itself
};

ThresholdReport1D threshold_check_1d(const HydroState1D& state,
                                     const kernels::CommunicationArray& phi);

// Local Lax-Friedrichs finite-volume update of (rho, rho u) per species with
// the nonlocal alignment source, SSP-RK2 in time. Throws on CFL violation,
// non-finite values, or densities below -1e-12 of the mass scale.
HydroState1D step_hydro(const HydroState1D& state, const kernels::CommunicationArray& phi,
                        double dt, double cfl_limit = 0.4);

struct HydroSpeciesRecord {
    double mass = 0.0;
    double rho_min = 0.0;
    double e_min = 0.0;
    double e_max = 0.0;
    double q_min = 0.0;
    double q_max = 0.0;
    double dudx_max = 0.0;
    double u_min = 0.0;
    double u_max = 0.0;
};

struct HydroRecord {
    double t = 0.0;
    double total_momentum = 0.0;
    std::vector<HydroSpeciesRecord> species;
};

struct HydroRunOptions {
    std::optional<double> dt;  // fixed step; validated against the CFL limit
    double cfl = 0.4;          // used to choose dt when none is fixed
    double t_final = 0.0;
    int record_every = 1;
    std::function<void(const HydroState1D&)> observer; // called at record times
};

struct HydroRunResult {
    std::vector<HydroRecord> records;
    HydroState1D final_state;
    bool blew_up = false;
    double blowup_time = 0.0;
    int blowup_cell = -1;
    std::string blowup_reason;
    double max_dt_used = 0.0;
};

HydroRunResult run_hydro(HydroState1D state, const kernels::CommunicationArray& phi,
                         const HydroRunOptions& options);

// Transported-invariant report over a recorded trajectory.
struct HydroInvariantReport {
    double e_violation_constant = 0.0; // max(0, -min e) / (dx + dt)
    double q_extrema_drift = 0.0;
    double mass_drift_rel = 0.0;
    double momentum_drift = 0.0;
    double min_rho_seen = 0.0;
    bool vacuum_ok = false;
    double u_max_drift = 0.0; // growth of max u plus drop of min u
};

HydroInvariantReport invariant_monitors(const std::vector<HydroRecord>& records, double dx,
                                        double dt, double vacuum_floor);

} // namespace mscd::hydro1d
