#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "mscd/kernels.hpp"
#include "mscd/spectral.hpp"

namespace mscd::swarm {

// One species: flat position/velocity arrays of count * dim doubles.
// mass is the species weight used by diagnostics and the Laplacian; the
// force law always carries the 1/N_b normalization regardless of mass.
struct Species {
    std::size_t count = 0;
    std::vector<double> positions;
    std::vector<double> velocities;
    double mass = 1.0;
};

struct SwarmState {
    double t = 0.0;
    int dim = 0;
    std::vector<Species> species;

    std::size_t total_agents() const;
    void validate() const;
    bool finite() const;
};

spectral::WeightVector species_weights(const SwarmState& state);

// Time-stamped scalars for one sample of a run. bound_ratio_e compares
// delta_e against the energy-fluctuation envelope accumulated along the
// recorded diameter history; bound_ratio_v does the same for delta_v in
// the exponential regime (evaluated at the running max diameter).
struct DiagnosticsRecord {
    double t = 0.0;
    double diameter = 0.0;
    double delta_v = 0.0;
    double delta_e = 0.0;
    double lambda2_at_diameter = 0.0;
    std::vector<double> momentum;
    double bound_ratio_e = 0.0;
    double bound_ratio_v = 0.0;
};

// Alignment acceleration of every agent:
//   a(s,i) = sum_b (1/N_b) sum_j phi_sb(|x_b^j - x_s^i|) (v_b^j - v_s^i).
// Parallelizable over agents; each agent accumulates in a fixed order, so
// results are identical for every thread count.
std::vector<std::vector<double>> alignment_force(const SwarmState& state,
                                                 const kernels::CommunicationArray& phi,
                                                 int threads = 1);

SwarmState step(const SwarmState& state, const kernels::CommunicationArray& phi, double dt,
                int threads = 1);

// Instantaneous diagnostics; the two bound ratios need run history and stay 0.
DiagnosticsRecord diagnostics(const SwarmState& state, const kernels::CommunicationArray& phi);

struct RunResult {
    std::vector<DiagnosticsRecord> records;
    SwarmState final_state;
};

// Called at every record time with the full state (snapshot dumps etc.).
using StateObserver = std::function<void(const SwarmState&)>;

// Fixed-step RK4 with records every record_every steps (plus first and last).
// Throws BlowupError on non-finite state.
RunResult run(SwarmState state, const kernels::CommunicationArray& phi, double dt, double t_final,
              int record_every, int threads = 1, const StateObserver& observer = {});

struct BlowupError : std::runtime_error {
    BlowupError(const std::string& what, double when) : std::runtime_error(what), time(when) {}
    double time = 0.0;
};

// Uniform-in-time diameter estimate D_inf <= D0 + C_theta * delta_v0, from
// integrating the velocity-fluctuation envelope of the certified tail
// lambda2(Phi(r)) >= c (1+r)^(-theta) composed with the linear diameter bound
// D(t) <= D0 + delta_v0 t. At theta = 0 this is the plain exponential
// envelope with rate zeta c.
struct DiameterForecast {
    double d_infinity = 0.0;
    double c_theta = 0.0; // D_inf = D0 + c_theta * delta_v0
    double rate = 0.0;    // instantaneous envelope rate at D0: zeta c (1+D0)^(-theta)
    double theta = 0.0;
    double delta_v0 = 0.0;
    double s0 = 1.0;         // 1 + D0
    double envelope_k = 0.0; // zeta c / (delta_v0 (1-theta))

    double envelope(double t) const;
    // Time at which the envelope has decayed to `target` (e.g. 1e-6).
    double horizon(double target) const;
};

DiameterForecast diameter_forecast(double d0, double delta_v0, const spectral::WeightVector& w,
                                   double theta, double c);

// Adaptive-Simpson value of the envelope integral C = int_0^inf exp(-rate t^(1-theta)) dt.
double fractional_exponential_integral(double rate, double theta);

} // namespace mscd::swarm
