#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "mscd/kernels.hpp"
#include "mscd/spectral.hpp"
#include "mscd/swarm.hpp"

namespace mscd::aggregate {

struct Species {
    std::size_t count = 0;
    std::vector<double> positions;
    double mass = 1.0;
};

struct AggregateState {
    double t = 0.0;
    int dim = 0;
    std::vector<Species> species;

    std::size_t total_agents() const;
    void validate() const;
    bool finite() const;
};

spectral::WeightVector species_weights(const AggregateState& state);
std::vector<double> center_of_mass(const AggregateState& state);

// Attraction toward every other agent:
//   v(s,i) = sum_b (1/N_b) sum_j phi_sb(|x_s^i - x_b^j|) (x_b^j - x_s^i).
// The continuum flux and the consensus theorems fix this orientation; see
// the module notes in the README about the sign of the agent-based system.
std::vector<std::vector<double>> aggregation_velocity(const AggregateState& state,
                                                      const kernels::CommunicationArray& phi,
                                                      int threads = 1);

AggregateState step(const AggregateState& state, const kernels::CommunicationArray& phi, double dt,
                    int threads = 1);

struct AggregateRecord {
    double t = 0.0;
    double diameter = 0.0;
    double delta_d = 0.0;       // mass-weighted squared spread
    double second_moment = 0.0; // about the initial center of mass
    double bound_ratio_d = 0.0; // delta_d against the decay envelope at D0
    std::vector<double> center_of_mass;
};

struct AggregateRunResult {
    std::vector<AggregateRecord> records;
    AggregateState final_state;
};

using StateObserver = std::function<void(const AggregateState&)>;

AggregateRunResult run_aggregation(AggregateState state, const kernels::CommunicationArray& phi,
                                   double dt, double t_final, int record_every, int threads = 1,
                                   const StateObserver& observer = {});

struct ConsensusReport {
    bool converged = false;
    std::vector<double> limit_point; // initial center of mass
    double rate_measured = 0.0;      // fitted slope of log delta_d
    double envelope_rate = 0.0;      // -2 zeta lambda2(Phi(D0))
    double final_second_moment = 0.0;
};

ConsensusReport consensus_check(const std::vector<AggregateRecord>& trajectory,
                                double envelope_rate);

// p-weighted diameter sum_ab (w_a w_b / N_a N_b) sum_ij |x_a^i - x_b^j|^p,
// non-increasing along the flow for every p >= 1.
double weighted_diameter_p(const AggregateState& state, double p);

} // namespace mscd::aggregate
