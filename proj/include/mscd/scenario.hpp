#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "mscd/aggregate.hpp"
#include "mscd/hydro1d.hpp"
#include "mscd/kernels.hpp"
#include "mscd/swarm.hpp"
#include "mscd/threshold2d.hpp"

namespace mscd::scenario {

enum class Mode { Swarm, Aggregate, Hydro1D, Threshold2D, SpectralReport };

std::string mode_name(Mode mode);

struct SchemaError {
    std::string field;
    std::string message;
};

// Thrown by parse_scenario; carries every schema problem found, with the
// config field each one belongs to.
class ScenarioParseError : public std::runtime_error {
public:
    explicit ScenarioParseError(std::vector<SchemaError> errors);
    const std::vector<SchemaError>& errors() const { return errors_; }

private:
    static std::string render(const std::vector<SchemaError>& errors);
    std::vector<SchemaError> errors_;
};

struct IntegratorOptions {
    std::optional<double> dt;
    double cfl = 0.4;
    double t_final = 1.0;
    int record_every = 1;
};

struct OutputOptions {
    std::string csv;
    std::string summary;
    std::string snapshots;
};

struct ProfileOptions {
    double r_max = 20.0;
    int samples = 48;
    double fit_r_min = 0.0;
    double fit_r_max = std::numeric_limits<double>::infinity();
};

// Monitor thresholds; defaults are the pinned contract values, every one
// overridable from the config.
struct Tolerances {
    double delta_v_monotone = 1e-8;
    double envelope_slack = 1e-6;
    double momentum_drift = 1e-8;
    double com_drift = 1e-8;
    double diameter_monotone = 1e-8;
    double mass_drift = 1e-12;
    double e_invariance_c = 10.0;
    double q_drift_c = 10.0;
    double consensus_scale = 1e-10;
};

// A fully validated scenario with the initial data already materialized
// (samplers are drawn here, deterministically from the seed).
struct Scenario {
    Mode mode = Mode::Swarm;
    std::uint64_t seed = 0;
    int threads = 1;
    int dimension = 1;

    kernels::CommunicationArray phi{1};
    IntegratorOptions integrator;
    OutputOptions output;
    ProfileOptions profile;
    Tolerances tolerances;

    std::optional<swarm::SwarmState> swarm_state;
    std::optional<aggregate::AggregateState> aggregate_state;
    std::optional<hydro1d::HydroState1D> hydro_state;
    std::optional<threshold2d::Field2D> field2d;
    std::optional<double> user_d_infinity;

    std::vector<double> species_masses;
};

Scenario parse_scenario(const std::string& path);
Scenario parse_scenario_text(const std::string& text, const std::string& base_dir);

// Reads the tabulated grid-file format of the 2D classifier:
// header "nx ny spacing n_species", then one cell per line with
// rho u1 u2 per species.
threshold2d::Field2D load_field2d(const std::string& path);

} // namespace mscd::scenario
