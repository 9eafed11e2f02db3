#include "mscd/runner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <memory>

#include <json.hpp>

#include "mscd/csv.hpp"

namespace mscd::runner {

using ordered = nlohmann::ordered_json;
using scenario::Mode;
using scenario::Scenario;

namespace {

struct MonitorBlock {
    ordered rows = ordered::array();
    bool any_required_failed = false;

    void add(const std::string& key, double value, double threshold, bool pass, bool required,
             const std::string& detail = "") {
        ordered row;
        row["key"] = key;
        row["value"] = value;
        row["threshold"] = threshold;
        row["pass"] = pass;
        row["required"] = required;
        if (!detail.empty()) row["detail"] = detail;
        rows.push_back(row);
        if (required && !pass) any_required_failed = true;
    }
};

// Envelope ratios are asserted only while the fluctuation is numerically
// resolvable; once it freezes at the floating-point cancellation floor the
// theoretical envelope keeps decaying below it and the ratio is meaningless.
constexpr double kResolvableFraction = 1e-13;

double fit_log_slope(const std::vector<double>& t, const std::vector<double>& v) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0, m = 0;
    const double v0 = v.empty() ? 0.0 : v.front();
    for (std::size_t k = 0; k < t.size(); ++k) {
        if (v[k] <= 1e-280 || v[k] <= 1e-14 * v0) continue;
        const double x = t[k], y = std::log(v[k]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        m += 1.0;
    }
    const double denom = m * sxx - sx * sx;
    return denom > 0.0 ? (m * sxy - sx * sy) / denom : 0.0;
}

bool masses_uniform(const std::vector<double>& masses) {
    for (double m : masses)
        if (m != masses.front()) return false;
    return true;
}

std::vector<double> linspace(double lo, double hi, int n) {
    std::vector<double> out(n);
    for (int k = 0; k < n; ++k)
        out[k] = lo + (hi - lo) * static_cast<double>(k) / std::max(1, n - 1);
    return out;
}

ordered tail_fit_json(const kernels::TailFit& fit) {
    ordered out;
    out["theta"] = fit.theta;
    out["c"] = fit.c;
    out["pareto_certified"] = fit.pareto_certified;
    if (!fit.reason.empty()) out["reason"] = fit.reason;
    return out;
}

void write_summary(const Scenario& sc, const ordered& summary) {
    if (sc.output.summary.empty()) return;
    std::ofstream out(sc.output.summary);
    if (!out) throw std::runtime_error("cannot open summary for writing: " + sc.output.summary);
    out << summary.dump(2) << "\n";
}

// Line-oriented full-state dumps, one block per record time.
class SnapshotFile {
public:
    SnapshotFile(const std::string& path, const std::string& mode) : out_(path) {
        if (!out_) throw std::runtime_error("cannot open snapshot for writing: " + path);
        out_ << "# mscd-snapshot v1 mode=" << mode << "\n";
    }

    void block(const swarm::SwarmState& state) {
        out_ << "# t=" << csv::format_double(state.t) << "\n";
        for (std::size_t s = 0; s < state.species.size(); ++s) {
            const swarm::Species& sp = state.species[s];
            for (std::size_t i = 0; i < sp.count; ++i) {
                out_ << s << " " << i;
                for (int d = 0; d < state.dim; ++d)
                    out_ << " " << csv::format_double(sp.positions[i * state.dim + d]);
                for (int d = 0; d < state.dim; ++d)
                    out_ << " " << csv::format_double(sp.velocities[i * state.dim + d]);
                out_ << "\n";
            }
        }
    }

    void block(const aggregate::AggregateState& state) {
        out_ << "# t=" << csv::format_double(state.t) << "\n";
        for (std::size_t s = 0; s < state.species.size(); ++s) {
            const aggregate::Species& sp = state.species[s];
            for (std::size_t i = 0; i < sp.count; ++i) {
                out_ << s << " " << i;
                for (int d = 0; d < state.dim; ++d)
                    out_ << " " << csv::format_double(sp.positions[i * state.dim + d]);
                out_ << "\n";
            }
        }
    }

    void block(const hydro1d::HydroState1D& state) {
        out_ << "# t=" << csv::format_double(state.t) << "\n";
        for (int i = 0; i < state.n_cells; ++i) {
            out_ << csv::format_double(state.cell_center(i));
            for (const hydro1d::HydroSpecies& s : state.species)
                out_ << " " << csv::format_double(s.rho[i]);
            for (const hydro1d::HydroSpecies& s : state.species)
                out_ << " " << csv::format_double(s.u[i]);
            out_ << "\n";
        }
    }

private:
    std::ofstream out_;
};

// ---- swarm -----------------------------------------------------------------

Outcome run_swarm(const Scenario& sc) {
    const swarm::SwarmState& state0 = *sc.swarm_state;
    const double max_kernel = sc.phi.max_kernel_value();
    const double dt = sc.integrator.dt ? *sc.integrator.dt
                                       : 0.1 / std::max(max_kernel, 1e-12);

    swarm::RunResult run;
    ordered summary;
    summary["mode"] = "swarm";
    summary["seed"] = sc.seed;
    summary["dt"] = dt;
    try {
        std::unique_ptr<SnapshotFile> snapshots;
        swarm::StateObserver observer;
        if (!sc.output.snapshots.empty()) {
            snapshots = std::make_unique<SnapshotFile>(sc.output.snapshots, "swarm");
            observer = [&snapshots](const swarm::SwarmState& s) { snapshots->block(s); };
        }
        run = swarm::run(state0, sc.phi, dt, sc.integrator.t_final, sc.integrator.record_every,
                         sc.threads, observer);
    } catch (const swarm::BlowupError& err) {
        summary["blowup"] = {{"time", err.time}, {"reason", err.what()}};
        write_summary(sc, summary);
        return Outcome{kExitBlowup, summary.dump(2)};
    }

    const int dim = state0.dim;
    if (!sc.output.csv.empty()) {
        std::vector<std::string> columns = {"t",           "diameter",      "delta_v",
                                            "delta_e",     "lambda2_at_d",  "bound_ratio_e",
                                            "bound_ratio_v"};
        for (int d = 0; d < dim; ++d) columns.push_back("momentum_" + std::to_string(d));
        csv::Writer writer(sc.output.csv, "mscd-diagnostics v1 mode=swarm", columns);
        for (const swarm::DiagnosticsRecord& rec : run.records) {
            std::vector<double> row = {rec.t,
                                       rec.diameter,
                                       rec.delta_v,
                                       rec.delta_e,
                                       rec.lambda2_at_diameter,
                                       rec.bound_ratio_e,
                                       rec.bound_ratio_v};
            for (int d = 0; d < dim; ++d) row.push_back(rec.momentum[d]);
            writer.row(row);
        }
    }
    // snapshots stream during the run via the observer

    const auto& records = run.records;
    const swarm::DiagnosticsRecord& first = records.front();
    const swarm::DiagnosticsRecord& last = records.back();

    double max_dv_increase = 0.0, max_ratio_e = 0.0, max_ratio_v = 0.0, momentum_drift = 0.0;
    double max_diameter = 0.0;
    std::vector<double> ts, des;
    for (std::size_t k = 0; k < records.size(); ++k) {
        const auto& rec = records[k];
        if (k > 0) max_dv_increase = std::max(max_dv_increase,
                                              rec.delta_v - records[k - 1].delta_v);
        if (rec.delta_e > kResolvableFraction * first.delta_e)
            max_ratio_e = std::max(max_ratio_e, rec.bound_ratio_e);
        max_ratio_v = std::max(max_ratio_v, rec.bound_ratio_v);
        max_diameter = std::max(max_diameter, rec.diameter);
        for (int d = 0; d < dim; ++d)
            momentum_drift = std::max(momentum_drift,
                                      std::abs(rec.momentum[d] - first.momentum[d]));
        ts.push_back(rec.t);
        des.push_back(rec.delta_e);
    }
    const double momentum_scale =
        std::max({1e-30, std::abs(*std::max_element(first.momentum.begin(), first.momentum.end(),
                                                    [](double a, double b) {
                                                        return std::abs(a) < std::abs(b);
                                                    })),
                  first.delta_v});

    summary["final"] = {{"t", last.t},
                        {"delta_e", last.delta_e},
                        {"delta_v", last.delta_v},
                        {"diameter", last.diameter}};
    summary["measured"] = {{"delta_e_log_slope", fit_log_slope(ts, des)},
                           {"max_bound_ratio_e", max_ratio_e},
                           {"max_bound_ratio_v", max_ratio_v},
                           {"max_diameter", max_diameter},
                           {"momentum_drift_rel", momentum_drift / momentum_scale}};

    // Tail certification and the uniform diameter estimate.
    bool have_forecast = false;
    swarm::DiameterForecast forecast;
    if (state0.species.size() >= 2) {
        try {
            const spectral::WeightVector w = swarm::species_weights(state0);
            const auto profile = kernels::connectivity_profile(
                sc.phi, w, linspace(0.0, sc.profile.r_max, sc.profile.samples));
            const kernels::TailFit fit =
                kernels::estimate_tail_exponent(profile, sc.profile.fit_r_min,
                                                sc.profile.fit_r_max);
            summary["tail_fit"] = tail_fit_json(fit);
            if (fit.pareto_certified) {
                forecast = swarm::diameter_forecast(first.diameter, first.delta_v, w, fit.theta,
                                                    fit.c);
                have_forecast = true;
                summary["forecast"] = {{"d_infinity", forecast.d_infinity},
                                       {"c_theta", forecast.c_theta},
                                       {"rate", forecast.rate},
                                       {"theta", forecast.theta},
                                       {"horizon_1e6", forecast.horizon(1e-6)}};
            }
        } catch (const std::exception& err) {
            summary["tail_fit"] = {{"pareto_certified", false}, {"reason", err.what()}};
        }
    }

    MonitorBlock monitors;
    const scenario::Tolerances& tol = sc.tolerances;
    monitors.add("eq4.10-max-principle", max_dv_increase,
                 tol.delta_v_monotone * std::max(1.0, first.delta_v),
                 max_dv_increase <= tol.delta_v_monotone * std::max(1.0, first.delta_v), true);
    const bool uniform = masses_uniform(sc.species_masses);
    monitors.add("thm4.1-energy-envelope", max_ratio_e, 1.0 + tol.envelope_slack,
                 max_ratio_e <= 1.0 + tol.envelope_slack, uniform,
                 uniform ? "enforced while delta_e stays above 1e-13 of its initial value"
                         : "reported only: species masses are non-uniform, the discrete "
                           "flow carries unit-mass normalization");
    monitors.add("momentum-conservation", momentum_drift / momentum_scale, tol.momentum_drift,
                 momentum_drift / momentum_scale <= tol.momentum_drift, true);
    if (have_forecast)
        monitors.add("thm1.1-diameter-bound", max_diameter, forecast.d_infinity,
                     max_diameter <= forecast.d_infinity, false,
                     "estimate from the certified tail constants");
    summary["monitors"] = monitors.rows;

    write_summary(sc, summary);
    return Outcome{monitors.any_required_failed ? kExitMonitor : kExitOk, summary.dump(2)};
}

// ---- aggregate ---------------------------------------------------------------

Outcome run_aggregate(const Scenario& sc) {
    const aggregate::AggregateState& state0 = *sc.aggregate_state;
    const double dt =
        sc.integrator.dt ? *sc.integrator.dt : 0.1 / std::max(sc.phi.max_kernel_value(), 1e-12);

    ordered summary;
    summary["mode"] = "aggregate";
    summary["seed"] = sc.seed;
    summary["dt"] = dt;

    aggregate::AggregateRunResult run;
    try {
        std::unique_ptr<SnapshotFile> snapshots;
        aggregate::StateObserver observer;
        if (!sc.output.snapshots.empty()) {
            snapshots = std::make_unique<SnapshotFile>(sc.output.snapshots, "aggregate");
            observer = [&snapshots](const aggregate::AggregateState& s) { snapshots->block(s); };
        }
        run = aggregate::run_aggregation(state0, sc.phi, dt, sc.integrator.t_final,
                                         sc.integrator.record_every, sc.threads, observer);
    } catch (const swarm::BlowupError& err) {
        summary["blowup"] = {{"time", err.time}, {"reason", err.what()}};
        write_summary(sc, summary);
        return Outcome{kExitBlowup, summary.dump(2)};
    }

    const int dim = state0.dim;
    if (!sc.output.csv.empty()) {
        std::vector<std::string> columns = {"t", "diameter", "delta_d", "second_moment",
                                            "bound_ratio_d"};
        for (int d = 0; d < dim; ++d) columns.push_back("com_" + std::to_string(d));
        csv::Writer writer(sc.output.csv, "mscd-diagnostics v1 mode=aggregate", columns);
        for (const aggregate::AggregateRecord& rec : run.records) {
            std::vector<double> row = {rec.t, rec.diameter, rec.delta_d, rec.second_moment,
                                       rec.bound_ratio_d};
            for (int d = 0; d < dim; ++d) row.push_back(rec.center_of_mass[d]);
            writer.row(row);
        }
    }
    const auto& records = run.records;
    const aggregate::AggregateRecord& first = records.front();

    double envelope_rate = 0.0;
    if (state0.species.size() >= 2) {
        const spectral::WeightVector w = aggregate::species_weights(state0);
        const auto lap = spectral::build_weighted_laplacian(sc.phi.array_at(first.diameter), w);
        envelope_rate = 2.0 * w.zeta() * lap.lambda2();
    }
    const aggregate::ConsensusReport consensus =
        aggregate::consensus_check(records, envelope_rate);

    double max_d_increase = 0.0, max_ratio_d = 0.0, com_drift = 0.0;
    std::vector<double> ts, dds;
    for (std::size_t k = 0; k < records.size(); ++k) {
        const auto& rec = records[k];
        if (k > 0) max_d_increase = std::max(max_d_increase,
                                             rec.diameter - records[k - 1].diameter);
        if (rec.delta_d > kResolvableFraction * first.delta_d)
            max_ratio_d = std::max(max_ratio_d, rec.bound_ratio_d);
        for (int d = 0; d < dim; ++d)
            com_drift = std::max(com_drift,
                                 std::abs(rec.center_of_mass[d] - first.center_of_mass[d]));
        ts.push_back(rec.t);
        dds.push_back(rec.delta_d);
    }
    const double com_scale = std::max(1.0, first.diameter);

    summary["final"] = {{"t", records.back().t},
                        {"delta_d", records.back().delta_d},
                        {"diameter", records.back().diameter},
                        {"second_moment", records.back().second_moment}};
    summary["measured"] = {{"delta_d_log_slope", fit_log_slope(ts, dds)},
                           {"max_bound_ratio_d", max_ratio_d},
                           {"com_drift_rel", com_drift / com_scale}};
    summary["consensus"] = {{"converged", consensus.converged},
                            {"limit_point", consensus.limit_point},
                            {"rate_measured", consensus.rate_measured},
                            {"envelope_rate", -envelope_rate}};

    MonitorBlock monitors;
    const scenario::Tolerances& tol = sc.tolerances;
    monitors.add("thm6.1-diameter-monotone", max_d_increase,
                 tol.diameter_monotone * std::max(1.0, first.diameter),
                 max_d_increase <= tol.diameter_monotone * std::max(1.0, first.diameter), true);
    const bool uniform = masses_uniform(sc.species_masses);
    monitors.add("thm6.2-weighted-diameter-envelope", max_ratio_d, 1.0 + tol.envelope_slack,
                 max_ratio_d <= 1.0 + tol.envelope_slack, uniform,
                 "enforced while delta_d stays above 1e-13 of its initial value");
    monitors.add("center-of-mass-invariance", com_drift / com_scale, tol.com_drift,
                 com_drift / com_scale <= tol.com_drift, uniform,
                 uniform ? "" : "reported only: the flow conserves the 1/N-weighted mean, "
                                "which differs from the configured-mass center");
    monitors.add("thm1.4-consensus", consensus.final_second_moment,
                 tol.consensus_scale * std::max(first.delta_d, 1e-300), consensus.converged,
                 false, "informational: depends on the requested horizon");
    summary["monitors"] = monitors.rows;

    write_summary(sc, summary);
    return Outcome{monitors.any_required_failed ? kExitMonitor : kExitOk, summary.dump(2)};
}

// ---- hydro1d -----------------------------------------------------------------

Outcome run_hydro(const Scenario& sc) {
    const hydro1d::HydroState1D& state0 = *sc.hydro_state;
    ordered summary;
    summary["mode"] = "hydro1d";
    summary["seed"] = sc.seed;

    const hydro1d::ThresholdReport1D threshold = hydro1d::threshold_check_1d(state0, sc.phi);
    ordered threshold_json;
    threshold_json["subcritical"] = threshold.subcritical;
    threshold_json["eps_grid"] = threshold.eps_grid;
    ordered rows = ordered::array();
    for (const auto& row : threshold.species)
        rows.push_back({{"min_e", row.min_e}, {"worst_cell", row.worst_cell}});
    threshold_json["species"] = rows;
    summary["initial_threshold"] = threshold_json;

    hydro1d::HydroRunOptions options;
    options.dt = sc.integrator.dt;
    options.cfl = sc.integrator.cfl;
    options.t_final = sc.integrator.t_final;
    options.record_every = sc.integrator.record_every;
    std::unique_ptr<SnapshotFile> snapshots;
    if (!sc.output.snapshots.empty()) {
        snapshots = std::make_unique<SnapshotFile>(sc.output.snapshots, "hydro1d");
        options.observer = [&snapshots](const hydro1d::HydroState1D& s) { snapshots->block(s); };
    }

    const hydro1d::HydroRunResult run = hydro1d::run_hydro(state0, sc.phi, options);
    snapshots.reset();

    const int n_species = static_cast<int>(state0.species.size());
    if (!sc.output.csv.empty()) {
        std::vector<std::string> columns = {"t", "total_momentum"};
        for (int s = 0; s < n_species; ++s) {
            const std::string tag = std::to_string(s);
            for (const char* name : {"mass_", "rho_min_", "e_min_", "e_max_", "q_min_", "q_max_",
                                     "dudx_max_", "u_min_", "u_max_"})
                columns.push_back(name + tag);
        }
        csv::Writer writer(sc.output.csv, "mscd-diagnostics v1 mode=hydro1d", columns);
        for (const hydro1d::HydroRecord& rec : run.records) {
            std::vector<double> row = {rec.t, rec.total_momentum};
            for (const hydro1d::HydroSpeciesRecord& s : rec.species) {
                row.push_back(s.mass);
                row.push_back(s.rho_min);
                row.push_back(s.e_min);
                row.push_back(s.e_max);
                row.push_back(s.q_min);
                row.push_back(s.q_max);
                row.push_back(s.dudx_max);
                row.push_back(s.u_min);
                row.push_back(s.u_max);
            }
            writer.row(row);
        }
    }


    if (run.blew_up) {
        summary["blowup"] = {{"time", run.blowup_time},
                             {"cell", run.blowup_cell},
                             {"reason", run.blowup_reason}};
        write_summary(sc, summary);
        return Outcome{kExitBlowup, summary.dump(2)};
    }

    const double dx = state0.dx();
    const double dt_used = run.max_dt_used;
    const hydro1d::HydroInvariantReport inv =
        hydro1d::invariant_monitors(run.records, dx, dt_used, state0.vacuum_floor());

    summary["final"] = {{"t", run.final_state.t},
                        {"total_momentum", run.final_state.total_momentum()}};
    summary["measured"] = {{"e_violation_constant", inv.e_violation_constant},
                           {"q_extrema_drift", inv.q_extrema_drift},
                           {"mass_drift_rel", inv.mass_drift_rel},
                           {"momentum_drift", inv.momentum_drift},
                           {"min_rho_seen", inv.min_rho_seen},
                           {"u_max_drift", inv.u_max_drift},
                           {"max_dt_used", dt_used}};

    MonitorBlock monitors;
    const scenario::Tolerances& tol = sc.tolerances;
    monitors.add("mass-conservation", inv.mass_drift_rel, tol.mass_drift,
                 inv.mass_drift_rel <= tol.mass_drift, true);
    const double momentum_cap = dx * std::max(1.0, options.t_final - state0.t);
    monitors.add("momentum-drift", inv.momentum_drift, momentum_cap,
                 inv.momentum_drift <= momentum_cap, true);
    if (threshold.subcritical)
        monitors.add("thm2-e-invariance", inv.e_violation_constant, tol.e_invariance_c,
                     inv.e_violation_constant <= tol.e_invariance_c, true,
                     "constant C in min e >= -C (dx + dt)");
    monitors.add("q-transport-extrema", inv.q_extrema_drift, tol.q_drift_c * (dx + dt_used),
                 inv.q_extrema_drift <= tol.q_drift_c * (dx + dt_used), true);
    monitors.add("vacuum-floor", inv.min_rho_seen, state0.vacuum_floor(), inv.vacuum_ok, true);
    monitors.add("gradient-blowup", 0.0, 1.0, true, true, "no blow-up detected");
    monitors.add("velocity-max-principle", inv.u_max_drift, 10.0 * (dx + dt_used),
                 inv.u_max_drift <= 10.0 * (dx + dt_used), false);
    summary["monitors"] = monitors.rows;

    write_summary(sc, summary);
    return Outcome{monitors.any_required_failed ? kExitMonitor : kExitOk, summary.dump(2)};
}

// ---- threshold2d ---------------------------------------------------------------

Outcome run_threshold2d(const Scenario& sc) {
    threshold2d::ClassifyOptions options;
    options.user_d_infinity = sc.user_d_infinity;
    options.profile_r_max = sc.profile.r_max;
    options.profile_samples = sc.profile.samples;
    const threshold2d::ThresholdReport2D report = threshold2d::classify(*sc.field2d, sc.phi,
                                                                        options);

    ordered summary;
    summary["mode"] = "threshold2d";
    summary["verdict"] = threshold2d::verdict_name(report.verdict);
    summary["c1"] = report.c1;
    summary["c1_available"] = report.c1_available;
    summary["d_infinity"] = report.d_infinity;
    summary["delta_v0"] = report.delta_v0;
    summary["eps_grid"] = report.eps_grid;
    if (!report.note.empty()) summary["note"] = report.note;
    ordered rows = ordered::array();
    for (const auto& row : report.species)
        rows.push_back({{"min_div_plus_conv", row.min_div_plus_conv},
                        {"max_spectral_gap", row.max_spectral_gap}});
    summary["species"] = rows;

    MonitorBlock monitors;
    double worst_div = 0.0, worst_gap = 0.0;
    for (const auto& row : report.species) {
        worst_div = (&row == &report.species.front())
                        ? row.min_div_plus_conv
                        : std::min(worst_div, row.min_div_plus_conv);
        worst_gap = std::max(worst_gap, row.max_spectral_gap);
    }
    monitors.add("thm3-eq1.8a-divergence", worst_div, report.eps_grid,
                 report.divergence_condition, false);
    monitors.add("thm3-eq1.8b-spectral-gap", worst_gap, 0.5 * report.c1,
                 report.spectral_gap_condition, false);
    monitors.add("thm3-deltav-c1", report.delta_v0, report.c1, report.fluctuation_condition,
                 false);
    summary["monitors"] = monitors.rows;

    write_summary(sc, summary);
    return Outcome{kExitOk, summary.dump(2)};
}

// ---- spectral report ------------------------------------------------------------

Outcome run_spectral_report(const Scenario& sc) {
    const spectral::WeightVector w(sc.species_masses);
    double d0 = 0.0;
    if (sc.swarm_state) d0 = swarm::diagnostics(*sc.swarm_state, sc.phi).diameter;

    const spectral::SymmetricArray a = sc.phi.array_at(d0);
    const spectral::WeightedLaplacian lap = spectral::build_weighted_laplacian(a, w);

    ordered summary;
    summary["mode"] = "spectral-report";
    summary["evaluated_at_r"] = d0;
    summary["lambda2"] = lap.lambda2();
    summary["fiedler"] = lap.fiedler_vector();
    summary["eigenvalues"] = lap.eigenvalues();
    summary["zeta"] = w.zeta();
    summary["total_weight"] = w.total();
    summary["connected"] = lap.connected();
    summary["dealignment_margin"] = spectral::dealignment_margin(a, w);
    {
        ordered degrees = ordered::array();
        for (int g = 0; g < w.size(); ++g) {
            const auto db = spectral::degree_lower_bound(a, w, g);
            degrees.push_back({{"degree", db.degree}, {"bound", db.bound}});
        }
        summary["degree_bounds"] = degrees;
    }

    const std::vector<double> sw = w.sqrt_values();
    const double kernel_residual = linalg::norm2(lap.matrix().multiply(sw));
    const double kernel_cap = 1e-10 * std::max(lap.norm(), 1e-300) * linalg::norm2(sw);

    MonitorBlock monitors;
    monitors.add("eq3.3-kernel-property", kernel_residual, kernel_cap,
                 kernel_residual <= kernel_cap, true);
    monitors.add("eq3.3-psd", lap.eigenvalues().front(), -1e-10 * std::max(lap.norm(), 1e-300),
                 lap.eigenvalues().front() >= -1e-10 * std::max(lap.norm(), 1e-300), true);

    if (w.size() >= 2) {
        const spectral::SandwichResult sandwich = spectral::sandwich_bound(a, w);
        ordered sj;
        sj["disconnected"] = sandwich.disconnected;
        if (!sandwich.disconnected) {
            sj["lower"] = sandwich.lower;
            sj["ratio"] = sandwich.ratio;
            sj["upper"] = sandwich.upper;
            const bool ok = sandwich.lower <= sandwich.ratio * (1.0 + 1e-9) &&
                            sandwich.ratio <= sandwich.upper * (1.0 + 1e-9);
            monitors.add("eq3.5-sandwich", sandwich.ratio, sandwich.upper, ok, true);
        }
        summary["sandwich"] = sj;

        const auto profile = kernels::connectivity_profile(
            sc.phi, w, linspace(0.0, sc.profile.r_max, sc.profile.samples));
        const kernels::TailFit fit = kernels::estimate_tail_exponent(profile, sc.profile.fit_r_min,
                                                                     sc.profile.fit_r_max);
        summary["tail_fit"] = tail_fit_json(fit);
        if (!sc.output.csv.empty()) {
            csv::Writer writer(sc.output.csv, "mscd-profile v1", {"r", "lambda2"});
            for (const kernels::ProfilePoint& p : profile) writer.row({p.r, p.lambda2});
        }
    }
    summary["monitors"] = monitors.rows;
    write_summary(sc, summary);
    return Outcome{monitors.any_required_failed ? kExitMonitor : kExitOk, summary.dump(2)};
}

} // namespace

Outcome run_scenario(const Scenario& sc) {
    switch (sc.mode) {
    case Mode::Swarm: return run_swarm(sc);
    case Mode::Aggregate: return run_aggregate(sc);
    case Mode::Hydro1D: return run_hydro(sc);
    case Mode::Threshold2D: return run_threshold2d(sc);
    case Mode::SpectralReport: return run_spectral_report(sc);
    }
    throw std::logic_error("run_scenario: unhandled mode");
}

Outcome profile_scenario(const Scenario& sc) {
    const spectral::WeightVector w(sc.species_masses);
    ordered summary;
    summary["mode"] = "profile";

    const std::vector<double> grid = linspace(0.0, sc.profile.r_max, sc.profile.samples);
    const auto profile = kernels::connectivity_profile(sc.phi, w, grid);
    const kernels::TailFit fit =
        kernels::estimate_tail_exponent(profile, sc.profile.fit_r_min, sc.profile.fit_r_max);
    summary["static"] = tail_fit_json(fit);

    if (!sc.output.csv.empty()) {
        csv::Writer writer(sc.output.csv, "mscd-profile v1", {"r", "lambda2"});
        for (const kernels::ProfilePoint& p : profile) writer.row({p.r, p.lambda2});
    }

    // Composed-with-diameter variant when an initial swarm state is present:
    // lambda2(Phi(D0 + dV0 t)) over the same abscissas read as times.
    if (sc.swarm_state) {
        const swarm::DiagnosticsRecord rec0 = swarm::diagnostics(*sc.swarm_state, sc.phi);
        const auto composed =
            kernels::connectivity_profile_at_diameter(sc.phi, w, grid, rec0.diameter,
                                                      rec0.delta_v);
        const kernels::TailFit composed_fit = kernels::estimate_tail_exponent(composed);
        summary["composed_with_diameter"] = tail_fit_json(composed_fit);
        summary["composed_with_diameter"]["d0"] = rec0.diameter;
        summary["composed_with_diameter"]["delta_v0"] = rec0.delta_v;
    }

    write_summary(sc, summary);
    return Outcome{kExitOk, summary.dump(2)};
}

Outcome report_from_csv(const std::string& csv_path) {
    const csv::Table table = csv::read(csv_path);
    ordered summary;
    summary["source"] = csv_path;
    summary["format"] = table.version_comment;

    auto column = [&](const std::string& name) {
        const int idx = table.column(name);
        if (idx < 0) throw std::runtime_error("CSV misses column " + name);
        std::vector<double> out;
        out.reserve(table.rows.size());
        for (const auto& row : table.rows) out.push_back(row[idx]);
        return out;
    };

    if (table.version_comment.find("mode=swarm") != std::string::npos) {
        const auto t = column("t");
        const auto dv = column("delta_v");
        const auto de = column("delta_e");
        const auto ratio_e = column("bound_ratio_e");
        double max_increase = 0.0, max_ratio = 0.0;
        for (std::size_t k = 1; k < dv.size(); ++k)
            max_increase = std::max(max_increase, dv[k] - dv[k - 1]);
        for (double r : ratio_e) max_ratio = std::max(max_ratio, r);
        summary["measured"] = {{"delta_e_log_slope", fit_log_slope(t, de)},
                               {"max_delta_v_increase", max_increase},
                               {"max_bound_ratio_e", max_ratio},
                               {"final_delta_v", dv.back()}};
    } else if (table.version_comment.find("mode=aggregate") != std::string::npos) {
        const auto t = column("t");
        const auto diam = column("diameter");
        const auto dd = column("delta_d");
        double max_increase = 0.0;
        for (std::size_t k = 1; k < diam.size(); ++k)
            max_increase = std::max(max_increase, diam[k] - diam[k - 1]);
        summary["measured"] = {{"delta_d_log_slope", fit_log_slope(t, dd)},
                               {"max_diameter_increase", max_increase},
                               {"final_delta_d", dd.back()}};
    } else if (table.version_comment.find("mode=hydro1d") != std::string::npos) {
        const auto mom = column("total_momentum");
        double drift = 0.0;
        for (double m : mom) drift = std::max(drift, std::abs(m - mom.front()));
        double mass_drift = 0.0;
        double min_e = std::numeric_limits<double>::infinity();
        for (int s = 0; table.column("mass_" + std::to_string(s)) >= 0; ++s) {
            const auto mass = column("mass_" + std::to_string(s));
            const auto e_min = column("e_min_" + std::to_string(s));
            for (double m : mass)
                mass_drift = std::max(mass_drift, std::abs(m - mass.front()) /
                                                      std::max(mass.front(), 1e-300));
            for (double e : e_min) min_e = std::min(min_e, e);
        }
        if (!std::isfinite(min_e)) min_e = 0.0;
        summary["measured"] = {{"momentum_drift", drift},
                               {"mass_drift_rel", mass_drift},
                               {"min_e_seen", min_e}};
    } else {
        throw std::runtime_error("unrecognized CSV format comment: " + table.version_comment);
    }
    return Outcome{kExitOk, summary.dump(2)};
}

} // namespace mscd::runner
