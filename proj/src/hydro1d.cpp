#include "mscd/hydro1d.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mscd/swarm.hpp" // BlowupError

namespace mscd::hydro1d {

void HydroState1D::validate() const {
    if (n_cells < 4) throw std::invalid_argument("HydroState1D: needs at least 4 cells");
    if (!(length > 0.0)) throw std::invalid_argument("HydroState1D: torus length must be positive");
    if (species.empty()) throw std::invalid_argument("HydroState1D: needs at least one species");
    for (const HydroSpecies& s : species) {
        if (static_cast<int>(s.rho.size()) != n_cells || static_cast<int>(s.u.size()) != n_cells)
            throw std::invalid_argument("HydroState1D: field size mismatch");
        for (int i = 0; i < n_cells; ++i) {
            if (!std::isfinite(s.rho[i]) || !std::isfinite(s.u[i]))
                throw std::invalid_argument("HydroState1D: non-finite field value");
            if (s.rho[i] < 0.0)
                throw std::invalid_argument("HydroState1D: negative density");
        }
    }
}

double HydroState1D::species_mass(int s) const {
    double m = 0.0;
    for (double r : species[s].rho) m += r;
    return m * dx();
}

double HydroState1D::total_mass() const {
    double m = 0.0;
    for (int s = 0; s < static_cast<int>(species.size()); ++s) m += species_mass(s);
    return m;
}

double HydroState1D::total_momentum() const {
    double m = 0.0;
    for (const HydroSpecies& s : species)
        for (int i = 0; i < n_cells; ++i) m += s.rho[i] * s.u[i];
    return m * dx();
}

double HydroState1D::vacuum_floor() const { return 1e-10 * total_mass() / length; }

double torus_distance(double a, double b, double length) {
    double d = std::abs(a - b);
    d = std::fmod(d, length);
    return std::min(d, length - d);
}

namespace {

// Kernel weights over cell offsets; the convolution only sees |i - j| mod n.
std::vector<double> kernel_table(const kernels::RadialKernel& kernel, int n, double length) {
    const double dx = length / n;
    std::vector<double> w(n);
    for (int k = 0; k < n; ++k) w[k] = kernel(torus_distance(0.0, k * dx, length));
    return w;
}

std::vector<double> convolve_with_table(const std::vector<double>& table,
                                        const std::vector<double>& rho, double dx) {
    const int n = static_cast<int>(rho.size());
    std::vector<double> out(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int j = 0; j < n; ++j) {
            int k = i - j;
            if (k < 0) k += n;
            s += table[k] * rho[j];
        }
        out[i] = s * dx;
    }
    return out;
}

std::vector<double> central_difference(const std::vector<double>& f, double dx) {
    const int n = static_cast<int>(f.size());
    std::vector<double> df(n);
    for (int i = 0; i < n; ++i) {
        const int ip = (i + 1) % n;
        const int im = (i + n - 1) % n;
        df[i] = (f[ip] - f[im]) / (2.0 * dx);
    }
    return df;
}

} // namespace

std::vector<double> periodic_convolve(const kernels::RadialKernel& kernel,
                                      const std::vector<double>& rho, double length) {
    if (rho.empty()) throw std::invalid_argument("periodic_convolve: empty grid");
    const int n = static_cast<int>(rho.size());
    return convolve_with_table(kernel_table(kernel, n, length), rho, length / n);
}

std::vector<double> e_field(const HydroState1D& state, const kernels::CommunicationArray& phi,
                            int species) {
    const int n_species = static_cast<int>(state.species.size());
    if (phi.size() != n_species)
        throw std::invalid_argument("e_field: kernel array/species count mismatch");
    std::vector<double> e = central_difference(state.species[species].u, state.dx());
    for (int b = 0; b < n_species; ++b) {
        const std::vector<double> conv =
            periodic_convolve(phi.kernel(species, b), state.species[b].rho, state.length);
        for (int i = 0; i < state.n_cells; ++i) e[i] += conv[i];
    }
    return e;
}

ThresholdReport1D threshold_check_1d(const HydroState1D& state,
                                     const kernels::CommunicationArray& phi) {
    state.validate();
    const double floor = state.vacuum_floor();
    for (const HydroSpecies& s : state.species)
        for (double r : s.rho)
            if (r < floor)
                throw std::invalid_argument("threshold_check_1d: vacuum cells present; the "
                                            "sub-critical statement needs non-vacuous data");

    ThresholdReport1D report;
    report.subcritical = true;
    const double dx = state.dx();
    for (int a = 0; a < static_cast<int>(state.species.size()); ++a) {
        const std::vector<double> e = e_field(state, phi, a);
        ThresholdSpecies1D row;
        row.min_e = e[0];
        for (int i = 1; i < state.n_cells; ++i) {
            if (e[i] < row.min_e) {
                row.min_e = e[i];
                row.worst_cell = i;
            }
        }
        const std::vector<double> de = central_difference(e, dx);
        double max_slope = 0.0;
        for (double d : de) max_slope = std::max(max_slope, std::abs(d));
        report.eps_grid = std::max(report.eps_grid, dx * max_slope);
        report.species.push_back(row);
    }
    for (const ThresholdSpecies1D& row : report.species)
        if (row.min_e < -report.eps_grid) report.subcritical = false;
    return report;
}

namespace {

struct Conserved {
    std::vector<double> rho;
    std::vector<double> momentum;
};

std::vector<Conserved> to_conserved(const HydroState1D& state) {
    std::vector<Conserved> u(state.species.size());
    for (std::size_t s = 0; s < state.species.size(); ++s) {
        u[s].rho = state.species[s].rho;
        u[s].momentum.resize(state.n_cells);
        for (int i = 0; i < state.n_cells; ++i)
            u[s].momentum[i] = state.species[s].rho[i] * state.species[s].u[i];
    }
    return u;
}

void to_primitive(const std::vector<Conserved>& u, HydroState1D& state, double rho_guard) {
    for (std::size_t s = 0; s < u.size(); ++s) {
        state.species[s].rho = u[s].rho;
        for (int i = 0; i < state.n_cells; ++i)
            state.species[s].u[i] =
                u[s].rho[i] > rho_guard ? u[s].momentum[i] / u[s].rho[i] : 0.0;
    }
}

// Semi-discrete right-hand side: LLF convective flux divergence plus the
// alignment exchange source evaluated via periodic convolutions.
std::vector<Conserved> hydro_rhs(const HydroState1D& state,
                                 const std::vector<std::vector<std::vector<double>>>& tables) {
    const int n = state.n_cells;
    const int n_species = static_cast<int>(state.species.size());
    const double dx = state.dx();
    const double mass_scale = std::max(state.total_mass() / state.length, 1e-30);

    std::vector<Conserved> rhs(n_species);
    std::vector<std::vector<double>> conv_rho(n_species), conv_momentum(n_species);
    for (int b = 0; b < n_species; ++b) {
        conv_rho[b].assign(n, 0.0);
        conv_momentum[b].assign(n, 0.0);
    }

    // Convolutions phi_ab * rho_b and phi_ab * (rho_b u_b) for every pair.
    // tables[a][b] holds the offset weights of phi_ab on this grid.
    std::vector<double> rho_u(n);
    for (int a = 0; a < n_species; ++a) {
        rhs[a].rho.assign(n, 0.0);
        rhs[a].momentum.assign(n, 0.0);
        for (int b = 0; b < n_species; ++b) {
            for (int i = 0; i < n; ++i) rho_u[i] = state.species[b].rho[i] * state.species[b].u[i];
            const std::vector<double> cr = convolve_with_table(tables[a][b], state.species[b].rho, dx);
            const std::vector<double> cm = convolve_with_table(tables[a][b], rho_u, dx);
            for (int i = 0; i < n; ++i) {
                conv_rho[a][i] += cr[i];
                conv_momentum[a][i] += cm[i];
            }
        }
    }

    for (int a = 0; a < n_species; ++a) {
        const std::vector<double>& rho = state.species[a].rho;
        const std::vector<double>& u = state.species[a].u;
        std::vector<double> momentum(n);
        for (int i = 0; i < n; ++i) momentum[i] = rho[i] * u[i];

        // Minmod-limited piecewise-linear reconstruction of (rho, rho u);
        // TVD, so shocks stay monotone while smooth regions regain accuracy.
        auto minmod = [](double p, double q) {
            if (p > 0.0 && q > 0.0) return std::min(p, q);
            if (p < 0.0 && q < 0.0) return std::max(p, q);
            return 0.0;
        };
        std::vector<double> slope_rho(n), slope_momentum(n);
        for (int i = 0; i < n; ++i) {
            const int ip = (i + 1) % n;
            const int im = (i + n - 1) % n;
            slope_rho[i] = minmod(rho[i] - rho[im], rho[ip] - rho[i]);
            slope_momentum[i] = minmod(momentum[i] - momentum[im], momentum[ip] - momentum[i]);
        }

        const double guard = 1e-14 * mass_scale;
        auto velocity = [guard](double r, double m) { return r > guard ? m / r : 0.0; };

        // Interface fluxes; index i is the interface between cells i and i+1.
        std::vector<double> flux_rho(n), flux_momentum(n);
        for (int i = 0; i < n; ++i) {
            const int ip = (i + 1) % n;
            const double rho_l = std::max(0.0, rho[i] + 0.5 * slope_rho[i]);
            const double rho_r = std::max(0.0, rho[ip] - 0.5 * slope_rho[ip]);
            const double mom_l = momentum[i] + 0.5 * slope_momentum[i];
            const double mom_r = momentum[ip] - 0.5 * slope_momentum[ip];
            const double u_l = velocity(rho_l, mom_l);
            const double u_r = velocity(rho_r, mom_r);
            const double a_speed = std::max(std::abs(u_l), std::abs(u_r));
            flux_rho[i] = 0.5 * (rho_l * u_l + rho_r * u_r) - 0.5 * a_speed * (rho_r - rho_l);
            flux_momentum[i] =
                0.5 * (mom_l * u_l + mom_r * u_r) - 0.5 * a_speed * (mom_r - mom_l);
        }
        for (int i = 0; i < n; ++i) {
            const int im = (i + n - 1) % n;
            rhs[a].rho[i] = -(flux_rho[i] - flux_rho[im]) / dx;
            // Alignment source rho_a phi*(rho u) - (rho_a u_a) phi*rho; the
            // symmetric offset table makes the pairwise momentum exchange
            // cancel exactly in the total.
            rhs[a].momentum[i] = -(flux_momentum[i] - flux_momentum[im]) / dx +
                                 rho[i] * conv_momentum[a][i] -
                                 rho[i] * u[i] * conv_rho[a][i];
        }
    }
    return rhs;
}

double max_speed(const HydroState1D& state) {
    double m = 0.0;
    for (const HydroSpecies& s : state.species)
        for (double u : s.u) m = std::max(m, std::abs(u));
    return m;
}

double max_alignment_rate(const HydroState1D& state, const kernels::CommunicationArray& phi) {
    // Relaxation scale sum_b |phi_ab|(0) M_b bounding the source stiffness.
    double worst = 0.0;
    for (int a = 0; a < static_cast<int>(state.species.size()); ++a) {
        double r = 0.0;
        for (int b = 0; b < static_cast<int>(state.species.size()); ++b)
            r += phi.kernel(a, b).max_abs() * state.species_mass(b);
        worst = std::max(worst, r);
    }
    return worst;
}

} // namespace

HydroState1D step_hydro(const HydroState1D& state, const kernels::CommunicationArray& phi,
                        double dt, double cfl_limit) {
    if (!(dt > 0.0)) throw std::invalid_argument("step_hydro: dt must be positive");
    const int n_species = static_cast<int>(state.species.size());
    if (phi.size() != n_species)
        throw std::invalid_argument("step_hydro: kernel array/species count mismatch");

    const double speed = max_speed(state);
    if (speed > 0.0 && dt > cfl_limit * state.dx() / speed + 1e-15)
        throw std::invalid_argument("step_hydro: CFL violation (dt = " + std::to_string(dt) +
                                    " > " + std::to_string(cfl_limit * state.dx() / speed) + ")");
    const double align_rate = max_alignment_rate(state, phi);
    if (align_rate > 0.0 && dt > 1.0 / align_rate + 1e-15)
        throw std::invalid_argument("step_hydro: alignment source too stiff for dt = " +
                                    std::to_string(dt) + " (rate " + std::to_string(align_rate) +
                                    ")");

    std::vector<std::vector<std::vector<double>>> tables(n_species);
    for (int a = 0; a < n_species; ++a) {
        tables[a].resize(n_species);
        for (int b = 0; b < n_species; ++b)
            tables[a][b] = kernel_table(phi.kernel(a, b), state.n_cells, state.length);
    }

    const double rho_guard = 1e-14 * std::max(state.total_mass() / state.length, 1e-30);

    // SSP-RK2 (Heun): U1 = U + dt L(U); U2 = (U + U1 + dt L(U1)) / 2.
    std::vector<Conserved> u0 = to_conserved(state);
    const std::vector<Conserved> k1 = hydro_rhs(state, tables);

    HydroState1D stage = state;
    std::vector<Conserved> u1 = u0;
    for (int s = 0; s < n_species; ++s)
        for (int i = 0; i < state.n_cells; ++i) {
            u1[s].rho[i] += dt * k1[s].rho[i];
            u1[s].momentum[i] += dt * k1[s].momentum[i];
        }
    to_primitive(u1, stage, rho_guard);
    stage.t = state.t + dt;
    const std::vector<Conserved> k2 = hydro_rhs(stage, tables);

    HydroState1D out = state;
    out.t = state.t + dt;
    std::vector<Conserved> u2 = u0;
    for (int s = 0; s < n_species; ++s)
        for (int i = 0; i < state.n_cells; ++i) {
            u2[s].rho[i] = 0.5 * (u0[s].rho[i] + u1[s].rho[i] + dt * k2[s].rho[i]);
            u2[s].momentum[i] =
                0.5 * (u0[s].momentum[i] + u1[s].momentum[i] + dt * k2[s].momentum[i]);
        }
    to_primitive(u2, out, rho_guard);

    const double negative_floor = -1e-12 * std::max(state.total_mass() / state.length, 1e-30);
    for (int s = 0; s < n_species; ++s)
        for (int i = 0; i < state.n_cells; ++i) {
            if (!std::isfinite(out.species[s].rho[i]) || !std::isfinite(out.species[s].u[i]))
                throw swarm::BlowupError("hydro state non-finite at t = " + std::to_string(out.t) +
                                             ", cell " + std::to_string(i),
                                         out.t);
            if (out.species[s].rho[i] < negative_floor)
                throw swarm::BlowupError("density fell below the negative tolerance at t = " +
                                             std::to_string(out.t) + ", cell " + std::to_string(i),
                                         out.t);
        }
    return out;
}

namespace {

HydroSpeciesRecord species_record(const HydroState1D& state,
                                  const kernels::CommunicationArray& phi, int s) {
    HydroSpeciesRecord rec;
    rec.mass = state.species_mass(s);
    const std::vector<double>& rho = state.species[s].rho;
    const std::vector<double>& u = state.species[s].u;
    rec.rho_min = *std::min_element(rho.begin(), rho.end());
    rec.u_min = *std::min_element(u.begin(), u.end());
    rec.u_max = *std::max_element(u.begin(), u.end());

    const std::vector<double> e = e_field(state, phi, s);
    rec.e_min = *std::min_element(e.begin(), e.end());
    rec.e_max = *std::max_element(e.begin(), e.end());

    const double guard = 1e-14 * std::max(state.total_mass() / state.length, 1e-30);
    bool first = true;
    for (int i = 0; i < state.n_cells; ++i) {
        if (rho[i] <= guard) continue;
        const double q = e[i] / rho[i];
        if (first) {
            rec.q_min = rec.q_max = q;
            first = false;
        } else {
            rec.q_min = std::min(rec.q_min, q);
            rec.q_max = std::max(rec.q_max, q);
        }
    }

    const std::vector<double> du = central_difference(u, state.dx());
    for (double d : du) rec.dudx_max = std::max(rec.dudx_max, std::abs(d));
    return rec;
}

HydroRecord make_record(const HydroState1D& state, const kernels::CommunicationArray& phi) {
    HydroRecord rec;
    rec.t = state.t;
    rec.total_momentum = state.total_momentum();
    for (int s = 0; s < static_cast<int>(state.species.size()); ++s)
        rec.species.push_back(species_record(state, phi, s));
    return rec;
}

} // namespace

HydroRunResult run_hydro(HydroState1D state, const kernels::CommunicationArray& phi,
                         const HydroRunOptions& options) {
    state.validate();
    if (options.t_final < state.t)
        throw std::invalid_argument("run_hydro: t_final before state time");
    if (options.record_every < 1)
        throw std::invalid_argument("run_hydro: record_every must be >= 1");

    HydroRunResult result;
    HydroRecord first = make_record(state, phi);
    result.records.push_back(first);
    if (options.observer) options.observer(state);

    // Blow-up thresholds: 1e3 x the initial gradient, or the gradient scale of
    // a discontinuity resolved at a手 few cells, whichever is lower. A fixed
    // grid cannot exceed the latter, so hitting it means loss of resolution.
    double dudx0 = 0.0, u_lo = 0.0, u_hi = 0.0;
    bool first_species = true;
    for (const HydroSpeciesRecord& s : first.species) {
        dudx0 = std::max(dudx0, s.dudx_max);
        if (first_species) {
            u_lo = s.u_min;
            u_hi = s.u_max;
            first_species = false;
        } else {
            u_lo = std::min(u_lo, s.u_min);
            u_hi = std::max(u_hi, s.u_max);
        }
    }
    const double dudx_base = std::max(dudx0, 1e-3);
    const double grid_threshold = std::max((u_hi - u_lo) / (8.0 * state.dx()), 2.0 * dudx_base);
    const double blow_threshold = std::min(1e3 * dudx_base, grid_threshold);

    const double align_rate = max_alignment_rate(state, phi);
    const double source_cap = align_rate > 0.0 ? 0.4 / align_rate : 1e300;
    // CFL-driven steps are pinned at the initial speed: the exact flow obeys
    // a velocity maximum principle, so this never loosens mid-run.
    const double dt_initial =
        std::min(options.cfl * state.dx() / std::max(max_speed(state), 1e-12), source_cap);

    long long step_count = 0;
    while (state.t < options.t_final - 1e-12 * std::max(1.0, options.t_final)) {
        double dt;
        if (options.dt) {
            dt = std::min(*options.dt, options.t_final - state.t);
        } else {
            const double speed = max_speed(state);
            dt = std::min({dt_initial, options.cfl * state.dx() / std::max(speed, 1e-12),
                           options.t_final - state.t});
        }
        try {
            state = step_hydro(state, phi, dt, options.dt ? options.cfl : 1.0);
        } catch (const swarm::BlowupError& err) {
            result.blew_up = true;
            result.blowup_time = err.time;
            result.blowup_reason = err.what();
            result.final_state = std::move(state);
            return result;
        }
        result.max_dt_used = std::max(result.max_dt_used, dt);
        ++step_count;

        const bool last = state.t >= options.t_final - 1e-12 * std::max(1.0, options.t_final);
        if (step_count % options.record_every == 0 || last) {
            HydroRecord rec = make_record(state, phi);
            double dudx_now = 0.0;
            int worst_species = 0;
            for (int s = 0; s < static_cast<int>(rec.species.size()); ++s) {
                if (rec.species[s].dudx_max > dudx_now) {
                    dudx_now = rec.species[s].dudx_max;
                    worst_species = s;
                }
            }
            result.records.push_back(rec);
            if (options.observer) options.observer(state);
            if (dudx_now > blow_threshold) {
                result.blew_up = true;
                result.blowup_time = state.t;
                const std::vector<double> du =
                    central_difference(state.species[worst_species].u, state.dx());
                int worst_cell = 0;
                for (int i = 1; i < state.n_cells; ++i)
                    if (std::abs(du[i]) > std::abs(du[worst_cell])) worst_cell = i;
                result.blowup_cell = worst_cell;
                result.blowup_reason =
                    "velocity gradient blow-up: max|du/dx| = " + std::to_string(dudx_now) +
                    " exceeded threshold " + std::to_string(blow_threshold);
                break;
            }
        }
        if (last) break;
    }
    result.final_state = std::move(state);
    return result;
}

HydroInvariantReport invariant_monitors(const std::vector<HydroRecord>& records, double dx,
                                        double dt, double vacuum_floor) {
    if (records.empty()) throw std::invalid_argument("invariant_monitors: empty trajectory");
    HydroInvariantReport report;
    const HydroRecord& first = records.front();
    const std::size_t n_species = first.species.size();

    report.min_rho_seen = first.species[0].rho_min;
    double worst_e = 0.0, worst_q = 0.0, worst_mass = 0.0, worst_mom = 0.0, worst_u = 0.0;
    for (const HydroRecord& rec : records) {
        worst_mom = std::max(worst_mom, std::abs(rec.total_momentum - first.total_momentum));
        for (std::size_t s = 0; s < n_species; ++s) {
            const HydroSpeciesRecord& now = rec.species[s];
            const HydroSpeciesRecord& init = first.species[s];
            worst_e = std::max(worst_e, -now.e_min);
            worst_q = std::max({worst_q, now.q_max - init.q_max, init.q_min - now.q_min});
            worst_mass = std::max(worst_mass,
                                  std::abs(now.mass - init.mass) / std::max(init.mass, 1e-300));
            worst_u = std::max({worst_u, now.u_max - init.u_max, init.u_min - now.u_min});
            report.min_rho_seen = std::min(report.min_rho_seen, now.rho_min);
        }
    }
    report.e_violation_constant = std::max(0.0, worst_e) / (dx + dt);
    report.q_extrema_drift = std::max(0.0, worst_q);
    report.mass_drift_rel = worst_mass;
    report.momentum_drift = worst_mom;
    report.vacuum_ok = report.min_rho_seen >= vacuum_floor;
    report.u_max_drift = std::max(0.0, worst_u);
    return report;
}

} // namespace mscd::hydro1d
