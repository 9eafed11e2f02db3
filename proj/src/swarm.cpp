#include "mscd/swarm.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace mscd::swarm {

std::size_t SwarmState::total_agents() const {
    std::size_t n = 0;
    for (const Species& s : species) n += s.count;
    return n;
}

void SwarmState::validate() const {
    if (dim < 1) throw std::invalid_argument("SwarmState: dimension must be >= 1");
    if (species.empty()) throw std::invalid_argument("SwarmState: needs at least one species");
    for (const Species& s : species) {
        if (s.count < 1) throw std::invalid_argument("SwarmState: empty species");
        if (s.mass <= 0.0) throw std::invalid_argument("SwarmState: species mass must be positive");
        if (s.positions.size() != s.count * dim || s.velocities.size() != s.count * dim)
            throw std::invalid_argument("SwarmState: position/velocity size mismatch");
    }
    if (!finite()) throw std::invalid_argument("SwarmState: non-finite entries");
}

bool SwarmState::finite() const {
    for (const Species& s : species) {
        for (double x : s.positions)
            if (!std::isfinite(x)) return false;
        for (double v : s.velocities)
            if (!std::isfinite(v)) return false;
    }
    return true;
}

spectral::WeightVector species_weights(const SwarmState& state) {
    std::vector<double> w;
    w.reserve(state.species.size());
    for (const Species& s : state.species) w.push_back(s.mass);
    return spectral::WeightVector(std::move(w));
}

namespace {

double distance(const double* a, const double* b, int dim) {
    double s = 0.0;
    for (int k = 0; k < dim; ++k) {
        const double d = a[k] - b[k];
        s += d * d;
    }
    return std::sqrt(s);
}

// Runs fn(s, i) over all agents, split across threads by a flat agent index.
template <typename Fn>
void for_each_agent(const SwarmState& state, int threads, Fn&& fn) {
    struct AgentRef {
        int species;
        std::size_t index;
    };
    std::vector<AgentRef> agents;
    agents.reserve(state.total_agents());
    for (int s = 0; s < static_cast<int>(state.species.size()); ++s)
        for (std::size_t i = 0; i < state.species[s].count; ++i)
            agents.push_back({s, i});

    if (threads <= 1 || agents.size() < 2) {
        for (const AgentRef& a : agents) fn(a.species, a.index);
        return;
    }
    const int workers = std::min<int>(threads, static_cast<int>(agents.size()));
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int wk = 0; wk < workers; ++wk) {
        pool.emplace_back([&, wk]() {
            for (std::size_t a = wk; a < agents.size(); a += workers)
                fn(agents[a].species, agents[a].index);
        });
    }
    for (std::thread& th : pool) th.join();
}

} // namespace

std::vector<std::vector<double>> alignment_force(const SwarmState& state,
                                                 const kernels::CommunicationArray& phi,
                                                 int threads) {
    const int n = static_cast<int>(state.species.size());
    if (phi.size() != n)
        throw std::invalid_argument("alignment_force: kernel array/species count mismatch");
    const int dim = state.dim;

    std::vector<std::vector<double>> acc(n);
    for (int s = 0; s < n; ++s) acc[s].assign(state.species[s].count * dim, 0.0);

    for_each_agent(state, threads, [&](int sa, std::size_t i) {
        const double* xi = state.species[sa].positions.data() + i * dim;
        const double* vi = state.species[sa].velocities.data() + i * dim;
        double* out = acc[sa].data() + i * dim;
        // Fixed accumulation order (species, then agent) keeps results
        // byte-identical across thread counts.
        for (int sb = 0; sb < n; ++sb) {
            const Species& other = state.species[sb];
            const kernels::RadialKernel& k = phi.kernel(sa, sb);
            if (k.is_zero()) continue;
            const double inv_count = 1.0 / static_cast<double>(other.count);
            for (std::size_t j = 0; j < other.count; ++j) {
                const double* xj = other.positions.data() + j * dim;
                const double* vj = other.velocities.data() + j * dim;
                const double weight = k(distance(xi, xj, dim)) * inv_count;
                for (int d = 0; d < dim; ++d) out[d] += weight * (vj[d] - vi[d]);
            }
        }
    });
    return acc;
}

namespace {

struct Derivative {
    std::vector<std::vector<double>> dpos; // = velocities
    std::vector<std::vector<double>> dvel; // = alignment force
};

Derivative derivative(const SwarmState& state, const kernels::CommunicationArray& phi,
                      int threads) {
    Derivative d;
    d.dvel = alignment_force(state, phi, threads);
    d.dpos.resize(state.species.size());
    for (std::size_t s = 0; s < state.species.size(); ++s) d.dpos[s] = state.species[s].velocities;
    return d;
}

SwarmState advanced(const SwarmState& base, const Derivative& d, double h) {
    SwarmState out = base;
    for (std::size_t s = 0; s < base.species.size(); ++s) {
        Species& sp = out.species[s];
        const std::vector<double>& dp = d.dpos[s];
        const std::vector<double>& dv = d.dvel[s];
        for (std::size_t k = 0; k < sp.positions.size(); ++k) {
            sp.positions[k] = base.species[s].positions[k] + h * dp[k];
            sp.velocities[k] = base.species[s].velocities[k] + h * dv[k];
        }
    }
    return out;
}

} // namespace

SwarmState step(const SwarmState& state, const kernels::CommunicationArray& phi, double dt,
                int threads) {
    if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be positive");

    const Derivative k1 = derivative(state, phi, threads);
    const SwarmState s2 = advanced(state, k1, dt / 2.0);
    const Derivative k2 = derivative(s2, phi, threads);
    const SwarmState s3 = advanced(state, k2, dt / 2.0);
    const Derivative k3 = derivative(s3, phi, threads);
    const SwarmState s4 = advanced(state, k3, dt);
    const Derivative k4 = derivative(s4, phi, threads);

    SwarmState out = state;
    out.t = state.t + dt;
    for (std::size_t s = 0; s < state.species.size(); ++s) {
        Species& sp = out.species[s];
        for (std::size_t k = 0; k < sp.positions.size(); ++k) {
            sp.positions[k] += dt / 6.0 *
                               (k1.dpos[s][k] + 2.0 * k2.dpos[s][k] + 2.0 * k3.dpos[s][k] +
                                k4.dpos[s][k]);
            sp.velocities[k] += dt / 6.0 *
                                (k1.dvel[s][k] + 2.0 * k2.dvel[s][k] + 2.0 * k3.dvel[s][k] +
                                 k4.dvel[s][k]);
        }
    }
    return out;
}

DiagnosticsRecord diagnostics(const SwarmState& state, const kernels::CommunicationArray& phi) {
    const int n = static_cast<int>(state.species.size());
    const int dim = state.dim;
    DiagnosticsRecord rec;
    rec.t = state.t;
    rec.momentum.assign(dim, 0.0);

    // Diameter and uniform fluctuation over all agent pairs.
    for (int sa = 0; sa < n; ++sa) {
        const Species& a = state.species[sa];
        for (std::size_t i = 0; i < a.count; ++i) {
            const double* xi = a.positions.data() + i * dim;
            const double* vi = a.velocities.data() + i * dim;
            for (int sb = sa; sb < n; ++sb) {
                const Species& b = state.species[sb];
                const std::size_t j0 = (sb == sa) ? i + 1 : 0;
                for (std::size_t j = j0; j < b.count; ++j) {
                    rec.diameter =
                        std::max(rec.diameter, distance(xi, b.positions.data() + j * dim, dim));
                    rec.delta_v =
                        std::max(rec.delta_v, distance(vi, b.velocities.data() + j * dim, dim));
                }
            }
        }
    }

    // Energy fluctuation: per-agent weight mass/N, all ordered pairs.
    double energy = 0.0;       // sum_a w_a/N_a sum_i |v|^2
    double weighted_sq = 0.0;  // |sum_a w_a/N_a sum_i v|^2 accumulator below
    std::vector<double> mean(dim, 0.0);
    double total_weight = 0.0;
    for (const Species& s : state.species) {
        const double per_agent = s.mass / static_cast<double>(s.count);
        total_weight += s.mass;
        for (std::size_t i = 0; i < s.count; ++i) {
            const double* vi = s.velocities.data() + i * dim;
            for (int d = 0; d < dim; ++d) {
                energy += per_agent * vi[d] * vi[d];
                mean[d] += per_agent * vi[d];
            }
        }
        // Conserved momentum of the flow carries the 1/N weights of the force
        // law; with unit species masses this is the same vector as `mean`.
        const double inv_count = 1.0 / static_cast<double>(s.count);
        for (std::size_t i = 0; i < s.count; ++i) {
            const double* vi = s.velocities.data() + i * dim;
            for (int d = 0; d < dim; ++d) rec.momentum[d] += inv_count * vi[d];
        }
    }
    for (int d = 0; d < dim; ++d) weighted_sq += mean[d] * mean[d];
    // delta_e = 2 (sum w) E - 2 |sum (w/N) v|^2, the expanded double sum.
    rec.delta_e = std::max(0.0, 2.0 * total_weight * energy - 2.0 * weighted_sq);

    const spectral::WeightVector w = species_weights(state);
    if (n >= 2) {
        const auto lap = spectral::build_weighted_laplacian(phi.array_at(rec.diameter), w);
        rec.lambda2_at_diameter = lap.lambda2();
    }
    return rec;
}

RunResult run(SwarmState state, const kernels::CommunicationArray& phi, double dt, double t_final,
              int record_every, int threads, const StateObserver& observer) {
    state.validate();
    if (!(dt > 0.0)) throw std::invalid_argument("run: dt must be positive");
    if (record_every < 1) throw std::invalid_argument("run: record_every must be >= 1");
    if (t_final < state.t) throw std::invalid_argument("run: t_final before state time");

    RunResult result;
    const long long steps = static_cast<long long>(std::ceil((t_final - state.t) / dt - 1e-12));

    DiagnosticsRecord first = diagnostics(state, phi);
    const double delta_e0 = first.delta_e;
    const double delta_v0 = first.delta_v;
    first.bound_ratio_e = delta_e0 > 0.0 ? 1.0 : 0.0;
    first.bound_ratio_v = delta_v0 > 0.0 ? 1.0 : 0.0;
    result.records.push_back(first);
    if (observer) observer(state);

    // Trapezoid accumulation of the envelope integrals between records.
    const double zeta = species_weights(state).zeta();
    double integral_e = 0.0;     // int lambda2(Phi(D(tau))) dtau
    double integral_v = 0.0;     // same, at the running max diameter
    double prev_t = first.t;
    double prev_lambda_e = first.lambda2_at_diameter;
    double running_diameter = first.diameter;
    double prev_lambda_v = first.lambda2_at_diameter;
    const spectral::WeightVector w = species_weights(state);

    for (long long k = 0; k < steps; ++k) {
        const double h = std::min(dt, t_final - state.t);
        if (h <= 0.0) break;
        state = step(state, phi, h, threads);
        if (!state.finite())
            throw BlowupError("swarm integration produced non-finite values at t = " +
                                  std::to_string(state.t),
                              state.t);

        const bool last = (k + 1 == steps) || (state.t >= t_final - 1e-12 * std::max(1.0, t_final));
        if ((k + 1) % record_every == 0 || last) {
            DiagnosticsRecord rec = diagnostics(state, phi);
            integral_e += 0.5 * (prev_lambda_e + rec.lambda2_at_diameter) * (rec.t - prev_t);
            running_diameter = std::max(running_diameter, rec.diameter);
            double lambda_v = rec.lambda2_at_diameter;
            if (state.species.size() >= 2 && running_diameter > rec.diameter) {
                const auto lap =
                    spectral::build_weighted_laplacian(phi.array_at(running_diameter), w);
                lambda_v = lap.lambda2();
            }
            integral_v += 0.5 * (prev_lambda_v + lambda_v) * (rec.t - prev_t);
            prev_t = rec.t;
            prev_lambda_e = rec.lambda2_at_diameter;
            prev_lambda_v = lambda_v;

            if (delta_e0 > 0.0)
                rec.bound_ratio_e = rec.delta_e / (delta_e0 * std::exp(-2.0 * zeta * integral_e));
            if (delta_v0 > 0.0)
                rec.bound_ratio_v = rec.delta_v / (delta_v0 * std::exp(-zeta * integral_v));
            result.records.push_back(rec);
            if (observer) observer(state);
        }
        if (last) break;
    }
    result.final_state = std::move(state);
    return result;
}

namespace {

template <typename Fn>
double adaptive_simpson(const Fn& f, double a, double b, double fa, double fm, double fb,
                        double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return adaptive_simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
           adaptive_simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}

// Integral of a decaying envelope over [0, inf): doubling panels of adaptive
// Simpson, stopped once the panel bound is negligible against the total.
template <typename Fn>
double integrate_envelope(const Fn& f, double first_width) {
    double total = 0.0;
    double a = 0.0;
    double b = std::max(first_width, 1e-6);
    for (int panel = 0; panel < 120; ++panel) {
        const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
        const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        total += adaptive_simpson(f, a, b, fa, fm, fb, whole, 1e-13, 48);
        a = b;
        b = 2.0 * b;
        if (f(a) * (b - a) < 1e-15 * std::max(total, 1e-30) && panel > 4) break;
    }
    return total;
}

} // namespace

double fractional_exponential_integral(double rate, double theta) {
    if (!(rate > 0.0)) throw std::invalid_argument("envelope integral: rate must be positive");
    if (theta < 0.0 || theta >= 1.0)
        throw std::invalid_argument("envelope integral: theta must lie in [0, 1)");
    const double p = 1.0 - theta;
    return integrate_envelope([rate, p](double t) { return std::exp(-rate * std::pow(t, p)); },
                              std::min(1.0, 1.0 / rate));
}

double DiameterForecast::horizon(double target) const {
    if (!(target > 0.0) || target >= 1.0)
        throw std::invalid_argument("horizon: target must lie in (0, 1)");
    // Invert exp(-K [(s0 + dV0 t)^(1-theta) - s0^(1-theta)]) = target.
    const double p = 1.0 - theta;
    if (delta_v0 <= 0.0) return -std::log(target) / std::max(rate, 1e-300);
    const double s_target =
        std::pow(-std::log(target) / envelope_k + std::pow(s0, p), 1.0 / p);
    return (s_target - s0) / delta_v0;
}

double DiameterForecast::envelope(double t) const {
    const double p = 1.0 - theta;
    if (delta_v0 <= 0.0) return std::exp(-rate * t);
    return std::exp(-envelope_k * (std::pow(s0 + delta_v0 * t, p) - std::pow(s0, p)));
}

DiameterForecast diameter_forecast(double d0, double delta_v0, const spectral::WeightVector& w,
                                   double theta, double c) {
    if (theta >= 1.0)
        throw std::invalid_argument("diameter_forecast: theta >= 1 is unsupported (no "
                                    "bounded-diameter claim)");
    if (theta < 0.0) throw std::invalid_argument("diameter_forecast: negative theta");
    if (!(c > 0.0)) throw std::invalid_argument("diameter_forecast: tail constant must be positive");
    if (d0 < 0.0 || delta_v0 < 0.0)
        throw std::invalid_argument("diameter_forecast: negative initial data");

    // Envelope composed with the linear diameter bound D(t) <= D0 + dV0 t:
    //   delta_v(t) <= dV0 exp(-zeta int_0^t c (1 + D0 + dV0 s)^(-theta) ds)
    // integrated in closed substitution s = 1 + D0 + dV0 t. At theta = 0 this
    // is the plain exponential with rate zeta c.
    DiameterForecast out;
    out.theta = theta;
    out.delta_v0 = delta_v0;
    out.s0 = 1.0 + d0;
    const double p = 1.0 - theta;
    out.rate = w.zeta() * c * std::pow(out.s0, -theta); // instantaneous rate at D0
    if (delta_v0 <= 0.0) {
        out.envelope_k = 0.0;
        out.c_theta = 1.0 / out.rate;
        out.d_infinity = d0;
        return out;
    }
    out.envelope_k = w.zeta() * c / (delta_v0 * p);
    out.c_theta = integrate_envelope([&out](double t) { return out.envelope(t); },
                                     std::min(1.0, 1.0 / out.rate));
    out.d_infinity = d0 + out.c_theta * delta_v0;
    return out;
}

} // namespace mscd::swarm
