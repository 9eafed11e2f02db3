#include "mscd/aggregate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace mscd::aggregate {

std::size_t AggregateState::total_agents() const {
    std::size_t n = 0;
    for (const Species& s : species) n += s.count;
    return n;
}

void AggregateState::validate() const {
    if (dim < 1) throw std::invalid_argument("AggregateState: dimension must be >= 1");
    if (species.empty()) throw std::invalid_argument("AggregateState: needs at least one species");
    for (const Species& s : species) {
        if (s.count < 1) throw std::invalid_argument("AggregateState: empty species");
        if (s.mass <= 0.0)
            throw std::invalid_argument("AggregateState: species mass must be positive");
        if (s.positions.size() != s.count * dim)
            throw std::invalid_argument("AggregateState: position size mismatch");
    }
    if (!finite()) throw std::invalid_argument("AggregateState: non-finite entries");
}

bool AggregateState::finite() const {
    for (const Species& s : species)
        for (double x : s.positions)
            if (!std::isfinite(x)) return false;
    return true;
}

spectral::WeightVector species_weights(const AggregateState& state) {
    std::vector<double> w;
    w.reserve(state.species.size());
    for (const Species& s : state.species) w.push_back(s.mass);
    return spectral::WeightVector(std::move(w));
}

std::vector<double> center_of_mass(const AggregateState& state) {
    std::vector<double> com(state.dim, 0.0);
    double total = 0.0;
    for (const Species& s : state.species) {
        const double per_agent = s.mass / static_cast<double>(s.count);
        total += s.mass;
        for (std::size_t i = 0; i < s.count; ++i)
            for (int d = 0; d < state.dim; ++d)
                com[d] += per_agent * s.positions[i * state.dim + d];
    }
    for (double& c : com) c /= total;
    return com;
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

} // namespace

std::vector<std::vector<double>> aggregation_velocity(const AggregateState& state,
                                                      const kernels::CommunicationArray& phi,
                                                      int threads) {
    const int n = static_cast<int>(state.species.size());
    if (phi.size() != n)
        throw std::invalid_argument("aggregation_velocity: kernel array/species count mismatch");
    const int dim = state.dim;

    std::vector<std::vector<double>> vel(n);
    for (int s = 0; s < n; ++s) vel[s].assign(state.species[s].count * dim, 0.0);

    struct AgentRef {
        int species;
        std::size_t index;
    };
    std::vector<AgentRef> agents;
    agents.reserve(state.total_agents());
    for (int s = 0; s < n; ++s)
        for (std::size_t i = 0; i < state.species[s].count; ++i) agents.push_back({s, i});

    auto work = [&](int sa, std::size_t i) {
        const double* xi = state.species[sa].positions.data() + i * dim;
        double* out = vel[sa].data() + i * dim;
        for (int sb = 0; sb < n; ++sb) {
            const Species& other = state.species[sb];
            const kernels::RadialKernel& k = phi.kernel(sa, sb);
            if (k.is_zero()) continue;
            const double inv_count = 1.0 / static_cast<double>(other.count);
            for (std::size_t j = 0; j < other.count; ++j) {
                const double* xj = other.positions.data() + j * dim;
                const double weight = k(distance(xi, xj, dim)) * inv_count;
                for (int d = 0; d < dim; ++d) out[d] += weight * (xj[d] - xi[d]);
            }
        }
    };

    if (threads <= 1 || agents.size() < 2) {
        for (const AgentRef& a : agents) work(a.species, a.index);
    } else {
        const int workers = std::min<int>(threads, static_cast<int>(agents.size()));
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int wk = 0; wk < workers; ++wk)
            pool.emplace_back([&, wk]() {
                for (std::size_t a = wk; a < agents.size(); a += workers)
                    work(agents[a].species, agents[a].index);
            });
        for (std::thread& th : pool) th.join();
    }
    return vel;
}

namespace {

AggregateState advanced(const AggregateState& base, const std::vector<std::vector<double>>& v,
                        double h) {
    AggregateState out = base;
    for (std::size_t s = 0; s < base.species.size(); ++s)
        for (std::size_t k = 0; k < out.species[s].positions.size(); ++k)
            out.species[s].positions[k] = base.species[s].positions[k] + h * v[s][k];
    return out;
}

} // namespace

AggregateState step(const AggregateState& state, const kernels::CommunicationArray& phi, double dt,
                    int threads) {
    if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be positive");
    const auto k1 = aggregation_velocity(state, phi, threads);
    const auto k2 = aggregation_velocity(advanced(state, k1, dt / 2.0), phi, threads);
    const auto k3 = aggregation_velocity(advanced(state, k2, dt / 2.0), phi, threads);
    const auto k4 = aggregation_velocity(advanced(state, k3, dt), phi, threads);

    AggregateState out = state;
    out.t = state.t + dt;
    for (std::size_t s = 0; s < state.species.size(); ++s)
        for (std::size_t k = 0; k < out.species[s].positions.size(); ++k)
            out.species[s].positions[k] +=
                dt / 6.0 * (k1[s][k] + 2.0 * k2[s][k] + 2.0 * k3[s][k] + k4[s][k]);
    return out;
}

namespace {

AggregateRecord record_state(const AggregateState& state, const std::vector<double>& origin) {
    const int n = static_cast<int>(state.species.size());
    const int dim = state.dim;
    AggregateRecord rec;
    rec.t = state.t;
    rec.center_of_mass = center_of_mass(state);

    for (int sa = 0; sa < n; ++sa) {
        const Species& a = state.species[sa];
        for (std::size_t i = 0; i < a.count; ++i) {
            const double* xi = a.positions.data() + i * dim;
            for (int sb = sa; sb < n; ++sb) {
                const Species& b = state.species[sb];
                const std::size_t j0 = (sb == sa) ? i + 1 : 0;
                for (std::size_t j = j0; j < b.count; ++j)
                    rec.diameter =
                        std::max(rec.diameter, distance(xi, b.positions.data() + j * dim, dim));
            }
        }
    }

    double total = 0.0;
    for (const Species& s : state.species) total += s.mass;
    double second = 0.0;
    for (const Species& s : state.species) {
        const double per_agent = s.mass / static_cast<double>(s.count);
        for (std::size_t i = 0; i < s.count; ++i)
            second += per_agent *
                      std::pow(distance(s.positions.data() + i * dim, origin.data(), dim), 2);
    }
    rec.second_moment = second;

    // delta_d = 2 M m2(com) where m2 is taken about the current center of
    // mass; expand about `origin` and subtract the offset term.
    double com_offset = 0.0;
    for (int d = 0; d < dim; ++d) {
        const double diff = rec.center_of_mass[d] - origin[d];
        com_offset += diff * diff;
    }
    rec.delta_d = std::max(0.0, 2.0 * total * (second - total * com_offset));
    return rec;
}

} // namespace

double weighted_diameter_p(const AggregateState& state, double p) {
    const int n = static_cast<int>(state.species.size());
    const int dim = state.dim;
    double sum = 0.0;
    for (int sa = 0; sa < n; ++sa) {
        const Species& a = state.species[sa];
        const double wa = a.mass / static_cast<double>(a.count);
        for (int sb = 0; sb < n; ++sb) {
            const Species& b = state.species[sb];
            const double wb = b.mass / static_cast<double>(b.count);
            for (std::size_t i = 0; i < a.count; ++i)
                for (std::size_t j = 0; j < b.count; ++j)
                    sum += wa * wb *
                           std::pow(distance(a.positions.data() + i * dim,
                                             b.positions.data() + j * dim, dim),
                                    p);
        }
    }
    return sum;
}

AggregateRunResult run_aggregation(AggregateState state, const kernels::CommunicationArray& phi,
                                   double dt, double t_final, int record_every, int threads,
                                   const StateObserver& observer) {
    state.validate();
    if (!(dt > 0.0)) throw std::invalid_argument("run_aggregation: dt must be positive");
    if (record_every < 1) throw std::invalid_argument("run_aggregation: record_every must be >= 1");
    if (t_final < state.t) throw std::invalid_argument("run_aggregation: t_final before state time");

    AggregateRunResult result;
    const std::vector<double> origin = center_of_mass(state);
    AggregateRecord first = record_state(state, origin);
    const double delta_d0 = first.delta_d;
    const double t0 = first.t;
    first.bound_ratio_d = delta_d0 > 0.0 ? 1.0 : 0.0;
    result.records.push_back(first);
    if (observer) observer(state);

    // Static envelope of the weighted-diameter decay, pinned at D0.
    const spectral::WeightVector w = species_weights(state);
    double envelope_rate = 0.0;
    if (state.species.size() >= 2) {
        const auto lap = spectral::build_weighted_laplacian(phi.array_at(first.diameter), w);
        envelope_rate = 2.0 * w.zeta() * lap.lambda2();
    }

    const long long steps = static_cast<long long>(std::ceil((t_final - state.t) / dt - 1e-12));
    for (long long k = 0; k < steps; ++k) {
        const double h = std::min(dt, t_final - state.t);
        if (h <= 0.0) break;
        state = step(state, phi, h, threads);
        if (!state.finite())
            throw swarm::BlowupError("aggregation produced non-finite values at t = " +
                                         std::to_string(state.t),
                                     state.t);
        const bool last = (k + 1 == steps) || (state.t >= t_final - 1e-12 * std::max(1.0, t_final));
        if ((k + 1) % record_every == 0 || last) {
            AggregateRecord rec = record_state(state, origin);
            if (delta_d0 > 0.0)
                rec.bound_ratio_d =
                    rec.delta_d / (delta_d0 * std::exp(-envelope_rate * (rec.t - t0)));
            result.records.push_back(rec);
            if (observer) observer(state);
        }
        if (last) break;
    }
    result.final_state = std::move(state);
    return result;
}

ConsensusReport consensus_check(const std::vector<AggregateRecord>& trajectory,
                                double envelope_rate) {
    if (trajectory.empty())
        throw std::invalid_argument("consensus_check: empty trajectory");

    ConsensusReport report;
    report.envelope_rate = -std::abs(envelope_rate);
    report.limit_point = trajectory.front().center_of_mass;
    report.final_second_moment = trajectory.back().second_moment;

    const double delta_d0 = trajectory.front().delta_d;
    report.converged = report.final_second_moment <= 1e-10 * std::max(delta_d0, 1e-300);
    if (delta_d0 <= 0.0) {
        report.converged = true;
        report.rate_measured = 0.0;
        return report;
    }

    // OLS slope of log delta_d over samples still clear of roundoff.
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    double m = 0.0;
    for (const AggregateRecord& rec : trajectory) {
        if (rec.delta_d <= 1e-280 || rec.delta_d <= 1e-14 * delta_d0) continue;
        const double x = rec.t;
        const double y = std::log(rec.delta_d);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        m += 1.0;
    }
    const double denom = m * sxx - sx * sx;
    report.rate_measured = denom > 0.0 ? (m * sxy - sx * sy) / denom : 0.0;
    return report;
}

} // namespace mscd::aggregate
