#include "mscd/scenario.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mscd/random.hpp"

namespace mscd::scenario {

using nlohmann::json;

std::string mode_name(Mode mode) {
    switch (mode) {
    case Mode::Swarm: return "swarm";
    case Mode::Aggregate: return "aggregate";
    case Mode::Hydro1D: return "hydro1d";
    case Mode::Threshold2D: return "threshold2d";
    case Mode::SpectralReport: return "spectral-report";
    }
    return "unknown";
}

ScenarioParseError::ScenarioParseError(std::vector<SchemaError> errors)
    : std::runtime_error(render(errors)), errors_(std::move(errors)) {}

std::string ScenarioParseError::render(const std::vector<SchemaError>& errors) {
    std::ostringstream out;
    out << "scenario config invalid (" << errors.size() << " error"
        << (errors.size() == 1 ? "" : "s") << "):";
    for (const SchemaError& e : errors) out << "\n  " << e.field << ": " << e.message;
    return out.str();
}

namespace {

class Collector {
public:
    void add(const std::string& field, const std::string& message) {
        errors_.push_back({field, message});
    }
    bool ok() const { return errors_.empty(); }
    void raise_if_any() {
        if (!ok()) throw ScenarioParseError(std::move(errors_));
    }

private:
    std::vector<SchemaError> errors_;
};

double require_number(const json& obj, const std::string& key, const std::string& path,
                      Collector& errors, double fallback = 0.0) {
    if (!obj.contains(key)) {
        errors.add(path + "." + key, "missing required number");
        return fallback;
    }
    if (!obj[key].is_number()) {
        errors.add(path + "." + key, "expected a number");
        return fallback;
    }
    return obj[key].get<double>();
}

std::vector<double> require_vector(const json& obj, const std::string& key, int dim,
                                   const std::string& path, Collector& errors) {
    std::vector<double> out(dim, 0.0);
    if (!obj.contains(key) || !obj[key].is_array() ||
        static_cast<int>(obj[key].size()) != dim) {
        errors.add(path + "." + key, "expected an array of " + std::to_string(dim) + " numbers");
        return out;
    }
    for (int d = 0; d < dim; ++d) {
        if (!obj[key][d].is_number()) {
            errors.add(path + "." + key, "expected numeric entries");
            return out;
        }
        out[d] = obj[key][d].get<double>();
    }
    return out;
}

// ---- kernels ---------------------------------------------------------------

kernels::RadialKernel parse_kernel(const json& spec, const std::string& path, Collector& errors,
                                   const std::string& base_dir, bool diagonal) {
    const std::string family = spec.value("family", "");
    try {
        if (family == "zero") return kernels::RadialKernel::zero();
        if (family == "constant") {
            const double c = require_number(spec, "c", path, errors);
            const bool dealign = spec.value("dealignment", false);
            if (c < 0.0 && !diagonal) {
                errors.add(path, "negative kernels are only admissible on the diagonal");
                return kernels::RadialKernel::zero();
            }
            return kernels::RadialKernel::constant(c, dealign);
        }
        if (family == "pareto")
            return kernels::RadialKernel::pareto(require_number(spec, "c", path, errors),
                                                 require_number(spec, "theta", path, errors));
        if (family == "cutoff")
            return kernels::RadialKernel::cutoff(require_number(spec, "c", path, errors),
                                                 require_number(spec, "radius", path, errors));
        if (family == "tabulated") {
            if (!spec.contains("file")) {
                errors.add(path, "tabulated kernel needs a 'file'");
                return kernels::RadialKernel::zero();
            }
            const std::filesystem::path file(spec["file"].get<std::string>());
            const auto resolved = file.is_absolute() ? file : std::filesystem::path(base_dir) / file;
            return kernels::load_tabulated_kernel(resolved.string());
        }
        errors.add(path + ".family", "unknown kernel family '" + family + "'");
    } catch (const std::exception& err) {
        errors.add(path, err.what());
    }
    return kernels::RadialKernel::zero();
}

kernels::CommunicationArray parse_kernel_array(const json& root, int n_species,
                                               const std::string& base_dir, Collector& errors) {
    kernels::CommunicationArray phi(std::max(1, n_species));
    if (!root.contains("kernels") || !root["kernels"].is_array()) {
        errors.add("kernels", "missing kernel entry list");
        return phi;
    }
    std::vector<std::vector<json>> seen(n_species, std::vector<json>(n_species));
    std::vector<std::vector<bool>> has(n_species, std::vector<bool>(n_species, false));
    int idx = -1;
    for (const json& entry : root["kernels"]) {
        ++idx;
        const std::string path = "kernels[" + std::to_string(idx) + "]";
        if (!entry.contains("i") || !entry.contains("j") || !entry["i"].is_number_integer() ||
            !entry["j"].is_number_integer()) {
            errors.add(path, "entry needs integer species indices 'i' and 'j'");
            continue;
        }
        const int i = entry["i"].get<int>();
        const int j = entry["j"].get<int>();
        if (i < 0 || j < 0 || i >= n_species || j >= n_species) {
            errors.add(path, "species index out of range");
            continue;
        }
        json spec = entry;
        spec.erase("i");
        spec.erase("j");
        if (has[i][j]) {
            if (seen[i][j] != spec) {
                errors.add(path, "symmetry violation: kernel (" + std::to_string(i) + "," +
                                     std::to_string(j) + ") specified twice with different "
                                     "parameters; the array must satisfy phi_ij = phi_ji");
                continue;
            }
            continue; // identical duplicate of the mirrored entry
        }
        has[i][j] = has[j][i] = true;
        seen[i][j] = seen[j][i] = spec;
        kernels::RadialKernel k = parse_kernel(spec, path, errors, base_dir, i == j);
        if (errors.ok()) {
            try {
                phi.set(i, j, std::move(k));
            } catch (const std::exception& err) {
                errors.add(path, err.what());
            }
        }
    }
    return phi;
}

// ---- samplers --------------------------------------------------------------

std::vector<double> sample_points(const json& spec, int count, int dim, const std::string& path,
                                  Collector& errors, rng::Generator& gen, bool& used_sampler) {
    std::vector<double> out(static_cast<std::size_t>(count) * dim, 0.0);
    const std::string type = spec.value("type", "");
    if (type == "explicit") {
        if (!spec.contains("values") || !spec["values"].is_array() ||
            static_cast<int>(spec["values"].size()) != count) {
            errors.add(path + ".values", "expected " + std::to_string(count) + " points");
            return out;
        }
        for (int i = 0; i < count; ++i) {
            const json& p = spec["values"][i];
            if (!p.is_array() || static_cast<int>(p.size()) != dim) {
                errors.add(path + ".values", "each point needs " + std::to_string(dim) +
                                                 " coordinates");
                return out;
            }
            for (int d = 0; d < dim; ++d) out[static_cast<std::size_t>(i) * dim + d] =
                p[d].get<double>();
        }
        return out;
    }
    if (type == "uniform-box") {
        used_sampler = true;
        const std::vector<double> lo = require_vector(spec, "low", dim, path, errors);
        const std::vector<double> hi = require_vector(spec, "high", dim, path, errors);
        for (int i = 0; i < count; ++i)
            for (int d = 0; d < dim; ++d)
                out[static_cast<std::size_t>(i) * dim + d] = gen.uniform(lo[d], hi[d]);
        return out;
    }
    if (type == "gaussian") {
        used_sampler = true;
        const std::vector<double> mean = require_vector(spec, "mean", dim, path, errors);
        const double stddev = require_number(spec, "stddev", path, errors, 1.0);
        for (int i = 0; i < count; ++i)
            for (int d = 0; d < dim; ++d)
                out[static_cast<std::size_t>(i) * dim + d] = gen.gaussian(mean[d], stddev);
        return out;
    }
    errors.add(path + ".type", "unknown initializer '" + type +
                                   "' (expected explicit | uniform-box | gaussian)");
    return out;
}

// ---- hydro profiles --------------------------------------------------------

std::vector<double> sample_profile(const json& spec, int n_cells, double length,
                                   const std::string& path, Collector& errors,
                                   const std::string& base_dir) {
    std::vector<double> out(n_cells, 0.0);
    const double dx = length / n_cells;
    const std::string type = spec.value("type", "");
    if (type == "constant") {
        const double v = require_number(spec, "value", path, errors);
        std::fill(out.begin(), out.end(), v);
        return out;
    }
    if (type == "sine") {
        // mean + amplitude * sin(2 pi k x / L + phase)
        const double mean = require_number(spec, "mean", path, errors);
        const double amplitude = require_number(spec, "amplitude", path, errors);
        const double wavenumber = spec.value("wavenumber", 1.0);
        const double phase = spec.value("phase", 0.0);
        for (int i = 0; i < n_cells; ++i) {
            const double x = (i + 0.5) * dx;
            out[i] = mean + amplitude *
                                std::sin(2.0 * 3.14159265358979323846 * wavenumber * x / length +
                                         phase);
        }
        return out;
    }
    if (type == "gaussian-bump") {
        const double base = spec.value("base", 0.0);
        const double amplitude = require_number(spec, "amplitude", path, errors);
        const double center = require_number(spec, "center", path, errors);
        const double width = require_number(spec, "width", path, errors, 1.0);
        for (int i = 0; i < n_cells; ++i) {
            const double x = (i + 0.5) * dx;
            const double d = hydro1d::torus_distance(x, center, length);
            out[i] = base + amplitude * std::exp(-0.5 * d * d / (width * width));
        }
        return out;
    }
    if (type == "tabulated") {
        if (!spec.contains("file")) {
            errors.add(path, "tabulated profile needs a 'file'");
            return out;
        }
        const std::filesystem::path file(spec["file"].get<std::string>());
        const auto resolved = file.is_absolute() ? file : std::filesystem::path(base_dir) / file;
        std::ifstream in(resolved);
        if (!in) {
            errors.add(path + ".file", "cannot open " + resolved.string());
            return out;
        }
        std::vector<double> values;
        double v;
        while (in >> v) values.push_back(v);
        if (static_cast<int>(values.size()) != n_cells) {
            errors.add(path + ".file", "expected " + std::to_string(n_cells) + " values, got " +
                                           std::to_string(values.size()));
            return out;
        }
        return values;
    }
    errors.add(path + ".type", "unknown profile '" + type +
                                   "' (expected constant | sine | gaussian-bump | tabulated)");
    return out;
}

// ---- 2D analytic fields ----------------------------------------------------

void fill_field2d_species(const json& spec, threshold2d::Field2D& field, int s,
                          const std::string& path, Collector& errors) {
    threshold2d::SpeciesField& f = field.species[s];
    f.rho.assign(field.cells(), 0.0);
    f.u1.assign(field.cells(), 0.0);
    f.u2.assign(field.cells(), 0.0);

    const json& rho_spec = spec.contains("rho") ? spec["rho"] : json::object();
    const std::string rho_type = rho_spec.value("type", "");
    if (rho_type == "gaussian-bump") {
        const double amplitude = require_number(rho_spec, "amplitude", path + ".rho", errors, 1.0);
        const std::vector<double> center =
            require_vector(rho_spec, "center", 2, path + ".rho", errors);
        const double width = require_number(rho_spec, "width", path + ".rho", errors, 1.0);
        // Truncate at the boundary ring to honor compact support.
        for (int i = 1; i + 1 < field.nx; ++i)
            for (int j = 1; j + 1 < field.ny; ++j) {
                const double dx = field.x(i) - center[0];
                const double dy = field.y(j) - center[1];
                const double r2 = dx * dx + dy * dy;
                const double cut = 4.0 * width; // hard compact support radius
                if (r2 < cut * cut)
                    f.rho[static_cast<std::size_t>(i) * field.ny + j] =
                        amplitude * std::exp(-0.5 * r2 / (width * width));
            }
    } else if (rho_type == "uniform-disk") {
        const double amplitude = require_number(rho_spec, "amplitude", path + ".rho", errors, 1.0);
        const std::vector<double> center =
            require_vector(rho_spec, "center", 2, path + ".rho", errors);
        const double radius = require_number(rho_spec, "radius", path + ".rho", errors, 1.0);
        for (int i = 1; i + 1 < field.nx; ++i)
            for (int j = 1; j + 1 < field.ny; ++j) {
                const double dx = field.x(i) - center[0];
                const double dy = field.y(j) - center[1];
                if (dx * dx + dy * dy <= radius * radius)
                    f.rho[static_cast<std::size_t>(i) * field.ny + j] = amplitude;
            }
    } else {
        errors.add(path + ".rho.type", "unknown density '" + rho_type +
                                           "' (expected gaussian-bump | uniform-disk)");
    }

    const json& u_spec = spec.contains("velocity") ? spec["velocity"] : json::object();
    const std::string u_type = u_spec.value("type", "");
    auto for_cells = [&](auto&& fn) {
        for (int i = 0; i < field.nx; ++i)
            for (int j = 0; j < field.ny; ++j)
                fn(static_cast<std::size_t>(i) * field.ny + j, field.x(i), field.y(j));
    };
    const std::vector<double> origin =
        u_spec.contains("origin") ? require_vector(u_spec, "origin", 2, path + ".velocity", errors)
                                  : std::vector<double>{0.0, 0.0};
    if (u_type == "zero") {
        // already zero
    } else if (u_type == "uniform") {
        const std::vector<double> v = require_vector(u_spec, "value", 2, path + ".velocity", errors);
        for_cells([&](std::size_t k, double, double) {
            f.u1[k] = v[0];
            f.u2[k] = v[1];
        });
    } else if (u_type == "shear") {
        // u = (A (y - oy), 0): spectral gap A everywhere
        const double a = require_number(u_spec, "a", path + ".velocity", errors, 1.0);
        for_cells([&](std::size_t k, double, double y) { f.u1[k] = a * (y - origin[1]); });
    } else if (u_type == "dilation") {
        // u = b (x - o): divergence 2b, gap 0
        const double b = require_number(u_spec, "b", path + ".velocity", errors, 1.0);
        for_cells([&](std::size_t k, double x, double y) {
            f.u1[k] = b * (x - origin[0]);
            f.u2[k] = b * (y - origin[1]);
        });
    } else if (u_type == "rotation") {
        // u = w (-(y - oy), x - ox): gap 0, divergence 0
        const double w = require_number(u_spec, "omega", path + ".velocity", errors, 1.0);
        for_cells([&](std::size_t k, double x, double y) {
            f.u1[k] = -w * (y - origin[1]);
            f.u2[k] = w * (x - origin[0]);
        });
    } else {
        errors.add(path + ".velocity.type",
                   "unknown velocity '" + u_type +
                       "' (expected zero | uniform | shear | dilation | rotation)");
    }
}

} // namespace

threshold2d::Field2D load_field2d(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open field file: " + path);
    int nx, ny, n_species;
    double spacing;
    if (!(in >> nx >> ny >> spacing >> n_species))
        throw std::runtime_error("field file " + path + ": bad header (nx ny spacing n_species)");
    threshold2d::Field2D field;
    field.nx = nx;
    field.ny = ny;
    field.spacing = spacing;
    field.species.resize(n_species);
    for (auto& s : field.species) {
        s.rho.assign(field.cells(), 0.0);
        s.u1.assign(field.cells(), 0.0);
        s.u2.assign(field.cells(), 0.0);
    }
    for (std::size_t k = 0; k < field.cells(); ++k) {
        for (int s = 0; s < n_species; ++s) {
            if (!(in >> field.species[s].rho[k] >> field.species[s].u1[k] >>
                  field.species[s].u2[k]))
                throw std::runtime_error("field file " + path + ": truncated at cell " +
                                         std::to_string(k));
        }
    }
    return field;
}

Scenario parse_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ScenarioParseError({{"(file)", "cannot open " + path}});
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::filesystem::path p(path);
    return parse_scenario_text(buffer.str(), p.parent_path().string());
}

Scenario parse_scenario_text(const std::string& text, const std::string& base_dir) {
    Collector errors;
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& err) {
        errors.add("(syntax)", err.what());
        errors.raise_if_any();
    }

    Scenario sc;

    const std::string mode = root.value("mode", "");
    if (mode == "swarm") sc.mode = Mode::Swarm;
    else if (mode == "aggregate") sc.mode = Mode::Aggregate;
    else if (mode == "hydro1d") sc.mode = Mode::Hydro1D;
    else if (mode == "threshold2d") sc.mode = Mode::Threshold2D;
    else if (mode == "spectral-report") sc.mode = Mode::SpectralReport;
    else errors.add("mode", "unknown mode '" + mode + "'");

    sc.threads = root.value("threads", 1);
    if (sc.threads < 1) errors.add("threads", "must be >= 1");

    if (!root.contains("species") || !root["species"].is_array() || root["species"].empty()) {
        errors.add("species", "needs a non-empty species list");
        errors.raise_if_any();
    }
    const int n_species = static_cast<int>(root["species"].size());

    sc.phi = parse_kernel_array(root, n_species, base_dir, errors);

    // Integrator block.
    if (root.contains("integrator")) {
        const json& integ = root["integrator"];
        if (integ.contains("dt")) {
            if (!integ["dt"].is_number()) {
                errors.add("integrator.dt", "expected a number");
            } else {
                const double dt = integ["dt"].get<double>();
                if (!(dt > 0.0)) errors.add("integrator.dt", "dt must be positive");
                sc.integrator.dt = dt;
            }
        }
        sc.integrator.cfl = integ.value("cfl", 0.4);
        if (!(sc.integrator.cfl > 0.0) || sc.integrator.cfl > 1.0)
            errors.add("integrator.cfl", "cfl must lie in (0, 1]");
        sc.integrator.t_final = integ.value("t_final", 1.0);
        if (!(sc.integrator.t_final >= 0.0)) errors.add("integrator.t_final", "must be >= 0");
        sc.integrator.record_every = integ.value("record_every", 1);
        if (sc.integrator.record_every < 1) errors.add("integrator.record_every", "must be >= 1");
    }

    if (root.contains("output")) {
        sc.output.csv = root["output"].value("csv", "");
        sc.output.summary = root["output"].value("summary", "");
        sc.output.snapshots = root["output"].value("snapshots", "");
    }
    if (root.contains("profile")) {
        sc.profile.r_max = root["profile"].value("r_max", 20.0);
        sc.profile.samples = root["profile"].value("samples", 48);
        sc.profile.fit_r_min = root["profile"].value("fit_r_min", 0.0);
        sc.profile.fit_r_max =
            root["profile"].value("fit_r_max", std::numeric_limits<double>::infinity());
        if (sc.profile.samples < 3) errors.add("profile.samples", "needs >= 3 samples");
        if (!(sc.profile.r_max > 0.0)) errors.add("profile.r_max", "must be positive");
    }
    if (root.contains("tolerances")) {
        const json& tol = root["tolerances"];
        Tolerances& t = sc.tolerances;
        t.delta_v_monotone = tol.value("delta_v_monotone", t.delta_v_monotone);
        t.envelope_slack = tol.value("envelope_slack", t.envelope_slack);
        t.momentum_drift = tol.value("momentum_drift", t.momentum_drift);
        t.com_drift = tol.value("com_drift", t.com_drift);
        t.diameter_monotone = tol.value("diameter_monotone", t.diameter_monotone);
        t.mass_drift = tol.value("mass_drift", t.mass_drift);
        t.e_invariance_c = tol.value("e_invariance_c", t.e_invariance_c);
        t.q_drift_c = tol.value("q_drift_c", t.q_drift_c);
        t.consensus_scale = tol.value("consensus_scale", t.consensus_scale);
    }

    // Seed handling: mandatory as soon as any stochastic initializer appears.
    bool used_sampler = false;
    bool have_seed = false;
    if (root.contains("seed")) {
        if (!root["seed"].is_number_integer() || root["seed"].is_number_float() ||
            (root["seed"].is_number_integer() && !root["seed"].is_number_unsigned() &&
             root["seed"].get<long long>() < 0)) {
            errors.add("seed", "must be a non-negative integer");
        } else {
            have_seed = true;
            sc.seed = root["seed"].get<std::uint64_t>();
        }
    }
    rng::Generator gen(sc.seed);

    const bool agent_mode =
        sc.mode == Mode::Swarm || sc.mode == Mode::Aggregate || sc.mode == Mode::SpectralReport;
    if (agent_mode) {
        sc.dimension = root.value("dimension", 2);
        if (sc.dimension < 1 || sc.dimension > 16)
            errors.add("dimension", "must lie in [1, 16]");
    }

    if (sc.mode == Mode::Swarm || sc.mode == Mode::SpectralReport) {
        swarm::SwarmState state;
        state.dim = sc.dimension;
        for (int s = 0; s < n_species; ++s) {
            const json& spec = root["species"][s];
            const std::string path = "species[" + std::to_string(s) + "]";
            swarm::Species sp;
            sp.count = spec.value("count", 1);
            sp.mass = spec.value("mass", 1.0);
            if (sp.count < 1) errors.add(path + ".count", "must be >= 1");
            if (!(sp.mass > 0.0)) errors.add(path + ".mass", "must be positive");
            if (!spec.contains("positions")) {
                if (sc.mode == Mode::SpectralReport) {
                    sp.positions.assign(sp.count * sc.dimension, 0.0);
                } else {
                    errors.add(path + ".positions", "missing initializer");
                    continue;
                }
            } else {
                sp.positions = sample_points(spec["positions"], static_cast<int>(sp.count),
                                             sc.dimension, path + ".positions", errors, gen,
                                             used_sampler);
            }
            if (sc.mode == Mode::Swarm) {
                if (!spec.contains("velocities")) {
                    errors.add(path + ".velocities", "missing initializer");
                    continue;
                }
                sp.velocities = sample_points(spec["velocities"], static_cast<int>(sp.count),
                                              sc.dimension, path + ".velocities", errors, gen,
                                              used_sampler);
            } else {
                sp.velocities.assign(sp.count * sc.dimension, 0.0);
            }
            sc.species_masses.push_back(sp.mass);
            state.species.push_back(std::move(sp));
        }
        if (errors.ok()) {
            state.validate();
            sc.swarm_state = std::move(state);
        }
    } else if (sc.mode == Mode::Aggregate) {
        aggregate::AggregateState state;
        state.dim = sc.dimension;
        for (int s = 0; s < n_species; ++s) {
            const json& spec = root["species"][s];
            const std::string path = "species[" + std::to_string(s) + "]";
            aggregate::Species sp;
            sp.count = spec.value("count", 1);
            sp.mass = spec.value("mass", 1.0);
            if (sp.count < 1) errors.add(path + ".count", "must be >= 1");
            if (!(sp.mass > 0.0)) errors.add(path + ".mass", "must be positive");
            if (!spec.contains("positions")) {
                errors.add(path + ".positions", "missing initializer");
                continue;
            }
            sp.positions = sample_points(spec["positions"], static_cast<int>(sp.count),
                                         sc.dimension, path + ".positions", errors, gen,
                                         used_sampler);
            sc.species_masses.push_back(sp.mass);
            state.species.push_back(std::move(sp));
        }
        if (errors.ok()) {
            state.validate();
            sc.aggregate_state = std::move(state);
        }
    } else if (sc.mode == Mode::Hydro1D) {
        hydro1d::HydroState1D state;
        if (!root.contains("hydro")) {
            errors.add("hydro", "hydro1d mode needs a {n_cells, length} block");
            errors.raise_if_any();
        }
        state.n_cells = root["hydro"].value("n_cells", 0);
        state.length = root["hydro"].value("length", 2.0 * 3.14159265358979323846);
        if (state.n_cells < 4) errors.add("hydro.n_cells", "must be >= 4");
        if (!(state.length > 0.0)) errors.add("hydro.length", "must be positive");
        sc.dimension = 1;
        if (errors.ok()) {
            for (int s = 0; s < n_species; ++s) {
                const json& spec = root["species"][s];
                const std::string path = "species[" + std::to_string(s) + "]";
                hydro1d::HydroSpecies sp;
                if (!spec.contains("rho") || !spec.contains("u")) {
                    errors.add(path, "needs 'rho' and 'u' profile blocks");
                    continue;
                }
                sp.rho = sample_profile(spec["rho"], state.n_cells, state.length, path + ".rho",
                                        errors, base_dir);
                sp.u = sample_profile(spec["u"], state.n_cells, state.length, path + ".u", errors,
                                      base_dir);
                state.species.push_back(std::move(sp));
            }
        }
        if (errors.ok()) {
            state.validate();
            for (int s = 0; s < n_species; ++s) sc.species_masses.push_back(state.species_mass(s));
            sc.hydro_state = std::move(state);
        }
    } else if (sc.mode == Mode::Threshold2D) {
        sc.dimension = 2;
        threshold2d::Field2D field;
        if (root.contains("field2d") && root["field2d"].contains("file")) {
            const std::filesystem::path file(root["field2d"]["file"].get<std::string>());
            const auto resolved =
                file.is_absolute() ? file : std::filesystem::path(base_dir) / file;
            try {
                field = load_field2d(resolved.string());
            } catch (const std::exception& err) {
                errors.add("field2d.file", err.what());
            }
            if (static_cast<int>(field.species.size()) != n_species)
                errors.add("field2d.file", "species count differs from the species list");
        } else if (root.contains("field2d")) {
            field.nx = root["field2d"].value("nx", 0);
            field.ny = root["field2d"].value("ny", 0);
            field.spacing = root["field2d"].value("spacing", 0.0);
            if (field.nx < 3 || field.ny < 3) errors.add("field2d", "grid must be at least 3 x 3");
            if (!(field.spacing > 0.0)) errors.add("field2d.spacing", "must be positive");
            if (errors.ok()) {
                field.species.resize(n_species);
                for (int s = 0; s < n_species; ++s)
                    fill_field2d_species(root["species"][s], field, s,
                                         "species[" + std::to_string(s) + "]", errors);
            }
        } else {
            errors.add("field2d", "threshold2d mode needs a field2d block");
        }
        if (root.contains("field2d") && root["field2d"].contains("d_infinity"))
            sc.user_d_infinity = root["field2d"]["d_infinity"].get<double>();
        if (errors.ok()) {
            field.validate();
            for (int s = 0; s < n_species; ++s) sc.species_masses.push_back(field.species_mass(s));
            sc.field2d = std::move(field);
        }
    }

    if (used_sampler && !have_seed)
        errors.add("seed", "required whenever a stochastic initializer is used");

    // Negative diagonal kernels must respect the de-alignment margin at the
    // initial diameter.
    if (errors.ok() && sc.phi.has_negative_diagonal()) {
        double d0 = 0.0;
        if (sc.swarm_state) d0 = swarm::diagnostics(*sc.swarm_state, sc.phi).diameter;
        try {
            const spectral::WeightVector w(sc.species_masses);
            const double margin = spectral::dealignment_margin(sc.phi.array_at(d0), w);
            for (int i = 0; i < sc.phi.size(); ++i) {
                const kernels::RadialKernel& k = sc.phi.kernel(i, i);
                if (k.negative_constant() && k(0.0) < margin)
                    errors.add("kernels", "diagonal kernel (" + std::to_string(i) + "," +
                                              std::to_string(i) + ") = " +
                                              std::to_string(k(0.0)) +
                                              " exceeds the de-alignment margin " +
                                              std::to_string(margin) +
                                              " at the initial diameter");
            }
        } catch (const std::exception& err) {
            errors.add("kernels", std::string("cannot validate de-alignment margin: ") +
                                      err.what());
        }
    }

    errors.raise_if_any();
    return sc;
}

} // namespace mscd::scenario
