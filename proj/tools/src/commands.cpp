#include "eetflux/cli/commands.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <thread>

#include <fmt/chrono.h>
#include <fmt/format.h>

#include "eetflux/config.hpp"
#include "eetflux/hash.hpp"
#include "eetflux/pathways.hpp"

#ifndef EETFLUX_VERSION
#define EETFLUX_VERSION "0.0.0"
#endif

namespace eetflux::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

std::string utc_timestamp() {
    return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(std::time(nullptr)));
}

std::string read_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError(fmt::format("cannot open '{}'", path.string()));
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_bytes(const fs::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", path.string()));
    out << bytes;
    if (!out) throw std::runtime_error(fmt::format("write failed for '{}'", path.string()));
}

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::vector<std::string> site_labels(const FileMetadata& meta, std::size_t n) {
    if (meta.labels.size() == n) return meta.labels;
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < n; ++i) labels.push_back(std::to_string(i));
    return labels;
}

// Auxiliary operators on the sample grid, integrated from t = 0 even when the
// grid starts later.
std::vector<AuxiliaryOperatorSet> auxiliaries_on(const GeneratorSet& gen, const std::vector<double>& times, double dt) {
    if (gen.fully_markovian() || times.empty()) return {};
    if (times.front() < 0.0) throw FormatError("trajectory starts before t = 0");
    if (times.front() == 0.0) return integrate_auxiliaries(gen, times, dt);
    std::vector<double> grid{0.0};
    grid.insert(grid.end(), times.begin(), times.end());
    auto aux = integrate_auxiliaries(gen, grid, dt);
    aux.erase(aux.begin());
    return aux;
}

double min_eigenvalue(const ComplexMatrix& rho) {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(rho, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().minCoeff();
}

struct Analysis {
    std::vector<CurrentRecord> records;
    double max_dephas = 0.0;
    double max_relax = 0.0;
    double closure_mechanism = 0.0;
    double closure_origin = 0.0;
    double analytic_residual = 0.0;
    std::optional<ContinuityReport> central;
};

Analysis analyse(const std::vector<double>& times, const std::vector<ComplexMatrix>& states, const GeneratorSet& gen,
                 const std::vector<AuxiliaryOperatorSet>& aux) {
    Analysis a;
    a.records = total_currents(times, states, gen, aux);
    for (const auto& r : a.records) {
        a.max_dephas = std::max(a.max_dephas, r.dephasing.cwiseAbs().maxCoeff());
        a.max_relax = std::max(a.max_relax, r.relaxation.cwiseAbs().maxCoeff());
        a.closure_mechanism =
            std::max(a.closure_mechanism, (r.total - r.unitary - r.dephasing - r.relaxation).cwiseAbs().maxCoeff());
        a.closure_origin = std::max(a.closure_origin, (r.total - r.population - r.coherence).cwiseAbs().maxCoeff());
    }
    a.analytic_residual = analytic_continuity_residual(states, gen, aux, a.records);
    if (times.size() >= 3) a.central = continuity_residual(times, states, a.records);
    return a;
}

}  // namespace

fs::path resolve_out_dir(const std::optional<fs::path>& flag) {
    if (flag) return *flag;
    if (const char* env = std::getenv(kOutDirEnv); env && *env) return fs::path(env);
    return fs::current_path();
}

std::string manifest_name(const std::string& command) { return command + ".manifest.json"; }

json RunManifest::to_json() const {
    return {{"run_id", run_id},
            {"command", command},
            {"tool", "eetflux"},
            {"version", version},
            {"model_hash", model_hash},
            {"parameters", parameters},
            {"inputs", inputs},
            {"outputs", outputs},
            {"warnings", warnings},
            {"status", status},
            {"wall_time_seconds", wall_time_seconds},
            {"timestamp", timestamp}};
}

std::string make_run_id(const std::string& command, const std::string& model_hash, const json& parameters) {
    return to_hex(fnv1a64(command + "\n" + model_hash + "\n" + parameters.dump()));
}

void write_manifest(const fs::path& path, const RunManifest& manifest) {
    write_bytes(path, manifest.to_json().dump(2) + "\n");
}

Model load_model(const fs::path& config, const RunOverrides& overrides) {
    Model model = load_config(config);
    if (overrides.dt) model.run.dt = *overrides.dt;
    if (overrides.t_final) model.run.t_final = *overrides.t_final;
    if (overrides.dt_output) model.run.dt_output = *overrides.dt_output;
    validate(model);
    return model;
}

// ---------------------------------------------------------------- simulate

namespace {

int simulate_one(const fs::path& config, const fs::path& dir, const SimulateOptions& options, std::ostream& out,
                 std::ostream& err) {
    const auto start = Clock::now();
    Model model;
    try {
        model = load_model(config, options.overrides);
    } catch (const ModelError& e) {
        err << "error: " << config.string() << ": " << e.what() << "\n";
        return kValidation;
    }

    const bool binary = options.format == TrajectoryFormat::Binary;
    RunManifest manifest;
    manifest.command = "simulate";
    manifest.version = EETFLUX_VERSION;
    manifest.model_hash = model_hash(model);
    manifest.parameters = {{"config", config.filename().string()},
                           {"t_final", model.run.t_final},
                           {"dt_output", model.run.dt_output},
                           {"dt", model.run.dt},
                           {"integrator", "rk4"},
                           {"format", binary ? "binary" : "text"}};
    manifest.run_id = make_run_id(manifest.command, manifest.model_hash, manifest.parameters);
    manifest.inputs.push_back({{"config", config.string()}, {"model_hash", manifest.model_hash}});
    manifest.timestamp = utc_timestamp();

    fs::create_directories(dir);
    const auto manifest_path = dir / manifest_name(manifest.command);
    const auto gen = build_generators(model.network, model.environment);

    Trajectory traj;
    try {
        traj = propagate(model.initial, gen, model.run);
    } catch (const PropagationError& e) {
        manifest.status = "aborted";
        manifest.warnings.push_back(e.what());
        manifest.parameters["last_good_time"] = e.last_good_time();
        manifest.wall_time_seconds = seconds_since(start);
        write_manifest(manifest_path, manifest);
        err << "error: numerical abort in " << config.string() << ": " << e.what() << "\n"
            << fmt::format("last good time: t = {:.17g}\n", e.last_good_time());
        return kNumerical;
    }

    TrajectoryFile file;
    file.meta = {manifest.model_hash, "rk4", model.run.dt, model.network.labels, manifest_path.filename().string(),
                 manifest.run_id};
    file.times = std::move(traj.times);
    file.states = std::move(traj.states);
    const auto traj_path = dir / (binary ? kTrajectoryBinary : kTrajectoryText);
    write_trajectory(traj_path, file, options.format);

    manifest.outputs.push_back(traj_path.filename().string());
    manifest.warnings = traj.warnings;
    manifest.wall_time_seconds = seconds_since(start);
    write_manifest(manifest_path, manifest);

    for (const auto& w : traj.warnings) err << "warning: " << w << "\n";
    out << fmt::format("simulate: {} sites, {} samples to t = {:.6g}; wrote {}\n", model.network.n_sites(),
                       file.times.size(), model.run.t_final, traj_path.string());
    return kOk;
}

}  // namespace

int cmd_simulate(const SimulateOptions& options, std::ostream& out, std::ostream& err) {
    if (options.configs.empty()) {
        err << "error: no --config given\n";
        return kValidation;
    }
    fs::path root;
    try {
        root = resolve_out_dir(options.out_dir);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kValidation;
    }

    std::vector<fs::path> dirs;
    if (options.configs.size() == 1) {
        dirs.push_back(root);
    } else {
        std::map<std::string, fs::path> seen;
        for (const auto& c : options.configs) {
            const auto stem = c.stem().string();
            if (auto [it, fresh] = seen.emplace(stem, c); !fresh) {
                err << fmt::format("error: configs '{}' and '{}' share the output name '{}'\n", it->second.string(),
                                   c.string(), stem);
                return kValidation;
            }
            dirs.push_back(root / stem);
        }
    }

    const std::size_t count = options.configs.size();
    std::vector<int> codes(count, kOk);
    std::vector<std::ostringstream> outs(count), errs(count);
    auto run = [&](std::size_t i) {
        try {
            codes[i] = simulate_one(options.configs[i], dirs[i], options, outs[i], errs[i]);
        } catch (const std::exception& e) {
            errs[i] << "error: " << options.configs[i].string() << ": " << e.what() << "\n";
            codes[i] = kValidation;
        }
    };

    const unsigned jobs = std::max(1u, std::min<unsigned>(options.jobs, static_cast<unsigned>(count)));
    if (jobs == 1) {
        for (std::size_t i = 0; i < count; ++i) run(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < jobs; ++w)
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < count; i = next++) run(i);
            });
        for (auto& t : pool) t.join();
    }

    int code = kOk;
    for (std::size_t i = 0; i < count; ++i) {
        out << outs[i].str();
        err << errs[i].str();
        code = std::max(code, codes[i]);
    }
    return code;
}

// ---------------------------------------------------------------- currents

int cmd_currents(const CurrentsOptions& options, std::ostream& out, std::ostream& err) {
    const auto start = Clock::now();
    TrajectoryFile traj;
    Model model;
    try {
        traj = read_trajectory(options.trajectory);
    } catch (const std::exception& e) {
        err << "error: " << options.trajectory.string() << ": " << e.what() << "\n";
        return kValidation;
    }
    try {
        model = load_model(options.config, {});
    } catch (const ModelError& e) {
        err << "error: " << options.config.string() << ": " << e.what() << "\n";
        return kValidation;
    }
    const auto n = model.network.n_sites();
    if (traj.n_sites() != n) {
        err << fmt::format("error: dimension mismatch: trajectory has {} sites, config has {}\n", traj.n_sites(), n);
        return kValidation;
    }

    std::vector<std::string> warnings;
    const auto hash = model_hash(model);
    if (!traj.meta.model_hash.empty() && traj.meta.model_hash != hash)
        warnings.push_back(fmt::format("trajectory model hash {} differs from config hash {}", traj.meta.model_hash, hash));
    if (!traj.meta.labels.empty() && traj.meta.labels != model.network.labels)
        warnings.push_back("trajectory site labels differ from the config labels");

    const double dt = traj.meta.dt > 0.0 ? traj.meta.dt : model.run.dt;
    const auto gen = build_generators(model.network, model.environment);

    Analysis a;
    try {
        a = analyse(traj.times, traj.states, gen, auxiliaries_on(gen, traj.times, dt));
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kValidation;
    }

    RunManifest manifest;
    manifest.command = "currents";
    manifest.version = EETFLUX_VERSION;
    manifest.model_hash = hash;
    manifest.parameters = {{"trajectory", options.trajectory.filename().string()},
                           {"config", options.config.filename().string()},
                           {"auxiliary_dt", dt}};
    const std::string input_id = traj.meta.run_id.empty() ? to_hex(fnv1a64(read_bytes(options.trajectory))) : traj.meta.run_id;
    manifest.inputs.push_back({{"trajectory", options.trajectory.string()}, {"run_id", input_id}});
    manifest.inputs.push_back({{"config", options.config.string()}, {"model_hash", hash}});
    manifest.run_id = make_run_id(manifest.command, hash, {manifest.parameters, input_id});
    manifest.timestamp = utc_timestamp();
    manifest.warnings = warnings;

    fs::path dir;
    try {
        dir = resolve_out_dir(options.out_dir);
        fs::create_directories(dir);
        CurrentsFile file;
        file.meta = {hash, traj.meta.integrator.empty() ? "external" : traj.meta.integrator, dt, model.network.labels,
                     manifest_name(manifest.command), manifest.run_id};
        file.records = a.records;
        write_currents(dir / kCurrentsFile, file);
        manifest.outputs.push_back(kCurrentsFile);
        manifest.wall_time_seconds = seconds_since(start);
        write_manifest(dir / manifest_name(manifest.command), manifest);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kValidation;
    }

    for (const auto& w : warnings) err << "warning: " << w << "\n";
    out << fmt::format("currents: {} samples, {} sites; wrote {}\n", a.records.size(), n, (dir / kCurrentsFile).string());
    out << fmt::format("max|j_dephas| = {:.3e}\n", a.max_dephas);
    out << fmt::format("max|j_relax| = {:.3e}\n", a.max_relax);
    out << fmt::format("closure |j_total - (j_unitary + j_dephas + j_relax)| = {:.3e}\n", a.closure_mechanism);
    out << fmt::format("closure |j_total - (j_pop + j_coher)| = {:.3e}\n", a.closure_origin);
    out << fmt::format("continuity residual (generator) = {:.3e}\n", a.analytic_residual);
    if (a.central)
        out << fmt::format("continuity residual (central difference) = {:.3e} at t = {:.6g}, site {}; "
                           "dt_output = {:.3g}, residual / dt_output^2 = {:.3g}\n",
                           a.central->max_residual, a.central->time, a.central->site, a.central->dt_output,
                           a.central->scale_constant);
    else
        out << "continuity residual (central difference) = n/a (fewer than 3 samples)\n";
    return kOk;
}

// ---------------------------------------------------------------- pathways

namespace {

SiteIndex resolve_site(const json& ref, const std::vector<std::string>& labels, const std::string& where) {
    if (ref.is_number_unsigned()) {
        const auto i = ref.get<SiteIndex>();
        if (i >= labels.size()) throw std::invalid_argument(fmt::format("{}: site index {} out of range", where, i));
        return i;
    }
    if (ref.is_string()) {
        const auto it = std::find(labels.begin(), labels.end(), ref.get<std::string>());
        if (it == labels.end())
            throw std::invalid_argument(fmt::format("{}: unknown site '{}'", where, ref.get<std::string>()));
        return static_cast<SiteIndex>(it - labels.begin());
    }
    throw std::invalid_argument(fmt::format("{}: site must be a label or a non-negative index", where));
}

std::vector<SubComplex> load_groups(const fs::path& path, const std::vector<std::string>& labels) {
    json doc;
    try {
        doc = json::parse(read_bytes(path));
    } catch (const json::exception& e) {
        throw std::invalid_argument(fmt::format("{}: {}", path.string(), e.what()));
    }
    if (!doc.is_object() || doc.size() < 2)
        throw std::invalid_argument(fmt::format("{}: expected an object with at least two named site groups", path.string()));
    std::vector<SubComplex> groups;
    for (const auto& [name, sites] : doc.items()) {
        if (!sites.is_array() || sites.empty())
            throw std::invalid_argument(fmt::format("{}: group '{}' must be a non-empty array", path.string(), name));
        SubComplex g{name, {}};
        for (const auto& s : sites) g.sites.push_back(resolve_site(s, labels, "group " + name));
        groups.push_back(std::move(g));
    }
    return groups;
}

}  // namespace

int cmd_pathways(const PathwaysOptions& options, std::ostream& out, std::ostream& err) {
    const auto start = Clock::now();
    CurrentsFile currents;
    std::string input_bytes;
    try {
        input_bytes = read_bytes(options.currents);
        std::istringstream in(input_bytes);
        currents = read_currents(in);
    } catch (const std::exception& e) {
        err << "error: " << options.currents.string() << ": " << e.what() << "\n";
        return kValidation;
    }
    if (currents.records.empty()) {
        err << "error: " << options.currents.string() << ": no samples\n";
        return kValidation;
    }
    if (!(options.threshold >= 0.0)) {
        err << "error: --threshold must be >= 0\n";
        return kValidation;
    }

    const auto series = CurrentSeries::from_records(currents.records);
    const auto n = static_cast<std::size_t>(series.currents.front().rows());
    const auto labels = site_labels(currents.meta, n);
    const double window = options.window ? *options.window : series.times.back() - options.t0;

    IntegratedCurrents ip;
    std::vector<SubComplex> groups;
    try {
        ip = integrate_currents(series, options.t0, window);
        if (options.groups) groups = load_groups(*options.groups, labels);
    } catch (const std::out_of_range& e) {
        err << "error: window outside data: " << e.what() << "\n";
        return kValidation;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kValidation;
    }

    const auto graph = build_pathway_graph(ip.net, labels, options.threshold, options.t0, window);

    json transfers = json::array();
    for (std::size_t i = 0; i < groups.size(); ++i)
        for (std::size_t j = i + 1; j < groups.size(); ++j) {
            double value = 0.0;
            try {
                value = integrate_series(series.times, subcomplex_current(currents.records, groups[i], groups[j]),
                                         options.t0, window);
            } catch (const std::exception& e) {
                err << fmt::format("error: groups '{}' and '{}': {}\n", groups[i].name, groups[j].name, e.what());
                return kValidation;
            }
            transfers.push_back({{"from", groups[i].name}, {"to", groups[j].name}, {"net", value}});
        }

    RunManifest manifest;
    manifest.command = "pathways";
    manifest.version = EETFLUX_VERSION;
    manifest.model_hash = currents.meta.model_hash;
    manifest.parameters = {{"currents", options.currents.filename().string()},
                           {"t0", options.t0},
                           {"window", window},
                           {"threshold", options.threshold}};
    if (options.groups) {
        json g = json::object();
        for (const auto& grp : groups) g[grp.name] = grp.sites;
        manifest.parameters["groups"] = g;
    }
    const std::string input_id =
        currents.meta.run_id.empty() ? to_hex(fnv1a64(input_bytes)) : currents.meta.run_id;
    manifest.inputs.push_back({{"currents", options.currents.string()}, {"run_id", input_id}});
    manifest.run_id = make_run_id(manifest.command, manifest.model_hash, {manifest.parameters, input_id});
    manifest.timestamp = utc_timestamp();
    if (graph.edges.empty())
        manifest.warnings.push_back(fmt::format("no net transfer exceeds threshold {:.6g}; graph has no edges",
                                                options.threshold));

    const auto mname = manifest_name(manifest.command);
    std::string dot = fmt::format("// manifest: {}\n// run_id: {}\n", mname, manifest.run_id);
    dot += export_graph(graph, GraphFormat::Dot);
    json doc = graph_to_json(graph);
    doc["manifest"] = mname;
    doc["run_id"] = manifest.run_id;
    doc["model_hash"] = manifest.model_hash;
    if (options.groups) doc["groups"] = {{"definitions", manifest.parameters["groups"]}, {"transfers", transfers}};

    fs::path dir;
    try {
        dir = resolve_out_dir(options.out_dir);
        fs::create_directories(dir);
        write_bytes(dir / kPathwaysDot, dot);
        write_bytes(dir / kPathwaysJson, doc.dump(2) + "\n");
        manifest.outputs = {kPathwaysDot, kPathwaysJson};
        manifest.wall_time_seconds = seconds_since(start);
        write_manifest(dir / mname, manifest);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kValidation;
    }

    for (const auto& w : manifest.warnings) err << "warning: " << w << "\n";
    out << fmt::format("pathways: window [{:.6g}, {:.6g}], threshold {:.6g}, {} edge(s); wrote {}\n", options.t0,
                       options.t0 + window, options.threshold, graph.edges.size(), (dir / kPathwaysDot).string());
    for (const auto& e : graph.edges)
        out << fmt::format("  {} -> {}  dP = {:.10g}\n", labels[e.from], labels[e.to], e.weight);
    for (const auto& t : transfers)
        out << fmt::format("  J[{} -> {}] = {:.10g}\n", t["from"].get<std::string>(), t["to"].get<std::string>(),
                           t["net"].get<double>());
    return kOk;
}

// ---------------------------------------------------------------- check

namespace {

struct CheckRow {
    std::string name;
    std::string verdict;  // PASS, FAIL, WARN
    std::string detail;
};

CheckRow row(std::string name, double value, double tol, const char* what = "max") {
    const bool ok = value <= tol;
    return {std::move(name), ok ? "PASS" : "FAIL", fmt::format("{} {:.3e} (tol {:.0e})", what, value, tol)};
}

// Per interior sample: tolerance for the three-point derivative of the
// populations, from a third-derivative estimate of the generator's rho_nn'.
std::vector<double> continuity_tolerances(const std::vector<double>& times, const std::vector<ComplexMatrix>& states,
                                          const GeneratorSet& gen, const std::vector<AuxiliaryOperatorSet>& aux) {
    const std::size_t k_count = times.size();
    std::vector<Eigen::VectorXd> d(k_count);
    for (std::size_t k = 0; k < k_count; ++k)
        d[k] = generator_action(states[k], gen, channel_aux_at(gen, aux, k)).diagonal().real();

    std::vector<double> third(k_count, 0.0);
    for (std::size_t k = 1; k + 1 < k_count; ++k) {
        const double h1 = times[k] - times[k - 1];
        const double h2 = times[k + 1] - times[k];
        const Eigen::VectorXd second = 2.0 * ((d[k + 1] - d[k]) / h2 - (d[k] - d[k - 1]) / h1) / (h1 + h2);
        third[k] = second.cwiseAbs().maxCoeff();
    }
    constexpr double eps = std::numeric_limits<double>::epsilon();
    std::vector<double> tol;
    for (std::size_t k = 1; k + 1 < k_count; ++k) {
        const double h1 = times[k] - times[k - 1];
        const double h2 = times[k + 1] - times[k];
        double f3 = third[k];
        if (k > 1) f3 = std::max(f3, third[k - 1]);
        if (k + 2 < k_count) f3 = std::max(f3, third[k + 1]);
        tol.push_back(4.0 * (h1 * h2 / 6.0) * f3 + 64.0 * eps / std::min(h1, h2));
    }
    return tol;
}

}  // namespace

int cmd_check(const CheckOptions& options, std::ostream& out, std::ostream& err) {
    Model model;
    try {
        model = load_model(options.config, options.overrides);
    } catch (const ModelError& e) {
        err << "error: " << options.config.string() << ": " << e.what() << "\n";
        return kValidation;
    }
    const auto gen = build_generators(model.network, model.environment);
    const auto n = model.network.n_sites();

    std::vector<double> times;
    std::vector<ComplexMatrix> states;
    std::vector<CheckRow> rows;
    double aux_dt = model.run.dt;
    std::string source;

    if (options.trajectory) {
        try {
            auto file = read_trajectory(*options.trajectory);
            if (file.n_sites() != n) {
                err << fmt::format("error: dimension mismatch: trajectory has {} sites, config has {}\n",
                                   file.n_sites(), n);
                return kValidation;
            }
            if (file.meta.dt > 0.0) aux_dt = file.meta.dt;
            times = std::move(file.times);
            states = std::move(file.states);
        } catch (const std::exception& e) {
            err << "error: " << options.trajectory->string() << ": " << e.what() << "\n";
            return kValidation;
        }
        source = options.trajectory->string();
    } else {
        RunParameters run = model.run;
        double horizon = options.overrides.t_final ? run.t_final : std::min(run.t_final, 100.0 * run.dt_output);
        if (horizon <= 0.0) horizon = 4.0 * run.dt_output;
        run.t_final = horizon;
        if (output_grid(run.t_final, run.dt_output).size() < 3) run.dt_output = horizon / 4.0;
        try {
            auto traj = propagate(model.initial, gen, run);
            times = std::move(traj.times);
            states = std::move(traj.states);
        } catch (const PropagationError& e) {
            rows.push_back({"propagation", "FAIL", fmt::format("{} (last good t = {:.6g})", e.what(), e.last_good_time())});
        }
        source = fmt::format("propagated to t = {:.6g}, dt_output = {:.3g}, dt = {:.3g}", run.t_final, run.dt_output,
                             run.dt);
    }

    if (!states.empty()) {
        std::vector<AuxiliaryOperatorSet> aux;
        Analysis a;
        try {
            aux = auxiliaries_on(gen, times, aux_dt);
            a = analyse(times, states, gen, aux);
        } catch (const std::exception& e) {
            err << "error: " << e.what() << "\n";
            return kValidation;
        }

        double trace_err = 0.0, herm_err = 0.0, min_eig = std::numeric_limits<double>::infinity();
        std::vector<double> eig;
        for (const auto& rho : states) {
            trace_err = std::max(trace_err, std::abs(rho.trace() - Complex(1.0)));
            herm_err = std::max(herm_err, (rho - rho.adjoint()).cwiseAbs().maxCoeff());
            eig.push_back(min_eigenvalue(rho));
            min_eig = std::min(min_eig, eig.back());
        }
        rows.push_back(row("trace", trace_err, 1e-8, "max |tr rho - 1|"));
        rows.push_back(row("hermiticity", herm_err, 1e-10, "max |rho - rho^H|"));
        rows.push_back(row("continuity (generator)", a.analytic_residual, 1e-10));

        if (a.central) {
            const auto tol = continuity_tolerances(times, states, gen, aux);
            double worst_ratio = 0.0;
            std::size_t worst = 0;
            for (std::size_t k = 0; k < tol.size(); ++k) {
                const double ratio = a.central->per_step[k] / tol[k];
                if (ratio > worst_ratio) {
                    worst_ratio = ratio;
                    worst = k;
                }
            }
            const bool ok = worst_ratio <= 1.0;
            rows.push_back({"continuity (central diff)", ok ? "PASS" : "FAIL",
                            fmt::format("max {:.3e}; worst at t = {:.6g}: {:.3e} vs tol {:.3e}", a.central->max_residual,
                                        times[worst + 1], a.central->per_step[worst], tol[worst])});
        } else {
            rows.push_back({"continuity (central diff)", "PASS", "skipped: fewer than 3 samples"});
        }

        double dephas = a.max_dephas;
        for (std::size_t k = 0; k < states.size(); ++k) {
            const auto channel_aux = channel_aux_at(gen, aux, k);
            for (SiteIndex s = 0; s < n; ++s)
                dephas = std::max(dephas, std::abs(dephasing_current_check(states[k], gen, channel_aux, s)));
        }
        rows.push_back(row("zero dephasing current", dephas, 1e-12, "max |j_dephas|"));

        double excess = 0.0;
        std::size_t skipped = 0, clamped = 0;
        for (std::size_t k = 0; k < states.size(); ++k) {
            if (eig[k] < -1e-9) {
                ++skipped;
                continue;
            }
            for (SiteIndex l = 0; l < n; ++l)
                for (SiteIndex m = l + 1; m < n; ++m) {
                    const auto b = unitary_bound_check(states[k], gen.hamiltonian, l, m);
                    excess = std::max(excess, b.magnitude - b.bound);
                    clamped += b.clamped ? 1 : 0;
                }
        }
        auto bound = row("unitary current bound", std::max(excess, 0.0), 1e-10, "max excess");
        if (skipped) bound.detail += fmt::format("; {} non-PSD step(s) skipped", skipped);
        if (clamped) bound.detail += fmt::format("; {} radicand(s) clamped", clamped);
        rows.push_back(bound);

        rows.push_back(row("closure (mechanism)", a.closure_mechanism, 1e-12));
        rows.push_back(row("closure (origin)", a.closure_origin, 1e-10));
        rows.push_back({"positivity", min_eig < -1e-6 ? "WARN" : "PASS",
                        fmt::format("min eigenvalue {:.3e} (warning below -1e-06)", min_eig)});
    }

    out << fmt::format("check: {} ({} sites; {})\n", options.config.string(), n, source);
    bool failed = false;
    for (const auto& r : rows) {
        out << fmt::format("  {:<28} {:<4}  {}\n", r.name, r.verdict, r.detail);
        failed = failed || r.verdict == "FAIL";
    }
    out << (failed ? "check: FAILED\n" : "check: all checks passed\n");
    return failed ? kCheckFailed : kOk;
}

}  // namespace eetflux::cli
