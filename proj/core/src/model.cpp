#include "eetflux/model.hpp"

#include <cmath>
#include <numbers>
#include <set>
#include <utility>

#include <fmt/format.h>

namespace eetflux {

RealMatrix SiteNetwork::hamiltonian() const {
    const auto n = static_cast<Eigen::Index>(n_sites());
    RealMatrix h = RealMatrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) h(i, i) = energies[static_cast<std::size_t>(i)];
    for (const auto& c : couplings) {
        const auto a = static_cast<Eigen::Index>(c.from);
        const auto b = static_cast<Eigen::Index>(c.to);
        h(a, b) = c.value;
        h(b, a) = c.value;
    }
    return h;
}

bool EnvironmentSpec::fully_markovian() const noexcept {
    for (const auto& d : dephasing)
        if (!is_markovian(d.kind)) return false;
    for (const auto& r : relaxation)
        if (!is_markovian(r.kind)) return false;
    return true;
}

namespace {

void check_index(SiteIndex index, std::size_t n_sites, const std::string& path) {
    if (index >= n_sites)
        throw ModelError(path, fmt::format("site index {} out of range [0, {})", index, n_sites));
}

void validate_kind(const ChannelKind& kind, const std::string& path) {
    if (const auto* m = std::get_if<MarkovianRate>(&kind)) {
        if (!std::isfinite(m->rate)) throw ModelError(path + ".rate", "rate must be finite");
        if (m->rate < 0.0) throw ModelError(path + ".rate", fmt::format("negative rate {}", m->rate));
        return;
    }
    const auto& bath = std::get<NonMarkovianBath>(kind);
    if (bath.modes.empty()) throw ModelError(path + ".modes", "mode list must be non-empty");
    for (std::size_t i = 0; i < bath.modes.size(); ++i) {
        const auto& mode = bath.modes[i];
        const auto mode_path = fmt::format("{}.modes[{}]", path, i);
        if (!std::isfinite(mode.g) || !std::isfinite(mode.gamma) || !std::isfinite(mode.omega))
            throw ModelError(mode_path, "mode parameters must be finite");
        if (mode.g < 0.0) throw ModelError(mode_path + ".g", fmt::format("g must be >= 0, got {}", mode.g));
        if (mode.gamma <= 0.0)
            throw ModelError(mode_path + ".gamma", fmt::format("gamma must be > 0, got {}", mode.gamma));
    }
}

}  // namespace

void validate_network(const SiteNetwork& network) {
    const auto n = network.n_sites();
    if (n == 0) throw ModelError("sites", "network needs at least one site");
    if (network.labels.size() != n) throw ModelError("sites", "one label per site required");
    std::set<std::string> seen_labels;
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(network.energies[i]))
            throw ModelError(fmt::format("sites[{}].energy", i), "energy must be finite");
        if (!seen_labels.insert(network.labels[i]).second)
            throw ModelError(fmt::format("sites[{}].label", i), "duplicate label '" + network.labels[i] + "'");
    }
    std::set<std::pair<SiteIndex, SiteIndex>> pairs;
    for (std::size_t i = 0; i < network.couplings.size(); ++i) {
        const auto& c = network.couplings[i];
        const auto path = fmt::format("couplings[{}]", i);
        check_index(c.from, n, path + ".from");
        check_index(c.to, n, path + ".to");
        if (c.from == c.to) throw ModelError(path, "self-coupling forbidden");
        if (c.from > c.to) throw ModelError(path, "couplings must be stored with from < to");
        if (!std::isfinite(c.value)) throw ModelError(path + ".value", "coupling must be finite");
        if (!pairs.emplace(c.from, c.to).second) throw ModelError(path, "duplicate coupling pair");
    }
}

void validate_environment(const EnvironmentSpec& env, std::size_t n_sites) {
    std::set<SiteIndex> dephased;
    for (std::size_t i = 0; i < env.dephasing.size(); ++i) {
        const auto& d = env.dephasing[i];
        const auto path = fmt::format("dephasing[{}]", i);
        check_index(d.site, n_sites, path + ".site");
        if (!dephased.insert(d.site).second) throw ModelError(path, "duplicate dephasing channel for site");
        validate_kind(d.kind, path);
    }
    std::set<std::pair<SiteIndex, SiteIndex>> relaxed;
    for (std::size_t i = 0; i < env.relaxation.size(); ++i) {
        const auto& r = env.relaxation[i];
        const auto path = fmt::format("relaxation[{}]", i);
        check_index(r.source, n_sites, path + ".source");
        check_index(r.target, n_sites, path + ".target");
        if (r.source == r.target) throw ModelError(path, "self-relaxation forbidden");
        if (!relaxed.emplace(r.source, r.target).second)
            throw ModelError(path, "duplicate relaxation channel for ordered pair");
        validate_kind(r.kind, path);
    }
}

ComplexMatrix checked_density_matrix(const ComplexMatrix& rho, const std::string& path) {
    if (rho.rows() != rho.cols()) throw ModelError(path, "matrix must be square");
    if (!rho.allFinite()) throw ModelError(path, "matrix entries must be finite");
    const double asymmetry = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
    if (asymmetry > kSymmetrizeTolerance)
        throw ModelError(path, fmt::format("matrix is not Hermitian (max |M - M^H| = {:.3e})", asymmetry));
    ComplexMatrix hermitian = 0.5 * (rho + rho.adjoint());
    const double trace = hermitian.trace().real();
    if (std::abs(trace - 1.0) > kInitialStateTolerance)
        throw ModelError(path, fmt::format("trace must be 1, got {:.12g}", trace));
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(hermitian, Eigen::EigenvaluesOnly);
    const double smallest = solver.eigenvalues().minCoeff();
    if (smallest < -kInitialStateTolerance)
        throw ModelError(path, fmt::format("matrix is not positive semidefinite (smallest eigenvalue {:.6g})", smallest));
    return hermitian;
}

ComplexMatrix initial_density_matrix(const InitialState& initial, std::size_t n_sites) {
    const auto n = static_cast<Eigen::Index>(n_sites);
    ComplexMatrix rho = ComplexMatrix::Zero(n, n);
    if (const auto* single = std::get_if<SingleSite>(&initial)) {
        check_index(single->site, n_sites, "initial.site");
        rho(static_cast<Eigen::Index>(single->site), static_cast<Eigen::Index>(single->site)) = 1.0;
    } else if (const auto* uniform = std::get_if<UniformSites>(&initial)) {
        if (uniform->sites.empty()) throw ModelError("initial.sites", "site list must be non-empty");
        const double weight = 1.0 / static_cast<double>(uniform->sites.size());
        for (std::size_t i = 0; i < uniform->sites.size(); ++i) {
            const auto site = uniform->sites[i];
            check_index(site, n_sites, fmt::format("initial.sites[{}]", i));
            const auto k = static_cast<Eigen::Index>(site);
            if (rho(k, k) != 0.0) throw ModelError(fmt::format("initial.sites[{}]", i), "duplicate site");
            rho(k, k) = weight;
        }
    } else {
        const auto& m = std::get<ExplicitMatrix>(initial).rho;
        if (m.rows() != n || m.cols() != n)
            throw ModelError("initial.matrix", fmt::format("expected {}x{} matrix", n, n));
        rho = checked_density_matrix(m, "initial.matrix");
    }
    return rho;
}

void validate(const Model& model) {
    validate_network(model.network);
    validate_environment(model.environment, model.network.n_sites());
    (void)initial_density_matrix(model.initial, model.network.n_sites());
    const auto& run = model.run;
    if (!(run.t_final >= 0.0) || !std::isfinite(run.t_final)) throw ModelError("run.t_final", "must be >= 0");
    if (!(run.dt_output > 0.0) || !std::isfinite(run.dt_output)) throw ModelError("run.dt_output", "must be > 0");
    if (!(run.dt > 0.0) || !std::isfinite(run.dt)) throw ModelError("run.integrator.dt", "must be > 0");
    if (!(model.unit_factor > 0.0)) throw ModelError("unit", "unit factor must be positive");
}

double wavenumber_factor(TimeUnit unit) {
    // 2*pi*c with c in cm per time unit.
    constexpr double c_cm_per_s = 2.99792458e10;
    switch (unit) {
        case TimeUnit::Femtosecond: return 2.0 * std::numbers::pi * c_cm_per_s * 1e-15;
        case TimeUnit::Picosecond: return 2.0 * std::numbers::pi * c_cm_per_s * 1e-12;
        case TimeUnit::Unitless: break;
    }
    throw ModelError("time_unit", "wavenumber energies need a physical time unit (fs or ps)");
}

}  // namespace eetflux
