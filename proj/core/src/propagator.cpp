#include "eetflux/propagator.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <fmt/format.h>

namespace eetflux {

namespace {

constexpr Complex kI{0.0, 1.0};

Eigen::Index idx(SiteIndex s) { return static_cast<Eigen::Index>(s); }

ComplexMatrix commutator_term(const ComplexMatrix& rho, const GeneratorSet& gen) {
    const auto& h = gen.complex_hamiltonian;
    ComplexMatrix out(rho.rows(), rho.cols());
    out.noalias() = h * rho;
    out.noalias() -= rho * h;
    return -kI * out;
}

// Adds L rho A^H + A rho L^H - L^H A rho - rho A^H L for L = |t><s|, using the
// single-entry structure of L: each term touches one row or one column.
void add_channel_action(ComplexMatrix& out, const ComplexMatrix& rho, const ComplexMatrix& a, SiteIndex source,
                        SiteIndex target) {
    const auto s = idx(source);
    const auto t = idx(target);
    // (L rho A^H) row t = row s of rho A^H
    out.row(t).noalias() += rho.row(s) * a.adjoint();
    // (A rho L^H) column t = column s of A rho
    out.col(t).noalias() += a * rho.col(s);
    // (L^H A rho) row s = row t of A rho
    out.row(s).noalias() -= a.row(t) * rho;
    // (rho A^H L) column s = column t of rho A^H
    out.col(s).noalias() -= rho * a.row(t).adjoint();
}

bool is_finite(const ComplexMatrix& m) { return m.allFinite(); }

struct Stepper {
    const GeneratorSet& gen;

    std::vector<ComplexMatrix> channel_aux(const AuxiliaryOperatorSet& aux) const {
        return channel_auxiliaries(gen, aux);
    }

    static AuxiliaryOperatorSet axpy(const AuxiliaryOperatorSet& y, double h, const AuxiliaryOperatorSet& k) {
        AuxiliaryOperatorSet out;
        out.modes.reserve(y.modes.size());
        for (std::size_t m = 0; m < y.modes.size(); ++m) out.modes.push_back(y.modes[m] + h * k.modes[m]);
        return out;
    }

    // One RK4 step of the auxiliary operators. Stage values are returned so the
    // rho update can reuse them.
    std::array<AuxiliaryOperatorSet, 4> aux_stages(const AuxiliaryOperatorSet& aux, double h,
                                                   AuxiliaryOperatorSet& next) const {
        std::array<AuxiliaryOperatorSet, 4> stage;
        stage[0] = aux;
        const auto k1 = auxiliary_rhs(stage[0], gen);
        stage[1] = axpy(aux, 0.5 * h, k1);
        const auto k2 = auxiliary_rhs(stage[1], gen);
        stage[2] = axpy(aux, 0.5 * h, k2);
        const auto k3 = auxiliary_rhs(stage[2], gen);
        stage[3] = axpy(aux, h, k3);
        const auto k4 = auxiliary_rhs(stage[3], gen);
        next.modes.resize(aux.modes.size());
        for (std::size_t m = 0; m < aux.modes.size(); ++m)
            next.modes[m] = aux.modes[m] + (h / 6.0) * (k1.modes[m] + 2.0 * k2.modes[m] + 2.0 * k3.modes[m] + k4.modes[m]);
        return stage;
    }

    void markovian_step(ComplexMatrix& rho, double h) const {
        const ComplexMatrix k1 = lindblad_rhs(rho, gen);
        const ComplexMatrix k2 = lindblad_rhs(rho + (0.5 * h) * k1, gen);
        const ComplexMatrix k3 = lindblad_rhs(rho + (0.5 * h) * k2, gen);
        const ComplexMatrix k4 = lindblad_rhs(rho + h * k3, gen);
        rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }

    void joint_step(JointState& state, double h) const {
        AuxiliaryOperatorSet next;
        const auto stage = aux_stages(state.aux, h, next);
        const auto& rho = state.rho;
        const ComplexMatrix k1 = generator_action(rho, gen, channel_aux(stage[0]));
        const ComplexMatrix k2 = generator_action(rho + (0.5 * h) * k1, gen, channel_aux(stage[1]));
        const ComplexMatrix k3 = generator_action(rho + (0.5 * h) * k2, gen, channel_aux(stage[2]));
        const ComplexMatrix k4 = generator_action(rho + h * k3, gen, channel_aux(stage[3]));
        state.rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        state.aux = std::move(next);
    }
};

double smallest_eigenvalue(const ComplexMatrix& rho) {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(rho, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().minCoeff();
}

}  // namespace

ComplexMatrix lindblad_rhs(const ComplexMatrix& rho, const GeneratorSet& gen) {
    ComplexMatrix out = commutator_term(rho, gen);
    for (const auto& ch : gen.channels) {
        if (!ch.markovian()) throw std::invalid_argument("lindblad_rhs: non-Markovian channel present, use zofe_rhs");
        const double gamma = *ch.rate;
        if (gamma == 0.0) continue;
        const auto s = idx(ch.source);
        const auto t = idx(ch.target);
        // gamma * (rho_ss |t><t| - 1/2 (|s><s| rho + rho |s><s|))
        const Complex pop = rho(s, s);
        out.row(s) -= (0.5 * gamma) * rho.row(s);
        out.col(s) -= (0.5 * gamma) * rho.col(s);
        out(t, t) += gamma * pop;
    }
    return out;
}

ComplexMatrix nonunitary_action(const ComplexMatrix& rho, const GeneratorSet& gen,
                                const std::vector<ComplexMatrix>& channel_aux) {
    ComplexMatrix out = ComplexMatrix::Zero(rho.rows(), rho.cols());
    for (std::size_t c = 0; c < gen.channels.size(); ++c)
        add_channel_action(out, rho, channel_aux[c], gen.channels[c].source, gen.channels[c].target);
    return out;
}

ComplexMatrix nonunitary_action(const ComplexMatrix& rho, const GeneratorSet& gen,
                                const std::vector<ComplexMatrix>& channel_aux, ChannelType only) {
    ComplexMatrix out = ComplexMatrix::Zero(rho.rows(), rho.cols());
    for (std::size_t c = 0; c < gen.channels.size(); ++c) {
        if (gen.channels[c].type != only) continue;
        add_channel_action(out, rho, channel_aux[c], gen.channels[c].source, gen.channels[c].target);
    }
    return out;
}

ComplexMatrix generator_action(const ComplexMatrix& rho, const GeneratorSet& gen,
                               const std::vector<ComplexMatrix>& channel_aux) {
    ComplexMatrix out = commutator_term(rho, gen);
    for (std::size_t c = 0; c < gen.channels.size(); ++c)
        add_channel_action(out, rho, channel_aux[c], gen.channels[c].source, gen.channels[c].target);
    return out;
}

AuxiliaryOperatorSet auxiliary_rhs(const AuxiliaryOperatorSet& aux, const GeneratorSet& gen) {
    AuxiliaryOperatorSet out;
    out.modes.resize(aux.modes.size());
    const auto& h = gen.complex_hamiltonian;
    for (const auto& ch : gen.channels) {
        if (ch.markovian()) continue;
        const auto t = idx(ch.target);
        const auto s = idx(ch.source);
        for (std::size_t m = 0; m < ch.modes.size(); ++m) {
            const auto& mode = ch.modes[m];
            const auto& a = aux.modes[ch.first_mode + m];
            ComplexMatrix da(a.rows(), a.cols());
            da.noalias() = h * a;
            da.noalias() -= a * h;
            da *= -kI;
            da -= mode.decay() * a;
            da(t, s) += mode.g;
            out.modes[ch.first_mode + m] = std::move(da);
        }
    }
    return out;
}

JointState zofe_rhs(const JointState& state, const GeneratorSet& gen) {
    return {generator_action(state.rho, gen, channel_auxiliaries(gen, state.aux)), auxiliary_rhs(state.aux, gen)};
}

std::vector<double> output_grid(double t_final, double dt_output) {
    if (!(dt_output > 0.0)) throw std::invalid_argument("output_grid: dt_output must be positive");
    if (!(t_final >= 0.0)) throw std::invalid_argument("output_grid: t_final must be non-negative");
    std::vector<double> times;
    const auto count = static_cast<std::size_t>(std::floor(t_final / dt_output + 1e-9));
    times.reserve(count + 2);
    for (std::size_t k = 0; k <= count; ++k) times.push_back(static_cast<double>(k) * dt_output);
    if (t_final - times.back() > 1e-9 * dt_output) times.push_back(t_final);
    else times.back() = std::min(times.back(), t_final);
    return times;
}

std::size_t substeps(double interval, double dt) {
    if (interval <= 0.0) return 0;
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(interval / dt - 1e-9)));
}

Trajectory propagate(const ComplexMatrix& rho0, const GeneratorSet& gen, const PropagationOptions& options) {
    if (!(options.dt > 0.0)) throw std::invalid_argument("propagate: dt must be positive");
    if (rho0.rows() != static_cast<Eigen::Index>(gen.dim()) || rho0.cols() != rho0.rows())
        throw std::invalid_argument("propagate: initial state dimension does not match the generators");

    const auto times = output_grid(options.t_final, options.dt_output);
    const Stepper stepper{gen};
    const bool markovian = gen.fully_markovian();

    Trajectory traj;
    traj.times = times;
    traj.states.reserve(times.size());
    JointState state{rho0, AuxiliaryOperatorSet::zeros(gen)};

    double worst_eigenvalue = 0.0;
    double worst_time = 0.0;
    auto record = [&](double t) {
        traj.states.push_back(state.rho);
        if (!markovian) traj.aux.push_back(state.aux);
        if (options.monitor_positivity) {
            const double ev = smallest_eigenvalue(state.rho);
            traj.min_eigenvalues.push_back(ev);
            if (ev < worst_eigenvalue) {
                worst_eigenvalue = ev;
                worst_time = t;
            }
        }
    };
    record(times.front());

    double last_good = times.front();
    for (std::size_t k = 1; k < times.size(); ++k) {
        const double interval = times[k] - times[k - 1];
        const auto n_steps = substeps(interval, options.dt);
        const double h = interval / static_cast<double>(n_steps);
        for (std::size_t step = 0; step < n_steps; ++step) {
            if (markovian) stepper.markovian_step(state.rho, h);
            else stepper.joint_step(state, h);
            state.rho = 0.5 * (state.rho + state.rho.adjoint()).eval();

            const double t_now = times[k - 1] + static_cast<double>(step + 1) * h;
            if (!is_finite(state.rho))
                throw PropagationError(PropagationError::Kind::Instability, last_good,
                                       fmt::format("non-finite density matrix at t = {:.6g} (last good t = {:.6g}); "
                                                   "reduce the integrator dt",
                                                   t_now, last_good));
            const double drift = std::abs(state.rho.trace().real() - 1.0);
            if (drift > options.trace_abort)
                throw PropagationError(PropagationError::Kind::TraceDrift, last_good,
                                       fmt::format("trace drift {:.3e} exceeds {:.1e} at t = {:.6g} (last good t = {:.6g})",
                                                   drift, options.trace_abort, t_now, last_good));
            last_good = t_now;
        }
        record(times[k]);
    }

    if (options.monitor_positivity && worst_eigenvalue < options.positivity_warning)
        traj.warnings.push_back(fmt::format("positivity: smallest eigenvalue {:.3e} at t = {:.6g} (below {:.0e})",
                                            worst_eigenvalue, worst_time, options.positivity_warning));
    return traj;
}

Trajectory propagate(const InitialState& initial, const GeneratorSet& gen, const RunParameters& run) {
    PropagationOptions options;
    options.t_final = run.t_final;
    options.dt_output = run.dt_output;
    options.dt = run.dt;
    return propagate(initial_density_matrix(initial, gen.dim()), gen, options);
}

std::vector<AuxiliaryOperatorSet> integrate_auxiliaries(const GeneratorSet& gen, const std::vector<double>& times,
                                                        double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("integrate_auxiliaries: dt must be positive");
    std::vector<AuxiliaryOperatorSet> out;
    if (times.empty()) return out;
    if (times.front() != 0.0) throw std::invalid_argument("integrate_auxiliaries: time grid must start at 0");
    const Stepper stepper{gen};
    AuxiliaryOperatorSet aux = AuxiliaryOperatorSet::zeros(gen);
    out.reserve(times.size());
    out.push_back(aux);
    for (std::size_t k = 1; k < times.size(); ++k) {
        const double interval = times[k] - times[k - 1];
        if (interval < 0.0) throw std::invalid_argument("integrate_auxiliaries: times must be increasing");
        const auto n_steps = substeps(interval, dt);
        const double h = n_steps ? interval / static_cast<double>(n_steps) : 0.0;
        for (std::size_t step = 0; step < n_steps; ++step) {
            AuxiliaryOperatorSet next;
            stepper.aux_stages(aux, h, next);
            aux = std::move(next);
        }
        out.push_back(aux);
    }
    return out;
}

}  // namespace eetflux
