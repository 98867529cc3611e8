#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "eetflux/generators.hpp"
#include "eetflux/model.hpp"

namespace eetflux {

/// rho together with every non-Markovian auxiliary operator; the unit the
/// integrator advances.
struct JointState {
    ComplexMatrix rho;
    AuxiliaryOperatorSet aux;
};

/// -i[H, rho] + sum_c gamma_c (L rho L^H - 1/2 {L^H L, rho}).
/// Throws std::invalid_argument when a non-Markovian channel is present.
ComplexMatrix lindblad_rhs(const ComplexMatrix& rho, const GeneratorSet& gen);

/// Sum over channels of L rho A^H + A rho L^H - L^H A rho - rho A^H L, with
/// one auxiliary matrix per channel (indexed like gen.channels).
ComplexMatrix nonunitary_action(const ComplexMatrix& rho, const GeneratorSet& gen,
                                const std::vector<ComplexMatrix>& channel_aux);

/// Same sum restricted to one channel type.
ComplexMatrix nonunitary_action(const ComplexMatrix& rho, const GeneratorSet& gen,
                                const std::vector<ComplexMatrix>& channel_aux, ChannelType only);

/// Full generator P(rho) = -i[H, rho] + nonunitary_action(rho, ...).
ComplexMatrix generator_action(const ComplexMatrix& rho, const GeneratorSet& gen,
                               const std::vector<ComplexMatrix>& channel_aux);

/// Per-mode auxiliary closure dA/dt = g L - (gamma + i omega) A - i[H, A].
/// Independent of rho.
AuxiliaryOperatorSet auxiliary_rhs(const AuxiliaryOperatorSet& aux, const GeneratorSet& gen);

/// Convolutionless right-hand side for the joint state. Markovian channels
/// enter with their constant auxiliary gamma/2 * L.
JointState zofe_rhs(const JointState& state, const GeneratorSet& gen);

struct Trajectory {
    std::vector<double> times;
    std::vector<ComplexMatrix> states;
    /// Empty for fully Markovian runs; otherwise one entry per output time.
    std::vector<AuxiliaryOperatorSet> aux;
    /// Smallest eigenvalue of rho at each output time.
    std::vector<double> min_eigenvalues;
    std::vector<std::string> warnings;

    std::size_t size() const noexcept { return times.size(); }
    std::size_t dim() const noexcept { return states.empty() ? 0 : static_cast<std::size_t>(states.front().rows()); }
};

struct PropagationOptions {
    double t_final = 0.0;
    double dt_output = 0.0;
    double dt = 0.0;
    double trace_abort = 1e-6;
    double positivity_warning = -1e-6;
    bool monitor_positivity = true;
};

class PropagationError : public std::runtime_error {
public:
    enum class Kind { Instability, TraceDrift };

    PropagationError(Kind kind, double last_good_time, const std::string& message)
        : std::runtime_error(message), kind_(kind), last_good_time_(last_good_time) {}

    Kind kind() const noexcept { return kind_; }
    double last_good_time() const noexcept { return last_good_time_; }

private:
    Kind kind_;
    double last_good_time_;
};

/// Output times 0, dt_output, 2 dt_output, ... up to t_final (t_final appended
/// when it is not on the grid).
std::vector<double> output_grid(double t_final, double dt_output);

/// Fixed-step classical RK4 over the joint state. rho is re-Hermitized after
/// every step; NaN/Inf or trace drift beyond options.trace_abort throws
/// PropagationError.
Trajectory propagate(const ComplexMatrix& rho0, const GeneratorSet& gen, const PropagationOptions& options);
Trajectory propagate(const InitialState& initial, const GeneratorSet& gen, const RunParameters& run);

/// Integrates only the auxiliary operators onto `times` (which must start at
/// 0) with RK4 steps no larger than dt. Reproduces Trajectory::aux bit for bit
/// when `times` is the grid produced by propagate with the same dt.
std::vector<AuxiliaryOperatorSet> integrate_auxiliaries(const GeneratorSet& gen, const std::vector<double>& times, double dt);

/// Number of RK4 substeps used between two output times.
std::size_t substeps(double interval, double dt);

}  // namespace eetflux
