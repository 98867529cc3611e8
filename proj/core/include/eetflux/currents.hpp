#pragma once

#include <optional>
#include <string>
#include <vector>

#include "eetflux/generators.hpp"
#include "eetflux/propagator.hpp"

namespace eetflux {

/// Probability currents at one time. Every matrix is antisymmetric with entry
/// (l, n) the net current from site l to site n (positive: l -> n).
struct CurrentRecord {
    double time = 0.0;
    RealMatrix total;
    RealMatrix unitary;
    RealMatrix dephasing;   // numerically evaluated, zero up to rounding
    RealMatrix relaxation;
    RealMatrix population;  // generator applied to the diagonal part of rho
    RealMatrix coherence;   // generator applied to the off-diagonal part of rho
};

/// 2 H_ln Im(rho_ln). Throws std::invalid_argument for l == n.
double unitary_current(const ComplexMatrix& rho, const RealMatrix& hamiltonian, SiteIndex l, SiteIndex n);

/// 2 Re(sum_k rho_lk conj(A_{ln})_{nk} - (A_{nl})_{lk} rho_kn), summed over the
/// relaxation channels l -> n and n -> l. Throws for l == n.
double relaxation_current(const ComplexMatrix& rho, const GeneratorSet& gen,
                          const std::vector<ComplexMatrix>& channel_aux, SiteIndex l, SiteIndex n);

/// Classical rate form gamma_ln rho_ll - gamma_nl rho_nn using the Markovian
/// rate table only.
double markovian_relaxation_current(const ComplexMatrix& rho, const GeneratorSet& gen, SiteIndex l, SiteIndex n);

/// <n| L^Dephas(rho) |n> assembled from the four dense operator products of
/// the dephasing generator. Zero up to rounding for projector couplings.
double dephasing_current_check(const ComplexMatrix& rho, const GeneratorSet& gen,
                               const std::vector<ComplexMatrix>& channel_aux, SiteIndex n);

RealMatrix unitary_current_matrix(const ComplexMatrix& rho, const RealMatrix& hamiltonian);
RealMatrix relaxation_current_matrix(const ComplexMatrix& rho, const GeneratorSet& gen,
                                     const std::vector<ComplexMatrix>& channel_aux);
/// Entry (l, n): the k = l summand of <n| L^Dephas(rho) |n>.
RealMatrix dephasing_current_matrix(const ComplexMatrix& rho, const GeneratorSet& gen,
                                    const std::vector<ComplexMatrix>& channel_aux);

/// Total pair currents in a single pass over all channels.
RealMatrix pair_currents(const ComplexMatrix& rho, const GeneratorSet& gen,
                         const std::vector<ComplexMatrix>& channel_aux);

struct PartitionedCurrents {
    RealMatrix population;
    RealMatrix coherence;
};

/// Splits rho into diagonal and off-diagonal parts and extracts the pair
/// currents of each (the generator is linear in rho).
PartitionedCurrents partition_currents(const ComplexMatrix& rho, const GeneratorSet& gen,
                                       const std::vector<ComplexMatrix>& channel_aux);

CurrentRecord currents_at(double time, const ComplexMatrix& rho, const GeneratorSet& gen,
                          const std::vector<ComplexMatrix>& channel_aux);

/// Currents for every output time. `aux` must be empty (fully Markovian
/// generators) or match `states` in length.
std::vector<CurrentRecord> total_currents(const std::vector<double>& times, const std::vector<ComplexMatrix>& states,
                                          const GeneratorSet& gen, const std::vector<AuxiliaryOperatorSet>& aux);
std::vector<CurrentRecord> total_currents(const Trajectory& traj, const GeneratorSet& gen);

struct ContinuityReport {
    double max_residual = 0.0;  // central differences vs sum of currents
    std::size_t time_index = 0;
    std::size_t site = 0;
    double time = 0.0;
    double dt_output = 0.0;     // largest spacing among the stencils used
    double scale_constant = 0.0;  // max_residual / dt_output^2
    /// Per interior sample: max over sites of the residual (index k-1 for sample k).
    std::vector<double> per_step;
};

/// Second-order central-difference estimate of d/dt rho_nn at interior
/// samples, compared with sum_{l != n} j_ln. Needs >= 3 samples.
ContinuityReport continuity_residual(const std::vector<double>& times, const std::vector<ComplexMatrix>& states,
                                     const std::vector<CurrentRecord>& currents);

/// max_{n,k} |<n|P(rho_k)|n> - sum_{l != n} j_ln(t_k)| with the analytic
/// generator P; isolates formula error from integrator error.
double analytic_continuity_residual(const std::vector<ComplexMatrix>& states, const GeneratorSet& gen,
                                    const std::vector<AuxiliaryOperatorSet>& aux,
                                    const std::vector<CurrentRecord>& currents);

struct SubComplex {
    std::string name;
    std::vector<SiteIndex> sites;
};

/// J_AB(t) = sum_{l in A} sum_{n in B} j_ln(t); positive means net flow A -> B.
/// Throws std::invalid_argument for empty or overlapping site sets.
std::vector<double> subcomplex_current(const std::vector<CurrentRecord>& currents, const SubComplex& a,
                                       const SubComplex& b);

struct BoundCheck {
    double magnitude = 0.0;  // |j^Unitary_ln|
    double bound = 0.0;      // 2 |H_ln| sqrt(rho_ll rho_nn - Re(rho_ln)^2)
    bool clamped = false;    // radicand was negative and clamped to 0
};

BoundCheck unitary_bound_check(const ComplexMatrix& rho, const RealMatrix& hamiltonian, SiteIndex l, SiteIndex n);

/// Per-pair quantities of the Markovian three-equation description.
struct MarkovianDiagnostics {
    RealMatrix delta;       // H_ll - H_nn
    RealMatrix decay;       // Gamma_ln
    RealMatrix half_difference;  // (rho_ll - rho_nn) / 2
};

MarkovianDiagnostics markovian_diagnostics(const ComplexMatrix& rho, const GeneratorSet& gen);

struct CoherenceRates {
    RealMatrix d_imag;   // d/dt Im(rho_ln)
    RealMatrix d_real;   // d/dt Re(rho_ln)
    RealMatrix current;  // j_ln
};

/// Evaluates the closed Markovian equations for Im/Re coherences and the
/// current pair by pair. Throws std::invalid_argument for non-Markovian
/// generators.
CoherenceRates markovian_coherence_rhs(const ComplexMatrix& rho, const GeneratorSet& gen);

/// Channel auxiliaries at output sample k (Markovian constants when `aux` is empty).
std::vector<ComplexMatrix> channel_aux_at(const GeneratorSet& gen, const std::vector<AuxiliaryOperatorSet>& aux,
                                          std::size_t k);

}  // namespace eetflux
