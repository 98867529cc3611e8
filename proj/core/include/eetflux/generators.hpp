#pragma once

#include <optional>
#include <vector>

#include "eetflux/model.hpp"

namespace eetflux {

enum class ChannelType { Dephasing, Relaxation };

/// One environment coupling operator L = |target><source| together with its
/// bath description. Dephasing channels have source == target.
struct GeneratorChannel {
    ChannelType type = ChannelType::Dephasing;
    SiteIndex source = 0;
    SiteIndex target = 0;
    ComplexMatrix op;                 // dense L, single unit entry at (target, source)
    std::optional<double> rate;       // set for Markovian channels
    std::vector<BathMode> modes;      // set for non-Markovian channels
    std::size_t first_mode = 0;       // offset into AuxiliaryOperatorSet::modes

    bool markovian() const noexcept { return rate.has_value(); }
};

/// Everything the right-hand sides need: Hamiltonian, channel operators and
/// Markovian rate tables.
struct GeneratorSet {
    RealMatrix hamiltonian;
    ComplexMatrix complex_hamiltonian;  // same matrix, cast once for complex products
    std::vector<GeneratorChannel> channels;
    std::size_t n_modes = 0;  // total non-Markovian bath modes

    /// Markovian rates; zero where no Markovian channel exists.
    Eigen::VectorXd dephasing_rates;
    /// relaxation_rates(source, target) = gamma^R for Markovian channels.
    RealMatrix relaxation_rates;

    std::size_t dim() const noexcept { return static_cast<std::size_t>(hamiltonian.rows()); }
    bool fully_markovian() const noexcept { return n_modes == 0; }
    double max_abs_hamiltonian() const { return hamiltonian.cwiseAbs().maxCoeff(); }
};

GeneratorSet build_generators(const SiteNetwork& network, const EnvironmentSpec& env);

/// Auxiliary operators of the convolutionless equation, one N x N matrix per
/// non-Markovian bath mode. Channel operators are mode sums.
struct AuxiliaryOperatorSet {
    std::vector<ComplexMatrix> modes;

    static AuxiliaryOperatorSet zeros(const GeneratorSet& gen);

    /// A_c(t): sum over the channel's modes, or gamma/2 * L for Markovian channels.
    ComplexMatrix channel(const GeneratorSet& gen, std::size_t channel_index) const;
};

/// Per-channel auxiliary matrices, indexed like GeneratorSet::channels.
std::vector<ComplexMatrix> channel_auxiliaries(const GeneratorSet& gen, const AuxiliaryOperatorSet& aux);

}  // namespace eetflux
