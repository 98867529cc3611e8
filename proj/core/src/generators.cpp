#include "eetflux/generators.hpp"

namespace eetflux {

namespace {

ComplexMatrix unit_operator(std::size_t n, SiteIndex row, SiteIndex col) {
    const auto dim = static_cast<Eigen::Index>(n);
    ComplexMatrix op = ComplexMatrix::Zero(dim, dim);
    op(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) = 1.0;
    return op;
}

void attach_kind(GeneratorChannel& channel, const ChannelKind& kind, std::size_t& n_modes) {
    if (const auto* m = std::get_if<MarkovianRate>(&kind)) {
        channel.rate = m->rate;
        return;
    }
    channel.modes = std::get<NonMarkovianBath>(kind).modes;
    channel.first_mode = n_modes;
    n_modes += channel.modes.size();
}

}  // namespace

GeneratorSet build_generators(const SiteNetwork& network, const EnvironmentSpec& env) {
    const auto n = network.n_sites();
    const auto dim = static_cast<Eigen::Index>(n);
    GeneratorSet gen;
    gen.hamiltonian = network.hamiltonian();
    gen.complex_hamiltonian = gen.hamiltonian.cast<Complex>();
    gen.dephasing_rates = Eigen::VectorXd::Zero(dim);
    gen.relaxation_rates = RealMatrix::Zero(dim, dim);

    for (const auto& d : env.dephasing) {
        GeneratorChannel channel;
        channel.type = ChannelType::Dephasing;
        channel.source = d.site;
        channel.target = d.site;
        channel.op = unit_operator(n, d.site, d.site);
        attach_kind(channel, d.kind, gen.n_modes);
        if (channel.rate) gen.dephasing_rates(static_cast<Eigen::Index>(d.site)) = *channel.rate;
        gen.channels.push_back(std::move(channel));
    }
    for (const auto& r : env.relaxation) {
        GeneratorChannel channel;
        channel.type = ChannelType::Relaxation;
        channel.source = r.source;
        channel.target = r.target;
        channel.op = unit_operator(n, r.target, r.source);
        attach_kind(channel, r.kind, gen.n_modes);
        if (channel.rate)
            gen.relaxation_rates(static_cast<Eigen::Index>(r.source), static_cast<Eigen::Index>(r.target)) = *channel.rate;
        gen.channels.push_back(std::move(channel));
    }
    return gen;
}

AuxiliaryOperatorSet AuxiliaryOperatorSet::zeros(const GeneratorSet& gen) {
    const auto dim = static_cast<Eigen::Index>(gen.dim());
    AuxiliaryOperatorSet aux;
    aux.modes.assign(gen.n_modes, ComplexMatrix::Zero(dim, dim));
    return aux;
}

ComplexMatrix AuxiliaryOperatorSet::channel(const GeneratorSet& gen, std::size_t channel_index) const {
    const auto& ch = gen.channels.at(channel_index);
    if (ch.markovian()) return (0.5 * *ch.rate) * ch.op;
    const auto dim = static_cast<Eigen::Index>(gen.dim());
    ComplexMatrix sum = ComplexMatrix::Zero(dim, dim);
    for (std::size_t m = 0; m < ch.modes.size(); ++m) sum += modes.at(ch.first_mode + m);
    return sum;
}

std::vector<ComplexMatrix> channel_auxiliaries(const GeneratorSet& gen, const AuxiliaryOperatorSet& aux) {
    std::vector<ComplexMatrix> out;
    out.reserve(gen.channels.size());
    for (std::size_t c = 0; c < gen.channels.size(); ++c) out.push_back(aux.channel(gen, c));
    return out;
}

}  // namespace eetflux
