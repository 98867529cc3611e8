#pragma once

// Model builders and random generators shared by the unit and acceptance suites.

#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "eetflux/eetflux.hpp"

namespace eetflux::testing {

inline Model make_model(std::vector<double> energies, std::vector<Coupling> couplings, EnvironmentSpec env = {},
                        InitialState initial = SingleSite{0}, RunParameters run = {1.0, 0.01, 1e-3}) {
    Model m;
    for (std::size_t i = 0; i < energies.size(); ++i) m.network.labels.push_back("s" + std::to_string(i));
    m.network.energies = std::move(energies);
    m.network.couplings = std::move(couplings);
    m.environment = std::move(env);
    m.initial = std::move(initial);
    m.run = run;
    validate(m);
    return m;
}

/// Closed homo-dimer with coupling v.
inline Model rabi_dimer(double v = 1.0) { return make_model({0.0, 0.0}, {{0, 1, v}}); }

inline ComplexMatrix random_hermitian(std::mt19937_64& rng, Eigen::Index n, double scale = 1.0) {
    std::normal_distribution<double> g(0.0, scale);
    ComplexMatrix m(n, n);
    for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index c = 0; c < n; ++c) m(r, c) = Complex(g(rng), g(rng));
    return 0.5 * (m + m.adjoint());
}

/// Random density matrix: W W^H / tr.
inline ComplexMatrix random_density(std::mt19937_64& rng, Eigen::Index n) {
    std::normal_distribution<double> g(0.0, 1.0);
    ComplexMatrix w(n, n);
    for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index c = 0; c < n; ++c) w(r, c) = Complex(g(rng), g(rng));
    ComplexMatrix rho = w * w.adjoint();
    rho /= rho.trace().real();
    return 0.5 * (rho + rho.adjoint());
}

inline ComplexMatrix random_complex(std::mt19937_64& rng, Eigen::Index n, double scale = 1.0) {
    std::normal_distribution<double> g(0.0, scale);
    ComplexMatrix m(n, n);
    for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index c = 0; c < n; ++c) m(r, c) = Complex(g(rng), g(rng));
    return m;
}

/// Connected random network: chain couplings plus random extra pairs.
inline SiteNetwork random_network(std::mt19937_64& rng, std::size_t n, double energy_scale = 1.0,
                                  double coupling_scale = 0.5) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::bernoulli_distribution extra(0.4);
    SiteNetwork net;
    for (std::size_t i = 0; i < n; ++i) {
        net.labels.push_back("s" + std::to_string(i));
        net.energies.push_back(energy_scale * u(rng));
    }
    for (std::size_t i = 0; i + 1 < n; ++i) net.couplings.push_back({i, i + 1, coupling_scale * u(rng)});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 2; j < n; ++j)
            if (extra(rng)) net.couplings.push_back({i, j, coupling_scale * u(rng)});
    return net;
}

inline std::vector<BathMode> random_modes(std::mt19937_64& rng, std::size_t count) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<BathMode> modes;
    for (std::size_t i = 0; i < count; ++i) modes.push_back({0.1 + 0.5 * u(rng), 0.5 + 2.0 * u(rng), 2.0 * u(rng) - 1.0});
    return modes;
}

/// Dephasing on every site; Markovian or single/multi-mode bath.
inline EnvironmentSpec dephasing_everywhere(std::mt19937_64& rng, std::size_t n, bool markovian) {
    std::uniform_real_distribution<double> u(0.05, 0.5);
    EnvironmentSpec env;
    for (std::size_t i = 0; i < n; ++i) {
        if (markovian) env.dephasing.push_back({i, MarkovianRate{u(rng)}});
        else env.dephasing.push_back({i, NonMarkovianBath{random_modes(rng, 1 + i % 2)}});
    }
    return env;
}

/// Dephasing everywhere plus downhill/uphill Markovian relaxation along the chain.
inline EnvironmentSpec mixed_environment(std::mt19937_64& rng, std::size_t n, bool markovian_dephasing,
                                         bool markovian_relaxation) {
    auto env = dephasing_everywhere(rng, n, markovian_dephasing);
    std::uniform_real_distribution<double> u(0.02, 0.3);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (markovian_relaxation) {
            env.relaxation.push_back({i + 1, i, MarkovianRate{u(rng)}});
            env.relaxation.push_back({i, i + 1, MarkovianRate{0.3 * u(rng)}});
        } else {
            env.relaxation.push_back({i + 1, i, NonMarkovianBath{random_modes(rng, 1)}});
        }
    }
    return env;
}

/// Random auxiliary operators for every channel, shaped like the channel
/// operator when `conformant` (c * L), dense otherwise.
inline std::vector<ComplexMatrix> random_channel_aux(std::mt19937_64& rng, const GeneratorSet& gen, bool conformant) {
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<ComplexMatrix> out;
    const auto n = static_cast<Eigen::Index>(gen.dim());
    for (const auto& ch : gen.channels) {
        if (conformant) out.push_back(Complex(g(rng), g(rng)) * ch.op);
        else out.push_back(random_complex(rng, n));
    }
    return out;
}

inline double max_abs(const RealMatrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }
inline double max_abs(const ComplexMatrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace eetflux::testing
