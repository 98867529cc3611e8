#include <random>

#include <benchmark/benchmark.h>

#include "eetflux/eetflux.hpp"

using namespace eetflux;

namespace {

SiteNetwork chain(std::size_t n) {
    SiteNetwork net;
    for (std::size_t i = 0; i < n; ++i) {
        net.labels.push_back("s" + std::to_string(i));
        net.energies.push_back(0.1 * static_cast<double>(i));
        if (i + 1 < n) net.couplings.push_back({i, i + 1, 1.0});
    }
    return net;
}

EnvironmentSpec environment(std::size_t n, bool markovian) {
    EnvironmentSpec env;
    for (std::size_t i = 0; i < n; ++i) {
        if (markovian)
            env.dephasing.push_back({i, MarkovianRate{0.1}});
        else
            env.dephasing.push_back({i, NonMarkovianBath{{{0.5, 1.0, 0.2}, {0.2, 3.0, 0.0}}}});
    }
    env.relaxation.push_back({n - 1, 0, MarkovianRate{0.05}});
    return env;
}

ComplexMatrix mixed_state(std::size_t n) {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> d;
    const auto dim = static_cast<Eigen::Index>(n);
    ComplexMatrix a(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i)
        for (Eigen::Index j = 0; j < dim; ++j) a(i, j) = Complex(d(rng), d(rng));
    ComplexMatrix rho = a * a.adjoint();
    return rho / rho.trace();
}

void BM_LindbladRhs(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto gen = build_generators(chain(n), environment(n, true));
    const auto rho = mixed_state(n);
    for (auto _ : state) benchmark::DoNotOptimize(lindblad_rhs(rho, gen));
}

void BM_ZofeRhs(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto gen = build_generators(chain(n), environment(n, false));
    const JointState joint{mixed_state(n), AuxiliaryOperatorSet::zeros(gen)};
    for (auto _ : state) benchmark::DoNotOptimize(zofe_rhs(joint, gen));
}

void BM_CurrentsAt(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto gen = build_generators(chain(n), environment(n, false));
    const auto rho = mixed_state(n);
    const auto aux = channel_aux_at(gen, {AuxiliaryOperatorSet::zeros(gen)}, 0);
    for (auto _ : state) benchmark::DoNotOptimize(currents_at(0.0, rho, gen, aux));
}

void BM_Propagate(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto gen = build_generators(chain(n), environment(n, false));
    const auto rho = mixed_state(n);
    for (auto _ : state) benchmark::DoNotOptimize(propagate(rho, gen, {1.0, 0.1, 1e-3}));
}

}  // namespace

BENCHMARK(BM_LindbladRhs)->Arg(2)->Arg(7)->Arg(12)->Arg(24);
BENCHMARK(BM_ZofeRhs)->Arg(2)->Arg(7)->Arg(12)->Arg(24);
BENCHMARK(BM_CurrentsAt)->Arg(2)->Arg(7)->Arg(12)->Arg(24);
BENCHMARK(BM_Propagate)->Arg(7)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
