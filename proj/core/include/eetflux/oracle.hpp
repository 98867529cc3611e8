#pragma once

// Reference solutions used by the test and acceptance suites. Slow and
// deliberately independent of the production kernels.

#include <complex>
#include <vector>

#include "eetflux/generators.hpp"

namespace eetflux::oracle {

struct RabiDimerState {
    double p1 = 0.0;       // rho_11
    double p2 = 0.0;       // rho_22
    double re12 = 0.0;
    double im12 = 0.0;
};

/// Closed homo-dimer with coupling V, rho0 = |1><1|.
RabiDimerState rabi_dimer_exact(double coupling, double t);

/// D(t) = sum_i g_i (t / w_i + (exp(-w_i t) - 1) / w_i^2), w_i = gamma_i + i omega_i.
/// |rho_12(t)| = |rho_12(0)| exp(-Re D(t)) for a single dephased site at V = 0.
std::complex<double> pure_dephasing_exact(const std::vector<BathMode>& modes, double t);

/// Same exponent by nested Gauss-Kronrod quadrature of int_0^t ds int_0^s alpha(tau) dtau.
std::complex<double> pure_dephasing_quadrature(const std::vector<BathMode>& modes, double t);

inline constexpr std::size_t kMaxLiouvillianSites = 12;

/// Explicit N^2 x N^2 Lindblad superoperator acting on column-stacked rho,
/// assembled from the dense channel operators. Markovian generators only.
ComplexMatrix liouvillian(const GeneratorSet& gen);

/// exp(L t) vec(rho0) via scaling and squaring. Throws std::invalid_argument
/// for non-Markovian generators or N > kMaxLiouvillianSites.
ComplexMatrix liouvillian_expm_propagate(const ComplexMatrix& rho0, const GeneratorSet& gen, double t);

/// exp(-iHt) rho0 exp(iHt) via the eigendecomposition of H.
ComplexMatrix unitary_evolve(const ComplexMatrix& rho0, const RealMatrix& hamiltonian, double t);

}  // namespace eetflux::oracle
