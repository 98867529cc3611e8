#include "eetflux/oracle.hpp"

#include <cmath>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

namespace eetflux::oracle {

RabiDimerState rabi_dimer_exact(double coupling, double t) {
    const double c = std::cos(coupling * t);
    const double s = std::sin(coupling * t);
    return {c * c, s * s, 0.0, s * c};
}

std::complex<double> pure_dephasing_exact(const std::vector<BathMode>& modes, double t) {
    std::complex<double> d = 0.0;
    for (const auto& mode : modes) {
        const auto w = mode.decay();
        if (w == 0.0) throw std::invalid_argument("pure_dephasing_exact: zero mode decay");
        d += mode.g * (t / w + (std::exp(-w * t) - 1.0) / (w * w));
    }
    return d;
}

std::complex<double> pure_dephasing_quadrature(const std::vector<BathMode>& modes, double t) {
    using boost::math::quadrature::gauss_kronrod;
    if (t == 0.0) return 0.0;
    auto alpha = [&](double tau) {
        std::complex<double> sum = 0.0;
        for (const auto& m : modes) sum += m.correlation(tau);
        return sum;
    };
    auto inner = [&](double s) -> std::complex<double> {
        if (s == 0.0) return 0.0;
        const double re = gauss_kronrod<double, 61>::integrate([&](double tau) { return alpha(tau).real(); }, 0.0, s, 5, 1e-12);
        const double im = gauss_kronrod<double, 61>::integrate([&](double tau) { return alpha(tau).imag(); }, 0.0, s, 5, 1e-12);
        return {re, im};
    };
    const double re = gauss_kronrod<double, 61>::integrate([&](double s) { return inner(s).real(); }, 0.0, t, 5, 1e-12);
    const double im = gauss_kronrod<double, 61>::integrate([&](double s) { return inner(s).imag(); }, 0.0, t, 5, 1e-12);
    return {re, im};
}

ComplexMatrix liouvillian(const GeneratorSet& gen) {
    const auto n = static_cast<Eigen::Index>(gen.dim());
    if (gen.dim() > kMaxLiouvillianSites) throw std::invalid_argument("liouvillian: too many sites for N^2 x N^2 oracle");
    const ComplexMatrix id = ComplexMatrix::Identity(n, n);
    const ComplexMatrix h = gen.hamiltonian.cast<Complex>();
    // vec(A X B) = (B^T kron A) vec(X) for column stacking.
    ComplexMatrix sup = Complex(0.0, -1.0) * (Eigen::kroneckerProduct(id, h).eval() - Eigen::kroneckerProduct(h.transpose(), id).eval());
    for (const auto& ch : gen.channels) {
        if (!ch.markovian()) throw std::invalid_argument("liouvillian: non-Markovian channel present");
        const double gamma = *ch.rate;
        const ComplexMatrix& l = ch.op;
        const ComplexMatrix ldl = l.adjoint() * l;
        sup += gamma * Eigen::kroneckerProduct(l.conjugate(), l).eval();
        sup -= (0.5 * gamma) * Eigen::kroneckerProduct(id, ldl).eval();
        sup -= (0.5 * gamma) * Eigen::kroneckerProduct(ldl.transpose(), id).eval();
    }
    return sup;
}

ComplexMatrix liouvillian_expm_propagate(const ComplexMatrix& rho0, const GeneratorSet& gen, double t) {
    const auto n = static_cast<Eigen::Index>(gen.dim());
    if (rho0.rows() != n || rho0.cols() != n) throw std::invalid_argument("liouvillian_expm_propagate: dimension mismatch");
    if (t == 0.0) return rho0;
    const ComplexMatrix sup = liouvillian(gen);
    const ComplexMatrix propagator = (sup * t).exp();
    const Eigen::VectorXcd vec0 = Eigen::Map<const Eigen::VectorXcd>(rho0.data(), n * n);
    const Eigen::VectorXcd vec = propagator * vec0;
    return Eigen::Map<const ComplexMatrix>(vec.data(), n, n);
}

ComplexMatrix unitary_evolve(const ComplexMatrix& rho0, const RealMatrix& hamiltonian, double t) {
    Eigen::SelfAdjointEigenSolver<RealMatrix> solver(hamiltonian);
    const ComplexMatrix v = solver.eigenvectors().cast<Complex>();
    Eigen::VectorXcd phases(hamiltonian.rows());
    for (Eigen::Index k = 0; k < phases.size(); ++k) phases(k) = std::exp(Complex(0.0, -solver.eigenvalues()(k) * t));
    const ComplexMatrix u = v * phases.asDiagonal() * v.adjoint();
    return u * rho0 * u.adjoint();
}

}  // namespace eetflux::oracle
