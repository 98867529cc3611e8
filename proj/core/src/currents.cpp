#include "eetflux/currents.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace eetflux {

namespace {

Eigen::Index idx(SiteIndex s) { return static_cast<Eigen::Index>(s); }

void require_pair(SiteIndex l, SiteIndex n, const char* who) {
    if (l == n) throw std::invalid_argument(std::string(who) + ": currents need l != n");
}

// Flow carried by relaxation channel s -> t with auxiliary a:
// 2 Re sum_k rho_sk conj(a_tk) (gain of the target).
double channel_outflow(const ComplexMatrix& rho, const ComplexMatrix& a, Eigen::Index s, Eigen::Index t) {
    return 2.0 * (rho.row(s).transpose().cwiseProduct(a.row(t).transpose().conjugate())).sum().real();
}

// Loss of the source of channel s -> t written from the source side:
// 2 Re (a rho)_{ts}.
double channel_inflow_term(const ComplexMatrix& rho, const ComplexMatrix& a, Eigen::Index s, Eigen::Index t) {
    return 2.0 * (a.row(t).transpose().cwiseProduct(rho.col(s))).sum().real();
}

}  // namespace

double unitary_current(const ComplexMatrix& rho, const RealMatrix& hamiltonian, SiteIndex l, SiteIndex n) {
    require_pair(l, n, "unitary_current");
    return 2.0 * hamiltonian(idx(l), idx(n)) * rho(idx(l), idx(n)).imag();
}

double relaxation_current(const ComplexMatrix& rho, const GeneratorSet& gen,
                          const std::vector<ComplexMatrix>& channel_aux, SiteIndex l, SiteIndex n) {
    require_pair(l, n, "relaxation_current");
    double j = 0.0;
    for (std::size_t c = 0; c < gen.channels.size(); ++c) {
        const auto& ch = gen.channels[c];
        if (ch.type != ChannelType::Relaxation) continue;
        if (ch.source == l && ch.target == n) {
            // sum_k rho_lk conj(A_{ln})_{nk}
            j += channel_outflow(rho, channel_aux[c], idx(l), idx(n));
        } else if (ch.source == n && ch.target == l) {
            // sum_k (A_{nl})_{lk} rho_kn
            j -= channel_inflow_term(rho, channel_aux[c], idx(n), idx(l));
        }
    }
    return j;
}

double markovian_relaxation_current(const ComplexMatrix& rho, const GeneratorSet& gen, SiteIndex l, SiteIndex n) {
    require_pair(l, n, "markovian_relaxation_current");
    const auto a = idx(l);
    const auto b = idx(n);
    return gen.relaxation_rates(a, b) * rho(a, a).real() - gen.relaxation_rates(b, a) * rho(b, b).real();
}

double dephasing_current_check(const ComplexMatrix& rho, const GeneratorSet& gen,
                               const std::vector<ComplexMatrix>& channel_aux, SiteIndex n) {
    const auto k = idx(n);
    Complex value = 0.0;
    for (std::size_t c = 0; c < gen.channels.size(); ++c) {
        const auto& ch = gen.channels[c];
        if (ch.type != ChannelType::Dephasing) continue;
        const auto& l_op = ch.op;
        const auto& a = channel_aux[c];
        const ComplexMatrix term = l_op * rho * a.adjoint() + a * rho * l_op.adjoint() - l_op.adjoint() * a * rho -
                                   rho * a.adjoint() * l_op;
        value += term(k, k);
    }
    return value.real();
}

RealMatrix unitary_current_matrix(const ComplexMatrix& rho, const RealMatrix& hamiltonian) {
    const auto n = rho.rows();
    RealMatrix j = RealMatrix::Zero(n, n);
    for (Eigen::Index a = 0; a < n; ++a)
        for (Eigen::Index b = 0; b < n; ++b)
            if (a != b) j(a, b) = 2.0 * hamiltonian(a, b) * rho(a, b).imag();
    return j;
}

RealMatrix relaxation_current_matrix(const ComplexMatrix& rho, const GeneratorSet& gen,
                                     const std::vector<ComplexMatrix>& channel_aux) {
    const auto n = rho.rows();
    RealMatrix j = RealMatrix::Zero(n, n);
    for (Eigen::Index a = 0; a < n; ++a)
        for (Eigen::Index b = 0; b < n; ++b)
            if (a != b)
                j(a, b) = relaxation_current(rho, gen, channel_aux, static_cast<SiteIndex>(a), static_cast<SiteIndex>(b));
    return j;
}

RealMatrix dephasing_current_matrix(const ComplexMatrix& rho, const GeneratorSet& gen,
                                    const std::vector<ComplexMatrix>& channel_aux) {
    const auto n = rho.rows();
    RealMatrix j = RealMatrix::Zero(n, n);
    for (std::size_t c = 0; c < gen.channels.size(); ++c) {
        const auto& ch = gen.channels[c];
        if (ch.type != ChannelType::Dephasing) continue;
        const auto& l_op = ch.op;
        const auto& a = channel_aux[c];
        // <m|X Y|m> = sum_k X_mk Y_km; keep the k-th summand of each product.
        const ComplexMatrix l_rho = l_op * rho;
        const ComplexMatrix a_adj = a.adjoint();
        const ComplexMatrix rho_l_adj = rho * l_op.adjoint();
        const ComplexMatrix l_adj_a = l_op.adjoint() * a;
        const ComplexMatrix a_adj_l = a_adj * l_op;
        for (Eigen::Index target = 0; target < n; ++target) {
            for (Eigen::Index k = 0; k < n; ++k) {
                if (k == target) continue;
                const Complex summand = l_rho(target, k) * a_adj(k, target) + a(target, k) * rho_l_adj(k, target) -
                                        l_adj_a(target, k) * rho(k, target) - rho(target, k) * a_adj_l(k, target);
                j(k, target) += summand.real();
            }
        }
    }
    return j;
}

RealMatrix pair_currents(const ComplexMatrix& rho, const GeneratorSet& gen,
                         const std::vector<ComplexMatrix>& channel_aux) {
    const auto n = rho.rows();
    const auto& h = gen.hamiltonian;
    RealMatrix j = RealMatrix::Zero(n, n);
    for (Eigen::Index a = 0; a < n; ++a)
        for (Eigen::Index b = a + 1; b < n; ++b) {
            const double value = 2.0 * h(a, b) * rho(a, b).imag();
            j(a, b) += value;
            j(b, a) -= value;
        }
    // Dephasing channels (source == target) move no probability between sites.
    for (std::size_t c = 0; c < gen.channels.size(); ++c) {
        const auto& ch = gen.channels[c];
        if (ch.source == ch.target) continue;
        const auto s = idx(ch.source);
        const auto t = idx(ch.target);
        const double gain = channel_outflow(rho, channel_aux[c], s, t);
        const double loss = channel_inflow_term(rho, channel_aux[c], s, t);
        j(s, t) += 0.5 * (gain + loss);
        j(t, s) -= 0.5 * (gain + loss);
    }
    return j;
}

PartitionedCurrents partition_currents(const ComplexMatrix& rho, const GeneratorSet& gen,
                                       const std::vector<ComplexMatrix>& channel_aux) {
    const ComplexMatrix diagonal = rho.diagonal().asDiagonal();
    const ComplexMatrix off_diagonal = rho - diagonal;
    return {pair_currents(diagonal, gen, channel_aux), pair_currents(off_diagonal, gen, channel_aux)};
}

CurrentRecord currents_at(double time, const ComplexMatrix& rho, const GeneratorSet& gen,
                          const std::vector<ComplexMatrix>& channel_aux) {
    CurrentRecord record;
    record.time = time;
    record.total = pair_currents(rho, gen, channel_aux);
    record.unitary = unitary_current_matrix(rho, gen.hamiltonian);
    record.dephasing = dephasing_current_matrix(rho, gen, channel_aux);
    record.relaxation = relaxation_current_matrix(rho, gen, channel_aux);
    auto parts = partition_currents(rho, gen, channel_aux);
    record.population = std::move(parts.population);
    record.coherence = std::move(parts.coherence);
    return record;
}

std::vector<ComplexMatrix> channel_aux_at(const GeneratorSet& gen, const std::vector<AuxiliaryOperatorSet>& aux,
                                          std::size_t k) {
    if (aux.empty()) {
        if (!gen.fully_markovian())
            throw std::invalid_argument("auxiliary operators required for non-Markovian generators");
        return channel_auxiliaries(gen, AuxiliaryOperatorSet{});
    }
    return channel_auxiliaries(gen, aux.at(k));
}

std::vector<CurrentRecord> total_currents(const std::vector<double>& times, const std::vector<ComplexMatrix>& states,
                                          const GeneratorSet& gen, const std::vector<AuxiliaryOperatorSet>& aux) {
    if (times.size() != states.size()) throw std::invalid_argument("total_currents: times/states length mismatch");
    if (!aux.empty() && aux.size() != states.size())
        throw std::invalid_argument("total_currents: auxiliary sequence length mismatch");
    const auto dim = static_cast<Eigen::Index>(gen.dim());
    std::vector<CurrentRecord> out;
    out.reserve(states.size());
    for (std::size_t k = 0; k < states.size(); ++k) {
        if (states[k].rows() != dim || states[k].cols() != dim)
            throw std::invalid_argument("total_currents: density matrix dimension does not match the model");
        out.push_back(currents_at(times[k], states[k], gen, channel_aux_at(gen, aux, k)));
    }
    return out;
}

std::vector<CurrentRecord> total_currents(const Trajectory& traj, const GeneratorSet& gen) {
    return total_currents(traj.times, traj.states, gen, traj.aux);
}

ContinuityReport continuity_residual(const std::vector<double>& times, const std::vector<ComplexMatrix>& states,
                                     const std::vector<CurrentRecord>& currents) {
    if (times.size() < 3) throw std::invalid_argument("continuity_residual: need at least 3 output times");
    if (states.size() != times.size() || currents.size() != times.size())
        throw std::invalid_argument("continuity_residual: length mismatch");
    ContinuityReport report;
    const auto n = states.front().rows();
    for (std::size_t k = 1; k + 1 < times.size(); ++k) {
        const double h_minus = times[k] - times[k - 1];
        const double h_plus = times[k + 1] - times[k];
        report.dt_output = std::max({report.dt_output, h_minus, h_plus});
        double step_max = 0.0;
        for (Eigen::Index site = 0; site < n; ++site) {
            const double p_minus = states[k - 1](site, site).real();
            const double p_mid = states[k](site, site).real();
            const double p_plus = states[k + 1](site, site).real();
            // Three-point derivative, second order on non-uniform grids as well.
            const double derivative = -h_plus / (h_minus * (h_minus + h_plus)) * p_minus +
                                      (h_plus - h_minus) / (h_minus * h_plus) * p_mid +
                                      h_minus / (h_plus * (h_minus + h_plus)) * p_plus;
            double inflow = 0.0;
            for (Eigen::Index l = 0; l < n; ++l)
                if (l != site) inflow += currents[k].total(l, site);
            const double residual = std::abs(derivative - inflow);
            step_max = std::max(step_max, residual);
            if (residual > report.max_residual) {
                report.max_residual = residual;
                report.time_index = k;
                report.site = static_cast<std::size_t>(site);
                report.time = times[k];
            }
        }
        report.per_step.push_back(step_max);
    }
    if (report.dt_output > 0.0) report.scale_constant = report.max_residual / (report.dt_output * report.dt_output);
    return report;
}

double analytic_continuity_residual(const std::vector<ComplexMatrix>& states, const GeneratorSet& gen,
                                    const std::vector<AuxiliaryOperatorSet>& aux,
                                    const std::vector<CurrentRecord>& currents) {
    if (states.size() != currents.size()) throw std::invalid_argument("analytic_continuity_residual: length mismatch");
    double worst = 0.0;
    for (std::size_t k = 0; k < states.size(); ++k) {
        const ComplexMatrix derivative = generator_action(states[k], gen, channel_aux_at(gen, aux, k));
        const auto n = derivative.rows();
        for (Eigen::Index site = 0; site < n; ++site) {
            double inflow = 0.0;
            for (Eigen::Index l = 0; l < n; ++l)
                if (l != site) inflow += currents[k].total(l, site);
            worst = std::max(worst, std::abs(derivative(site, site).real() - inflow));
        }
    }
    return worst;
}

std::vector<double> subcomplex_current(const std::vector<CurrentRecord>& currents, const SubComplex& a,
                                       const SubComplex& b) {
    if (a.sites.empty() || b.sites.empty()) throw std::invalid_argument("subcomplex_current: empty sub-complex");
    const std::set<SiteIndex> sa(a.sites.begin(), a.sites.end());
    for (auto s : b.sites)
        if (sa.count(s))
            throw std::invalid_argument("subcomplex_current: sub-complexes '" + a.name + "' and '" + b.name +
                                        "' overlap");
    std::vector<double> out;
    out.reserve(currents.size());
    for (const auto& record : currents) {
        double sum = 0.0;
        for (auto l : a.sites)
            for (auto n : b.sites) sum += record.total(idx(l), idx(n));
        out.push_back(sum);
    }
    return out;
}

BoundCheck unitary_bound_check(const ComplexMatrix& rho, const RealMatrix& hamiltonian, SiteIndex l, SiteIndex n) {
    require_pair(l, n, "unitary_bound_check");
    const auto a = idx(l);
    const auto b = idx(n);
    BoundCheck check;
    check.magnitude = std::abs(2.0 * hamiltonian(a, b) * rho(a, b).imag());
    const double re = rho(a, b).real();
    double radicand = rho(a, a).real() * rho(b, b).real() - re * re;
    if (radicand < 0.0) {
        check.clamped = true;
        radicand = 0.0;
    }
    check.bound = 2.0 * std::abs(hamiltonian(a, b)) * std::sqrt(radicand);
    return check;
}

MarkovianDiagnostics markovian_diagnostics(const ComplexMatrix& rho, const GeneratorSet& gen) {
    if (!gen.fully_markovian()) throw std::invalid_argument("markovian_diagnostics: non-Markovian channel present");
    const auto n = rho.rows();
    const Eigen::VectorXd out_rates = gen.relaxation_rates.rowwise().sum();
    MarkovianDiagnostics diag{RealMatrix::Zero(n, n), RealMatrix::Zero(n, n), RealMatrix::Zero(n, n)};
    for (Eigen::Index l = 0; l < n; ++l)
        for (Eigen::Index k = 0; k < n; ++k) {
            diag.delta(l, k) = gen.hamiltonian(l, l) - gen.hamiltonian(k, k);
            diag.decay(l, k) =
                0.5 * (gen.dephasing_rates(l) + gen.dephasing_rates(k) + out_rates(l) + out_rates(k));
            diag.half_difference(l, k) = 0.5 * (rho(l, l).real() - rho(k, k).real());
        }
    return diag;
}

CoherenceRates markovian_coherence_rhs(const ComplexMatrix& rho, const GeneratorSet& gen) {
    if (!gen.fully_markovian()) throw std::invalid_argument("markovian_coherence_rhs: non-Markovian channel present");
    const auto diag = markovian_diagnostics(rho, gen);
    const auto& v = gen.hamiltonian;
    const auto& rates = gen.relaxation_rates;
    const auto n = rho.rows();
    CoherenceRates out{RealMatrix::Zero(n, n), RealMatrix::Zero(n, n), RealMatrix::Zero(n, n)};
    for (Eigen::Index l = 0; l < n; ++l) {
        for (Eigen::Index m = 0; m < n; ++m) {
            if (l == m) continue;
            const double re = rho(l, m).real();
            const double im = rho(l, m).imag();
            double nonlocal_imag = 0.0;
            double nonlocal_real = 0.0;
            for (Eigen::Index k = 0; k < n; ++k) {
                if (k == l || k == m) continue;
                nonlocal_imag += v(k, m) * rho(l, k).real() - v(l, k) * rho(k, m).real();
                nonlocal_real += v(k, m) * rho(l, k).imag() - v(l, k) * rho(k, m).imag();
            }
            out.d_imag(l, m) = 2.0 * v(l, m) * diag.half_difference(l, m) - diag.delta(l, m) * re -
                               diag.decay(l, m) * im + nonlocal_imag;
            out.d_real(l, m) = diag.delta(l, m) * im - diag.decay(l, m) * re - nonlocal_real;
            out.current(l, m) = 2.0 * v(l, m) * im + (rates(l, m) * rho(l, l).real() - rates(m, l) * rho(m, m).real());
        }
    }
    return out;
}

}  // namespace eetflux
