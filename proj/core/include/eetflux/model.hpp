#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace eetflux {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using RealMatrix = Eigen::MatrixXd;
using SiteIndex = std::size_t;

/// Raised for any configuration or model invariant violation. `path()` names
/// the offending field, e.g. `relaxation[2].target`.
class ModelError : public std::runtime_error {
public:
    ModelError(std::string path, const std::string& message)
        : std::runtime_error(path.empty() ? message : path + ": " + message), path_(std::move(path)) {}

    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

struct Coupling {
    SiteIndex from = 0;
    SiteIndex to = 0;
    double value = 0.0;

    bool operator==(const Coupling&) const = default;
};

/// Sites of the one-excitation manifold and their real symmetric couplings.
/// Energies and couplings are angular frequencies (hbar = 1).
struct SiteNetwork {
    std::vector<std::string> labels;
    std::vector<double> energies;
    std::vector<Coupling> couplings;  // from < to after validation

    std::size_t n_sites() const noexcept { return energies.size(); }
    RealMatrix hamiltonian() const;

    bool operator==(const SiteNetwork&) const = default;
};

/// One exponential term of a bath correlation function,
/// alpha(t) = g * exp(-(gamma + i*omega) * t).
struct BathMode {
    double g = 0.0;
    double gamma = 1.0;
    double omega = 0.0;

    Complex decay() const noexcept { return {gamma, omega}; }
    Complex correlation(double t) const { return g * std::exp(-decay() * t); }

    bool operator==(const BathMode&) const = default;
};

struct MarkovianRate {
    double rate = 0.0;
    bool operator==(const MarkovianRate&) const = default;
};

struct NonMarkovianBath {
    std::vector<BathMode> modes;
    bool operator==(const NonMarkovianBath&) const = default;
};

using ChannelKind = std::variant<MarkovianRate, NonMarkovianBath>;

inline bool is_markovian(const ChannelKind& kind) noexcept {
    return std::holds_alternative<MarkovianRate>(kind);
}

/// Coupling L = |n><n| of site n to its environment.
struct DephasingChannel {
    SiteIndex site = 0;
    ChannelKind kind = MarkovianRate{};

    bool operator==(const DephasingChannel&) const = default;
};

/// Coupling L = |target><source|: relaxation from `source` into `target`.
struct RelaxationChannel {
    SiteIndex source = 0;
    SiteIndex target = 0;
    ChannelKind kind = MarkovianRate{};

    bool operator==(const RelaxationChannel&) const = default;
};

struct EnvironmentSpec {
    std::vector<DephasingChannel> dephasing;
    std::vector<RelaxationChannel> relaxation;

    bool fully_markovian() const noexcept;
    bool operator==(const EnvironmentSpec&) const = default;
};

struct SingleSite {
    SiteIndex site = 0;
    bool operator==(const SingleSite&) const = default;
};

struct UniformSites {
    std::vector<SiteIndex> sites;
    bool operator==(const UniformSites&) const = default;
};

struct ExplicitMatrix {
    ComplexMatrix rho;
    bool operator==(const ExplicitMatrix& other) const {
        return rho.rows() == other.rho.rows() && rho.cols() == other.rho.cols() && rho == other.rho;
    }
};

using InitialState = std::variant<SingleSite, UniformSites, ExplicitMatrix>;

/// Builds rho0 for an `n_sites` network.
ComplexMatrix initial_density_matrix(const InitialState& initial, std::size_t n_sites);

struct RunParameters {
    double t_final = 0.0;
    double dt_output = 0.0;
    double dt = 0.0;  // fixed RK4 step

    bool operator==(const RunParameters&) const = default;
};

enum class EnergyUnit { AngularFrequency, Wavenumber };
enum class TimeUnit { Unitless, Femtosecond, Picosecond };

/// Parsed and validated configuration. Immutable after construction.
struct Model {
    SiteNetwork network;
    EnvironmentSpec environment;
    InitialState initial = SingleSite{};
    RunParameters run;

    EnergyUnit energy_unit = EnergyUnit::AngularFrequency;
    TimeUnit time_unit = TimeUnit::Unitless;
    /// Multiplier applied to frequency-dimension inputs (1 for angular frequency).
    double unit_factor = 1.0;

    bool operator==(const Model&) const = default;
};

/// Tolerances used when validating explicit initial states.
inline constexpr double kSymmetrizeTolerance = 1e-12;
inline constexpr double kInitialStateTolerance = 1e-9;

/// Checks every structural invariant of the model; throws ModelError.
void validate(const Model& model);

void validate_network(const SiteNetwork& network);
void validate_environment(const EnvironmentSpec& env, std::size_t n_sites);

/// Symmetrizes tiny anti-Hermitian noise and checks Hermiticity, unit trace and
/// positivity. Returns the (possibly symmetrized) matrix.
ComplexMatrix checked_density_matrix(const ComplexMatrix& rho, const std::string& path);

/// Angular frequency per cm^-1 in the given time unit (2*pi*c).
double wavenumber_factor(TimeUnit unit);

}  // namespace eetflux
