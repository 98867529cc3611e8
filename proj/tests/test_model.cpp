#include <doctest.h>

#include <random>

#include "eetflux/config.hpp"
#include "eetflux/generators.hpp"
#include "eetflux/hash.hpp"
#include "support/fixtures.hpp"

using namespace eetflux;
using nlohmann::json;

namespace {

json dimer_doc() {
    return json::parse(R"({
        "sites": [{"label": "A", "energy": 0.0}, {"label": "B", "energy": 0.0}],
        "couplings": [{"from": "A", "to": "B", "value": 1.0}],
        "initial": {"site": "A"},
        "run": {"t_final": 1.0, "dt_output": 0.01, "integrator": {"dt": 0.001}}
    })");
}

std::string error_path(const json& doc) {
    try {
        parse_config(doc);
    } catch (const ModelError& e) {
        return e.path();
    }
    return "<no error>";
}

}  // namespace

TEST_CASE("minimal homo-dimer document parses") {
    const auto model = parse_config(dimer_doc());
    CHECK(model.network.n_sites() == 2);
    CHECK(model.network.labels == std::vector<std::string>{"A", "B"});
    CHECK(model.network.couplings == std::vector<Coupling>{{0, 1, 1.0}});
    CHECK(model.environment.dephasing.empty());
    CHECK(model.environment.relaxation.empty());
    CHECK(std::get<SingleSite>(model.initial).site == 0);
    CHECK(model.run.dt == doctest::Approx(1e-3));
    CHECK(model.unit_factor == 1.0);
}

TEST_CASE("couplings given in reverse order are normalized") {
    auto doc = dimer_doc();
    doc["couplings"] = json::parse(R"([{"from": 1, "to": 0, "value": 2.5}])");
    const auto model = parse_config(doc);
    CHECK(model.network.couplings == std::vector<Coupling>{{0, 1, 2.5}});
}

TEST_CASE("validation errors carry field paths") {
    SUBCASE("self relaxation") {
        auto doc = dimer_doc();
        doc["relaxation"] = json::parse(R"([{"source": "A", "target": "A", "rate": 0.1}])");
        try {
            parse_config(doc);
            FAIL("expected ModelError");
        } catch (const ModelError& e) {
            CHECK(std::string(e.what()).find("self-relaxation forbidden") != std::string::npos);
            CHECK(e.path() == "relaxation[0]");
        }
    }
    SUBCASE("negative rate") {
        auto doc = dimer_doc();
        doc["dephasing"] = json::parse(R"([{"site": "B", "rate": -0.5}])");
        CHECK(error_path(doc) == "dephasing[0].rate");
    }
    SUBCASE("unknown label") {
        auto doc = dimer_doc();
        doc["dephasing"] = json::parse(R"([{"site": "C", "rate": 0.5}])");
        CHECK(error_path(doc) == "dephasing[0].site");
    }
    SUBCASE("index out of range") {
        auto doc = dimer_doc();
        doc["couplings"] = json::parse(R"([{"from": 0, "to": 5, "value": 1.0}])");
        CHECK(error_path(doc) == "couplings[0].to");
    }
    SUBCASE("duplicate dephasing channel") {
        auto doc = dimer_doc();
        doc["dephasing"] = json::parse(R"([{"site": "A", "rate": 0.5}, {"site": 0, "rate": 0.1}])");
        CHECK(error_path(doc) == "dephasing[1]");
    }
    SUBCASE("duplicate relaxation pair") {
        auto doc = dimer_doc();
        doc["relaxation"] = json::parse(R"([{"source": "A", "target": "B", "rate": 0.5},
                                            {"source": "A", "target": "B", "modes": [{"g": 1, "gamma": 1}]}])");
        CHECK(error_path(doc) == "relaxation[1]");
    }
    SUBCASE("rate and modes together") {
        auto doc = dimer_doc();
        doc["dephasing"] = json::parse(R"([{"site": "A", "rate": 0.5, "modes": [{"g": 1, "gamma": 1}]}])");
        CHECK(error_path(doc) == "dephasing[0]");
    }
    SUBCASE("empty mode list") {
        auto doc = dimer_doc();
        doc["dephasing"] = json::parse(R"([{"site": "A", "modes": []}])");
        CHECK(error_path(doc) == "dephasing[0].modes");
    }
    SUBCASE("non-positive mode gamma") {
        auto doc = dimer_doc();
        doc["dephasing"] = json::parse(R"([{"site": "A", "modes": [{"g": 1, "gamma": 0}]}])");
        CHECK(error_path(doc) == "dephasing[0].modes[0].gamma");
    }
    SUBCASE("missing run block") {
        auto doc = dimer_doc();
        doc.erase("run");
        CHECK(error_path(doc) == "run");
    }
    SUBCASE("adaptive tolerances without dt") {
        auto doc = dimer_doc();
        doc["run"]["integrator"] = json::parse(R"({"rtol": 1e-6, "atol": 1e-9})");
        CHECK(error_path(doc) == "run.integrator");
    }
    SUBCASE("malformed json text") {
        CHECK_THROWS_AS(parse_config_text("{\"sites\": ["), ModelError);
    }
}

TEST_CASE("explicit initial matrix checks") {
    SUBCASE("non-PSD matrix is rejected") {
        // eigenvalues 0.5 +- sqrt(0.01 + 0.25) = {1.0099, -0.0099}
        auto doc = dimer_doc();
        doc["initial"] = json::parse(R"({"matrix": [[[0.6, 0], [0.5, 0]], [[0.5, 0], [0.4, 0]]]})");
        try {
            parse_config(doc);
            FAIL("expected ModelError");
        } catch (const ModelError& e) {
            CHECK(e.path() == "initial.matrix");
            CHECK(std::string(e.what()).find("-0.0099") != std::string::npos);
        }
    }
    SUBCASE("valid coherent state") {
        auto doc = dimer_doc();
        doc["initial"] = json::parse(R"({"matrix": [[[0.5, 0], [0.0, 0.5]], [[0.0, -0.5], [0.5, 0]]]})");
        const auto model = parse_config(doc);
        const auto rho = initial_density_matrix(model.initial, 2);
        CHECK(rho(0, 1) == Complex(0.0, 0.5));
    }
    SUBCASE("tiny asymmetry is symmetrized, larger asymmetry rejected") {
        ComplexMatrix rho(2, 2);
        rho << 0.5, Complex(0.1, 1e-14), Complex(0.1, 0.0), 0.5;
        const auto fixed = checked_density_matrix(rho, "m");
        CHECK((fixed - fixed.adjoint()).cwiseAbs().maxCoeff() == 0.0);
        rho(0, 1) = Complex(0.1, 1e-10);
        CHECK_THROWS_AS(checked_density_matrix(rho, "m"), ModelError);
    }
    SUBCASE("trace must be one") {
        ComplexMatrix rho = ComplexMatrix::Identity(2, 2);
        CHECK_THROWS_AS(checked_density_matrix(rho, "m"), ModelError);
    }
    SUBCASE("uniform mixture") {
        const auto rho = initial_density_matrix(UniformSites{{0, 2}}, 3);
        CHECK(rho(0, 0).real() == 0.5);
        CHECK(rho(1, 1).real() == 0.0);
        CHECK(rho(2, 2).real() == 0.5);
    }
}

TEST_CASE("wavenumber units convert every frequency input and record the factor") {
    auto doc = dimer_doc();
    doc["unit"] = "wavenumber";
    doc["time_unit"] = "fs";
    doc["dephasing"] = json::parse(R"([{"site": "A", "modes": [{"g": 4.0, "gamma": 2.0, "omega": 1.0}]}])");
    const auto model = parse_config(doc);
    const double f = 2.0 * std::numbers::pi * 2.99792458e10 * 1e-15;
    CHECK(model.unit_factor == doctest::Approx(f).epsilon(1e-15));
    CHECK(model.energy_unit == EnergyUnit::Wavenumber);
    CHECK(model.network.couplings[0].value == doctest::Approx(f));
    const auto& mode = std::get<NonMarkovianBath>(model.environment.dephasing[0].kind).modes[0];
    CHECK(mode.g == doctest::Approx(4.0 * f * f));
    CHECK(mode.gamma == doctest::Approx(2.0 * f));
    CHECK(mode.omega == doctest::Approx(f));

    auto bad = dimer_doc();
    bad["unit"] = "wavenumber";
    CHECK(error_path(bad) == "time_unit");
}

TEST_CASE("serialize/parse round trip is the identity (randomized models)") {
    std::mt19937_64 rng(1234);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t n = 2 + trial % 6;
        Model m;
        m.network = testing::random_network(rng, n);
        m.environment = testing::mixed_environment(rng, n, trial % 2 == 0, trial % 3 != 0);
        if (trial % 3 == 0) m.initial = SingleSite{n - 1};
        else if (trial % 3 == 1) m.initial = UniformSites{{0, n - 1}};
        else m.initial = ExplicitMatrix{testing::random_density(rng, static_cast<Eigen::Index>(n))};
        m.run = {2.0, 0.05, 1e-3};
        if (trial % 4 == 0) {
            m.energy_unit = EnergyUnit::Wavenumber;
            m.time_unit = TimeUnit::Femtosecond;
            m.unit_factor = wavenumber_factor(TimeUnit::Femtosecond);
        }
        validate(m);
        const auto text = serialize_config(m).dump();
        const auto back = parse_config_text(text);
        CHECK(back == m);
        CHECK(model_hash(back) == model_hash(m));
    }
}

TEST_CASE("build_generators assembles H and single-entry coupling operators") {
    SUBCASE("Hamiltonian assembly") {
        const auto m = testing::make_model({100.0, 50.0}, {{0, 1, 20.0}});
        const auto gen = build_generators(m.network, m.environment);
        RealMatrix expected(2, 2);
        expected << 100.0, 20.0, 20.0, 50.0;
        CHECK(gen.hamiltonian == expected);
    }
    SUBCASE("dephasing operator is a projector") {
        EnvironmentSpec env;
        env.dephasing.push_back({1, MarkovianRate{0.3}});
        const auto m = testing::make_model({0, 0, 0}, {{0, 1, 1.0}, {1, 2, 1.0}}, env);
        const auto gen = build_generators(m.network, m.environment);
        ComplexMatrix expected = ComplexMatrix::Zero(3, 3);
        expected(1, 1) = 1.0;
        CHECK(gen.channels.at(0).op == expected);
        CHECK(gen.dephasing_rates(1) == 0.3);
    }
    SUBCASE("relaxation operator has its entry at (target, source)") {
        EnvironmentSpec env;
        env.relaxation.push_back({2, 0, MarkovianRate{0.2}});
        const auto m = testing::make_model({0, 0, 0}, {{0, 1, 1.0}}, env);
        const auto gen = build_generators(m.network, m.environment);
        ComplexMatrix expected = ComplexMatrix::Zero(3, 3);
        expected(0, 2) = 1.0;
        CHECK(gen.channels.at(0).op == expected);
        CHECK(gen.relaxation_rates(2, 0) == 0.2);
    }
    SUBCASE("invariants on random models") {
        std::mt19937_64 rng(99);
        for (int trial = 0; trial < 20; ++trial) {
            const std::size_t n = 2 + trial % 7;
            const auto net = testing::random_network(rng, n);
            const auto env = testing::mixed_environment(rng, n, trial % 2 == 0, trial % 3 == 0);
            validate_network(net);
            validate_environment(env, n);
            const auto gen = build_generators(net, env);
            CHECK(gen.hamiltonian == gen.hamiltonian.transpose());
            for (const auto& ch : gen.channels) {
                CHECK((ch.op.array() != Complex(0.0)).count() == 1);
                CHECK(ch.op.sum() == Complex(1.0));
            }
        }
    }
}
