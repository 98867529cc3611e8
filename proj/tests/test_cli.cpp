#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <regex>
#include <sstream>

#include <unistd.h>

#include "eetflux/cli/commands.hpp"
#include "eetflux/pathways.hpp"

using namespace eetflux;
namespace fs = std::filesystem;

namespace {

const fs::path kSource = EETFLUX_SOURCE_DIR;
const fs::path kConfigs = kSource / "configs";
const fs::path kData = kSource / "tests" / "data";

struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() / ("eetflux_cli_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

struct Result {
    int code;
    std::string out;
    std::string err;
};

template <typename F>
Result capture(F&& f) {
    std::ostringstream out, err;
    const int code = f(out, err);
    return {code, out.str(), err.str()};
}

Result simulate(const fs::path& config, const fs::path& dir, cli::SimulateOptions opt = {}) {
    opt.configs = {config};
    opt.out_dir = dir;
    return capture([&](auto& o, auto& e) { return cli::cmd_simulate(opt, o, e); });
}

Result currents(const fs::path& traj, const fs::path& config, const fs::path& dir) {
    cli::CurrentsOptions opt{traj, config, dir};
    return capture([&](auto& o, auto& e) { return cli::cmd_currents(opt, o, e); });
}

Result pathways(cli::PathwaysOptions opt) {
    return capture([&](auto& o, auto& e) { return cli::cmd_pathways(opt, o, e); });
}

Result check(cli::CheckOptions opt) {
    return capture([&](auto& o, auto& e) { return cli::cmd_check(opt, o, e); });
}

double summary_value(const std::string& text, const std::string& key) {
    const auto pos = text.find(key + " = ");
    REQUIRE(pos != std::string::npos);
    return std::stod(text.substr(pos + key.size() + 3));
}

}  // namespace

TEST_CASE("simulate: Rabi dimer reaches full transfer near pi/2") {
    TempDir tmp;
    const auto r = simulate(kConfigs / "rabi_dimer.json", tmp.path);
    REQUIRE(r.code == cli::kOk);
    const auto traj = read_trajectory(tmp.path / cli::kTrajectoryText);
    double best = 1.0, at = 0.0;
    for (std::size_t k = 0; k < traj.times.size(); ++k)
        if (traj.states[k](0, 0).real() < best) {
            best = traj.states[k](0, 0).real();
            at = traj.times[k];
        }
    CHECK(best <= 1e-6);
    CHECK(std::abs(at - std::numbers::pi / 2.0) <= 1e-3);
    CHECK(traj.meta.manifest == "simulate.manifest.json");
    CHECK(fs::exists(tmp.path / traj.meta.manifest));
    const auto manifest = nlohmann::json::parse(slurp(tmp.path / traj.meta.manifest));
    CHECK(manifest["run_id"] == traj.meta.run_id);
    CHECK(manifest["model_hash"] == traj.meta.model_hash);
    CHECK(manifest["status"] == "ok");
}

TEST_CASE("simulate: error exit codes") {
    TempDir tmp;
    const auto bad = simulate(kData / "malformed.json", tmp.path);
    CHECK(bad.code == cli::kValidation);
    CHECK(bad.err.find("malformed JSON") != std::string::npos);

    const auto blow = simulate(kData / "unstable.json", tmp.path);
    CHECK(blow.code == cli::kNumerical);
    CHECK(blow.err.find("last good time") != std::string::npos);
    const auto manifest = nlohmann::json::parse(slurp(tmp.path / "simulate.manifest.json"));
    CHECK(manifest["status"] == "aborted");

    cli::SimulateOptions opt;
    opt.overrides.dt = -1.0;
    CHECK(simulate(kConfigs / "rabi_dimer.json", tmp.path, opt).code == cli::kValidation);
}

TEST_CASE("simulate: outputs are byte-identical across runs, formats and job counts") {
    TempDir a, b;
    cli::SimulateOptions opt;
    opt.configs = {kConfigs / "dephased_trimer.json", kConfigs / "rabi_dimer.json"};
    opt.overrides.t_final = 2.0;
    opt.out_dir = a.path;
    opt.jobs = 1;
    std::ostringstream o1, e1, o2, e2;
    REQUIRE(cli::cmd_simulate(opt, o1, e1) == cli::kOk);
    opt.out_dir = b.path;
    opt.jobs = 2;
    REQUIRE(cli::cmd_simulate(opt, o2, e2) == cli::kOk);
    for (const char* stem : {"dephased_trimer", "rabi_dimer"}) {
        const auto x = slurp(a.path / stem / cli::kTrajectoryText);
        CHECK(!x.empty());
        CHECK(x == slurp(b.path / stem / cli::kTrajectoryText));
    }

    cli::SimulateOptions bin;
    bin.format = TrajectoryFormat::Binary;
    bin.overrides.t_final = 2.0;
    REQUIRE(simulate(kConfigs / "dephased_trimer.json", a.path / "bin", bin).code == cli::kOk);
    const auto t1 = read_trajectory(a.path / "dephased_trimer" / cli::kTrajectoryText);
    const auto t2 = read_trajectory(a.path / "bin" / cli::kTrajectoryBinary);
    CHECK(t1.times == t2.times);
    for (std::size_t k = 0; k < t1.states.size(); ++k) CHECK(t1.states[k] == t2.states[k]);
}

TEST_CASE("simulate: out-dir falls back to the environment variable") {
    TempDir tmp;
    ::setenv(cli::kOutDirEnv, tmp.path.c_str(), 1);
    cli::SimulateOptions opt;
    opt.configs = {kConfigs / "rabi_dimer.json"};
    opt.overrides.t_final = 0.1;
    std::ostringstream o, e;
    const int code = cli::cmd_simulate(opt, o, e);
    ::unsetenv(cli::kOutDirEnv);
    CHECK(code == cli::kOk);
    CHECK(fs::exists(tmp.path / cli::kTrajectoryText));
    CHECK(cli::resolve_out_dir(fs::path("x")) == fs::path("x"));
}

TEST_CASE("currents: summaries and error paths") {
    TempDir tmp;
    SUBCASE("dephasing-only run reports zero dephasing current") {
        REQUIRE(simulate(kData / "dephasing_only.json", tmp.path).code == cli::kOk);
        const auto r = currents(tmp.path / cli::kTrajectoryText, kData / "dephasing_only.json", tmp.path);
        REQUIRE(r.code == cli::kOk);
        CHECK(summary_value(r.out, "max|j_dephas|") <= 1e-12);
        CHECK(summary_value(r.out, "continuity residual (generator)") <= 1e-12);
        const auto file = read_currents(tmp.path / cli::kCurrentsFile);
        CHECK(file.meta.manifest == "currents.manifest.json");
        CHECK(fs::exists(tmp.path / file.meta.manifest));
    }
    SUBCASE("closed system has no relaxation current") {
        REQUIRE(simulate(kConfigs / "rabi_dimer.json", tmp.path).code == cli::kOk);
        const auto r = currents(tmp.path / cli::kTrajectoryText, kConfigs / "rabi_dimer.json", tmp.path);
        REQUIRE(r.code == cli::kOk);
        CHECK(summary_value(r.out, "max|j_relax|") == 0.0);
        for (const auto& rec : read_currents(tmp.path / cli::kCurrentsFile).records)
            CHECK(rec.relaxation.cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("wrong dimension exits 2") {
        REQUIRE(simulate(kConfigs / "dephased_trimer.json", tmp.path).code == cli::kOk);
        const auto r = currents(tmp.path / cli::kTrajectoryText, kConfigs / "rabi_dimer.json", tmp.path);
        CHECK(r.code == cli::kValidation);
        CHECK(r.err.find("dimension mismatch") != std::string::npos);
    }
    SUBCASE("third-party trajectory without provenance, starting after t = 0") {
        cli::SimulateOptions opt;
        opt.overrides.t_final = 1.0;
        REQUIRE(simulate(kData / "dephasing_only.json", tmp.path, opt).code == cli::kOk);
        auto traj = read_trajectory(tmp.path / cli::kTrajectoryText);
        const auto ref = read_currents([&] {
            REQUIRE(currents(tmp.path / cli::kTrajectoryText, kData / "dephasing_only.json", tmp.path).code == 0);
            return tmp.path / cli::kCurrentsFile;
        }());
        traj.meta = {};
        traj.meta.labels = {"s0", "s1", "s2"};
        traj.meta.dt = 1e-3;
        traj.times.erase(traj.times.begin(), traj.times.begin() + 10);
        traj.states.erase(traj.states.begin(), traj.states.begin() + 10);
        const auto ext = tmp.path / "external";
        fs::create_directories(ext);
        write_trajectory(ext / "rho.txt", traj, TrajectoryFormat::Text);
        REQUIRE(currents(ext / "rho.txt", kData / "dephasing_only.json", ext).code == cli::kOk);
        const auto got = read_currents(ext / cli::kCurrentsFile);
        REQUIRE(got.records.size() + 10 == ref.records.size());
        for (std::size_t k = 0; k < got.records.size(); ++k)
            CHECK((got.records[k].total - ref.records[k + 10].total).cwiseAbs().maxCoeff() <= 1e-14);
    }
}

TEST_CASE("pathways: Rabi arrow, threshold, groups and determinism") {
    TempDir tmp;
    REQUIRE(simulate(kConfigs / "rabi_dimer.json", tmp.path).code == cli::kOk);
    REQUIRE(currents(tmp.path / cli::kTrajectoryText, kConfigs / "rabi_dimer.json", tmp.path).code == cli::kOk);

    cli::PathwaysOptions opt;
    opt.currents = tmp.path / cli::kCurrentsFile;
    opt.t0 = 0.0;
    opt.window = std::numbers::pi / 2.0;
    opt.threshold = 0.01;
    opt.groups = kData / "dimer_groups.json";
    opt.out_dir = tmp.path / "p1";
    const auto r = pathways(opt);
    REQUIRE(r.code == cli::kOk);
    const auto graph_doc = nlohmann::json::parse(slurp(tmp.path / "p1" / cli::kPathwaysJson));
    const auto graph = graph_from_json(graph_doc);
    REQUIRE(graph.edges.size() == 1);
    CHECK(graph.edges[0].from == 0);
    CHECK(graph.edges[0].to == 1);
    CHECK(std::abs(graph.edges[0].weight - 1.0) <= 1e-5);
    const auto& transfer = graph_doc["groups"]["transfers"][0];
    CHECK(transfer["from"] == "acceptor");
    CHECK(transfer["net"].get<double>() == doctest::Approx(-graph.edges[0].weight).epsilon(1e-12));
    CHECK(graph_doc["manifest"] == "pathways.manifest.json");

    opt.out_dir = tmp.path / "p2";
    REQUIRE(pathways(opt).code == cli::kOk);
    CHECK(slurp(tmp.path / "p1" / cli::kPathwaysDot) == slurp(tmp.path / "p2" / cli::kPathwaysDot));
    CHECK(slurp(tmp.path / "p1" / cli::kPathwaysJson) == slurp(tmp.path / "p2" / cli::kPathwaysJson));
    CHECK(slurp(tmp.path / "p1" / cli::kPathwaysDot).find("// manifest: pathways.manifest.json") == 0);

    opt.threshold = 2.0;
    opt.groups.reset();
    const auto empty = pathways(opt);
    CHECK(empty.code == cli::kOk);
    CHECK(empty.err.find("warning") != std::string::npos);
    CHECK(slurp(tmp.path / "p2" / cli::kPathwaysDot).find("->") == std::string::npos);

    opt.t0 = 3.0;
    opt.window = 1.0;
    const auto outside = pathways(opt);
    CHECK(outside.code == cli::kValidation);
    CHECK(outside.err.find("window outside data") != std::string::npos);
}

TEST_CASE("check: invariant table") {
    TempDir tmp;
    SUBCASE("Lindblad and mixed models pass") {
        for (const char* c : {"rabi_dimer.json", "dephased_trimer.json", "fmo_like_wavenumber.json"}) {
            const auto r = check({kConfigs / c, std::nullopt, {}});
            CHECK_MESSAGE(r.code == cli::kOk, r.out);
            CHECK(r.out.find("FAIL") == std::string::npos);
        }
    }
    SUBCASE("transient negativity is a warning, not a failure") {
        cli::CheckOptions opt{kConfigs / "transient_negativity.json", std::nullopt, {}};
        opt.overrides.t_final = 10.0;
        const auto r = check(opt);
        CHECK(r.code == cli::kOk);
        CHECK(std::regex_search(r.out, std::regex("positivity\\s+WARN")));
    }
    SUBCASE("hand-corrupted trajectory fails continuity") {
        cli::SimulateOptions sim;
        sim.overrides.t_final = 2.0;
        REQUIRE(simulate(kConfigs / "dephased_trimer.json", tmp.path, sim).code == cli::kOk);
        auto traj = read_trajectory(tmp.path / cli::kTrajectoryText);
        // Move population between two sites at one sample; trace is untouched.
        traj.states[100](0, 0) += 1e-4;
        traj.states[100](1, 1) -= 1e-4;
        write_trajectory(tmp.path / "bad.txt", traj, TrajectoryFormat::Text);
        const auto r = check({kConfigs / "dephased_trimer.json", tmp.path / "bad.txt", {}});
        CHECK(r.code == cli::kCheckFailed);
        CHECK(std::regex_search(r.out, std::regex("continuity \\(central diff\\)\\s+FAIL")));
        CHECK(std::regex_search(r.out, std::regex("trace\\s+PASS")));

        const auto good = check({kConfigs / "dephased_trimer.json", tmp.path / cli::kTrajectoryText, {}});
        CHECK(good.code == cli::kOk);
    }
    SUBCASE("invalid config exits 2") {
        CHECK(check({kData / "malformed.json", std::nullopt, {}}).code == cli::kValidation);
    }
}
