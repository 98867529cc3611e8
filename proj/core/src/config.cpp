#include "eetflux/config.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>

namespace eetflux {

using nlohmann::json;

namespace {

const json& require(const json& obj, const char* key, const std::string& path) {
    if (!obj.is_object()) throw ModelError(path, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) throw ModelError(path.empty() ? key : path + "." + key, "missing required field");
    return *it;
}

double as_number(const json& value, const std::string& path) {
    if (!value.is_number()) throw ModelError(path, "expected a number");
    return value.get<double>();
}

const json& as_array(const json& value, const std::string& path) {
    if (!value.is_array()) throw ModelError(path, "expected a list");
    return value;
}

std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

std::string at(const std::string& path, std::size_t i) { return fmt::format("{}[{}]", path, i); }

class SiteResolver {
public:
    explicit SiteResolver(const std::vector<std::string>& labels) : n_(labels.size()) {
        for (std::size_t i = 0; i < labels.size(); ++i) index_.emplace(labels[i], i);
    }

    SiteIndex operator()(const json& ref, const std::string& path) const {
        if (ref.is_string()) {
            auto it = index_.find(ref.get<std::string>());
            if (it == index_.end()) throw ModelError(path, "unknown site label '" + ref.get<std::string>() + "'");
            return it->second;
        }
        if (ref.is_number_integer()) {
            const auto value = ref.get<long long>();
            if (value < 0 || static_cast<std::size_t>(value) >= n_)
                throw ModelError(path, fmt::format("site index {} out of range [0, {})", value, n_));
            return static_cast<SiteIndex>(value);
        }
        throw ModelError(path, "site reference must be a label or an integer index");
    }

private:
    std::size_t n_;
    std::map<std::string, SiteIndex> index_;
};

ChannelKind parse_kind(const json& channel, const std::string& path, double factor) {
    const bool has_rate = channel.contains("rate");
    const bool has_modes = channel.contains("modes");
    if (has_rate == has_modes) throw ModelError(path, "channel needs exactly one of 'rate' or 'modes'");
    if (has_rate) {
        const double rate = as_number(channel["rate"], join(path, "rate"));
        if (rate < 0.0) throw ModelError(join(path, "rate"), fmt::format("negative rate {}", rate));
        return MarkovianRate{rate * factor};
    }
    const auto modes_path = join(path, "modes");
    const auto& modes = as_array(channel["modes"], modes_path);
    NonMarkovianBath bath;
    for (std::size_t i = 0; i < modes.size(); ++i) {
        const auto mode_path = at(modes_path, i);
        BathMode mode;
        mode.g = as_number(require(modes[i], "g", mode_path), join(mode_path, "g")) * factor * factor;
        mode.gamma = as_number(require(modes[i], "gamma", mode_path), join(mode_path, "gamma")) * factor;
        mode.omega = modes[i].contains("omega") ? as_number(modes[i]["omega"], join(mode_path, "omega")) * factor : 0.0;
        bath.modes.push_back(mode);
    }
    return bath;
}

json kind_to_json(const ChannelKind& kind, json channel) {
    if (const auto* m = std::get_if<MarkovianRate>(&kind)) {
        channel["rate"] = m->rate;
        return channel;
    }
    json modes = json::array();
    for (const auto& mode : std::get<NonMarkovianBath>(kind).modes)
        modes.push_back({{"g", mode.g}, {"gamma", mode.gamma}, {"omega", mode.omega}});
    channel["modes"] = std::move(modes);
    return channel;
}

TimeUnit parse_time_unit(const json& value, const std::string& path) {
    if (!value.is_string()) throw ModelError(path, "expected a string");
    const auto s = value.get<std::string>();
    if (s == "fs") return TimeUnit::Femtosecond;
    if (s == "ps") return TimeUnit::Picosecond;
    if (s == "unitless") return TimeUnit::Unitless;
    throw ModelError(path, "unknown time unit '" + s + "' (expected fs, ps or unitless)");
}

const char* time_unit_name(TimeUnit unit) {
    switch (unit) {
        case TimeUnit::Femtosecond: return "fs";
        case TimeUnit::Picosecond: return "ps";
        case TimeUnit::Unitless: break;
    }
    return "unitless";
}

}  // namespace

Model parse_config(const json& doc) {
    if (!doc.is_object()) throw ModelError("", "configuration must be an object");
    Model model;

    // Unit handling. A "converted_from" block is written by serialize_config and
    // restores the audit record without converting a second time.
    double factor = 1.0;
    if (doc.contains("time_unit")) model.time_unit = parse_time_unit(doc["time_unit"], "time_unit");
    if (doc.contains("unit")) {
        if (!doc["unit"].is_string()) throw ModelError("unit", "expected a string");
        const auto unit = doc["unit"].get<std::string>();
        if (unit == "wavenumber") {
            model.energy_unit = EnergyUnit::Wavenumber;
            factor = wavenumber_factor(model.time_unit);
        } else if (unit != "angular") {
            throw ModelError("unit", "unknown unit '" + unit + "' (expected angular or wavenumber)");
        }
    }
    model.unit_factor = factor;
    if (doc.contains("converted_from")) {
        const auto& audit = doc["converted_from"];
        if (model.energy_unit != EnergyUnit::AngularFrequency)
            throw ModelError("converted_from", "only valid together with unit 'angular'");
        const auto& unit = require(audit, "unit", "converted_from");
        if (unit != "wavenumber") throw ModelError("converted_from.unit", "expected 'wavenumber'");
        model.energy_unit = EnergyUnit::Wavenumber;
        model.time_unit = parse_time_unit(require(audit, "time_unit", "converted_from"), "converted_from.time_unit");
        model.unit_factor = as_number(require(audit, "factor", "converted_from"), "converted_from.factor");
    }

    const auto& sites = as_array(require(doc, "sites", ""), "sites");
    if (sites.empty()) throw ModelError("sites", "network needs at least one site");
    for (std::size_t i = 0; i < sites.size(); ++i) {
        const auto path = at("sites", i);
        const auto& site = sites[i];
        std::string label = fmt::format("{}", i);
        if (site.is_object() && site.contains("label")) {
            if (!site["label"].is_string()) throw ModelError(join(path, "label"), "expected a string");
            label = site["label"].get<std::string>();
        }
        model.network.labels.push_back(std::move(label));
        model.network.energies.push_back(as_number(require(site, "energy", path), join(path, "energy")) * factor);
    }
    const SiteResolver resolve(model.network.labels);

    if (doc.contains("couplings")) {
        const auto& couplings = as_array(doc["couplings"], "couplings");
        for (std::size_t i = 0; i < couplings.size(); ++i) {
            const auto path = at("couplings", i);
            auto a = resolve(require(couplings[i], "from", path), join(path, "from"));
            auto b = resolve(require(couplings[i], "to", path), join(path, "to"));
            if (a == b) throw ModelError(path, "self-coupling forbidden");
            if (a > b) std::swap(a, b);
            const double value = as_number(require(couplings[i], "value", path), join(path, "value")) * factor;
            model.network.couplings.push_back({a, b, value});
        }
    }

    if (doc.contains("dephasing")) {
        const auto& channels = as_array(doc["dephasing"], "dephasing");
        for (std::size_t i = 0; i < channels.size(); ++i) {
            const auto path = at("dephasing", i);
            DephasingChannel channel;
            channel.site = resolve(require(channels[i], "site", path), join(path, "site"));
            channel.kind = parse_kind(channels[i], path, factor);
            model.environment.dephasing.push_back(std::move(channel));
        }
    }

    if (doc.contains("relaxation")) {
        const auto& channels = as_array(doc["relaxation"], "relaxation");
        for (std::size_t i = 0; i < channels.size(); ++i) {
            const auto path = at("relaxation", i);
            RelaxationChannel channel;
            channel.source = resolve(require(channels[i], "source", path), join(path, "source"));
            channel.target = resolve(require(channels[i], "target", path), join(path, "target"));
            if (channel.source == channel.target) throw ModelError(path, "self-relaxation forbidden");
            channel.kind = parse_kind(channels[i], path, factor);
            model.environment.relaxation.push_back(std::move(channel));
        }
    }

    const auto& initial = require(doc, "initial", "");
    const int forms = int(initial.contains("site")) + int(initial.contains("sites")) + int(initial.contains("matrix"));
    if (forms != 1) throw ModelError("initial", "needs exactly one of 'site', 'sites' or 'matrix'");
    if (initial.contains("site")) {
        model.initial = SingleSite{resolve(initial["site"], "initial.site")};
    } else if (initial.contains("sites")) {
        const auto& list = as_array(initial["sites"], "initial.sites");
        UniformSites uniform;
        for (std::size_t i = 0; i < list.size(); ++i) uniform.sites.push_back(resolve(list[i], at("initial.sites", i)));
        model.initial = std::move(uniform);
    } else {
        const auto& rows = as_array(initial["matrix"], "initial.matrix");
        const auto n = static_cast<Eigen::Index>(model.network.n_sites());
        if (static_cast<Eigen::Index>(rows.size()) != n)
            throw ModelError("initial.matrix", fmt::format("expected {} rows, got {}", n, rows.size()));
        ComplexMatrix rho(n, n);
        for (Eigen::Index r = 0; r < n; ++r) {
            const auto row_path = at("initial.matrix", static_cast<std::size_t>(r));
            const auto& row = as_array(rows[static_cast<std::size_t>(r)], row_path);
            if (static_cast<Eigen::Index>(row.size()) != n)
                throw ModelError(row_path, fmt::format("expected {} entries, got {}", n, row.size()));
            for (Eigen::Index c = 0; c < n; ++c) {
                const auto entry_path = at(row_path, static_cast<std::size_t>(c));
                const auto& entry = row[static_cast<std::size_t>(c)];
                if (entry.is_number()) {
                    rho(r, c) = entry.get<double>();
                } else {
                    const auto& pair = as_array(entry, entry_path);
                    if (pair.size() != 2) throw ModelError(entry_path, "expected [re, im]");
                    rho(r, c) = Complex(as_number(pair[0], entry_path + "[0]"), as_number(pair[1], entry_path + "[1]"));
                }
            }
        }
        model.initial = ExplicitMatrix{checked_density_matrix(rho, "initial.matrix")};
    }

    const auto& run = require(doc, "run", "");
    model.run.t_final = as_number(require(run, "t_final", "run"), "run.t_final");
    model.run.dt_output = as_number(require(run, "dt_output", "run"), "run.dt_output");
    const auto& integrator = require(run, "integrator", "run");
    if (integrator.contains("method") && integrator["method"] != "rk4")
        throw ModelError("run.integrator.method", "only the fixed-step 'rk4' integrator is available");
    if (!integrator.contains("dt")) {
        if (integrator.contains("rtol") || integrator.contains("atol"))
            throw ModelError("run.integrator", "adaptive stepping (rtol/atol) is not supported; set a fixed 'dt'");
        throw ModelError("run.integrator.dt", "missing required field");
    }
    model.run.dt = as_number(integrator["dt"], "run.integrator.dt");

    validate(model);
    return model;
}

Model parse_config_text(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ModelError("", std::string("malformed JSON: ") + e.what());
    }
    return parse_config(doc);
}

Model load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ModelError("", "cannot open configuration file '" + path.string() + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config_text(buffer.str());
}

json serialize_config(const Model& model) {
    json doc;
    doc["unit"] = "angular";
    if (model.energy_unit == EnergyUnit::Wavenumber) {
        doc["converted_from"] = {{"unit", "wavenumber"},
                                 {"time_unit", time_unit_name(model.time_unit)},
                                 {"factor", model.unit_factor}};
    } else if (model.time_unit != TimeUnit::Unitless) {
        doc["time_unit"] = time_unit_name(model.time_unit);
    }
    const auto& net = model.network;
    json sites = json::array();
    for (std::size_t i = 0; i < net.n_sites(); ++i) sites.push_back({{"label", net.labels[i]}, {"energy", net.energies[i]}});
    doc["sites"] = std::move(sites);
    json couplings = json::array();
    for (const auto& c : net.couplings) couplings.push_back({{"from", c.from}, {"to", c.to}, {"value", c.value}});
    doc["couplings"] = std::move(couplings);
    json dephasing = json::array();
    for (const auto& d : model.environment.dephasing) dephasing.push_back(kind_to_json(d.kind, {{"site", d.site}}));
    doc["dephasing"] = std::move(dephasing);
    json relaxation = json::array();
    for (const auto& r : model.environment.relaxation)
        relaxation.push_back(kind_to_json(r.kind, {{"source", r.source}, {"target", r.target}}));
    doc["relaxation"] = std::move(relaxation);

    if (const auto* single = std::get_if<SingleSite>(&model.initial)) {
        doc["initial"] = {{"site", single->site}};
    } else if (const auto* uniform = std::get_if<UniformSites>(&model.initial)) {
        doc["initial"] = {{"sites", uniform->sites}};
    } else {
        const auto& rho = std::get<ExplicitMatrix>(model.initial).rho;
        json rows = json::array();
        for (Eigen::Index r = 0; r < rho.rows(); ++r) {
            json row = json::array();
            for (Eigen::Index c = 0; c < rho.cols(); ++c) row.push_back({rho(r, c).real(), rho(r, c).imag()});
            rows.push_back(std::move(row));
        }
        doc["initial"] = {{"matrix", std::move(rows)}};
    }
    doc["run"] = {{"t_final", model.run.t_final},
                  {"dt_output", model.run.dt_output},
                  {"integrator", {{"method", "rk4"}, {"dt", model.run.dt}}}};
    return doc;
}

}  // namespace eetflux
