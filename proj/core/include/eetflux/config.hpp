#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "eetflux/model.hpp"

namespace eetflux {

/// Parses a JSON configuration document:
///
///   {
///     "unit": "angular" | "wavenumber",   (optional; wavenumber needs "time_unit": "fs" | "ps")
///     "sites":      [{"label": "A", "energy": 0.0}, ...],
///     "couplings":  [{"from": "A", "to": "B", "value": 1.0}, ...],
///     "dephasing":  [{"site": "A", "rate": 0.5} | {"site": "A", "modes": [{"g":..,"gamma":..,"omega":..}]}],
///     "relaxation": [{"source": "B", "target": "A", "rate": 0.2} | {..., "modes": [...]}],
///     "initial":    {"site": "A"} | {"sites": ["A", "B"]} | {"matrix": [[[re, im], ...], ...]},
///     "run":        {"t_final": 10, "dt_output": 0.01, "integrator": {"dt": 0.001}}
///   }
///
/// Site references may be labels or zero-based indices. Throws ModelError
/// with a path to the offending field.
Model parse_config(const nlohmann::json& document);
Model parse_config_text(std::string_view text);
Model load_config(const std::filesystem::path& path);

/// Canonical document; parse_config(serialize_config(m)) == m.
nlohmann::json serialize_config(const Model& model);

}  // namespace eetflux
