// model_json.hpp — model construction from a JSON document
//
// Two shapes are accepted, with strict key checking (unknown keys are an error):
//   { "omega0": 1.0, "omegas": [...], "epsilons": [...], ... }
//   { "omega0": 1.0, "drude": { "gamma": ..., "alpha": ..., "omega_max": ...,
//                               "n_modes": ... }, ... }
// Optional scalars m0, hbar, boltzmann default to 1.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fdi/errors.hpp"
#include "fdi/model.hpp"

namespace fdi {

namespace detail {

inline void require_keys(const nlohmann::json& j, const std::vector<std::string>& allowed,
                         const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const auto& k : allowed)
            if (it.key() == k) { ok = true; break; }
        if (!ok) throw ConfigError(where + ": unknown key \"" + it.key() + "\"");
    }
}

inline double number_at(const nlohmann::json& j, const std::string& key, const std::string& where) {
    if (!j.contains(key)) throw ConfigError(where + ": missing key \"" + key + "\"");
    if (!j.at(key).is_number()) throw ConfigError(where + ": \"" + key + "\" must be a number");
    return j.at(key).get<double>();
}

inline double number_or(const nlohmann::json& j, const std::string& key, double fallback,
                        const std::string& where) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number()) throw ConfigError(where + ": \"" + key + "\" must be a number");
    return j.at(key).get<double>();
}

inline std::vector<double> number_list_at(const nlohmann::json& j, const std::string& key,
                                          const std::string& where) {
    if (!j.contains(key)) throw ConfigError(where + ": missing key \"" + key + "\"");
    const auto& arr = j.at(key);
    if (!arr.is_array()) throw ConfigError(where + ": \"" + key + "\" must be an array");
    std::vector<double> out;
    out.reserve(arr.size());
    for (const auto& v : arr) {
        if (!v.is_number()) throw ConfigError(where + ": \"" + key + "\" entries must be numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

} // namespace detail

struct ParsedModel {
    OscillatorBathModel model;
    std::optional<DrudeBathRecipe> recipe; // present when the bath came from a recipe
};

inline ParsedModel parse_model_document(const nlohmann::json& j) {
    const std::string where = "model";
    detail::require_keys(j, {"omega0", "m0", "hbar", "boltzmann", "omegas", "epsilons", "drude"},
                         where);

    ModelBase base;
    base.omega0 = detail::number_at(j, "omega0", where);
    base.m0 = detail::number_or(j, "m0", 1.0, where);
    base.hbar = detail::number_or(j, "hbar", 1.0, where);
    base.boltzmann = detail::number_or(j, "boltzmann", 1.0, where);

    const bool explicit_bath = j.contains("omegas") || j.contains("epsilons");
    const bool recipe_bath = j.contains("drude");
    if (explicit_bath && recipe_bath)
        throw ConfigError(where + ": give either omegas/epsilons or drude, not both");
    if (!explicit_bath && !recipe_bath)
        throw ConfigError(where + ": give either omegas/epsilons (possibly empty) or drude");

    ParsedModel out;
    if (recipe_bath) {
        const auto& dj = j.at("drude");
        detail::require_keys(dj, {"gamma", "alpha", "omega_max", "n_modes"}, where + ".drude");
        DrudeBathRecipe r;
        r.gamma = detail::number_at(dj, "gamma", where + ".drude");
        r.alpha = detail::number_at(dj, "alpha", where + ".drude");
        r.omega_max = detail::number_at(dj, "omega_max", where + ".drude");
        const double nm = detail::number_at(dj, "n_modes", where + ".drude");
        r.n_modes = static_cast<int>(nm);
        if (static_cast<double>(r.n_modes) != nm || r.n_modes < 1)
            throw ConfigError(where + ".drude: n_modes must be a positive integer");
        if (!r.valid()) throw ConfigError(where + ".drude: recipe invariants violated");
        out.recipe = r;
        out.model = discretize_drude(r, base);
    } else {
        OscillatorBathModel m;
        m.omega0 = base.omega0;
        m.m0 = base.m0;
        m.hbar = base.hbar;
        m.boltzmann = base.boltzmann;
        m.bath_omegas = detail::number_list_at(j, "omegas", where);
        m.bath_epsilons = detail::number_list_at(j, "epsilons", where);
        out.model = m;
    }

    const auto report = validate_model(out.model);
    if (!report.empty()) {
        std::string msg = where + ": invalid model:";
        for (const auto& v : report)
            msg += " [" + v.constraint + " (slack " + std::to_string(v.slack) + ")]";
        throw ConfigError(msg);
    }
    return out;
}

inline OscillatorBathModel model_from_json(const nlohmann::json& j) {
    return parse_model_document(j).model;
}

} // namespace fdi
