// energy.hpp — per-mode bath energy functions E(omega, x)
//
// The thermal variant is the mean energy of an oscillator in equilibrium,
// (hbar*omega/2) coth(hbar*omega/(2kT)). The other variants deliberately break
// the zero-point constraint E(omega, 0) = hbar*omega/2; they exist to probe
// what the fluctuation-dissipation inequality loses under those approximations.

#pragma once

#include <cmath>
#include <functional>
#include <string>

#include "fdi/errors.hpp"

namespace fdi {

// coth(u) for u > 0 without overflow: coth(u) = 1 + 2/(e^{2u} - 1).
inline double stable_coth(double u) {
    return 1.0 + 2.0 / std::expm1(2.0 * u);
}

// csch^2(u) = 4 e^{-2u} / (1 - e^{-2u})^2, stable for both small and large u.
inline double stable_csch2(double u) {
    const double em = std::expm1(-2.0 * u); // e^{-2u} - 1, exact near 0
    return 4.0 * std::exp(-2.0 * u) / (em * em);
}

struct EnergyFunction {
    std::string name;
    bool satisfies_constraints = false; // zero-point value + monotonicity in x
    std::function<double(double omega, double x)> value;
    std::function<double(double omega, double x)> x_derivative;
};

inline EnergyFunction thermal_energy(double hbar, double boltzmann) {
    EnergyFunction e;
    e.name = "thermal";
    e.satisfies_constraints = true;
    e.value = [hbar, boltzmann](double omega, double temp) {
        const double zp = 0.5 * hbar * omega;
        if (temp <= 0.0) return zp; // coth -> 1
        return zp * stable_coth(hbar * omega / (2.0 * boltzmann * temp));
    };
    e.x_derivative = [hbar, boltzmann](double omega, double temp) {
        if (temp <= 0.0) return 0.0;
        const double u = hbar * omega / (2.0 * boltzmann * temp);
        return 0.5 * hbar * omega * (u / temp) * stable_csch2(u);
    };
    return e;
}

// Planck occupation energy without the zero-point term.
inline EnergyFunction no_zero_point_energy(double hbar, double boltzmann) {
    EnergyFunction e;
    e.name = "no_zero_point";
    e.satisfies_constraints = false; // E(omega, 0) = 0
    e.value = [hbar, boltzmann](double omega, double temp) {
        if (temp <= 0.0) return 0.0;
        return hbar * omega / std::expm1(hbar * omega / (boltzmann * temp));
    };
    e.x_derivative = [hbar, boltzmann](double omega, double temp) {
        if (temp <= 0.0) return 0.0;
        const double v = hbar * omega / (boltzmann * temp);
        const double em = std::expm1(-v);
        return hbar * omega * (v / temp) * std::exp(-v) / (em * em);
    };
    return e;
}

inline EnergyFunction classical_energy(double /*hbar*/, double boltzmann) {
    EnergyFunction e;
    e.name = "classical";
    e.satisfies_constraints = false; // E(omega, 0) = 0
    e.value = [boltzmann](double, double temp) { return boltzmann * temp; };
    e.x_derivative = [boltzmann](double, double) { return boltzmann; };
    return e;
}

inline EnergyFunction energy_function_by_name(const std::string& name, double hbar,
                                              double boltzmann) {
    if (name == "thermal") return thermal_energy(hbar, boltzmann);
    if (name == "no_zero_point") return no_zero_point_energy(hbar, boltzmann);
    if (name == "classical") return classical_energy(hbar, boltzmann);
    throw ConfigError("unknown energy function \"" + name +
                      "\" (expected thermal | no_zero_point | classical)");
}

} // namespace fdi
