// model.hpp — oscillator-bath model, validation, and bath discretization
//
// The total system is one oscillator of frequency omega0 bilinearly coupled to
// N bath oscillators (frequencies omega_n, couplings epsilon_n) in
// mass-weighted coordinates. The quadratic form is positive-definite iff
// sum_n epsilon_n^2 / omega_n^2 <= omega0^2.

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "fdi/errors.hpp"
#include "fdi/util.hpp"

namespace fdi {

struct OscillatorBathModel {
    double omega0 = 1.0;
    std::vector<double> bath_omegas;
    std::vector<double> bath_epsilons;
    double m0 = 1.0;
    double hbar = 1.0;
    double boltzmann = 1.0;

    std::size_t mode_count() const { return bath_omegas.size(); }

    // sum_n epsilon_n^2 / omega_n^2, the quantity bounded by omega0^2
    double coupling_sum() const {
        double s = 0.0;
        for (std::size_t n = 0; n < bath_omegas.size() && n < bath_epsilons.size(); ++n) {
            const double w = bath_omegas[n];
            const double e = bath_epsilons[n];
            s += (e * e) / (w * w);
        }
        return s;
    }
};

struct ModelViolation {
    std::string constraint; // which bound failed
    double slack;           // signed distance to the bound (negative = violated)
};

// Pure and total: never throws, reports every violated invariant with its slack.
inline std::vector<ModelViolation> validate_model(const OscillatorBathModel& m) {
    std::vector<ModelViolation> out;
    auto finite = [](double v) { return std::isfinite(v); };

    if (!(finite(m.omega0) && m.omega0 > 0.0))
        out.push_back({"omega0 > 0", m.omega0});
    if (!(finite(m.m0) && m.m0 > 0.0))
        out.push_back({"m0 > 0", m.m0});
    if (!(finite(m.hbar) && m.hbar > 0.0))
        out.push_back({"hbar > 0", m.hbar});
    if (!(finite(m.boltzmann) && m.boltzmann > 0.0))
        out.push_back({"boltzmann > 0", m.boltzmann});
    if (m.bath_omegas.size() != m.bath_epsilons.size())
        out.push_back({"len(bath_omegas) == len(bath_epsilons)",
                       static_cast<double>(m.bath_omegas.size()) -
                           static_cast<double>(m.bath_epsilons.size())});
    for (std::size_t n = 0; n < m.bath_omegas.size(); ++n) {
        if (!(finite(m.bath_omegas[n]) && m.bath_omegas[n] > 0.0)) {
            out.push_back({"bath_omegas[" + std::to_string(n) + "] > 0", m.bath_omegas[n]});
        }
    }
    for (std::size_t n = 0; n < m.bath_epsilons.size(); ++n) {
        if (!finite(m.bath_epsilons[n])) {
            out.push_back({"bath_epsilons[" + std::to_string(n) + "] finite",
                           m.bath_epsilons[n]});
        }
    }

    // Only meaningful once the per-entry checks pass.
    if (out.empty()) {
        const double s = m.coupling_sum();
        if (!finite(s)) {
            out.push_back({"sum(eps^2/omega^2) finite", s});
        } else if (s > m.omega0 * m.omega0) {
            out.push_back({"sum(eps^2/omega^2) <= omega0^2", m.omega0 * m.omega0 - s});
        }
    }
    return out;
}

inline bool is_valid(const OscillatorBathModel& m) { return validate_model(m).empty(); }

inline void require_valid(const OscillatorBathModel& m) {
    const auto report = validate_model(m);
    if (!report.empty()) {
        std::string msg = "invalid model:";
        for (const auto& v : report) msg += " [" + v.constraint + "]";
        throw PositivityViolation(msg);
    }
}

// ---------------------------------------------------------------------------
// Bath discretization from a spectral-strength recipe

struct DrudeBathRecipe {
    double gamma = 0.1;     // damping scale
    double alpha = 1.0;     // cutoff
    double omega_max = 10.0;
    int n_modes = 100;

    // Recorded as metadata only; the discretizer does not enforce it.
    bool alpha_ge_3gamma() const { return alpha >= 3.0 * gamma; }

    bool valid() const {
        return gamma >= 0.0 && alpha > 0.0 && omega_max > 0.0 && n_modes >= 1 &&
               std::isfinite(gamma) && std::isfinite(alpha) && std::isfinite(omega_max);
    }
};

struct ModelBase {
    double omega0 = 1.0;
    double m0 = 1.0;
    double hbar = 1.0;
    double boltzmann = 1.0;
};

// gamma^2(omega): spectral strength with a Lorentz-type cutoff at alpha.
// Exposed as a free function so a different strength can be swapped in
// through the pluggable-hook overload of discretize_drude.
inline double drude_ullersma_strength(double omega, double gamma, double alpha) {
    const double a2 = alpha * alpha;
    return (2.0 / M_PI) * gamma * omega * omega * a2 / (omega * omega + a2);
}

using SpectralStrength = std::function<double(double /*omega*/)>;

// Midpoint grid omega_n = (n - 1/2) * d_omega keeps every frequency strictly
// positive; couplings are epsilon_n^2 = strength(omega_n) * d_omega.
inline OscillatorBathModel discretize_drude(const DrudeBathRecipe& recipe,
                                            const ModelBase& base,
                                            const SpectralStrength& strength) {
    if (!recipe.valid())
        throw PreconditionFailure("discretize_drude: recipe invariants violated");

    OscillatorBathModel m;
    m.omega0 = base.omega0;
    m.m0 = base.m0;
    m.hbar = base.hbar;
    m.boltzmann = base.boltzmann;

    const int n = recipe.n_modes;
    const double dw = recipe.omega_max / static_cast<double>(n);
    m.bath_omegas.resize(static_cast<std::size_t>(n));
    m.bath_epsilons.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double w = (static_cast<double>(i) + 0.5) * dw;
        const double g2 = strength(w);
        if (g2 < 0.0)
            throw PreconditionFailure("discretize_drude: negative spectral strength at omega=" +
                                      std::to_string(w));
        m.bath_omegas[static_cast<std::size_t>(i)] = w;
        m.bath_epsilons[static_cast<std::size_t>(i)] = std::sqrt(g2 * dw);
    }

    const auto report = validate_model(m);
    if (!report.empty()) {
        throw PositivityViolation(
            "discretize_drude: couplings break sum(eps^2/omega^2) <= omega0^2 "
            "(sum = " + std::to_string(m.coupling_sum()) +
            ", bound = " + std::to_string(m.omega0 * m.omega0) +
            "); reduce gamma or the truncation");
    }
    return m;
}

inline OscillatorBathModel discretize_drude(const DrudeBathRecipe& recipe,
                                            const ModelBase& base) {
    return discretize_drude(recipe, base, [&recipe](double w) {
        return drude_ullersma_strength(w, recipe.gamma, recipe.alpha);
    });
}

// ---------------------------------------------------------------------------

// Stable 16-hex-digit digest of the model parameters; every CSV row carries it
// so a row can be reproduced in isolation.
inline std::string model_hash(const OscillatorBathModel& m) {
    std::uint64_t h = fnv1a64_append(m.omega0, 1469598103934665603ull);
    h = fnv1a64_append(m.m0, h);
    h = fnv1a64_append(m.hbar, h);
    h = fnv1a64_append(m.boltzmann, h);
    for (double w : m.bath_omegas) h = fnv1a64_append(w, h);
    for (double e : m.bath_epsilons) h = fnv1a64_append(e, h);
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

} // namespace fdi
