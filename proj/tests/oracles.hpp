// oracles.hpp — test-only independent oracles: adaptive quadrature, finite
// differences, and a generator of random valid oscillator-bath models. Nothing
// here touches the closed-form kernel paths it is used to check.

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "fdi/model.hpp"
#include "fdi/propagator.hpp"

namespace oracles {

// Adaptive Simpson quadrature with absolute tolerance.
inline double simpson_rec(const std::function<double(double)>& f, double a, double b,
                          double fa, double fm, double fb, double whole, double tol,
                          int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-13) {
    if (a == b) return 0.0;
    const double m = 0.5 * (a + b);
    const double fa = f(a), fm = f(m), fb = f(b);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson_rec(f, a, b, fa, fm, fb, whole, tol, 48);
}

inline double central_diff(const std::function<double(double)>& f, double x, double h) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

// A(t) and Adot(t) evaluated directly from the spectral mode sums, for use
// inside quadrature integrands.
inline double propagator_a(const fdi::SpectralDecomposition& d, double t) {
    double a = 0.0;
    for (Eigen::Index j = 0; j < d.size(); ++j)
        a += d.system_weights[j] * std::sin(d.mode_freqs[j] * t) / d.mode_freqs[j];
    return a;
}

inline double propagator_a_dot(const fdi::SpectralDecomposition& d, double t) {
    double a = 0.0;
    for (Eigen::Index j = 0; j < d.size(); ++j)
        a += d.system_weights[j] * std::cos(d.mode_freqs[j] * t);
    return a;
}

// Random valid model: frequencies in [0.2, 5], couplings drawn so that
// sum eps^2/omega^2 = margin * omega0^2 with margin < 1. Always passes
// validation by construction.
inline fdi::OscillatorBathModel random_model(std::mt19937_64& rng, std::size_t max_modes,
                                             double max_margin = 0.95) {
    std::uniform_real_distribution<double> omega0_dist(0.5, 2.0);
    std::uniform_real_distribution<double> omega_dist(0.2, 5.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> n_dist(0, max_modes);

    fdi::OscillatorBathModel m;
    m.omega0 = omega0_dist(rng);
    const std::size_t n = n_dist(rng);
    const double margin = max_margin * unit(rng);
    std::vector<double> g(n);
    double gsum = 0.0;
    for (auto& v : g) {
        v = unit(rng) + 1e-3;
        gsum += v;
    }
    for (std::size_t i = 0; i < n; ++i) {
        const double w = omega_dist(rng);
        const double frac = margin * m.omega0 * m.omega0 * g[i] / gsum;
        m.bath_omegas.push_back(w);
        m.bath_epsilons.push_back(w * std::sqrt(frac));
    }
    return m;
}

// As above but guaranteed at least one bath mode.
inline fdi::OscillatorBathModel random_coupled_model(std::mt19937_64& rng,
                                                     std::size_t max_modes,
                                                     double max_margin = 0.95) {
    for (;;) {
        auto m = random_model(rng, max_modes, max_margin);
        if (m.mode_count() > 0) return m;
    }
}

inline std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        out[static_cast<std::size_t>(i)] =
            a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
    return out;
}

} // namespace oracles
