// moments.hpp — Gaussian second-moment dynamics of the system oscillator
//
// The reduced state stays Gaussian under the exact dynamics, so only the five
// moments <q>, <p>, <q^2>, <p^2>, <qp+pq> are tracked. Moments are in physical
// coordinates (q0, p0); the propagator quantities live in mass-weighted ones,
// which is where the m0 factors come from.

#pragma once

#include <cmath>
#include <string>

#include "fdi/errors.hpp"
#include "fdi/fluctuation.hpp"
#include "fdi/model.hpp"
#include "fdi/propagator.hpp"

namespace fdi {

struct GaussianMomentState {
    double mean_q = 0.0;
    double mean_p = 0.0;
    double qq = 0.0;     // <q^2>
    double pp = 0.0;     // <p^2>
    double qp_sym = 0.0; // <qp + pq>
};

// Robertson-Schrodinger residual with central moments:
// (dq)^2 (dp)^2 - C^2/4 - hbar^2/4, non-negative for physical states.
inline double robertson_schrodinger_residual(const GaussianMomentState& s, double hbar) {
    const double vq = s.qq - s.mean_q * s.mean_q;
    const double vp = s.pp - s.mean_p * s.mean_p;
    const double c = s.qp_sym - 2.0 * s.mean_q * s.mean_p;
    return vq * vp - 0.25 * c * c - 0.25 * hbar * hbar;
}

// Initial-state gate. The slack admits exactly-minimum-uncertainty states
// under floating point.
inline void require_physical(const GaussianMomentState& s, double hbar) {
    if (!(s.qq >= 0.0) || !(s.pp >= 0.0))
        throw UnphysicalInitialState("initial state has negative <q^2> or <p^2>");
    const double r = robertson_schrodinger_residual(s, hbar);
    if (r < -1e-12 * hbar * hbar)
        throw UnphysicalInitialState(
            "initial state violates the uncertainty principle (residual = " +
            std::to_string(r) + ")");
}

// ---------------------------------------------------------------------------
// Common state presets

inline GaussianMomentState ground_state(const OscillatorBathModel& m) {
    GaussianMomentState s;
    s.qq = m.hbar / (2.0 * m.m0 * m.omega0);
    s.pp = 0.5 * m.hbar * m.m0 * m.omega0;
    return s;
}

inline GaussianMomentState coherent_state(const OscillatorBathModel& m, double q, double p) {
    GaussianMomentState s = ground_state(m);
    s.mean_q = q;
    s.mean_p = p;
    s.qq += q * q;
    s.pp += p * p;
    s.qp_sym = 2.0 * q * p;
    return s;
}

inline GaussianMomentState squeezed_state(const OscillatorBathModel& m, double r, double phi) {
    GaussianMomentState s;
    const double ch = std::cosh(2.0 * r), sh = std::sinh(2.0 * r);
    s.qq = m.hbar / (2.0 * m.m0 * m.omega0) * (ch - sh * std::cos(phi));
    s.pp = 0.5 * m.hbar * m.m0 * m.omega0 * (ch + sh * std::cos(phi));
    s.qp_sym = -m.hbar * sh * std::sin(phi);
    return s;
}

inline GaussianMomentState thermal_state(const OscillatorBathModel& m, double nbar) {
    GaussianMomentState s = ground_state(m);
    s.qq *= (2.0 * nbar + 1.0);
    s.pp *= (2.0 * nbar + 1.0);
    return s;
}

// ---------------------------------------------------------------------------
// Exact evolution

namespace detail {

// Homogeneous (bath-free) parts of the second-moment map; the full evolved
// moments add the diffusion terms X/m0, m0*Y, Xdot on top.
struct HomogeneousParts {
    double qq, pp, qp;
};

inline HomogeneousParts homogeneous_parts(const PropagatorSample& pr, double m0,
                                          const GaussianMomentState& s0) {
    HomogeneousParts h;
    const double a = pr.A, ad = pr.A_dot, add = pr.A_ddot;
    h.qq = ad * ad * s0.qq + (ad * a / m0) * s0.qp_sym + (a * a) / (m0 * m0) * s0.pp;
    h.pp = m0 * m0 * add * add * s0.qq + m0 * ad * add * s0.qp_sym + ad * ad * s0.pp;
    h.qp = 2.0 * m0 * ad * add * s0.qq + (ad * ad + a * add) * s0.qp_sym +
           (2.0 / m0) * a * ad * s0.pp;
    return h;
}

} // namespace detail

// Second moments under the exact reduced dynamics with the bath initially in
// equilibrium at temperature T. First moments evolve by the homogeneous map
// (the bath contributes no drift).
inline GaussianMomentState evolve_moments(const SpectralDecomposition& d,
                                          const OscillatorBathModel& m, double temp,
                                          const GaussianMomentState& initial, double t) {
    require_physical(initial, m.hbar);
    const PropagatorSample pr = propagator_at(d, t);
    const FluctuationSample fl = xy_quantities(d, m, temp, t);
    const auto h = detail::homogeneous_parts(pr, m.m0, initial);

    GaussianMomentState out;
    out.qq = fl.X / m.m0 + h.qq;
    out.pp = m.m0 * fl.Y + h.pp;
    out.qp_sym = fl.X_dot + h.qp;
    out.mean_q = pr.A_dot * initial.mean_q + (pr.A / m.m0) * initial.mean_p;
    out.mean_p = m.m0 * pr.A_ddot * initial.mean_q + pr.A_dot * initial.mean_p;
    return out;
}

// Moments of the reversible reference evolution: the homogeneous parts divided
// by R^2. Defined only while R^2(t) > 0.
inline GaussianMomentState reference_moments(const SpectralDecomposition& d,
                                             const OscillatorBathModel& m,
                                             const GaussianMomentState& initial, double t) {
    const PropagatorSample pr = propagator_at(d, t);
    if (!(pr.R2 > 0.0))
        throw NonPositiveR2("reference_moments: R^2(t) = " + std::to_string(pr.R2) +
                            " <= 0 at t = " + std::to_string(t));
    const auto h = detail::homogeneous_parts(pr, m.m0, initial);
    const double r = std::sqrt(pr.R2);

    GaussianMomentState out;
    out.qq = h.qq / pr.R2;
    out.pp = h.pp / pr.R2;
    out.qp_sym = h.qp / pr.R2;
    out.mean_q = (pr.A_dot * initial.mean_q + (pr.A / m.m0) * initial.mean_p) / r;
    out.mean_p = (m.m0 * pr.A_ddot * initial.mean_q + pr.A_dot * initial.mean_p) / r;
    return out;
}

// ---------------------------------------------------------------------------
// Diffusion-only moment excess and the decoherence functional

struct DeltaQuantities {
    double delta_q = 0.0;
    double delta_p = 0.0;
    double c_delta = 0.0;
    double d_value = 0.0; // decoherence functional D(t)
};

// delta_q^2 = <q^2>(t) - R^2 * (reference <q^2>), and analogues: the part of
// each second moment produced by diffusion alone. The initial-state terms
// cancel, so d_value depends only on (model, T, t).
inline DeltaQuantities delta_quantities(const SpectralDecomposition& d,
                                        const OscillatorBathModel& m, double temp,
                                        const GaussianMomentState& initial, double t) {
    if (t == 0.0) {
        // The reference map is the identity and the diffusion integrals vanish
        // identically; the differences are exact zeros.
        return {};
    }
    const PropagatorSample pr = propagator_at(d, t);
    if (!(pr.R2 > 0.0))
        throw NonPositiveR2("delta_quantities: R^2(t) <= 0 at t = " + std::to_string(t));

    const GaussianMomentState evolved = evolve_moments(d, m, temp, initial, t);
    const GaussianMomentState ref = reference_moments(d, m, initial, t);

    DeltaQuantities out;
    const double dq2 = evolved.qq - pr.R2 * ref.qq;
    const double dp2 = evolved.pp - pr.R2 * ref.pp;
    out.c_delta = evolved.qp_sym - pr.R2 * ref.qp_sym;
    out.delta_q = std::sqrt(std::max(dq2, 0.0));
    out.delta_p = std::sqrt(std::max(dp2, 0.0));
    const double one_minus_r2 = one_minus_r2_mode_sum(d, m, t);
    out.d_value = dq2 * dp2 - 0.25 * out.c_delta * out.c_delta -
                  0.25 * m.hbar * m.hbar * one_minus_r2 * one_minus_r2;
    return out;
}

// The decoherence functional computed directly from the state-independent
// fluctuation integrals; equals delta_quantities(...).d_value up to roundoff
// of the moment cancellations.
inline double decoherence_functional(const SpectralDecomposition& d,
                                     const OscillatorBathModel& m, double temp, double t) {
    return fd_thermal_residual(d, m, temp, t);
}

// ---------------------------------------------------------------------------
// Uncertainty-principle route: substituting the minimum-uncertainty reference
// moments into the second-moment product bound recovers the dissipation bound
// sqrt(X Y - Xdot^2/4) >= hbar (1 - R^2)/2 whenever 1 - R^2 >= 0.

struct UncertaintyRouteReport {
    double special_moment_residual = 0.0;  // moment-product bound minus hbar^2/4
    double dissipation_bound_residual = 0.0; // sqrt(XY - Xdot^2/4) - hbar(1-R^2)/2
};

inline UncertaintyRouteReport uncertainty_route_check(const SpectralDecomposition& d,
                                                      const OscillatorBathModel& m,
                                                      double temp, double t) {
    const PropagatorSample pr = propagator_at(d, t);
    if (!(pr.R2 > 0.0))
        throw PreconditionFailure("uncertainty_route_check: R^2(t) <= 0");
    const FluctuationSample fl = xy_quantities(d, m, temp, t);
    const double disc = 4.0 * fl.X * fl.Y - fl.X_dot * fl.X_dot;
    if (!(disc > 0.0))
        throw PreconditionFailure("uncertainty_route_check: 4XY - Xdot^2 <= 0");
    const double root = std::sqrt(disc);

    // Minimum-uncertainty reference moments proportional to (X, Xdot/2, Y).
    const double ref_qq = m.hbar * fl.X / (m.m0 * root);
    const double ref_qp = m.hbar * fl.X_dot / root;
    const double ref_pp = m.hbar * m.m0 * fl.Y / root;

    const double xy_gap = fl.X * fl.Y - 0.25 * fl.X_dot * fl.X_dot;
    const double product = xy_gap +
                           pr.R2 * pr.R2 * (ref_qq * ref_pp - 0.25 * ref_qp * ref_qp) +
                           pr.R2 * (m.m0 * fl.Y * ref_qq - 0.5 * fl.X_dot * ref_qp +
                                    (fl.X / m.m0) * ref_pp);

    UncertaintyRouteReport rep;
    rep.special_moment_residual = product - 0.25 * m.hbar * m.hbar;
    rep.dissipation_bound_residual = std::sqrt(xy_gap) - 0.5 * m.hbar * (1.0 - pr.R2);
    return rep;
}

} // namespace fdi
