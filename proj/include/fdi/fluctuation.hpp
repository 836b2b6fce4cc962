// fluctuation.hpp — bath-induced fluctuation integrals and the
// fluctuation-dissipation inequality
//
// Everything here rests on four per-mode convolution integrals of the
// propagator against the bath phases,
//   C0(w) = int_0^t A(t') cos w(t-t') dt',   S0(w) = ... sin ...,
//   C1(w) = int_0^t Adot(t') cos w(t-t') dt', S1(w) = ... sin ...,
// all evaluated in closed form through the spectral mode expansion of A.
// Integration by parts (A(0) = 0) gives C1 + i S1 = A + i w (C0 + i S0),
// which doubles as a consistency check.

#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "fdi/energy.hpp"
#include "fdi/errors.hpp"
#include "fdi/model.hpp"
#include "fdi/propagator.hpp"

namespace fdi {

namespace detail {

// Definite integrals of sin/cos(mu t') against cos/sin(w (t-t')) over [0, t].
struct TrigKernels {
    double ic; // int sin(mu t') cos(w(t-t'))
    double is; // int sin(mu t') sin(w(t-t'))
    double jc; // int cos(mu t') cos(w(t-t'))
    double js; // int cos(mu t') sin(w(t-t'))
};

// Below this separation the generic denominators (mu^2 - w^2) lose all
// precision; switch to the analytic resonant limit (terms linear in t).
inline double resonance_threshold(double mu, double w) {
    return 1e-8 * std::max(mu, w);
}

// smu/cmu and sw/cw are sin/cos of mu*t and w*t, precomputed by the caller so
// grids of modes cost O(J + N) trig evaluations instead of O(J * N).
inline TrigKernels trig_kernels(double mu, double smu, double cmu, double w, double sw,
                                double cw, double t) {
    TrigKernels k;
    if (std::abs(mu - w) < resonance_threshold(mu, w)) {
        k.ic = 0.5 * t * sw;
        k.is = (sw - w * t * cw) / (2.0 * w);
        k.jc = (sw + w * t * cw) / (2.0 * w);
        k.js = 0.5 * t * sw;
        return k;
    }
    const double den = mu * mu - w * w;
    k.ic = mu * (cw - cmu) / den;
    k.is = (mu * sw - w * smu) / den;
    k.jc = (mu * smu - w * sw) / den;
    k.js = w * (cw - cmu) / den;
    return k;
}

inline TrigKernels trig_kernels(double mu, double w, double t) {
    return trig_kernels(mu, std::sin(mu * t), std::cos(mu * t), w, std::sin(w * t),
                        std::cos(w * t), t);
}

} // namespace detail

struct ModeIntegrals {
    double t = 0.0;
    std::vector<double> c0, s0, c1, s1; // one entry per bath mode
};

inline ModeIntegrals mode_integrals(const SpectralDecomposition& d,
                                    const OscillatorBathModel& m, double t) {
    const std::size_t nb = m.mode_count();
    ModeIntegrals mi;
    mi.t = t;
    mi.c0.assign(nb, 0.0);
    mi.s0.assign(nb, 0.0);
    mi.c1.assign(nb, 0.0);
    mi.s1.assign(nb, 0.0);

    std::vector<double> sw(nb), cw(nb);
    for (std::size_t n = 0; n < nb; ++n) {
        sw[n] = std::sin(m.bath_omegas[n] * t);
        cw[n] = std::cos(m.bath_omegas[n] * t);
    }
    for (Eigen::Index j = 0; j < d.size(); ++j) {
        const double mu = d.mode_freqs[j];
        const double smu = std::sin(mu * t), cmu = std::cos(mu * t);
        const double wj = d.system_weights[j];
        const double amp = wj / mu; // A(t') = sum_j (U0j^2/mu_j) sin(mu_j t')
        for (std::size_t n = 0; n < nb; ++n) {
            const auto k = detail::trig_kernels(mu, smu, cmu, m.bath_omegas[n], sw[n],
                                                cw[n], t);
            mi.c0[n] += amp * k.ic;
            mi.s0[n] += amp * k.is;
            mi.c1[n] += wj * k.jc;
            mi.s1[n] += wj * k.js;
        }
    }
    return mi;
}

// ---------------------------------------------------------------------------

struct FeVectors {
    std::vector<std::complex<double>> f;     // F_E(omega_n, t)
    std::vector<std::complex<double>> df_dt; // time derivative, closed form
};

inline FeVectors fe_vector(const SpectralDecomposition& d, const OscillatorBathModel& m,
                           const EnergyFunction& e, double x, double t) {
    const ModeIntegrals mi = mode_integrals(d, m, t);
    const std::size_t nb = m.mode_count();
    FeVectors out;
    out.f.resize(nb);
    out.df_dt.resize(nb);
    for (std::size_t n = 0; n < nb; ++n) {
        const double w = m.bath_omegas[n];
        const double ev = e.value(w, x);
        if (ev < 0.0)
            throw NegativeEnergy("fe_vector: E(omega=" + std::to_string(w) + ", x=" +
                                 std::to_string(x) + ") = " + std::to_string(ev) + " < 0");
        const double pref = -(m.bath_epsilons[n] / w) * std::sqrt(ev);
        out.f[n] = pref * std::complex<double>(mi.c0[n], mi.s0[n]);
        out.df_dt[n] = pref * std::complex<double>(mi.c1[n], mi.s1[n]);
    }
    return out;
}

// ---------------------------------------------------------------------------

// X, Xdot, Y for a given energy function at parameter x:
//   X = sum |F|^2,  Y = sum |dF/dt|^2,  Xdot = 2 sum Re(conj(F) dF/dt).
struct FluctuationSample {
    double t = 0.0;
    double x = 0.0;
    double X = 0.0;
    double X_dot = 0.0;
    double Y = 0.0;
};

namespace detail {

inline FluctuationSample xy_from_integrals(const ModeIntegrals& mi,
                                           const OscillatorBathModel& m,
                                           const EnergyFunction& e, double x) {
    FluctuationSample s;
    s.t = mi.t;
    s.x = x;
    for (std::size_t n = 0; n < m.mode_count(); ++n) {
        const double w = m.bath_omegas[n];
        const double ev = e.value(w, x);
        if (ev < 0.0)
            throw NegativeEnergy("xy: E(omega=" + std::to_string(w) + ", x=" +
                                 std::to_string(x) + ") < 0");
        const double eps = m.bath_epsilons[n];
        const double g = (eps * eps) / (w * w) * ev;
        const double c0 = mi.c0[n], s0 = mi.s0[n], c1 = mi.c1[n], s1 = mi.s1[n];
        s.X += g * (c0 * c0 + s0 * s0);
        s.Y += g * (c1 * c1 + s1 * s1);
        s.X_dot += 2.0 * g * (c0 * c1 + s0 * s1);
    }
    return s;
}

} // namespace detail

inline FluctuationSample xy_generalized(const SpectralDecomposition& d,
                                        const OscillatorBathModel& m,
                                        const EnergyFunction& e, double x, double t) {
    if (x < 0.0) throw PreconditionFailure("xy_generalized: x < 0");
    return detail::xy_from_integrals(mode_integrals(d, m, t), m, e, x);
}

// Thermal fluctuation integrals at temperature T (T = 0 takes the coth -> 1 limit).
inline FluctuationSample xy_quantities(const SpectralDecomposition& d,
                                       const OscillatorBathModel& m, double temp, double t) {
    return xy_generalized(d, m, thermal_energy(m.hbar, m.boltzmann), temp, t);
}

// First and second time derivatives alongside the values; needed when the
// fluctuation integrals feed time-differentiated quantities (for example the
// master-equation coefficient reconstruction).
struct FluctuationDerivs {
    double X = 0.0, X_dot = 0.0, X_ddot = 0.0;
    double Y = 0.0, Y_dot = 0.0;
};

inline FluctuationDerivs fluctuation_derivs(const SpectralDecomposition& d,
                                            const OscillatorBathModel& m, double temp,
                                            double t) {
    const ModeIntegrals mi = mode_integrals(d, m, t);
    const PropagatorSample p = propagator_at(d, t);
    const EnergyFunction e = thermal_energy(m.hbar, m.boltzmann);
    FluctuationDerivs out;
    for (std::size_t n = 0; n < m.mode_count(); ++n) {
        const double w = m.bath_omegas[n];
        const double eps = m.bath_epsilons[n];
        const double g = (eps * eps) / (w * w) * e.value(w, temp);
        const std::complex<double> p0(mi.c0[n], mi.s0[n]);
        const std::complex<double> p1(mi.c1[n], mi.s1[n]);
        // d/dt (C1 + i S1) = Adot + i w (C1 + i S1)
        const std::complex<double> p2 =
            std::complex<double>(p.A_dot, 0.0) + std::complex<double>(0.0, w) * p1;
        out.X += g * std::norm(p0);
        out.Y += g * std::norm(p1);
        out.X_dot += 2.0 * g * (std::conj(p0) * p1).real();
        out.X_ddot += 2.0 * g * (std::norm(p1) + (std::conj(p0) * p2).real());
        out.Y_dot += 2.0 * g * (std::conj(p1) * p2).real();
    }
    return out;
}

// ---------------------------------------------------------------------------
// The dissipation deficit 1 - R^2 in its convolution-integral form,
// sum_n eps_n^2 { C0^2 + S0^2 - (A/w) S0 }. Mathematically identical to
// 1 - (Adot^2 - A Addot) by the commutator sum rule, but better conditioned
// near R^2 = 1 and exactly zero at zero coupling; the inequality routines
// below use this form for their dissipation terms.

namespace detail {

inline double one_minus_r2_from_integrals(const ModeIntegrals& mi,
                                          const OscillatorBathModel& m, double a_of_t) {
    double sum = 0.0;
    for (std::size_t n = 0; n < m.mode_count(); ++n) {
        const double eps = m.bath_epsilons[n];
        sum += eps * eps *
               (mi.c0[n] * mi.c0[n] + mi.s0[n] * mi.s0[n] -
                (a_of_t / m.bath_omegas[n]) * mi.s0[n]);
    }
    return sum;
}

} // namespace detail

// ---------------------------------------------------------------------------
// The fluctuation-dissipation inequality and its relatives

struct FdBreakdown {
    double sum_f2 = 0.0;       // sum |F_E|^2
    double sum_df2 = 0.0;      // sum |dF_E/dt|^2
    double dt_sum_f2 = 0.0;    // d/dt sum |F_E|^2
    double one_minus_r2 = 0.0; // dissipation deficit
    double hbar = 1.0;

    double lhs() const {
        return sum_f2 * sum_df2 - 0.25 * dt_sum_f2 * dt_sum_f2 -
               0.25 * hbar * hbar * one_minus_r2 * one_minus_r2;
    }
};

inline FdBreakdown fd_inequality_terms(const SpectralDecomposition& d,
                                       const OscillatorBathModel& m,
                                       const EnergyFunction& e, double x, double t) {
    const ModeIntegrals mi = mode_integrals(d, m, t);
    const FluctuationSample s = detail::xy_from_integrals(mi, m, e, x);
    FdBreakdown b;
    b.sum_f2 = s.X;
    b.sum_df2 = s.Y;
    b.dt_sum_f2 = s.X_dot;
    b.one_minus_r2 = detail::one_minus_r2_from_integrals(mi, m, propagator_at(d, t).A);
    b.hbar = m.hbar;
    return b;
}

// Left-hand side of the dynamic fluctuation-dissipation inequality for an
// arbitrary energy function; non-negative whenever E satisfies the zero-point
// and monotonicity constraints.
inline double fd_inequality_lhs(const SpectralDecomposition& d, const OscillatorBathModel& m,
                                const EnergyFunction& e, double x, double t) {
    return fd_inequality_terms(d, m, e, x, t).lhs();
}

// Thermal specialization: X Y - Xdot^2/4 - (hbar^2/4)(1 - R^2)^2.
inline double fd_thermal_residual(const SpectralDecomposition& d,
                                  const OscillatorBathModel& m, double temp, double t) {
    const ModeIntegrals mi = mode_integrals(d, m, t);
    const FluctuationSample s =
        detail::xy_from_integrals(mi, m, thermal_energy(m.hbar, m.boltzmann), temp);
    const double one_minus_r2 =
        detail::one_minus_r2_from_integrals(mi, m, propagator_at(d, t).A);
    return s.X * s.Y - 0.25 * s.X_dot * s.X_dot -
           0.25 * m.hbar * m.hbar * one_minus_r2 * one_minus_r2;
}

// Comparison bound from the earlier uncertainty-principle literature:
// X Y - Xdot^2/4 - (hbar^2/4)(1 - R^4). Expected to fail at short times in
// continuum-like regimes while the squared form above survives.
inline double fd_quartic_comparison_residual(const SpectralDecomposition& d,
                                             const OscillatorBathModel& m, double temp,
                                             double t) {
    const ModeIntegrals mi = mode_integrals(d, m, t);
    const FluctuationSample s =
        detail::xy_from_integrals(mi, m, thermal_energy(m.hbar, m.boltzmann), temp);
    const double one_minus_r2 =
        detail::one_minus_r2_from_integrals(mi, m, propagator_at(d, t).A);
    const double one_minus_r4 = one_minus_r2 * (2.0 - one_minus_r2);
    return s.X * s.Y - 0.25 * s.X_dot * s.X_dot -
           0.25 * m.hbar * m.hbar * one_minus_r4;
}

// ---------------------------------------------------------------------------
// x-monotonicity of the inequality: the x-derivative of the fluctuation part
// equals a manifestly non-negative double mode sum. Both sides are returned
// so callers can compare them.

struct FdMonotonicityCheck {
    double numeric_derivative = 0.0; // centered difference in x
    double closed_form = 0.0;        // double mode sum, >= 0 when dE/dx >= 0
};

inline FdMonotonicityCheck fd_x_monotonicity_check(const SpectralDecomposition& d,
                                                   const OscillatorBathModel& m,
                                                   const EnergyFunction& e, double x,
                                                   double t, double dx) {
    if (!(dx > 0.0)) throw PreconditionFailure("fd_x_monotonicity_check: dx <= 0");
    if (x - dx < 0.0)
        throw PreconditionFailure("fd_x_monotonicity_check: x - dx < 0, centered "
                                  "difference would leave the domain");

    FdMonotonicityCheck out;
    const ModeIntegrals mi = mode_integrals(d, m, t);

    // Numeric side: the dissipation term is x-independent, so differencing the
    // full inequality LHS with it restored differentiates only the fluctuation part.
    const double omr2 =
        detail::one_minus_r2_from_integrals(mi, m, propagator_at(d, t).A);
    const double diss = 0.25 * m.hbar * m.hbar * omr2 * omr2;
    const double hi = fd_inequality_lhs(d, m, e, x + dx, t) + diss;
    const double lo = fd_inequality_lhs(d, m, e, x - dx, t) + diss;
    out.numeric_derivative = (hi - lo) / (2.0 * dx);

    // Closed form: sum_{m,n} (eps_m eps_n / (w_m w_n))^2 E(w_m) dE(w_n)/dx
    // times four squared cross terms in the convolution integrals.
    const std::size_t nb = m.mode_count();
    std::vector<double> ev(nb), dev(nb), wgt(nb);
    for (std::size_t n = 0; n < nb; ++n) {
        const double w = m.bath_omegas[n];
        ev[n] = e.value(w, x);
        dev[n] = e.x_derivative(w, x);
        wgt[n] = (m.bath_epsilons[n] * m.bath_epsilons[n]) / (w * w);
    }
    double sum = 0.0;
    for (std::size_t a = 0; a < nb; ++a) {
        for (std::size_t b = 0; b < nb; ++b) {
            const double t1 = mi.c0[b] * mi.c1[a] - mi.c0[a] * mi.c1[b];
            const double t2 = mi.s1[b] * mi.c0[a] - mi.s0[b] * mi.c1[a];
            const double t3 = mi.s1[a] * mi.c0[b] - mi.s0[a] * mi.c1[b];
            const double t4 = mi.s1[a] * mi.s0[b] - mi.s1[b] * mi.s0[a];
            sum += wgt[a] * wgt[b] * ev[a] * dev[b] *
                   (t1 * t1 + t2 * t2 + t3 * t3 + t4 * t4);
        }
    }
    out.closed_form = sum;
    return out;
}

// ---------------------------------------------------------------------------

// Second displayed form of the commutator sum rule:
// 1 - R^2 = sum_n eps_n^2 { C0^2 + S0^2 - (A/w) S0 }.
inline double one_minus_r2_mode_sum(const SpectralDecomposition& d,
                                    const OscillatorBathModel& m, double t) {
    return detail::one_minus_r2_from_integrals(mode_integrals(d, m, t), m,
                                               propagator_at(d, t).A);
}

} // namespace fdi
