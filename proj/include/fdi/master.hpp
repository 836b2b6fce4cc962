// master.hpp — quadratic master-equation class: w-coefficient dynamics,
// the Lindblad-form condition, moment maps, and generalized ladder operators
//
// The operator solution of the master equation is parameterized by four scalar
// functions w1..w4; only their action on second moments and the scalar
// Lindblad condition w1 w2 - w3^2 >= ((e^{w4}-1)/4hbar)^2 are materialized
// here. The oscillator-bath model maps onto this class with
//   w4 = -ln R^2, w1 = m0 Y/(2 hbar^2 R^2), w2 = X/(2 hbar^2 m0 R^2),
//   w3 = Xdot/(4 hbar^2 R^2),
// constants fixed by matching the exact-solution exponent term by term and
// verified by the cross-route moment tests.

#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "fdi/errors.hpp"
#include "fdi/fluctuation.hpp"
#include "fdi/moments.hpp"
#include "fdi/ode.hpp"
#include "fdi/propagator.hpp"

namespace fdi {

struct MasterModel {
    // Hamiltonian part H_s(t) = b11 q^2 + b12 (qp+pq) + b22 p^2
    std::function<double(double)> b11, b12, b22;
    // Dissipative coefficients; k4 is the conjugate of k3 and is not stored.
    std::function<double(double)> k1, k2;
    std::function<std::complex<double>(double)> k3;
};

inline MasterModel constant_master(double b11, double b12, double b22, double k1,
                                   double k2, std::complex<double> k3) {
    MasterModel mm;
    mm.b11 = [b11](double) { return b11; };
    mm.b12 = [b12](double) { return b12; };
    mm.b22 = [b22](double) { return b22; };
    mm.k1 = [k1](double) { return k1; };
    mm.k2 = [k2](double) { return k2; };
    mm.k3 = [k3](double) { return k3; };
    return mm;
}

struct WState {
    double t = 0.0;
    double w1 = 0.0, w2 = 0.0, w3 = 0.0, w4 = 0.0;
};

// w4 by quadrature (k3 - k4 = 2i Im k3, so w4 is real), w1..w3 by adaptive
// integration of the coupled linear system, all from zero initial data.
inline std::vector<WState> solve_w(const MasterModel& mm, const std::vector<double>& t_grid,
                                   double hbar = 1.0, double tol = 1e-11) {
    if (t_grid.empty() || t_grid.front() != 0.0)
        throw PreconditionFailure("solve_w: grid must start at 0");

    OdeRhs rhs = [&mm, hbar](double t, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
        dy.resize(4);
        const double b11 = mm.b11(t), b12 = mm.b12(t), b22 = mm.b22(t);
        const double k1 = mm.k1(t), k2 = mm.k2(t);
        const std::complex<double> k3 = mm.k3(t);
        const double ew4 = std::exp(y[3]);
        dy[0] = 2.0 * (-2.0 * b12 * y[0] - 2.0 * b11 * y[2]) + ew4 * k1;
        dy[1] = 2.0 * (2.0 * b12 * y[1] + 2.0 * b22 * y[2]) + ew4 * k2;
        dy[2] = 2.0 * (b22 * y[0] - b11 * y[1]) + ew4 * k3.real();
        dy[3] = -4.0 * hbar * k3.imag();
    };

    std::vector<WState> out(t_grid.size());
    OdeOptions opt;
    opt.rtol = tol;
    opt.atol = tol;
    integrate_over_grid(rhs, Eigen::VectorXd::Zero(4), t_grid, opt,
                        [&out](std::size_t i, double t, const Eigen::VectorXd& y) {
                            out[i] = {t, y[0], y[1], y[2], y[3]};
                        });
    return out;
}

// ---------------------------------------------------------------------------

inline WState w_from_ullersma(const SpectralDecomposition& d, const OscillatorBathModel& m,
                              double temp, double t) {
    const PropagatorSample pr = propagator_at(d, t);
    if (!(pr.R2 > 0.0))
        throw NonPositiveR2("w_from_ullersma: R^2(t) <= 0 at t = " + std::to_string(t));
    const FluctuationSample fl = xy_quantities(d, m, temp, t);
    const double h2 = m.hbar * m.hbar;
    WState w;
    w.t = t;
    w.w4 = -std::log(pr.R2);
    w.w1 = m.m0 * fl.Y / (2.0 * h2 * pr.R2);
    w.w2 = fl.X / (2.0 * h2 * m.m0 * pr.R2);
    w.w3 = fl.X_dot / (4.0 * h2 * pr.R2);
    return w;
}

// Scalar condition for the dissipative exponent to admit Lindblad form:
// w1 w2 - w3^2 - ((e^{w4} - 1)/(4 hbar))^2.
inline double lindblad_condition_residual(const WState& w, double hbar) {
    const double g = std::expm1(w.w4) / (4.0 * hbar);
    return w.w1 * w.w2 - w.w3 * w.w3 - g * g;
}

// Second moments after the dissipative exponential, given the reversibly
// evolved moments. Means pick up the e^{-w4/2} contraction.
inline GaussianMomentState master_moments(const WState& w, const GaussianMomentState& rev,
                                          double hbar) {
    const double f = std::exp(-w.w4);
    const double h2 = hbar * hbar;
    GaussianMomentState out;
    out.qq = f * (rev.qq + 2.0 * h2 * w.w2);
    out.pp = f * (rev.pp + 2.0 * h2 * w.w1);
    out.qp_sym = f * (rev.qp_sym + 4.0 * h2 * w.w3);
    const double fr = std::exp(-0.5 * w.w4);
    out.mean_q = fr * rev.mean_q;
    out.mean_p = fr * rev.mean_p;
    return out;
}

// Uncertainty relation at the moment level: the product of diffusion excesses
// minus the dissipation bound. Identically 4 hbar^4 e^{-2 w4} times the
// Lindblad-condition residual.
inline double master_uncertainty_residual(const WState& w, const GaussianMomentState& rev,
                                          const GaussianMomentState& evolved, double hbar) {
    const double f = std::exp(-w.w4);
    const double dq = evolved.qq - f * rev.qq;
    const double dp = evolved.pp - f * rev.pp;
    const double dc = evolved.qp_sym - f * rev.qp_sym;
    const double one_minus_f = -std::expm1(-w.w4);
    return dq * dp - 0.25 * dc * dc - 0.25 * hbar * hbar * one_minus_f * one_minus_f;
}

// ---------------------------------------------------------------------------
// Reversible moment evolution for constant Hamiltonian coefficients.
// The classical flow of H_s = b11 q^2 + b12 (qp+pq) + b22 p^2 is
// exp(t K) with K = [[2 b12, 2 b22], [-2 b11, -2 b12]]; K^2 = -Omega^2 I.

inline GaussianMomentState constant_hs_reversible_moments(double b11, double b12, double b22,
                                                          const GaussianMomentState& initial,
                                                          double t) {
    const double k11 = 2.0 * b12, k12 = 2.0 * b22, k21 = -2.0 * b11, k22 = -2.0 * b12;
    const double disc = k11 * k11 + k12 * k21; // K^2 = disc * I
    double c, s; // S = c I + s K
    if (disc < 0.0) {
        const double om = std::sqrt(-disc);
        c = std::cos(om * t);
        s = (om > 0.0) ? std::sin(om * t) / om : t;
    } else if (disc > 0.0) {
        const double om = std::sqrt(disc);
        c = std::cosh(om * t);
        s = std::sinh(om * t) / om;
    } else {
        c = 1.0;
        s = t;
    }
    const double s11 = c + s * k11, s12 = s * k12;
    const double s21 = s * k21, s22 = c + s * k22;

    GaussianMomentState out;
    out.mean_q = s11 * initial.mean_q + s12 * initial.mean_p;
    out.mean_p = s21 * initial.mean_q + s22 * initial.mean_p;
    const double cqq = initial.qq, cpp = initial.pp, cqp = 0.5 * initial.qp_sym;
    out.qq = s11 * s11 * cqq + 2.0 * s11 * s12 * cqp + s12 * s12 * cpp;
    out.pp = s21 * s21 * cqq + 2.0 * s21 * s22 * cqp + s22 * s22 * cpp;
    out.qp_sym = 2.0 * (s11 * s21 * cqq + (s11 * s22 + s12 * s21) * cqp + s12 * s22 * cpp);
    return out;
}

// ---------------------------------------------------------------------------
// Master-equation coefficients that reproduce the oscillator-bath reduced
// dynamics. b's come from the reference flow, k's from inverting the w system
// along the known w trajectory; valid while R^2(t) > 0.

namespace detail {

struct UllersmaCoeffs {
    double b11, b12, b22, k1, k2;
    std::complex<double> k3;
};

inline UllersmaCoeffs ullersma_coeffs_at(const SpectralDecomposition& d,
                                         const OscillatorBathModel& m, double temp,
                                         double t) {
    const PropagatorSample pr = propagator_at(d, t);
    if (!(pr.R2 > 0.0))
        throw NonPositiveR2("ullersma master coefficients: R^2(t) <= 0 at t = " +
                            std::to_string(t));
    const FluctuationDerivs fd = fluctuation_derivs(d, m, temp, t);
    const double rho = pr.R2;
    const double rho_dot = pr.A_dot * pr.A_ddot - pr.A * pr.A_dddot;
    const double h2 = m.hbar * m.hbar;

    UllersmaCoeffs c;
    c.b22 = 1.0 / (2.0 * m.m0);
    c.b12 = -rho_dot / (4.0 * rho);
    c.b11 = m.m0 * (pr.A_ddot * pr.A_ddot - pr.A_dot * pr.A_dddot) / (2.0 * rho);

    const double w1 = m.m0 * fd.Y / (2.0 * h2 * rho);
    const double w2 = fd.X / (2.0 * h2 * m.m0 * rho);
    const double w3 = fd.X_dot / (4.0 * h2 * rho);
    const double w1_dot = m.m0 * (fd.Y_dot * rho - fd.Y * rho_dot) / (2.0 * h2 * rho * rho);
    const double w2_dot = (fd.X_dot * rho - fd.X * rho_dot) / (2.0 * h2 * m.m0 * rho * rho);
    const double w3_dot = (fd.X_ddot * rho - fd.X_dot * rho_dot) / (4.0 * h2 * rho * rho);

    // e^{w4} = 1/rho; invert the linear system for the sources.
    c.k1 = rho * (w1_dot + 4.0 * c.b12 * w1 + 4.0 * c.b11 * w3);
    c.k2 = rho * (w2_dot - 4.0 * c.b12 * w2 - 4.0 * c.b22 * w3);
    const double re_k3 = rho * (w3_dot - 2.0 * (c.b22 * w1 - c.b11 * w2));
    const double im_k3 = rho_dot / (4.0 * m.hbar * rho); // from w4 = -ln rho
    c.k3 = {re_k3, im_k3};
    return c;
}

} // namespace detail

inline MasterModel ullersma_matched_master(const SpectralDecomposition& d,
                                           const OscillatorBathModel& m, double temp) {
    // Coefficient evaluations share a one-slot cache: the w solver asks for all
    // six coefficients at the same stage time before moving on. The cache makes
    // an instance single-threaded; create one instance per trajectory when
    // solving in parallel.
    struct Cache {
        double t = std::numeric_limits<double>::quiet_NaN();
        detail::UllersmaCoeffs c{};
    };
    auto cache = std::make_shared<Cache>();
    auto at = [d, m, temp, cache](double t) -> const detail::UllersmaCoeffs& {
        if (!(t == cache->t)) {
            cache->c = detail::ullersma_coeffs_at(d, m, temp, t);
            cache->t = t;
        }
        return cache->c;
    };

    MasterModel mm;
    mm.b11 = [at](double t) { return at(t).b11; };
    mm.b12 = [at](double t) { return at(t).b12; };
    mm.b22 = [at](double t) { return at(t).b22; };
    mm.k1 = [at](double t) { return at(t).k1; };
    mm.k2 = [at](double t) { return at(t).k2; };
    mm.k3 = [at](double t) { return at(t).k3; };
    return mm;
}

// ---------------------------------------------------------------------------
// Generalized ladder operators B = u q + v p of the interaction-picture solution

struct LadderCoefficients {
    double a = 0.0;
    double b = 0.0;
    std::complex<double> c{};
    double phi_minus_theta = 0.0; // resolved into [0, pi]
    std::complex<double> u{}, v{};
};

inline LadderCoefficients ladder_coefficients(const SpectralDecomposition& d,
                                              const OscillatorBathModel& m, double temp,
                                              double t) {
    const PropagatorSample pr = propagator_at(d, t);
    if (!(pr.R2 > 0.0))
        throw PreconditionFailure("ladder_coefficients: R^2(t) <= 0");
    if (pr.R2 == 1.0)
        throw PreconditionFailure("ladder_coefficients: R^2(t) = 1 (no dissipative part)");
    const FluctuationSample fl = xy_quantities(d, m, temp, t);
    const double xy_gap = fl.X * fl.Y - 0.25 * fl.X_dot * fl.X_dot;
    if (!(xy_gap > 0.0))
        throw PreconditionFailure("ladder_coefficients: XY - Xdot^2/4 <= 0");

    const double rho = pr.R2;
    const double one_minus = 1.0 - rho;
    const double pref = -std::log(rho) / (2.0 * m.hbar * m.hbar * rho * one_minus);
    const double A = pr.A, Ad = pr.A_dot, Add = pr.A_ddot;

    LadderCoefficients lc;
    lc.a = m.m0 * pref * (Add * Add * fl.X - Ad * Add * fl.X_dot + Ad * Ad * fl.Y);
    lc.b = (pref / m.m0) * (A * A * fl.Y - A * Ad * fl.X_dot + Ad * Ad * fl.X);
    const double c_re = -(pref / 2.0) *
                        (2.0 * A * Ad * fl.Y - A * Add * fl.X_dot + 2.0 * Ad * Add * fl.X -
                         Ad * Ad * fl.X_dot);
    const double c_im = (pref / 2.0) * m.hbar * rho * one_minus;
    lc.c = {c_re, c_im};

    const double disc = lc.a * lc.b - c_re * c_re;
    if (!(disc > 0.0))
        throw PreconditionFailure("ladder_coefficients: ab - Re^2(c) <= 0");
    const double root = std::sqrt(disc);
    lc.phi_minus_theta = std::atan2(root, -c_re); // sin >= 0 puts it in [0, pi]

    const double norm = 2.0 * m.hbar * root;
    lc.u = std::complex<double>(std::sqrt(lc.a / norm), 0.0); // theta fixed to 0
    lc.v = std::polar(std::sqrt(lc.b / norm), lc.phi_minus_theta);
    return lc;
}

// Coefficient of the {B, ., B} exponent of the interaction-picture solution;
// vanishes exactly when the decoherence functional is zero with 1 - R^2 > 0.
// xy_gap_root = sqrt(X Y - Xdot^2/4).
inline double coherent_evolution_coefficient(double xy_gap_root, double r2, double hbar) {
    return -0.5 * std::log(r2) -
           0.5 * std::log(1.0 + (xy_gap_root / hbar + 0.5 * (1.0 - r2)) / r2);
}

// ---------------------------------------------------------------------------
// Counterexample family: w's with w1 w2 = w3^2 = (e^{2 w4} - 1)/(16 hbar^2)
// violate the Lindblad condition strictly for t > 0 while every allowable
// initial state keeps <q^2><p^2> >= hbar^2/4. split partitions the product
// asymmetrically; the sign of w3 is unconstrained by the construction.

inline std::vector<WState> counterexample_w_states(const std::function<double(double)>& w4_fn,
                                                   double split, int w3_sign,
                                                   const std::vector<double>& t_grid,
                                                   double hbar) {
    if (!(split > 0.0))
        throw PreconditionFailure("counterexample_w_states: split must be positive");
    if (w3_sign != 1 && w3_sign != -1)
        throw PreconditionFailure("counterexample_w_states: w3_sign must be +1 or -1");
    std::vector<WState> out;
    out.reserve(t_grid.size());
    for (double t : t_grid) {
        const double w4 = w4_fn(t);
        if (t == 0.0 && w4 != 0.0)
            throw PreconditionFailure("counterexample_w_states: w4(0) != 0");
        if (t > 0.0 && !(w4 > 0.0))
            throw PreconditionFailure("counterexample_w_states: w4(t) must be > 0 for t > 0");
        const double s = std::sqrt(std::expm1(2.0 * w4)) / (4.0 * hbar);
        WState w;
        w.t = t;
        w.w1 = split * s;
        w.w2 = s / split;
        w.w3 = static_cast<double>(w3_sign) * s;
        w.w4 = w4;
        out.push_back(w);
    }
    return out;
}

} // namespace fdi
