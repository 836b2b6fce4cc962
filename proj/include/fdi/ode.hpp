// ode.hpp — adaptive Dormand–Prince 5(4) integrator for smooth linear systems
//
// Used by the propagator oracle and the master-equation coefficient solver.
// Error control is per-component mixed absolute/relative with a PI-free
// step controller; FSAL is exploited.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "fdi/errors.hpp"

namespace fdi {

using OdeRhs = std::function<void(double t, const Eigen::VectorXd& y, Eigen::VectorXd& dydt)>;

struct OdeOptions {
    double rtol = 1e-11;
    double atol = 1e-11;
    double h_init = 1e-4;
    std::size_t max_steps = 50'000'000;
};

namespace detail {

struct Dp54Stepper {
    // Butcher tableau (Dormand & Prince, order 5(4), 7 stages, FSAL)
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                            a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    // b - b*: coefficients of the embedded error estimate
    static constexpr double e1 = 35.0 / 384 - 5179.0 / 57600;
    static constexpr double e3 = 500.0 / 1113 - 7571.0 / 16695;
    static constexpr double e4 = 125.0 / 192 - 393.0 / 640;
    static constexpr double e5 = -2187.0 / 6784 + 92097.0 / 339200;
    static constexpr double e6 = 11.0 / 84 - 187.0 / 2100;
    static constexpr double e7 = -1.0 / 40;

    explicit Dp54Stepper(Eigen::Index n)
        : k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), yerr(n) {}

    Eigen::VectorXd k1, k2, k3, k4, k5, k6, k7, ytmp, yerr;
    bool have_k1 = false;

    // One attempted step from (t, y) with size h; on acceptance writes ynew.
    // Returns the scaled error norm.
    double attempt(const OdeRhs& f, double t, const Eigen::VectorXd& y, double h,
                   Eigen::VectorXd& ynew, const OdeOptions& opt) {
        if (!have_k1) {
            f(t, y, k1);
            have_k1 = true;
        }
        ytmp = y + h * (a21 * k1);
        f(t + c2 * h, ytmp, k2);
        ytmp = y + h * (a31 * k1 + a32 * k2);
        f(t + c3 * h, ytmp, k3);
        ytmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
        f(t + c4 * h, ytmp, k4);
        ytmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
        f(t + c5 * h, ytmp, k5);
        ytmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
        f(t + h, ytmp, k6);
        ynew = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        f(t + h, ynew, k7);
        yerr = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

        double sum = 0.0;
        for (Eigen::Index i = 0; i < y.size(); ++i) {
            const double sc = opt.atol + opt.rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
            const double r = yerr[i] / sc;
            sum += r * r;
        }
        return std::sqrt(sum / static_cast<double>(y.size()));
    }

    void accept() { k1.swap(k7); } // FSAL
};

} // namespace detail

// Advances y in place from t0 to t1 (t1 > t0), hitting t1 exactly.
// Returns the suggested next step size so grid sweeps keep their controller state.
inline double integrate_to(const OdeRhs& f, Eigen::VectorXd& y, double t0, double t1,
                           const OdeOptions& opt, double h_start = 0.0) {
    if (t1 <= t0) return h_start > 0.0 ? h_start : opt.h_init;
    detail::Dp54Stepper st(y.size());
    double t = t0;
    double h = h_start > 0.0 ? h_start : opt.h_init;
    h = std::min(h, t1 - t0);
    Eigen::VectorXd ynew(y.size());
    std::size_t steps = 0;

    while (t < t1) {
        if (++steps > opt.max_steps)
            throw StepFailure("integrate_to: step budget exhausted at t=" + std::to_string(t));
        const bool last = (t + h >= t1);
        const double h_try = last ? (t1 - t) : h;
        const double err = st.attempt(f, t, y, h_try, ynew, opt);
        if (err <= 1.0) {
            t += h_try;
            y.swap(ynew);
            st.accept();
            const double grow = (err <= 0.0) ? 5.0
                                             : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
            h = h_try * grow;
        } else {
            st.have_k1 = true; // k1 still valid at unchanged (t, y)
            h = h_try * std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.9);
            if (!(h > 0.0) || t + h == t)
                throw StepFailure("integrate_to: step size underflow at t=" + std::to_string(t));
        }
    }
    return h;
}

// Integrates from grid.front() through every grid point, invoking
// on_sample(index, t, y) at each one (including the first).
inline void integrate_over_grid(const OdeRhs& f, Eigen::VectorXd y,
                                const std::vector<double>& grid, const OdeOptions& opt,
                                const std::function<void(std::size_t, double, const Eigen::VectorXd&)>& on_sample) {
    if (grid.empty()) return;
    on_sample(0, grid.front(), y);
    double h = 0.0;
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (grid[i] < grid[i - 1])
            throw PreconditionFailure("integrate_over_grid: grid not sorted ascending");
        h = integrate_to(f, y, grid[i - 1], grid[i], opt, h);
        on_sample(i, grid[i], y);
    }
}

} // namespace fdi
