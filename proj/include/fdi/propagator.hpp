// propagator.hpp — exact propagator of the oscillator-bath model
//
// The classical propagator matrix solves Xdd = -V X with X(0) = 0, Xd(0) = 1,
// where V is the (N+1)x(N+1) potential matrix (V00 = omega0^2,
// Vnn = omega_n^2, V0n = Vn0 = eps_n). Its first row A_{0,nu}(t) fully
// determines the reduced Gaussian dynamics. A spectral decomposition of V
// turns the row into explicit sine/cosine mode sums; an adaptive ODE
// integration of the same system serves as an independent oracle.

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "fdi/errors.hpp"
#include "fdi/model.hpp"
#include "fdi/ode.hpp"

namespace fdi {

struct SpectralDecomposition {
    Eigen::VectorXd eigenvalues;    // lambda_j, ascending
    Eigen::MatrixXd eigenvectors;   // orthonormal columns U_j
    Eigen::VectorXd mode_freqs;     // sqrt(lambda_j)
    Eigen::VectorXd system_weights; // U_{0j}^2

    Eigen::Index size() const { return eigenvalues.size(); }
};

inline Eigen::MatrixXd potential_matrix(const OscillatorBathModel& m) {
    const auto n = static_cast<Eigen::Index>(m.mode_count());
    Eigen::MatrixXd v = Eigen::MatrixXd::Zero(n + 1, n + 1);
    v(0, 0) = m.omega0 * m.omega0;
    for (Eigen::Index k = 0; k < n; ++k) {
        const double w = m.bath_omegas[static_cast<std::size_t>(k)];
        const double e = m.bath_epsilons[static_cast<std::size_t>(k)];
        v(k + 1, k + 1) = w * w;
        v(0, k + 1) = e;
        v(k + 1, 0) = e;
    }
    return v;
}

inline SpectralDecomposition decompose(const OscillatorBathModel& m) {
    require_valid(m);
    const Eigen::MatrixXd v = potential_matrix(m);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(v);
    if (solver.info() != Eigen::Success)
        throw NumericalFailure("decompose: eigensolver did not converge");

    SpectralDecomposition d;
    d.eigenvalues = solver.eigenvalues(); // ascending
    d.eigenvectors = solver.eigenvectors();
    for (Eigen::Index j = 0; j < d.eigenvalues.size(); ++j) {
        if (!(d.eigenvalues[j] > 0.0))
            throw NonPositiveMode("decompose: eigenvalue " + std::to_string(j) +
                                  " = " + std::to_string(d.eigenvalues[j]) +
                                  " <= 0 on a validated model");
    }
    d.mode_freqs = d.eigenvalues.cwiseSqrt();
    d.system_weights = d.eigenvectors.row(0).transpose().cwiseAbs2();
    return d;
}

struct PropagatorSample {
    double t = 0.0;
    double A = 0.0;       // A(t) = A_{00}
    double A_dot = 1.0;
    double A_ddot = 0.0;
    double A_dddot = 0.0;
    double R2 = 1.0;      // Adot^2 - A*Addot, the dissipation factor squared
    // Bath-resolved first row, filled only on request.
    std::vector<double> bath_A, bath_A_dot, bath_A_ddot;
};

// A_{0,nu}(t) = sum_j U_{0j} U_{nu j} sin(mu_j t)/mu_j, derivatives termwise.
inline PropagatorSample propagator_at(const SpectralDecomposition& d, double t,
                                      bool with_bath = false) {
    const Eigen::Index nmodes = d.size();
    PropagatorSample s;
    s.t = t;

    double a = 0.0, ad = 0.0, add = 0.0, addd = 0.0;
    Eigen::VectorXd sin_over_mu(nmodes), cosv(nmodes), mu_sin(nmodes);
    for (Eigen::Index j = 0; j < nmodes; ++j) {
        const double mu = d.mode_freqs[j];
        const double sn = std::sin(mu * t);
        const double cs = std::cos(mu * t);
        sin_over_mu[j] = sn / mu;
        cosv[j] = cs;
        mu_sin[j] = mu * sn;
        const double w = d.system_weights[j];
        a += w * sin_over_mu[j];
        ad += w * cs;
        add -= w * mu_sin[j];
        addd -= w * d.eigenvalues[j] * cs;
    }
    s.A = a;
    s.A_dot = ad;
    s.A_ddot = add;
    s.A_dddot = addd;
    s.R2 = ad * ad - a * add;

    if (with_bath && nmodes > 1) {
        const auto nb = static_cast<std::size_t>(nmodes - 1);
        s.bath_A.assign(nb, 0.0);
        s.bath_A_dot.assign(nb, 0.0);
        s.bath_A_ddot.assign(nb, 0.0);
        for (Eigen::Index j = 0; j < nmodes; ++j) {
            const double u0 = d.eigenvectors(0, j);
            for (std::size_t n = 0; n < nb; ++n) {
                const double w = u0 * d.eigenvectors(static_cast<Eigen::Index>(n) + 1, j);
                s.bath_A[n] += w * sin_over_mu[j];
                s.bath_A_dot[n] += w * cosv[j];
                s.bath_A_ddot[n] -= w * mu_sin[j];
            }
        }
    }
    return s;
}

// ---------------------------------------------------------------------------
// Independent oracle: integrate Xdd = -V X for the full matrix of columns
// (X(0) = 0, Xd(0) = 1) and read the first row at each grid point. Shares no
// code path with the spectral mode sums above.

inline std::vector<PropagatorSample> ode_oracle(const OscillatorBathModel& m,
                                                const std::vector<double>& t_grid,
                                                double tol = 1e-11) {
    require_valid(m);
    if (t_grid.empty())
        throw PreconditionFailure("ode_oracle: empty time grid");
    if (t_grid.front() != 0.0)
        throw PreconditionFailure("ode_oracle: grid must start at 0");
    for (std::size_t i = 1; i < t_grid.size(); ++i)
        if (!(t_grid[i] >= t_grid[i - 1]))
            throw PreconditionFailure("ode_oracle: grid not sorted ascending");

    const Eigen::MatrixXd v = potential_matrix(m);
    const Eigen::Index dim = v.rows();
    const Eigen::Index block = dim * dim;

    // State layout: [vec(X); vec(Xd)]
    Eigen::VectorXd y = Eigen::VectorXd::Zero(2 * block);
    {
        Eigen::Map<Eigen::MatrixXd> xd(y.data() + block, dim, dim);
        xd.setIdentity();
    }

    OdeRhs rhs = [&v, dim, block](double, const Eigen::VectorXd& yy, Eigen::VectorXd& dy) {
        dy.resize(yy.size());
        Eigen::Map<const Eigen::MatrixXd> x(yy.data(), dim, dim);
        Eigen::Map<const Eigen::MatrixXd> xd(yy.data() + block, dim, dim);
        Eigen::Map<Eigen::MatrixXd> dx(dy.data(), dim, dim);
        Eigen::Map<Eigen::MatrixXd> dxd(dy.data() + block, dim, dim);
        dx = xd;
        dxd.noalias() = -v * x;
    };

    std::vector<PropagatorSample> out(t_grid.size());
    OdeOptions opt;
    opt.rtol = tol;
    opt.atol = tol;

    integrate_over_grid(rhs, std::move(y), t_grid, opt,
                        [&](std::size_t i, double t, const Eigen::VectorXd& yy) {
        Eigen::Map<const Eigen::MatrixXd> x(yy.data(), dim, dim);
        Eigen::Map<const Eigen::MatrixXd> xd(yy.data() + block, dim, dim);
        const Eigen::RowVectorXd acc_row = -(v.row(0) * x);   // first row of -V X
        const Eigen::RowVectorXd jerk_row = -(v.row(0) * xd);

        PropagatorSample s;
        s.t = t;
        s.A = x(0, 0);
        s.A_dot = xd(0, 0);
        s.A_ddot = acc_row(0);
        s.A_dddot = jerk_row(0);
        s.R2 = s.A_dot * s.A_dot - s.A * s.A_ddot;
        const auto nb = static_cast<std::size_t>(dim - 1);
        s.bath_A.resize(nb);
        s.bath_A_dot.resize(nb);
        s.bath_A_ddot.resize(nb);
        for (std::size_t n = 0; n < nb; ++n) {
            const auto c = static_cast<Eigen::Index>(n) + 1;
            s.bath_A[n] = x(0, c);
            s.bath_A_dot[n] = xd(0, c);
            s.bath_A_ddot[n] = acc_row(c);
        }
        out[i] = std::move(s);
    });
    return out;
}

// ---------------------------------------------------------------------------

struct MinDissipation {
    double t_star = 0.0;
    double min_one_minus_r2 = 0.0;
};

// Scans 1 - R^2 on a uniform grid over [0, t_max]; deterministic for fixed inputs.
inline MinDissipation min_dissipation_scan(const SpectralDecomposition& d, double t_max,
                                           int n_steps) {
    if (!(t_max > 0.0) || n_steps < 2)
        throw PreconditionFailure("min_dissipation_scan: need t_max > 0 and n_steps >= 2");
    MinDissipation best;
    best.t_star = 0.0;
    best.min_one_minus_r2 = 0.0; // value at t = 0 (R^2(0) = 1)
    bool first = true;
    for (int i = 0; i < n_steps; ++i) {
        const double t = t_max * static_cast<double>(i) / static_cast<double>(n_steps - 1);
        const PropagatorSample s = propagator_at(d, t);
        const double v = 1.0 - s.R2;
        if (first || v < best.min_one_minus_r2) {
            best.t_star = t;
            best.min_one_minus_r2 = v;
            first = false;
        }
    }
    return best;
}

inline MinDissipation min_dissipation_scan(const OscillatorBathModel& m, double t_max,
                                           int n_steps) {
    return min_dissipation_scan(decompose(m), t_max, n_steps);
}

} // namespace fdi
