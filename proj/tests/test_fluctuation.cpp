#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>

#include "fdi/fluctuation.hpp"
#include "fdi/util.hpp"
#include "oracles.hpp"

using namespace fdi;

namespace {

// Uncoupled system oscillator plus one spectator bath frequency: A(t) = sin(w0 t)/w0
// exactly, so the convolution integrals have textbook closed forms.
OscillatorBathModel spectator_model(double omega0, double bath_omega) {
    OscillatorBathModel m;
    m.omega0 = omega0;
    m.bath_omegas = {bath_omega};
    m.bath_epsilons = {0.0};
    return m;
}

OscillatorBathModel n1_model() {
    OscillatorBathModel m;
    m.omega0 = 1.0;
    m.bath_omegas = {2.0};
    m.bath_epsilons = {0.5};
    return m;
}

double quad_c0(const SpectralDecomposition& d, double w, double t) {
    return oracles::integrate(
        [&](double u) { return oracles::propagator_a(d, u) * std::cos(w * (t - u)); }, 0.0, t);
}

double quad_s0(const SpectralDecomposition& d, double w, double t) {
    return oracles::integrate(
        [&](double u) { return oracles::propagator_a(d, u) * std::sin(w * (t - u)); }, 0.0, t);
}

double quad_c1(const SpectralDecomposition& d, double w, double t) {
    return oracles::integrate(
        [&](double u) { return oracles::propagator_a_dot(d, u) * std::cos(w * (t - u)); }, 0.0, t);
}

double quad_s1(const SpectralDecomposition& d, double w, double t) {
    return oracles::integrate(
        [&](double u) { return oracles::propagator_a_dot(d, u) * std::sin(w * (t - u)); }, 0.0, t);
}

} // namespace

TEST_CASE("energy functions") {
    const double hbar = 1.0, kb = 1.0;
    const auto th = thermal_energy(hbar, kb);
    const auto nzp = no_zero_point_energy(hbar, kb);
    const auto cl = classical_energy(hbar, kb);

    SUBCASE("zero-point constraint holds only for the thermal variant") {
        for (double w : {0.1, 1.0, 10.0}) {
            CHECK(th.value(w, 0.0) == doctest::Approx(0.5 * hbar * w).epsilon(1e-12));
            CHECK(nzp.value(w, 0.0) == 0.0);
            CHECK(cl.value(w, 0.0) == 0.0);
        }
        CHECK(th.satisfies_constraints);
        CHECK_FALSE(nzp.satisfies_constraints);
        CHECK_FALSE(cl.satisfies_constraints);
    }

    SUBCASE("values are non-negative and monotone in temperature") {
        for (const auto* e : {&th, &nzp, &cl}) {
            for (double w : {0.3, 1.0, 4.0}) {
                double prev = e->value(w, 0.0);
                CHECK(prev >= 0.0);
                for (double T : {0.1, 0.5, 1.0, 3.0, 10.0}) {
                    const double v = e->value(w, T);
                    CHECK(v >= prev - 1e-14);
                    prev = v;
                }
            }
        }
    }

    SUBCASE("analytic temperature derivative matches finite differences") {
        for (const auto* e : {&th, &nzp, &cl}) {
            for (double w : {0.5, 2.0}) {
                for (double T : {0.3, 1.0, 5.0}) {
                    const double fd = oracles::central_diff(
                        [&](double x) { return e->value(w, x); }, T, 1e-6);
                    CHECK(e->x_derivative(w, T) ==
                          doctest::Approx(fd).epsilon(1e-6).scale(1.0));
                }
            }
        }
    }

    SUBCASE("coth limits are stable at extreme arguments") {
        CHECK(th.value(1.0, 1e-300) == 0.5);
        CHECK(th.value(1e-8, 1.0) == doctest::Approx(1.0).epsilon(1e-8)); // kT dominates
        CHECK(energy_function_by_name("thermal", hbar, kb).name == "thermal");
        CHECK_THROWS_AS(energy_function_by_name("bogus", hbar, kb), ConfigError);
    }
}

TEST_CASE("mode integrals: exact values on the spectator model") {
    const auto m = spectator_model(1.0, 2.0);
    const auto d = decompose(m);

    SUBCASE("t = 0 gives all zeros exactly") {
        const auto mi = mode_integrals(d, m, 0.0);
        CHECK(mi.c0[0] == 0.0);
        CHECK(mi.s0[0] == 0.0);
        CHECK(mi.c1[0] == 0.0);
        CHECK(mi.s1[0] == 0.0);
    }

    SUBCASE("closed forms at t = pi") {
        const auto mi = mode_integrals(d, m, M_PI);
        CHECK(mi.c0[0] == doctest::Approx(-2.0 / 3.0).epsilon(1e-12));
        CHECK(mi.s0[0] == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
        // Independent quadrature of the defining integrals.
        CHECK(mi.c0[0] == doctest::Approx(quad_c0(d, 2.0, M_PI)).epsilon(1e-10));
        CHECK(mi.c1[0] == doctest::Approx(quad_c1(d, 2.0, M_PI)).epsilon(1e-10));
        CHECK(mi.s1[0] == doctest::Approx(quad_s1(d, 2.0, M_PI)).epsilon(1e-10));
    }
}

TEST_CASE("mode integrals: resonant branch matches quadrature") {
    SUBCASE("exactly degenerate frequencies") {
        const auto m = spectator_model(1.0, 1.0); // bath frequency == eigenfrequency
        const auto d = decompose(m);
        for (double t : {0.5, 1.9, 3.3}) {
            const auto mi = mode_integrals(d, m, t);
            CHECK(std::abs(mi.c0[0] - quad_c0(d, 1.0, t)) <= 1e-9);
            CHECK(std::abs(mi.s0[0] - quad_s0(d, 1.0, t)) <= 1e-9);
            CHECK(std::abs(mi.c1[0] - quad_c1(d, 1.0, t)) <= 1e-9);
            CHECK(std::abs(mi.s1[0] - quad_s1(d, 1.0, t)) <= 1e-9);
            // And the textbook resonant antiderivative for C0.
            CHECK(mi.c0[0] == doctest::Approx(0.5 * t * std::sin(t)).epsilon(1e-12));
        }
    }

    SUBCASE("near-degenerate coupling lands inside the resonance window") {
        OscillatorBathModel m;
        m.omega0 = 1.0;
        m.bath_omegas = {1.0};
        m.bath_epsilons = {1e-12}; // eigenfrequencies split by ~5e-13
        const auto d = decompose(m);
        for (double t : {0.8, 2.6}) {
            const auto mi = mode_integrals(d, m, t);
            CHECK(std::abs(mi.c0[0] - quad_c0(d, 1.0, t)) <= 1e-9);
            CHECK(std::abs(mi.s1[0] - quad_s1(d, 1.0, t)) <= 1e-9);
        }
    }
}

TEST_CASE("mode integrals: quadrature agreement and integration-by-parts identity") {
    std::mt19937_64 rng(606);
    for (int rep = 0; rep < 6; ++rep) {
        const auto m = oracles::random_coupled_model(rng, 6);
        const auto d = decompose(m);
        std::uniform_real_distribution<double> tdist(0.1, 8.0);
        const double t = tdist(rng);
        const auto mi = mode_integrals(d, m, t);
        const double a_t = propagator_at(d, t).A;
        for (std::size_t n = 0; n < m.mode_count(); ++n) {
            const double w = m.bath_omegas[n];
            CHECK(std::abs(mi.c0[n] - quad_c0(d, w, t)) <= 1e-9);
            CHECK(std::abs(mi.s0[n] - quad_s0(d, w, t)) <= 1e-9);
            CHECK(std::abs(mi.c1[n] - quad_c1(d, w, t)) <= 1e-9);
            CHECK(std::abs(mi.s1[n] - quad_s1(d, w, t)) <= 1e-9);
            // C1 + i S1 = A(t) + i w (C0 + i S0)
            CHECK(std::abs(mi.c1[n] - (a_t - w * mi.s0[n])) <= 1e-9);
            CHECK(std::abs(mi.s1[n] - w * mi.c0[n]) <= 1e-9);
        }
    }
}

TEST_CASE("fe vector") {
    const auto th = thermal_energy(1.0, 1.0);

    SUBCASE("zero coupling gives the zero vector") {
        const auto m = spectator_model(1.0, 2.0);
        const auto d = decompose(m);
        const auto fe = fe_vector(d, m, th, 1.0, 2.0);
        CHECK(std::abs(fe.f[0]) == 0.0);
        CHECK(std::abs(fe.df_dt[0]) == 0.0);
    }

    SUBCASE("t = 0 gives the zero vector") {
        const auto m = n1_model();
        const auto d = decompose(m);
        const auto fe = fe_vector(d, m, th, 1.0, 0.0);
        CHECK(std::abs(fe.f[0]) == 0.0);
        CHECK(std::abs(fe.df_dt[0]) == 0.0);
    }

    SUBCASE("T = 0 equals the T -> 0+ limit") {
        const auto m = n1_model();
        const auto d = decompose(m);
        const auto at_zero = fe_vector(d, m, th, 0.0, 1.5);
        const auto near_zero = fe_vector(d, m, th, 1e-12, 1.5);
        const double rel = std::abs(at_zero.f[0] - near_zero.f[0]) / std::abs(at_zero.f[0]);
        CHECK(rel < 1e-8);
    }

    SUBCASE("negative energy is rejected") {
        const auto m = n1_model();
        const auto d = decompose(m);
        EnergyFunction bad;
        bad.name = "bad";
        bad.value = [](double, double) { return -1.0; };
        bad.x_derivative = [](double, double) { return 0.0; };
        CHECK_THROWS_AS(fe_vector(d, m, bad, 1.0, 1.0), NegativeEnergy);
    }
}

TEST_CASE("xy quantities") {
    SUBCASE("zero at t = 0 and for zero coupling") {
        const auto m1 = n1_model();
        const auto d1 = decompose(m1);
        const auto s0 = xy_quantities(d1, m1, 1.0, 0.0);
        CHECK(s0.X == 0.0);
        CHECK(s0.Y == 0.0);
        CHECK(s0.X_dot == 0.0);

        const auto m2 = spectator_model(1.0, 2.0);
        const auto d2 = decompose(m2);
        for (double t : {0.5, 3.0}) {
            const auto s = xy_quantities(d2, m2, 1.0, t);
            CHECK(s.X == 0.0);
            CHECK(s.Y == 0.0);
        }
    }

    SUBCASE("X matches quadrature of the defining sum; Xdot matches finite differences") {
        const auto m = n1_model();
        const auto d = decompose(m);
        const double T = 1.0, t = 1.0;
        const auto s = xy_quantities(d, m, T, t);

        // Direct evaluation: X = (hbar/2) sum (eps^2/w) coth(hbar w / 2kT) |int e^{iwt'} A dt'|^2
        const double w = m.bath_omegas[0], eps = m.bath_epsilons[0];
        const double re = oracles::integrate(
            [&](double u) { return std::cos(w * u) * oracles::propagator_a(d, u); }, 0.0, t);
        const double im = oracles::integrate(
            [&](double u) { return std::sin(w * u) * oracles::propagator_a(d, u); }, 0.0, t);
        const double x_direct =
            0.5 * (eps * eps / w) * stable_coth(w / (2.0 * T)) * (re * re + im * im);
        CHECK(s.X == doctest::Approx(x_direct).epsilon(1e-9));

        const double fd_xdot = oracles::central_diff(
            [&](double u) { return xy_quantities(d, m, T, u).X; }, t, 1e-5);
        CHECK(std::abs(s.X_dot - fd_xdot) <= 1e-6);

        const double fd_ydot = oracles::central_diff(
            [&](double u) { return xy_quantities(d, m, T, u).Y; }, t, 1e-5);
        CHECK(std::abs(fluctuation_derivs(d, m, T, t).Y_dot - fd_ydot) <= 1e-6);
        const double fd_xddot = oracles::central_diff(
            [&](double u) { return xy_quantities(d, m, T, u).X_dot; }, t, 1e-5);
        CHECK(std::abs(fluctuation_derivs(d, m, T, t).X_ddot - fd_xddot) <= 1e-6);
    }

    SUBCASE("mode-sum identities tie X, Y, Xdot to the F vectors") {
        std::mt19937_64 rng(707);
        const auto th = thermal_energy(1.0, 1.0);
        for (int rep = 0; rep < 5; ++rep) {
            const auto m = oracles::random_coupled_model(rng, 10);
            const auto d = decompose(m);
            for (double T : {0.0, 0.7, 4.0}) {
                for (double t : {0.6, 2.4}) {
                    const auto s = xy_quantities(d, m, T, t);
                    const auto fe = fe_vector(d, m, th, T, t);
                    double sum_f2 = 0.0, sum_df2 = 0.0, dt_sum = 0.0;
                    for (std::size_t n = 0; n < fe.f.size(); ++n) {
                        sum_f2 += std::norm(fe.f[n]);
                        sum_df2 += std::norm(fe.df_dt[n]);
                        dt_sum += 2.0 * (std::conj(fe.f[n]) * fe.df_dt[n]).real();
                    }
                    const double sc = scale_of({s.X, s.Y, s.X_dot});
                    CHECK(std::abs(s.X - sum_f2) <= 1e-10 * sc);
                    CHECK(std::abs(s.Y - sum_df2) <= 1e-10 * sc);
                    CHECK(std::abs(s.X_dot - dt_sum) <= 1e-10 * sc);
                }
            }
        }
    }

    SUBCASE("non-negativity and the Cauchy-Schwarz gap") {
        std::mt19937_64 rng(808);
        for (int rep = 0; rep < 10; ++rep) {
            const auto m = oracles::random_model(rng, 20);
            const auto d = decompose(m);
            std::uniform_real_distribution<double> tdist(0.0, 20.0 / m.omega0);
            for (double T : {0.0, 0.1, 1.0, 10.0}) {
                const double t = tdist(rng);
                const auto s = xy_quantities(d, m, T, t);
                CHECK(s.X >= 0.0);
                CHECK(s.Y >= 0.0);
                const double gap = s.X * s.Y - 0.25 * s.X_dot * s.X_dot;
                CHECK(gap >= -1e-12 * scale_of({s.X * s.Y}));
            }
        }
    }
}

TEST_CASE("Cauchy-Schwarz chain on the F vectors") {
    std::mt19937_64 rng(909);
    const auto th = thermal_energy(1.0, 1.0);
    for (int rep = 0; rep < 8; ++rep) {
        const auto m = oracles::random_coupled_model(rng, 12);
        const auto d = decompose(m);
        std::uniform_real_distribution<double> tdist(0.05, 15.0);
        const double t = tdist(rng);
        const double x = 0.5 + rep;
        const auto fe = fe_vector(d, m, th, x, t);
        double sum_f2 = 0.0, sum_df2 = 0.0;
        std::complex<double> inner{0.0, 0.0};
        for (std::size_t n = 0; n < fe.f.size(); ++n) {
            sum_f2 += std::norm(fe.f[n]);
            sum_df2 += std::norm(fe.df_dt[n]);
            inner += std::conj(fe.f[n]) * fe.df_dt[n];
        }
        const double sc = scale_of({sum_f2 * sum_df2});
        CHECK(sum_f2 * sum_df2 >= std::norm(inner) - 1e-12 * sc);
        CHECK(std::norm(inner) >= inner.real() * inner.real() - 1e-12 * sc);
    }
}

TEST_CASE("imaginary-part mode sum identity") {
    // sum Im(conj(F) dF/dt) = hbar sum eps^2 (E/(hbar w) - 1/2) {C0^2+S0^2-(A/w)S0}
    //                         + (hbar/2)(1 - R^2)
    std::mt19937_64 rng(1010);
    const double hbar = 1.0;
    const auto th = thermal_energy(hbar, 1.0);
    const auto nzp = no_zero_point_energy(hbar, 1.0);
    for (int rep = 0; rep < 6; ++rep) {
        const auto m = oracles::random_coupled_model(rng, 10);
        const auto d = decompose(m);
        std::uniform_real_distribution<double> tdist(0.1, 10.0);
        const double t = tdist(rng);
        const auto mi = mode_integrals(d, m, t);
        const auto pr = propagator_at(d, t);
        for (const auto* e : {&th, &nzp}) {
            for (double x : {0.1, 1.0, 10.0}) {
                const auto fe = fe_vector(d, m, *e, x, t);
                double lhs = 0.0;
                for (std::size_t n = 0; n < fe.f.size(); ++n)
                    lhs += (std::conj(fe.f[n]) * fe.df_dt[n]).imag();
                double rhs = 0.5 * hbar * (1.0 - pr.R2);
                for (std::size_t n = 0; n < m.mode_count(); ++n) {
                    const double w = m.bath_omegas[n];
                    const double eps = m.bath_epsilons[n];
                    const double brace = mi.c0[n] * mi.c0[n] + mi.s0[n] * mi.s0[n] -
                                         (pr.A / w) * mi.s0[n];
                    rhs += hbar * eps * eps * (e->value(w, x) / (hbar * w) - 0.5) * brace;
                }
                CHECK(std::abs(lhs - rhs) <= 1e-9 * scale_of({lhs, rhs}));
            }
        }
    }
}

TEST_CASE("commutator sum rule in convolution-integral form") {
    std::mt19937_64 rng(1111);
    for (int rep = 0; rep < 8; ++rep) {
        const auto m = oracles::random_coupled_model(rng, 10);
        const auto d = decompose(m);
        std::uniform_real_distribution<double> tdist(0.0, 12.0);
        const double t = tdist(rng);
        const double via_modes = one_minus_r2_mode_sum(d, m, t);
        const double via_propagator = 1.0 - propagator_at(d, t).R2;
        CHECK(std::abs(via_modes - via_propagator) <= 1e-9);
    }
}

TEST_CASE("fluctuation-dissipation inequality") {
    SUBCASE("identically zero without coupling") {
        const auto m = spectator_model(1.0, 2.0);
        const auto d = decompose(m);
        const auto th = thermal_energy(1.0, 1.0);
        for (double t : {0.0, 1.0, 5.0})
            CHECK(fd_inequality_lhs(d, m, th, 1.0, t) == 0.0);
    }

    SUBCASE("thermal variant is non-negative everywhere sampled") {
        std::mt19937_64 rng(1212);
        const auto th = thermal_energy(1.0, 1.0);
        for (int rep = 0; rep < 10; ++rep) {
            const auto m = oracles::random_model(rng, 20);
            const auto d = decompose(m);
            std::uniform_real_distribution<double> tdist(0.0, 20.0 / m.omega0);
            for (double T : {0.0, 0.1, 1.0, 10.0}) {
                for (int k = 0; k < 10; ++k) {
                    const double t = tdist(rng);
                    const auto b = fd_inequality_terms(d, m, th, T, t);
                    const double sc = scale_of({b.sum_f2 * b.sum_df2,
                                                0.25 * b.dt_sum_f2 * b.dt_sum_f2});
                    CHECK(b.lhs() >= -1e-10 * sc);
                }
            }
        }
    }

    SUBCASE("thermal residual equals the generalized form with the thermal variant") {
        std::mt19937_64 rng(1313);
        const auto th = thermal_energy(1.0, 1.0);
        for (int rep = 0; rep < 6; ++rep) {
            const auto m = oracles::random_coupled_model(rng, 10);
            const auto d = decompose(m);
            for (double T : {0.0, 1.0, 5.0}) {
                for (double t : {0.4, 2.2, 7.9}) {
                    const double a = fd_thermal_residual(d, m, T, t);
                    const double b = fd_inequality_lhs(d, m, th, T, t);
                    CHECK(std::abs(a - b) <= 1e-10 * scale_of({a, b}));
                }
            }
        }
    }

    SUBCASE("thermal residual properties at the edges") {
        const auto m = n1_model();
        const auto d = decompose(m);
        CHECK(fd_thermal_residual(d, m, 1.0, 0.0) == 0.0);
        const auto mu = spectator_model(1.0, 3.0);
        const auto du = decompose(mu);
        for (double t : {0.7, 4.2})
            CHECK(fd_thermal_residual(du, mu, 1.0, t) == 0.0);
    }

    SUBCASE("dropping the zero point sends the inequality negative") {
        DrudeBathRecipe r;
        r.gamma = 0.1;
        r.alpha = 1.0;
        r.omega_max = 10.0;
        r.n_modes = 60;
        ModelBase base;
        const auto m = discretize_drude(r, base);
        const auto d = decompose(m);
        const auto nzp = no_zero_point_energy(m.hbar, m.boltzmann);
        double worst = 1e300;
        for (int i = 1; i <= 60; ++i)
            worst = std::min(worst, fd_inequality_lhs(d, m, nzp, 1.0, 0.1 * i));
        CHECK(worst < 0.0);
    }
}

TEST_CASE("x-derivative of the inequality: closed form vs finite differences") {
    SUBCASE("both sides vanish without coupling") {
        const auto m = spectator_model(1.0, 2.0);
        const auto d = decompose(m);
        const auto th = thermal_energy(1.0, 1.0);
        const auto chk = fd_x_monotonicity_check(d, m, th, 1.0, 2.0, 1e-4);
        CHECK(chk.numeric_derivative == 0.0);
        CHECK(chk.closed_form == 0.0);
    }

    SUBCASE("two-bath-mode model at T = 1, t = 2") {
        OscillatorBathModel m;
        m.omega0 = 1.0;
        m.bath_omegas = {0.8, 2.3};
        m.bath_epsilons = {0.3, 0.4};
        REQUIRE(validate_model(m).empty());
        const auto d = decompose(m);
        const auto th = thermal_energy(1.0, 1.0);
        const auto chk = fd_x_monotonicity_check(d, m, th, 1.0, 2.0, 1e-4);
        CHECK(std::abs(chk.numeric_derivative - chk.closed_form) <=
              std::max(1e-7, 1e-5 * std::abs(chk.closed_form)));
        CHECK(chk.closed_form >= 0.0);
    }

    SUBCASE("closed form is non-negative and the inequality is monotone in x") {
        std::mt19937_64 rng(1414);
        const auto th = thermal_energy(1.0, 1.0);
        for (int rep = 0; rep < 4; ++rep) {
            const auto m = oracles::random_coupled_model(rng, 5);
            const auto d = decompose(m);
            for (double t : {0.8, 3.1}) {
                double prev = fd_inequality_lhs(d, m, th, 0.0, t);
                for (int i = 1; i <= 10; ++i) {
                    const double x = 0.4 * i;
                    const auto chk = fd_x_monotonicity_check(d, m, th, x, t, 1e-4);
                    CHECK(chk.closed_form >= 0.0);
                    const double cur = fd_inequality_lhs(d, m, th, x, t);
                    CHECK(cur >= prev - 1e-10 * scale_of({cur, prev}));
                    prev = cur;
                }
            }
        }
    }

    SUBCASE("guards") {
        const auto m = n1_model();
        const auto d = decompose(m);
        const auto th = thermal_energy(1.0, 1.0);
        CHECK_THROWS_AS(fd_x_monotonicity_check(d, m, th, 1.0, 1.0, 0.0),
                        PreconditionFailure);
        CHECK_THROWS_AS(fd_x_monotonicity_check(d, m, th, 1e-6, 1.0, 1e-4),
                        PreconditionFailure);
    }
}

TEST_CASE("quartic comparison bound") {
    SUBCASE("zero at t = 0 and for the uncoupled model") {
        const auto m = n1_model();
        const auto d = decompose(m);
        CHECK(fd_quartic_comparison_residual(d, m, 1.0, 0.0) == 0.0);
        const auto mu = spectator_model(1.0, 2.5);
        const auto du = decompose(mu);
        for (double t : {0.9, 3.7})
            CHECK(fd_quartic_comparison_residual(du, mu, 1.0, t) ==
                  doctest::Approx(0.0).scale(1.0).epsilon(1e-14));
    }

    SUBCASE("drops below zero at short times on the continuum-like model") {
        DrudeBathRecipe r;
        r.gamma = 0.1;
        r.alpha = 1.0;
        r.omega_max = 10.0;
        r.n_modes = 60;
        const auto m = discretize_drude(r, ModelBase{});
        const auto d = decompose(m);
        bool found_negative = false;
        bool squared_form_held = true;
        for (int i = 1; i <= 40; ++i) {
            const double t = 0.05 * i;
            if (fd_quartic_comparison_residual(d, m, 1.0, t) < 0.0) found_negative = true;
            const double fd = fd_thermal_residual(d, m, 1.0, t);
            if (fd < -1e-10 * scale_of({fd})) squared_form_held = false;
        }
        CHECK(found_negative);
        CHECK(squared_form_held);
    }
}
