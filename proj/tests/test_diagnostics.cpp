// SPDX-License-Identifier: Apache-2.0
//---------------------------------------------------------------------------//
//! \file test_diagnostics.cpp
//---------------------------------------------------------------------------//
#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "mbsde/diagnostics.hpp"
#include "mbsde/pde.hpp"

using namespace mbsde;

namespace
{
constexpr double kPi = std::numbers::pi;

AmbientVector vec(std::initializer_list<double> v)
{
    AmbientVector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v)
    {
        out[i++] = x;
    }
    return out;
}

ErrorCode code_of(auto&& fn)
{
    try
    {
        fn();
    }
    catch (Error const& e)
    {
        return e.code();
    }
    ADD_FAILURE() << "no error thrown";
    return ErrorCode::not_found;
}

Trajectory intrinsic_run(InitialMap const& h, int n, double T, int stride = 10)
{
    static Sphere const sphere(3);
    TorusGrid const g(1, n);
    SolveOptions opts;
    opts.record_stride = stride;
    return solve_intrinsic_m1(h, T, g, fit_step(T, intrinsic_max_dt(g)),
                              Generator::zero(), sphere, opts);
}
}  // namespace

TEST(EnergyRecord, Examples)
{
    Sphere s(3);
    TorusGrid g(1, 128);
    auto const c = initialize_from_map(InitialMap::constant(vec({1, 0, 0})), g, s);
    auto const rc = energy_record(c, 1e-2, s);
    EXPECT_EQ(rc.dirichlet_energy, 0);
    EXPECT_EQ(rc.penalty_energy, 0);
    EXPECT_EQ(rc.time_derivative_energy, 0);

    auto const gc = initialize_from_map(InitialMap::great_circle(1, s), g, s);
    EXPECT_NEAR(energy_record(gc, std::nullopt, s).dirichlet_energy, 2 * kPi * kPi,
                1e-3 * 2 * kPi * kPi);

    FieldState pushed = gc;
    for (std::size_t i = 0; i < g.size(); ++i)
    {
        pushed.set(i, 1.1 * gc.at(i));
    }
    EXPECT_NEAR(energy_record(pushed, 0.01, s).penalty_energy, 1.0, 1e-12);

    FieldState later = gc;
    later.time = 0.01;
    for (std::size_t i = 0; i < g.size(); ++i)
    {
        later.set(i, gc.at(i) + vec({0, 0, 1e-3}));
    }
    // int |(v - v_prev)/dt|^2 = (1e-3 / 1e-2)^2
    EXPECT_NEAR(energy_record(later, 1e-2, s, &gc).time_derivative_energy, 0.01, 1e-12);
    EXPECT_EQ(code_of([&] { energy_record(gc, 1e-2, s, &later); }),
              ErrorCode::grid_mismatch);
}

TEST(HeatKernel, UnitValueAndExponent)
{
    double const x0[1] = {0.3};
    double const dt = 1 / (2 * kPi);
    EXPECT_NEAR(heat_kernel(1.0, x0, 1.0 - dt, x0), 1.0, 1e-12);
    double const tau = 0.01;
    double const x[1] = {0.3 + std::sqrt(2 * tau)};
    EXPECT_NEAR(heat_kernel(0.5, x0, 0.5 - tau, x),
                std::exp(-1.0) / std::sqrt(2 * kPi * tau), 1e-12);
    double const y0[2] = {0.1, 0.9};
    EXPECT_NEAR(heat_kernel(1, y0, 1 - 1 / (2 * kPi), y0), 1.0, 1e-12);
    EXPECT_EQ(code_of([&] { heat_kernel(0.5, x0, 0.5, x0); }), ErrorCode::degenerate_time);
}

TEST(HeatKernel, NormalizationByQuadrature)
{
    // Kernel decays well inside the half-period for these tau
    for (double tau : {1e-3, 4e-3})
    {
        double const x0[2] = {0.5, 0.5};
        int const n = 400;
        double s1 = 0, s2 = 0;
        for (int i = 0; i < n; ++i)
        {
            double const xi[1] = {(i + 0.5) / n};
            s1 += heat_kernel(1, x0, 1 - tau, xi) / n;
            for (int j = 0; j < n; ++j)
            {
                double const xij[2] = {(i + 0.5) / n, (j + 0.5) / n};
                s2 += heat_kernel(1, x0, 1 - tau, xij) / (n * n);
            }
        }
        EXPECT_NEAR(s1, 1.0, 1e-6);
        EXPECT_NEAR(s2, 1.0, 1e-6);
    }
}

TEST(TorusDistance, MinimalImage)
{
    double const a[2] = {0.05, 0.9};
    double const b[2] = {0.95, 0.1};
    EXPECT_NEAR(torus_distance(a, b), std::sqrt(0.01 + 0.04), 1e-15);
    EXPECT_NEAR(torus_distance(a, a), 0, 0);
}

TEST(WindowCutoff, Shape)
{
    double const x0[1] = {0.5};
    double const in[1] = {0.6};
    double const out[1] = {0.0};
    double const mid[1] = {0.875};
    EXPECT_EQ(window_cutoff(in, x0), 1);
    EXPECT_EQ(window_cutoff(out, x0), 0);
    EXPECT_NEAR(window_cutoff(mid, x0), 0.5, 1e-15);
}

TEST(ParabolicWindow, Validity)
{
    ParabolicWindow w{0.25, {0.5, 0}, 0.1};
    EXPECT_TRUE(w.valid(0.25));
    EXPECT_FALSE(w.valid(0.2));
    w.radius = 0.25;
    EXPECT_FALSE(w.valid(0.25));
    EXPECT_EQ(code_of([&] { w.require_valid(0.25); }), ErrorCode::window_out_of_range);
    w.radius = 0;
    EXPECT_FALSE(w.valid(0.25));
}

TEST(Monotonicity, ConstantFieldIsZero)
{
    Sphere s(3);
    auto const traj = intrinsic_run(InitialMap::constant(vec({0, 0, 1})), 32, 0.1);
    ParabolicWindow const w{0.1, {0.5, 0}, 0.1};
    EXPECT_EQ(phi_quantity(traj, std::nullopt, s, w), 0);
    EXPECT_EQ(psi_quantity(traj, std::nullopt, s, w), 0);
    EXPECT_EQ(psi_quantity_naive(traj, std::nullopt, s, w), 0);
}

TEST(Monotonicity, PsiMatchesNaiveOnGreatCircle)
{
    Sphere s(3);
    auto const traj = intrinsic_run(InitialMap::great_circle(1, s), 64, 0.25);
    MonotonicityQuadrature const q(traj, std::nullopt, s);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u;
    int checked = 0;
    while (checked < 10)
    {
        ParabolicWindow w{0.25 * (0.3 + 0.7 * u(rng)), {u(rng), 0}, 0.24 * u(rng)};
        if (!w.valid(0.25))
        {
            continue;
        }
        double const a = q.psi(w);
        double const b = psi_quantity_naive(traj, std::nullopt, s, w);
        EXPECT_NEAR(a, b, 1e-12);
        EXPECT_GT(a, 0);
        ++checked;
    }
    // Phi is R^2 times the slice at t0 - R^2/2: steady density 2 pi^2
    ParabolicWindow const w{0.25, {0.5, 0}, 0.05};
    EXPECT_GT(q.phi(w), 0);
    EXPECT_EQ(code_of([&] { q.psi(ParabolicWindow{0.25, {0, 0}, 0.3}); }),
              ErrorCode::window_out_of_range);
}

TEST(Monotonicity, FittedConstantFinite)
{
    Sphere s(3);
    auto const traj = intrinsic_run(InitialMap::great_circle(1, s), 64, 0.25);
    MonotonicityQuadrature const q(traj, std::nullopt, s);
    std::vector<double> radii{0.02, 0.05, 0.1, 0.2}, psi;
    for (double r : radii)
    {
        psi.push_back(q.psi(ParabolicWindow{0.25, {0.3, 0}, r}));
    }
    double const c = fit_monotonicity_constant(radii, psi);
    EXPECT_TRUE(std::isfinite(c));
    EXPECT_GE(c, 0);
    for (std::size_t i = 0; i < radii.size(); ++i)
    {
        double const gap = 0.2 - radii[i];
        EXPECT_LE(psi[i], std::exp(c * gap) * psi.back() + c * gap + 1e-12);
    }
    EXPECT_EQ(code_of([] { fit_monotonicity_constant({0.1, 0.2}, {1.0}); }),
              ErrorCode::config_invalid);
}

TEST(Bochner, Examples)
{
    Sphere s(3);
    TorusGrid g(1, 128);
    auto const c = initialize_from_map(InitialMap::constant(vec({1, 0, 0})), g, s);
    for (double e : bochner_density(c, 1e-2, 1.0, s))
    {
        EXPECT_EQ(e, 0);
    }
    auto const gc = initialize_from_map(InitialMap::great_circle(1, s), g, s);
    double const expect = 0.5 * std::pow(std::sin(2 * kPi / 128) * 128, 2);
    for (double e : bochner_density(gc, std::nullopt, 1.0, s))
    {
        EXPECT_NEAR(e, expect, 1e-9);
        EXPECT_NEAR(e, 2 * kPi * kPi, 1e-3 * 2 * kPi * kPi);
    }
    // Non-stationary smooth data so the ratio is not round-off
    auto const wobble = InitialMap::custom("wobble", [](std::span<double const> x) {
        double const a = 2 * kPi * x[0];
        AmbientVector v = vec({std::cos(a), std::sin(a), 0.4 * std::sin(a)});
        return AmbientVector(v.normalized());
    });
    std::vector<double> ratios;
    for (int n : {64, 128})
    {
        auto const traj = intrinsic_run(wobble, n, 0.01, 1);
        auto const& st = traj.states;
        auto const rep = bochner_ratio(st[st.size() - 2], st.back(), std::nullopt, 1.0, s);
        EXPECT_TRUE(std::isfinite(rep.max_ratio));
        EXPECT_GT(rep.nodes_counted, 0u);
        ratios.push_back(std::abs(rep.max_ratio));
    }
    EXPECT_GT(ratios[0], 1e-8);
    // Positive part is a second-order grid artefact: refinement must not grow it
    EXPECT_LE(ratios[1], 2 * ratios[0]);
}

TEST(Scan, ConstantAndSmooth)
{
    Sphere s(3);
    ScanOptions opts;
    opts.cap = 0;
    auto const c = intrinsic_run(InitialMap::constant(vec({0, 1, 0})), 32, 0.1);
    auto const rc = regularity_scan(c, std::nullopt, s, opts);
    for (auto const& e : rc.entries)
    {
        EXPECT_EQ(e.psi, 0);
        EXPECT_EQ(e.local_sup, 0);
    }
    EXPECT_EQ(rc.small_psi_above_cap, 0u);
    EXPECT_EQ(rc.fraction_bounded, 1.0);
    EXPECT_TRUE(rc.candidates.empty());

    ScanOptions smooth;
    smooth.theta0 = 1.0;
    smooth.radius = 0.05;
    auto const gc = intrinsic_run(InitialMap::great_circle(1, s), 64, 0.25);
    auto const rg = regularity_scan(gc, std::nullopt, s, smooth);
    EXPECT_EQ(rg.fraction_bounded, 1.0);
    EXPECT_GT(rg.small_psi, 0u);
}

TEST(Scan, LatticeLayout)
{
    auto const lat = scan_lattice(1.0, 2, 0.1, 4, 3);
    ASSERT_EQ(lat.size(), 4u * 9u);
    EXPECT_DOUBLE_EQ(lat.front().t0, 0.25);
    EXPECT_DOUBLE_EQ(lat.back().t0, 1.0);
}

TEST(SingularSet, SmoothAndConstantFamiliesEmpty)
{
    Sphere s(3);
    TorusGrid g(1, 32);
    std::vector<Trajectory> smooth, constant;
    for (double eps : {1e-2, 5e-3})
    {
        double const dt = fit_step(0.1, cfl_max_dt(g, eps, PenaltyScheme::imex_relaxation));
        SolveOptions opts;
        opts.record_stride = 10;
        smooth.push_back(solve_penalized(InitialMap::great_circle(1, s), eps, 0.1, g, dt,
                                         Generator::zero(), s, opts));
        constant.push_back(solve_penalized(InitialMap::constant(vec({0, 0, 1})), eps, 0.1,
                                           g, dt, Generator::zero(), s, opts));
    }
    std::vector<double> radii{0.02, 0.05};
    auto const a = singular_set_detect(smooth, s, 1.0, radii, 4, 4);
    EXPECT_EQ(a.marked, 0u);
    auto const b = singular_set_detect(constant, s, 1e-12, radii, 4, 4);
    EXPECT_EQ(b.marked, 0u);
    EXPECT_EQ(code_of([&] { singular_set_detect({smooth[0]}, s, 1.0, radii); }),
              ErrorCode::config_invalid);
}

TEST(EnergyConstant, FitsBound)
{
    std::vector<MonitorRecord> recs(3);
    recs[0].dirichlet_energy = 1.0;
    recs[1].time = 0.1;
    recs[1].dirichlet_energy = 0.9;
    recs[1].time_derivative_energy = 0.05;
    recs[2].time = 0.2;
    recs[2].dirichlet_energy = 0.8;
    recs[2].time_derivative_energy = 0.1;
    EXPECT_EQ(fit_energy_constant(recs), 0);
    recs[2].dirichlet_energy = 1.5;
    double const c = fit_energy_constant(recs);
    EXPECT_GT(c, 0);
    EXPECT_LE(1.6, std::exp(c * 0.2) * (c * 0.2 + 1.0) + 1e-9);
}
