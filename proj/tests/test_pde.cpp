// SPDX-License-Identifier: Apache-2.0
//---------------------------------------------------------------------------//
//! \file test_pde.cpp
//---------------------------------------------------------------------------//
#include <cmath>
#include <numbers>
#include <sstream>

#include <gtest/gtest.h>

#include "mbsde/field.hpp"
#include "mbsde/pde.hpp"
#include "mbsde/trajectory_io.hpp"

using namespace mbsde;

namespace
{
constexpr double kTwoPi = 2 * std::numbers::pi;

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

template<class F>
FieldState fill(TorusGrid const& grid, int dim, F&& f)
{
    FieldState s(0, grid, dim);
    for (std::size_t node = 0; node < grid.size(); ++node)
    {
        s.set(node, f(grid.coordinates(node)));
    }
    return s;
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

//! Radius of the discrete IMEX fixed point r h for a great circle.
double imex_fixed_radius(int n, int k, double dt, double eps)
{
    double const dx = 1.0 / n;
    double const lambda = (2 - 2 * std::cos(kTwoPi * k * dx)) / (dx * dx);
    double const q = std::exp(-dt / eps);
    double const a = dt * lambda / 2;
    // (1 - r)(1 - q) = q r a
    return (1 - q) / (1 - q + q * a);
}
}  // namespace

TEST(TorusGrid, IndexingAndErrors)
{
    TorusGrid g(2, 8);
    EXPECT_EQ(g.size(), 64u);
    EXPECT_EQ(g.neighbor(0, 0, -1), 7u);
    EXPECT_EQ(g.neighbor(0, 1, -1), 56u);
    EXPECT_EQ(g.neighbor(63, 0, 1), 56u);
    EXPECT_EQ(g.neighbor(63, 1, 1), 7u);
    auto const x = g.coordinates(9);
    EXPECT_DOUBLE_EQ(x[0], 0.125);
    EXPECT_DOUBLE_EQ(x[1], 0.125);
    EXPECT_EQ(code_of([] { TorusGrid(3, 8); }), ErrorCode::config_invalid);
    EXPECT_EQ(code_of([] { TorusGrid(1, 4); }), ErrorCode::config_invalid);
}

TEST(Laplacian, Examples)
{
    TorusGrid g(1, 128);
    auto const c = fill(g, 3, [](auto) { return vec({0, 0, 1}); });
    for (double v : discrete_laplacian(c))
    {
        EXPECT_EQ(v, 0);
    }
    auto const circle = fill(g, 3, [](auto x) {
        return vec({std::cos(kTwoPi * x[0]), std::sin(kTwoPi * x[0]), 0});
    });
    auto const lap = discrete_laplacian(circle);
    double const k2 = kTwoPi * kTwoPi;
    for (std::size_t i = 0; i < g.size(); ++i)
    {
        for (int a = 0; a < 2; ++a)
        {
            double const exact = -k2 * circle.values[i * 3 + a];
            EXPECT_LE(std::abs(lap[i * 3 + a] - exact), 1e-3 * k2);
        }
    }
    // Bump: stencil telescopes
    FieldState bump(0, TorusGrid(2, 16), 3);
    bump.values.assign(bump.values.size(), 0.0);
    bump.values[3 * 37] = 1;
    bump.values[3 * 37 + 2] = -2;
    auto const lb = discrete_laplacian(bump);
    double sum0 = 0, sum2 = 0;
    for (std::size_t i = 0; i < bump.grid.size(); ++i)
    {
        sum0 += lb[3 * i];
        sum2 += lb[3 * i + 2];
    }
    EXPECT_NEAR(sum0, 0, 1e-9);
    EXPECT_NEAR(sum2, 0, 1e-9);
}

TEST(Gradient, Examples)
{
    TorusGrid g(1, 128);
    auto const c = fill(g, 3, [](auto) { return vec({0, 1, 0}); });
    for (double v : discrete_gradient(c).values)
    {
        EXPECT_EQ(v, 0);
    }
    auto const circle = fill(g, 3, [](auto x) {
        return vec({std::cos(kTwoPi * x[0]), std::sin(kTwoPi * x[0]), 0});
    });
    auto const grad = discrete_gradient(circle);
    for (std::size_t i = 0; i < g.size(); ++i)
    {
        EXPECT_LE(std::abs(grad.at(i).norm() - kTwoPi), 1e-3 * kTwoPi);
    }
    auto const ramp = fill(g, 3, [](auto x) { return vec({x[0], 0, 0}); });
    auto const rg = discrete_gradient(ramp);
    double worst = 0;
    std::size_t worst_node = 1;
    for (std::size_t i = 0; i < g.size(); ++i)
    {
        double const err = std::abs(rg.at(i)(0, 0) - 1);
        EXPECT_TRUE(std::isfinite(err));
        if (err > worst)
        {
            worst = err;
            worst_node = i;
        }
    }
    EXPECT_TRUE(worst_node == 0 || worst_node == g.size() - 1);
}

TEST(Interpolate, ExactAtNodesAndLinearBetween)
{
    TorusGrid g(2, 8);
    auto const s = fill(g, 3, [](auto x) { return vec({x[0], x[1], 1}); });
    double const node[2] = {0.25, 0.5};
    EXPECT_LE((interpolate(s, node) - vec({0.25, 0.5, 1})).norm(), 1e-15);
    double const mid[2] = {0.3, 0.55};
    EXPECT_LE((interpolate(s, mid) - vec({0.3, 0.55, 1})).norm(), 1e-14);
    double const wrapped[2] = {1.3, -0.45};
    EXPECT_LE((interpolate(s, wrapped) - interpolate(s, mid)).norm(), 1e-14);
}

TEST(Initialize, Examples)
{
    Sphere s(3);
    TorusGrid g(1, 64);
    auto const c = initialize_from_map(InitialMap::constant(vec({0, 0, 1})), g, s);
    for (std::size_t i = 0; i < g.size(); ++i)
    {
        EXPECT_EQ((c.at(i) - vec({0, 0, 1})).norm(), 0);
    }
    auto const gc = initialize_from_map(InitialMap::great_circle(1, s), g, s);
    for (std::size_t i = 0; i < g.size(); ++i)
    {
        double const a = kTwoPi * static_cast<double>(i) / 64;
        EXPECT_LE((gc.at(i) - vec({std::cos(a), std::sin(a), 0})).norm(), 1e-15);
    }
    auto const bad = InitialMap::custom("bad", [](auto) { return vec({1.1, 0, 0}); });
    EXPECT_EQ(code_of([&] { initialize_from_map(bad, g, s); }),
              ErrorCode::initial_data_off_manifold);
}

TEST(Cfl, Examples)
{
    TorusGrid g(1, 64);
    double const ref = 0.9 / (2.0 * 64 * 64);
    EXPECT_NEAR(cfl_max_dt(g, 1.0, PenaltyScheme::explicit_euler), ref, 1e-18);
    EXPECT_NEAR(ref, 1.098e-4, 1e-7);
    EXPECT_NEAR(cfl_max_dt(g, 1e-6, PenaltyScheme::imex_relaxation), ref, 1e-18);
    double prev = cfl_max_dt(g, 1.0, PenaltyScheme::explicit_euler);
    for (double eps : {1e-2, 1e-3, 1e-4, 1e-5, 1e-6})
    {
        double const dt = cfl_max_dt(g, eps, PenaltyScheme::explicit_euler);
        EXPECT_LE(dt, prev);
        prev = dt;
    }
    EXPECT_NEAR(prev, 0.9 * 1e-6 / 4, 1e-20);
}

TEST(StepCount, DivisibilityAndFit)
{
    EXPECT_EQ(step_count(0.25, 1e-3), 250u);
    EXPECT_EQ(code_of([] { step_count(0.25, 0.3e-3); }), ErrorCode::config_invalid);
    double const dt = fit_step(0.25, 1.2e-4);
    EXPECT_LE(dt, 1.2e-4);
    EXPECT_NO_THROW(step_count(0.25, dt));
}

TEST(StepPenalized, ConstantFixedPoint)
{
    Sphere s(3);
    TorusGrid g(1, 32);
    auto const c = fill(g, 3, [](auto) { return vec({0, 0.6, 0.8}); });
    auto const next = step_penalized(c, 1e-3, 1e-4, Generator::zero(), s);
    for (std::size_t i = 0; i < c.values.size(); ++i)
    {
        EXPECT_NEAR(next.values[i], c.values[i], 1e-14);
    }
}

TEST(StepPenalized, RelaxationFactor)
{
    Sphere s(3);
    TorusGrid g(1, 8);
    auto const c = fill(g, 3, [](auto) { return vec({1.1, 0, 0}); });
    double const eps = 1e-3;
    auto const next = step_penalized(c, eps, eps, Generator::zero(), s);
    EXPECT_NEAR(s.distance(next.at(0)), 0.1 * std::exp(-1.0), 1e-15);
    EXPECT_NEAR(0.1 * std::exp(-1.0), 0.03679, 1e-5);
    // Explicit scheme on the same data: d -> d (1 - dt / eps)
    double const dt = 0.2 * eps;
    auto const ex = step_penalized(c, eps, dt, Generator::zero(), s,
                                   PenaltyScheme::explicit_euler);
    EXPECT_NEAR(s.distance(ex.at(0)), 0.1 * (1 - dt / eps), 1e-15);
}

TEST(StepPenalized, GreatCircleDisplacementBound)
{
    Sphere s(3);
    TorusGrid g(1, 64);
    auto const h = initialize_from_map(InitialMap::great_circle(1, s), g, s);
    double const dt = cfl_max_dt(g, 1e-3, PenaltyScheme::imex_relaxation);
    auto const next = step_penalized(h, 1e-3, dt, Generator::zero(), s);
    double sup = 0;
    for (std::size_t i = 0; i < g.size(); ++i)
    {
        sup = std::max(sup, (next.at(i) - h.at(i)).norm());
    }
    EXPECT_LE(sup, 2 * dt * kTwoPi * kTwoPi);
}

TEST(StepPenalized, Errors)
{
    Sphere s(3);
    TorusGrid g(1, 16);
    auto const c = fill(g, 3, [](auto) { return vec({1, 0, 0}); });
    EXPECT_EQ(code_of([&] { step_penalized(c, 1e-3, 1e-2, Generator::zero(), s); }),
              ErrorCode::cfl_violated);
    EXPECT_EQ(code_of([&] { step_penalized(c, 0, 1e-5, Generator::zero(), s); }),
              ErrorCode::config_invalid);
    // Checkerboard antipodes: the heat step lands near the origin
    FieldState zig(0, g, 3);
    for (std::size_t i = 0; i < g.size(); ++i)
    {
        zig.set(i, vec({i % 2 == 0 ? 1.0 : -1.0, 0, 0}));
    }
    double const dt = cfl_max_dt(g, 1.0, PenaltyScheme::imex_relaxation);
    EXPECT_EQ(code_of([&] { step_penalized(zig, 1.0, dt, Generator::zero(), s); }),
              ErrorCode::node_left_tube);
    EXPECT_EQ(code_of([&] { step_intrinsic_m1(zig, dt, Generator::zero(), s); }),
              ErrorCode::projection_outside_tube);
}

TEST(SolvePenalized, ConstantExact)
{
    Sphere s(3);
    TorusGrid g(1, 32);
    auto const h = InitialMap::constant(vec({0, 0, 1}));
    double const dt = fit_step(0.05, cfl_max_dt(g, 1e-3, PenaltyScheme::imex_relaxation));
    auto const traj = solve_penalized(h, 1e-3, 0.05, g, dt, Generator::zero(), s);
    for (auto const& st : traj.states)
    {
        for (std::size_t i = 0; i < g.size(); ++i)
        {
            EXPECT_EQ((st.at(i) - vec({0, 0, 1})).norm(), 0);
        }
    }
    EXPECT_NEAR(traj.final_time(), 0.05, 1e-15);
}

TEST(SolvePenalized, GreatCircleMatchesDiscreteFixedPoint)
{
    // Steady penalized great circle is r h with 1 - r = O(eps): the
    // fixed point of one IMEX step is known in closed form.
    Sphere s(3);
    TorusGrid g(1, 64);
    auto const h = InitialMap::great_circle(1, s);
    std::vector<double> dists;
    for (double eps : {2e-3, 1e-3})
    {
        double const dt = fit_step(0.1, cfl_max_dt(g, eps, PenaltyScheme::imex_relaxation));
        SolveOptions opts;
        opts.record_stride = 10;
        auto const traj = solve_penalized(h, eps, 0.1, g, dt, Generator::zero(), s, opts);
        double const expected = 1 - imex_fixed_radius(64, 1, dt, eps);
        double const measured = max_distance(traj, s);
        EXPECT_NEAR(measured, expected, 1e-3 * expected);
        dists.push_back(measured);
        // Radial shrink only: the direction stays on the circle
        auto const& last = traj.states.back();
        for (std::size_t i = 0; i < g.size(); ++i)
        {
            AmbientVector const foot = s.nearest_point(last.at(i));
            double const x[1] = {g.coordinates(i)[0]};
            EXPECT_LE((foot - h(x)).norm(), 1e-12);
        }
    }
    // Linear in eps up to the splitting correction
    EXPECT_NEAR(dists[0] / dists[1], 2.0, 0.1);
}

TEST(SolvePenalized, MonitorEnergyDecreases)
{
    Sphere s(3);
    TorusGrid g(1, 32);
    auto const h = InitialMap::custom("wobble", [](std::span<double const> x) {
        double const a = kTwoPi * x[0];
        AmbientVector v = vec({std::cos(a), std::sin(a), 0.3 * std::sin(2 * a)});
        return AmbientVector(v.normalized());
    });
    double const dt = fit_step(0.05, cfl_max_dt(g, 1e-2, PenaltyScheme::imex_relaxation));
    auto const traj = solve_penalized(h, 1e-2, 0.05, g, dt, Generator::zero(), s);
    ASSERT_GE(traj.monitors.size(), 2u);
    for (std::size_t k = 1; k < traj.monitors.size(); ++k)
    {
        EXPECT_LE(traj.monitors[k].total_energy(),
                  traj.monitors[k - 1].total_energy() * (1 + 1e-3));
    }
    EXPECT_GT(traj.monitors.back().time_derivative_energy, 0);
}

TEST(SolveIntrinsic, GreatCircleStationary)
{
    Sphere s(3);
    TorusGrid g(1, 64);
    auto const h = InitialMap::great_circle(1, s);
    double const dt = fit_step(0.5, intrinsic_max_dt(g));
    SolveOptions opts;
    opts.record_stride = 50;
    auto const traj = solve_intrinsic_m1(h, 0.5, g, dt, Generator::zero(), s, opts);
    double sup = 0;
    for (auto const& st : traj.states)
    {
        sup = std::max(sup, sup_deviation(st, [&](auto x) { return h(x); }, 1));
    }
    EXPECT_LE(sup, 1e-3);

    // Between nodes the chord sagitta 1 - cos(pi dx) dominates
    TorusGrid fine(1, 128);
    double const fdt = fit_step(0.5, intrinsic_max_dt(fine));
    auto const ft = solve_intrinsic_m1(h, 0.5, fine, fdt, Generator::zero(), s, opts);
    double const sagitta = 1 - std::cos(std::numbers::pi / 128);
    double const dev = sup_deviation(ft.states.back(), [&](auto x) { return h(x); });
    EXPECT_LE(dev, 1e-3);
    EXPECT_NEAR(dev, sagitta, 0.05 * sagitta);
}

TEST(SolveIntrinsic, ConstantAndDoubleSpeed)
{
    Sphere s(3);
    TorusGrid g(1, 64);
    double const dt = fit_step(0.1, intrinsic_max_dt(g));
    auto const c = solve_intrinsic_m1(InitialMap::constant(vec({1, 0, 0})), 0.1, g, dt,
                                      Generator::zero(), s);
    for (auto const& st : c.states)
    {
        EXPECT_EQ((st.at(5) - vec({1, 0, 0})).norm(), 0);
    }
    auto const k2 = solve_intrinsic_m1(InitialMap::great_circle(2, s), 0.1, g, dt,
                                       Generator::zero(), s);
    double const dx = g.spacing();
    double const discrete = std::pow(std::sin(2 * kTwoPi * dx) / dx, 2);
    for (auto const& st : k2.states)
    {
        auto const grad = discrete_gradient(st);
        for (std::size_t i = 0; i < g.size(); ++i)
        {
            double const sq = grad.at(i).squaredNorm();
            EXPECT_NEAR(sq, discrete, 1e-9 * discrete);
            EXPECT_NEAR(sq, 16 * std::numbers::pi * std::numbers::pi,
                        0.02 * 16 * std::numbers::pi * std::numbers::pi);
        }
    }
}

TEST(SolveIntrinsic, RejectsTorusDimTwo)
{
    Sphere s(3);
    TorusGrid g(2, 8);
    EXPECT_EQ(code_of([&] {
                  solve_intrinsic_m1(InitialMap::constant(vec({1, 0, 0})), 0.01, g,
                                     0.001, Generator::zero(), s);
              }),
              ErrorCode::config_invalid);
}

TEST(CompareSolvers, Examples)
{
    Sphere s(3);
    TorusGrid g(1, 32);
    double const dt = fit_step(0.05, intrinsic_max_dt(g));
    auto const c = compare_solvers(InitialMap::constant(vec({0, 1, 0})), 0.05, g, dt,
                                   {1e-2, 1e-3}, Generator::zero(), s);
    for (auto const& row : c.deviations)
    {
        for (double d : row)
        {
            EXPECT_EQ(d, 0);
        }
    }
    auto const gc = InitialMap::great_circle(1, s);
    auto const a = compare_solvers(gc, 0.05, g, dt, {1e-2, 1e-3, 1e-4},
                                   Generator::zero(), s, 10);
    EXPECT_TRUE(a.monotone);
    EXPECT_GT(a.deviations[0].back(), a.deviations[2].back());
    auto const rep = compare_solvers(gc, 0.05, g, dt, {1e-3, 1e-3},
                                     Generator::zero(), s, 10);
    EXPECT_EQ(rep.deviations[0], rep.deviations[1]);
}

TEST(Distances, GridMismatch)
{
    FieldState a(0, TorusGrid(1, 8), 3);
    FieldState b(0, TorusGrid(1, 16), 3);
    EXPECT_EQ(code_of([&] { l2_distance(a, b); }), ErrorCode::grid_mismatch);
    EXPECT_EQ(l2_distance(a, a), 0);
}

TEST(TrajectoryIo, BinaryRoundTripAndErrors)
{
    Sphere s(3);
    TorusGrid g(1, 16);
    auto const h = InitialMap::great_circle(1, s);
    double const dt = fit_step(0.01, cfl_max_dt(g, 1e-2, PenaltyScheme::imex_relaxation));
    auto const traj = solve_penalized(h, 1e-2, 0.01, g, dt, Generator::zero(), s);
    std::stringstream buf(std::ios::in | std::ios::out | std::ios::binary);
    write_trajectory_binary(traj, buf);
    auto const back = read_trajectory_binary(buf);
    ASSERT_EQ(back.states.size(), traj.states.size());
    EXPECT_EQ(*back.epsilon, *traj.epsilon);
    EXPECT_EQ(back.step, traj.step);
    for (std::size_t k = 0; k < traj.states.size(); ++k)
    {
        EXPECT_EQ(back.states[k].time, traj.states[k].time);
        EXPECT_EQ(back.states[k].values, traj.states[k].values);
    }

    std::stringstream junk("not a trajectory at all");
    EXPECT_EQ(code_of([&] { read_trajectory_binary(junk); }), ErrorCode::io_failure);
    std::string const full = [&] {
        std::ostringstream os(std::ios::binary);
        write_trajectory_binary(traj, os);
        return os.str();
    }();
    std::stringstream cut(full.substr(0, full.size() / 2));
    EXPECT_EQ(code_of([&] { read_trajectory_binary(cut); }), ErrorCode::io_failure);

    std::ostringstream csv;
    write_trajectory_csv(traj, csv);
    EXPECT_EQ(csv.str().rfind("t,node,c0,c1,c2\n", 0), 0u);
}

TEST(TrajectoryIo, IntrinsicEpsilonIsEmpty)
{
    Sphere s(3);
    TorusGrid g(1, 16);
    double const dt = fit_step(0.01, intrinsic_max_dt(g));
    auto const traj = solve_intrinsic_m1(InitialMap::great_circle(1, s), 0.01, g, dt,
                                         Generator::zero(), s);
    std::stringstream buf(std::ios::in | std::ios::out | std::ios::binary);
    write_trajectory_binary(traj, buf);
    EXPECT_FALSE(read_trajectory_binary(buf).epsilon.has_value());
}
