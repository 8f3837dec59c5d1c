// SPDX-License-Identifier: Apache-2.0
//---------------------------------------------------------------------------//
//! \file mbsde/pde.hpp
//! Finite-difference solvers for the penalized system
//!   d_t v - 1/2 Lap v = -(1/2 eps) g(v) + fbar(v, grad v)
//! and for the intrinsic m = 1 flow
//!   d_t v - 1/2 v_xx = -1/2 Abar(v)(v_x, v_x) + fbar(v, v_x).
//---------------------------------------------------------------------------//
#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "field.hpp"
#include "generator.hpp"
#include "initial_map.hpp"
#include "manifold.hpp"

namespace mbsde
{
enum class PenaltyScheme
{
    //! Everything explicit; dt is also limited by eps.
    explicit_euler,
    //! Explicit diffusion and drift, exact normal relaxation for the penalty.
    imex_relaxation,
};

//! Node values h(x_i), projected once onto N.
//! Throws InitialDataOffManifold if some node is farther than 1e-6 from N.
FieldState initialize_from_map(InitialMap const& h,
                               TorusGrid const& grid,
                               EmbeddedManifold const& m);

//! Largest admissible step, safety factor 0.9 included.
double cfl_max_dt(TorusGrid const& grid, double epsilon, PenaltyScheme scheme);

//! Stable step for the intrinsic m = 1 scheme: 0.9 dx^2 / 2.
double intrinsic_max_dt(TorusGrid const& grid);

//! One step of the penalized system.
//! Throws CflViolated, NodeLeftTube.
FieldState step_penalized(FieldState const& state,
                          double epsilon,
                          double dt,
                          Generator const& g,
                          EmbeddedManifold const& m,
                          PenaltyScheme scheme = PenaltyScheme::imex_relaxation);

//! One explicit step of the intrinsic flow followed by projection onto N.
//! Throws CflViolated, ProjectionOutsideTube.
FieldState step_intrinsic_m1(FieldState const& state,
                             double dt,
                             Generator const& g,
                             EmbeddedManifold const& m);

struct SolveOptions
{
    //! Store every stride-th state (reduced to a divisor of the step count).
    int record_stride{1};
    //! Emit a MonitorRecord every monitor_stride steps (0 disables).
    int monitor_stride{1};
    PenaltyScheme scheme{PenaltyScheme::imex_relaxation};
};

//! Number of steps K with K dt = T; throws ConfigInvalid otherwise.
std::size_t step_count(double final_time, double dt);

//! Largest step not above max_dt that divides T evenly.
double fit_step(double final_time, double max_dt);

Trajectory solve_penalized(InitialMap const& h,
                           double epsilon,
                           double final_time,
                           TorusGrid const& grid,
                           double dt,
                           Generator const& g,
                           EmbeddedManifold const& m,
                           SolveOptions const& options = {});

Trajectory solve_intrinsic_m1(InitialMap const& h,
                              double final_time,
                              TorusGrid const& grid,
                              double dt,
                              Generator const& g,
                              EmbeddedManifold const& m,
                              SolveOptions const& options = {});

//---------------------------------------------------------------------------//
struct SolverComparison
{
    std::vector<double> epsilons;
    std::vector<double> times;
    //! deviations[i][k]: L^2(T^m) distance between the eps_i run and the
    //! intrinsic reference at times[k].
    std::vector<std::vector<double>> deviations;
    //! Non-increasing along the eps list, 20% slack.
    bool monotone{true};
};

//! Penalized runs against the intrinsic m = 1 reference on a shared grid.
SolverComparison compare_solvers(InitialMap const& h,
                                 double final_time,
                                 TorusGrid const& grid,
                                 double dt,
                                 std::vector<double> const& epsilons,
                                 Generator const& g,
                                 EmbeddedManifold const& m,
                                 int record_stride = 1);

//! L^2(T^m) distance between two states on the same grid.
double l2_distance(FieldState const& a, FieldState const& b);

//! sup over x of |interp(state)(x) - reference(x)|, sampling each cell at
//! `subsamples` points per axis.
double sup_deviation(FieldState const& state,
                     std::function<AmbientVector(std::span<double const>)> const&
                         reference,
                     int subsamples = 8);

//! Instantaneous monitor quantities of a state; the Dirichlet energy uses
//! forward differences, i.e. the energy whose L^2 gradient is the discrete
//! Laplacian. penalty_energy is zero when epsilon is empty.
MonitorRecord measure_state(FieldState const& state,
                            std::optional<double> epsilon,
                            EmbeddedManifold const& m);

//! max over stored states and nodes of dist_N.
double max_distance(Trajectory const& traj, EmbeddedManifold const& m);

}  // namespace mbsde
