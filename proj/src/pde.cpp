// SPDX-License-Identifier: Apache-2.0
//---------------------------------------------------------------------------//
//! \file pde.cpp
//---------------------------------------------------------------------------//
#include "mbsde/pde.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mbsde
{
namespace
{
double cell_volume(TorusGrid const& grid)
{
    return std::pow(grid.spacing(), grid.dim());
}

bool all_finite(FieldState const& s)
{
    return std::all_of(s.values.begin(), s.values.end(),
                       [](double v) { return std::isfinite(v); });
}

std::string node_message(char const* what, std::size_t node, double t, double d)
{
    std::ostringstream os;
    os << what << " at node " << node << ", t = " << t << ", dist = " << d;
    return os.str();
}

void require_step(double dt, double max_dt)
{
    if (!(dt > 0) || dt > max_dt * (1 + 1e-12))
    {
        std::ostringstream os;
        os << "dt = " << dt << " exceeds the stable step " << max_dt;
        throw Error(ErrorCode::cfl_violated, os.str());
    }
}

//! Largest divisor of k not above the requested stride.
std::size_t fit_stride(std::size_t k, int requested)
{
    auto s = static_cast<std::size_t>(std::max(requested, 1));
    if (k == 0)
    {
        return 1;
    }
    s = std::min(s, k);
    while (k % s != 0)
    {
        --s;
    }
    return s;
}

double max_norm(FieldState const& s)
{
    double out = 0;
    for (std::size_t i = 0; i < s.grid.size(); ++i)
    {
        out = std::max(out, s.at(i).norm());
    }
    return out;
}

using StepFn = std::function<FieldState(FieldState const&)>;

Trajectory integrate(FieldState initial,
                     std::optional<double> epsilon,
                     double final_time,
                     double dt,
                     Generator const& g,
                     EmbeddedManifold const& m,
                     SolveOptions const& options,
                     StepFn const& step)
{
    std::size_t const steps = step_count(final_time, dt);
    std::size_t const stride = fit_stride(steps, options.record_stride);
    auto const monitor_stride
        = static_cast<std::size_t>(std::max(options.monitor_stride, 0));
    double const bound = 10 * (1 + max_norm(initial) + 3 * m.tube_radius());
    double const dv = cell_volume(initial.grid);

    Trajectory traj;
    traj.epsilon = epsilon;
    traj.step = dt;
    traj.stride = static_cast<int>(stride);
    traj.generator = g.name();
    traj.manifold = m.id();
    traj.states.reserve(steps / stride + 1);

    double accumulated = 0;
    auto monitor = [&](FieldState const& s) {
        MonitorRecord rec = measure_state(s, epsilon, m);
        rec.time_derivative_energy = accumulated;
        traj.monitors.push_back(rec);
    };

    if (monitor_stride > 0)
    {
        monitor(initial);
    }
    traj.states.push_back(initial);
    FieldState current = std::move(initial);
    for (std::size_t k = 1; k <= steps; ++k)
    {
        FieldState next = step(current);
        next.time = static_cast<double>(k) * dt;
        if (!all_finite(next) || max_norm(next) > bound)
        {
            std::ostringstream os;
            os << "node norm exceeded " << bound << " at t = " << next.time;
            throw Error(ErrorCode::diverged, os.str());
        }
        double sq = 0;
        for (std::size_t i = 0; i < next.values.size(); ++i)
        {
            double const d = next.values[i] - current.values[i];
            sq += d * d;
        }
        accumulated += sq / dt * dv;
        current = std::move(next);
        if (monitor_stride > 0 && (k % monitor_stride == 0 || k == steps))
        {
            monitor(current);
        }
        if (k % stride == 0)
        {
            traj.states.push_back(current);
        }
    }
    return traj;
}
}  // namespace

//---------------------------------------------------------------------------//
FieldState initialize_from_map(InitialMap const& h,
                               TorusGrid const& grid,
                               EmbeddedManifold const& m)
{
    FieldState s(0, grid, m.ambient_dim());
    for (std::size_t node = 0; node < grid.size(); ++node)
    {
        auto const x = grid.coordinates(node);
        AmbientVector const v
            = h(std::span<double const>(x.data(), grid.dim()));
        if (v.size() != m.ambient_dim())
        {
            throw Error(ErrorCode::initial_data_off_manifold,
                        "initial map has the wrong ambient dimension");
        }
        double const d = m.distance(v);
        if (!(d <= 1e-6))
        {
            throw Error(ErrorCode::initial_data_off_manifold,
                        node_message("h leaves N", node, 0, d));
        }
        s.set(node, m.nearest_point(v));
    }
    return s;
}

double cfl_max_dt(TorusGrid const& grid, double epsilon, PenaltyScheme scheme)
{
    double const dx = grid.spacing();
    double const diffusive = dx * dx / (2 * grid.dim());
    if (scheme == PenaltyScheme::imex_relaxation)
    {
        return 0.9 * diffusive;
    }
    if (!(epsilon > 0))
    {
        throw Error(ErrorCode::config_invalid, "epsilon must be positive");
    }
    return 0.9 * std::min(diffusive, epsilon / 4);
}

double intrinsic_max_dt(TorusGrid const& grid)
{
    double const dx = grid.spacing();
    return 0.9 * dx * dx / 2;
}

std::size_t step_count(double final_time, double dt)
{
    if (!(dt > 0) || !(final_time >= 0))
    {
        throw Error(ErrorCode::config_invalid, "need dt > 0 and T >= 0");
    }
    double const ratio = final_time / dt;
    double const k = std::round(ratio);
    if (std::abs(k * dt - final_time) > 1e-12 * std::max(1.0, final_time))
    {
        std::ostringstream os;
        os << "dt = " << dt << " does not divide T = " << final_time;
        throw Error(ErrorCode::config_invalid, os.str());
    }
    return static_cast<std::size_t>(k);
}

double fit_step(double final_time, double max_dt)
{
    if (final_time <= 0)
    {
        return max_dt;
    }
    double const k = std::ceil(final_time / max_dt - 1e-9);
    return final_time / std::max(k, 1.0);
}

//---------------------------------------------------------------------------//
FieldState step_penalized(FieldState const& state,
                          double epsilon,
                          double dt,
                          Generator const& g,
                          EmbeddedManifold const& m,
                          PenaltyScheme scheme)
{
    if (!(epsilon > 0))
    {
        throw Error(ErrorCode::config_invalid, "epsilon must be positive");
    }
    require_step(dt, cfl_max_dt(state.grid, epsilon, scheme));

    auto const& grid = state.grid;
    auto const lap = discrete_laplacian(state);
    auto const grad = discrete_gradient(state);
    double const d0 = m.tube_radius();
    double const decay = std::exp(-dt / epsilon);
    int const dim = state.ambient_dim;

    FieldState out(state.time + dt, grid, dim);
    for (std::size_t node = 0; node < grid.size(); ++node)
    {
        AmbientVector const v = state.at(node);
        AmbientVector const l
            = Eigen::Map<Eigen::VectorXd const>(lap.data() + node * dim, dim);
        AmbientVector w
            = v + dt * (0.5 * l + eval_extended_generator(g, m, v, grad.at(node)));

        if (scheme == PenaltyScheme::explicit_euler)
        {
            w -= dt / (2 * epsilon) * penalty_gradient(m, v);
        }
        else
        {
            double const d = m.distance(w);
            if (!(d < 3 * d0))
            {
                throw Error(ErrorCode::node_left_tube,
                            node_message("node left the tube", node,
                                         out.time, d));
            }
            if (d < d0)
            {
                // dv/dt = -(v - P(v))/eps at a frozen foot point
                AmbientVector const foot = m.nearest_point(w);
                w = foot + decay * (w - foot);
            }
            else
            {
                w -= dt / (2 * epsilon) * penalty_gradient(m, w);
            }
        }

        double const d = m.distance(w);
        if (!(d < 3 * d0))
        {
            throw Error(ErrorCode::node_left_tube,
                        node_message("node left the tube", node, out.time, d));
        }
        out.set(node, w);
    }
    return out;
}

FieldState step_intrinsic_m1(FieldState const& state,
                             double dt,
                             Generator const& g,
                             EmbeddedManifold const& m)
{
    auto const& grid = state.grid;
    if (grid.dim() != 1)
    {
        throw Error(ErrorCode::config_invalid,
                    "the intrinsic solver is implemented for m = 1 only");
    }
    require_step(dt, intrinsic_max_dt(grid));

    auto const lap = discrete_laplacian(state);
    auto const grad = discrete_gradient(state);
    int const dim = state.ambient_dim;
    double const d0 = m.tube_radius();

    FieldState out(state.time + dt, grid, dim);
    for (std::size_t node = 0; node < grid.size(); ++node)
    {
        AmbientVector const v = state.at(node);
        GradientMatrix const u = grad.at(node);
        AmbientVector const ux = u.col(0);
        AmbientVector const l
            = Eigen::Map<Eigen::VectorXd const>(lap.data() + node * dim, dim);
        AmbientVector const w
            = v
              + dt
                    * (0.5 * l - 0.5 * extended_sff(m, v, ux)
                       + eval_extended_generator(g, m, v, u));
        double const d = m.distance(w);
        if (!(d < 3 * d0))
        {
            throw Error(ErrorCode::projection_outside_tube,
                        node_message("explicit step left the tube", node,
                                     out.time, d));
        }
        out.set(node, m.nearest_point(w));
    }
    return out;
}

//---------------------------------------------------------------------------//
Trajectory solve_penalized(InitialMap const& h,
                           double epsilon,
                           double final_time,
                           TorusGrid const& grid,
                           double dt,
                           Generator const& g,
                           EmbeddedManifold const& m,
                           SolveOptions const& options)
{
    if (!(epsilon > 0))
    {
        throw Error(ErrorCode::config_invalid, "epsilon must be positive");
    }
    require_step(dt, cfl_max_dt(grid, epsilon, options.scheme));
    FieldState initial = initialize_from_map(h, grid, m);
    return integrate(std::move(initial), epsilon, final_time, dt, g, m,
                     options, [&](FieldState const& s) {
                         return step_penalized(s, epsilon, dt, g, m,
                                               options.scheme);
                     });
}

Trajectory solve_intrinsic_m1(InitialMap const& h,
                              double final_time,
                              TorusGrid const& grid,
                              double dt,
                              Generator const& g,
                              EmbeddedManifold const& m,
                              SolveOptions const& options)
{
    if (grid.dim() != 1)
    {
        throw Error(ErrorCode::config_invalid,
                    "the intrinsic solver is implemented for m = 1 only");
    }
    require_step(dt, intrinsic_max_dt(grid));
    FieldState initial = initialize_from_map(h, grid, m);
    return integrate(std::move(initial), std::nullopt, final_time, dt, g, m,
                     options, [&](FieldState const& s) {
                         return step_intrinsic_m1(s, dt, g, m);
                     });
}

//---------------------------------------------------------------------------//
double l2_distance(FieldState const& a, FieldState const& b)
{
    if (!(a.grid == b.grid) || a.ambient_dim != b.ambient_dim)
    {
        throw Error(ErrorCode::grid_mismatch, "states live on different grids");
    }
    double sq = 0;
    for (std::size_t i = 0; i < a.values.size(); ++i)
    {
        double const d = a.values[i] - b.values[i];
        sq += d * d;
    }
    return std::sqrt(sq * cell_volume(a.grid));
}

SolverComparison compare_solvers(InitialMap const& h,
                                 double final_time,
                                 TorusGrid const& grid,
                                 double dt,
                                 std::vector<double> const& epsilons,
                                 Generator const& g,
                                 EmbeddedManifold const& m,
                                 int record_stride)
{
    SolveOptions opts;
    opts.record_stride = record_stride;
    opts.monitor_stride = 0;
    Trajectory const reference
        = solve_intrinsic_m1(h, final_time, grid, dt, g, m, opts);

    SolverComparison out;
    out.epsilons = epsilons;
    for (auto const& s : reference.states)
    {
        out.times.push_back(s.time);
    }
    for (double eps : epsilons)
    {
        Trajectory const run
            = solve_penalized(h, eps, final_time, grid, dt, g, m, opts);
        std::vector<double> row;
        row.reserve(run.states.size());
        for (std::size_t k = 0; k < run.states.size(); ++k)
        {
            row.push_back(l2_distance(run.states[k], reference.states[k]));
        }
        out.deviations.push_back(std::move(row));
    }
    for (std::size_t i = 1; i < out.deviations.size(); ++i)
    {
        if (!(epsilons[i] < epsilons[i - 1]))
        {
            continue;
        }
        for (std::size_t k = 0; k < out.times.size(); ++k)
        {
            if (out.deviations[i][k] > 1.2 * out.deviations[i - 1][k] + 1e-14)
            {
                out.monotone = false;
            }
        }
    }
    return out;
}

double sup_deviation(
    FieldState const& state,
    std::function<AmbientVector(std::span<double const>)> const& reference,
    int subsamples)
{
    auto const& grid = state.grid;
    int const n = grid.nodes_per_axis();
    int const per_axis = n * std::max(subsamples, 1);
    int const count1 = grid.dim() == 2 ? per_axis : 1;
    double out = 0;
    std::array<double, kMaxTorusDim> x{};
    for (int j = 0; j < count1; ++j)
    {
        x[1] = static_cast<double>(j) / per_axis;
        for (int i = 0; i < per_axis; ++i)
        {
            x[0] = static_cast<double>(i) / per_axis;
            std::span<double const> xs(x.data(), grid.dim());
            out = std::max(out, (interpolate(state, xs) - reference(xs)).norm());
        }
    }
    return out;
}

MonitorRecord measure_state(FieldState const& state,
                            std::optional<double> epsilon,
                            EmbeddedManifold const& m)
{
    auto const& grid = state.grid;
    double const inv_h = 1.0 / grid.spacing();
    double const dv = cell_volume(grid);
    auto const grad = discrete_gradient(state);
    MonitorRecord rec;
    rec.time = state.time;
    double dirichlet = 0;
    double penalty = 0;
    for (std::size_t node = 0; node < grid.size(); ++node)
    {
        AmbientVector const v = state.at(node);
        for (int axis = 0; axis < grid.dim(); ++axis)
        {
            AmbientVector const diff
                = (state.at(grid.neighbor(node, axis, 1)) - v) * inv_h;
            dirichlet += 0.5 * diff.squaredNorm();
        }
        if (epsilon)
        {
            penalty += penalty_potential(m, v);
        }
        rec.max_dist = std::max(rec.max_dist, m.distance(v));
        rec.max_gradient_sq
            = std::max(rec.max_gradient_sq, grad.at(node).squaredNorm());
    }
    rec.dirichlet_energy = dirichlet * dv;
    rec.penalty_energy = epsilon ? penalty * dv / *epsilon : 0.0;
    return rec;
}

double max_distance(Trajectory const& traj, EmbeddedManifold const& m)
{
    double out = 0;
    for (auto const& s : traj.states)
    {
        for (std::size_t node = 0; node < s.grid.size(); ++node)
        {
            out = std::max(out, m.distance(s.at(node)));
        }
    }
    return out;
}

}  // namespace mbsde
