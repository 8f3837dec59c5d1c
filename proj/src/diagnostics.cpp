// SPDX-License-Identifier: Apache-2.0
//---------------------------------------------------------------------------//
//! \file diagnostics.cpp
//---------------------------------------------------------------------------//
#include "mbsde/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>

#include "mbsde/pde.hpp"

namespace mbsde
{
namespace
{
double cell_volume(TorusGrid const& grid)
{
    return std::pow(grid.spacing(), grid.dim());
}

std::span<double const> coords(std::array<double, kMaxTorusDim> const& x,
                               int dim)
{
    return {x.data(), static_cast<std::size_t>(dim)};
}

//! Stored-state bracket of t: linear weights on states lo and lo + 1.
void bracket(Trajectory const& traj, double t, std::size_t& lo, double& frac)
{
    std::size_t const last = traj.states.size() - 1;
    if (last == 0)
    {
        lo = 0;
        frac = 0;
        return;
    }
    double const s
        = std::clamp(t / traj.record_spacing(), 0.0, static_cast<double>(last));
    lo = std::min(static_cast<std::size_t>(std::floor(s)), last - 1);
    frac = s - static_cast<double>(lo);
}

//! a, stored times strictly inside (a, b), b.
std::vector<double> psi_time_points(Trajectory const& traj, double a, double b)
{
    std::vector<double> out{a};
    for (auto const& s : traj.states)
    {
        if (s.time > a && s.time < b)
        {
            out.push_back(s.time);
        }
    }
    out.push_back(b);
    return out;
}

double trapezoid(std::vector<double> const& t, std::vector<double> const& f)
{
    double acc = 0;
    for (std::size_t k = 1; k < t.size(); ++k)
    {
        acc += 0.5 * (t[k] - t[k - 1]) * (f[k] + f[k - 1]);
    }
    return acc;
}

double min_positive_bisect(std::function<bool(double)> const& feasible)
{
    if (feasible(0))
    {
        return 0;
    }
    double hi = 1e6;
    if (!feasible(hi))
    {
        return std::numeric_limits<double>::infinity();
    }
    double lo = 0;
    for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it)
    {
        double const mid = 0.5 * (lo + hi);
        (feasible(mid) ? hi : lo) = mid;
    }
    return hi;
}
}  // namespace

//---------------------------------------------------------------------------//
MonitorRecord energy_record(FieldState const& state,
                            std::optional<double> epsilon,
                            EmbeddedManifold const& m,
                            FieldState const* prev)
{
    MonitorRecord rec = measure_state(state, epsilon, m);
    if (prev)
    {
        double const dt = state.time - prev->time;
        if (!(dt > 0) || !(prev->grid == state.grid))
        {
            throw Error(ErrorCode::grid_mismatch,
                        "previous state must precede on the same grid");
        }
        double sq = 0;
        for (std::size_t i = 0; i < state.values.size(); ++i)
        {
            double const d = (state.values[i] - prev->values[i]) / dt;
            sq += d * d;
        }
        rec.time_derivative_energy = sq * cell_volume(state.grid);
    }
    return rec;
}

double torus_distance(std::span<double const> x, std::span<double const> x0)
{
    double sq = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
    {
        double d = x[i] - x0[i];
        d -= std::round(d);
        sq += d * d;
    }
    return std::sqrt(sq);
}

double heat_kernel(double t0,
                   std::span<double const> x0,
                   double t,
                   std::span<double const> x)
{
    double const tau = std::abs(t0 - t);
    if (tau < 1e-12)
    {
        throw Error(ErrorCode::degenerate_time, "heat kernel at t = t0");
    }
    double const r = torus_distance(x, x0);
    double const m = static_cast<double>(x.size());
    return std::pow(2 * std::numbers::pi * tau, -m / 2)
           * std::exp(-r * r / (2 * tau));
}

double window_cutoff(std::span<double const> x, std::span<double const> x0)
{
    double const r = torus_distance(x, x0);
    return 1 - smoothstep5((r - 0.25) / 0.25);
}

bool ParabolicWindow::valid(double final_time) const
{
    return radius > 0 && radius < 0.5 && radius < std::sqrt(t0) / 2
           && t0 <= final_time * (1 + 1e-12);
}

void ParabolicWindow::require_valid(double final_time) const
{
    if (!valid(final_time))
    {
        std::ostringstream os;
        os << "window (t0 = " << t0 << ", R = " << radius
           << ") violates 0 < R < min(1/2, sqrt(t0)/2) or t0 <= T = "
           << final_time;
        throw Error(ErrorCode::window_out_of_range, os.str());
    }
}

std::vector<double> energy_density(FieldState const& state,
                                   std::optional<double> epsilon,
                                   EmbeddedManifold const& m)
{
    auto const grad = discrete_gradient(state);
    std::vector<double> e(state.grid.size());
    for (std::size_t node = 0; node < e.size(); ++node)
    {
        e[node] = 0.5 * grad.at(node).squaredNorm();
        if (epsilon)
        {
            e[node] += penalty_potential(m, state.at(node)) / *epsilon;
        }
    }
    return e;
}

//---------------------------------------------------------------------------//
MonotonicityQuadrature::MonotonicityQuadrature(Trajectory const& traj,
                                               std::optional<double> epsilon,
                                               EmbeddedManifold const& m)
    : traj_(&traj)
{
    density_.reserve(traj.states.size());
    sup_density_.reserve(traj.states.size());
    for (auto const& s : traj.states)
    {
        auto const grad = discrete_gradient(s);
        std::vector<double> e(s.grid.size());
        std::vector<double> sup(s.grid.size());
        for (std::size_t node = 0; node < e.size(); ++node)
        {
            double const g2 = grad.at(node).squaredNorm();
            double const pen
                = epsilon ? penalty_potential(m, s.at(node)) / *epsilon : 0.0;
            e[node] = 0.5 * g2 + pen;
            sup[node] = g2 + pen;
        }
        density_.push_back(std::move(e));
        sup_density_.push_back(std::move(sup));
    }
}

double MonotonicityQuadrature::weighted_slice(ParabolicWindow const& w,
                                              double t) const
{
    auto const& grid = traj_->grid();
    int const dim = grid.dim();
    std::size_t lo = 0;
    double frac = 0;
    bracket(*traj_, t, lo, frac);
    std::size_t const hi = std::min(lo + 1, density_.size() - 1);
    auto const x0 = coords(w.x0, dim);
    double acc = 0;
    for (std::size_t node = 0; node < grid.size(); ++node)
    {
        auto const xa = grid.coordinates(node);
        auto const x = coords(xa, dim);
        double const cut = window_cutoff(x, x0);
        if (cut == 0)
        {
            continue;
        }
        double const e
            = (1 - frac) * density_[lo][node] + frac * density_[hi][node];
        acc += e * heat_kernel(w.t0, x0, t, x) * cut * cut;
    }
    return acc * cell_volume(grid);
}

double MonotonicityQuadrature::phi(ParabolicWindow const& w) const
{
    w.require_valid(final_time());
    double const r2 = w.radius * w.radius;
    return r2 * weighted_slice(w, w.t0 - r2 / 2);
}

double MonotonicityQuadrature::psi(ParabolicWindow const& w) const
{
    w.require_valid(final_time());
    double const r2 = w.radius * w.radius;
    auto const times = psi_time_points(*traj_, w.t0 - 4 * r2, w.t0 - r2);
    std::vector<double> slices;
    slices.reserve(times.size());
    for (double t : times)
    {
        slices.push_back(weighted_slice(w, t));
    }
    return trapezoid(times, slices);
}

double MonotonicityQuadrature::local_sup(ParabolicWindow const& w,
                                         double r) const
{
    auto const& grid = traj_->grid();
    int const dim = grid.dim();
    auto const x0 = coords(w.x0, dim);
    std::vector<std::size_t> band;
    std::size_t nearest = 0;
    for (std::size_t k = 0; k < traj_->states.size(); ++k)
    {
        double const t = traj_->states[k].time;
        if (std::abs(t - w.t0) < r * r)
        {
            band.push_back(k);
        }
        if (std::abs(t - w.t0) < std::abs(traj_->states[nearest].time - w.t0))
        {
            nearest = k;
        }
    }
    if (band.empty())
    {
        band.push_back(nearest);
    }
    double out = 0;
    for (auto k : band)
    {
        for (std::size_t node = 0; node < grid.size(); ++node)
        {
            auto const xa = grid.coordinates(node);
            if (torus_distance(coords(xa, dim), x0) < r)
            {
                out = std::max(out, sup_density_[k][node]);
            }
        }
    }
    return out;
}

double phi_quantity(Trajectory const& traj,
                    std::optional<double> epsilon,
                    EmbeddedManifold const& m,
                    ParabolicWindow const& w)
{
    w.require_valid(traj.final_time());
    return MonotonicityQuadrature(traj, epsilon, m).phi(w);
}

double psi_quantity(Trajectory const& traj,
                    std::optional<double> epsilon,
                    EmbeddedManifold const& m,
                    ParabolicWindow const& w)
{
    w.require_valid(traj.final_time());
    return MonotonicityQuadrature(traj, epsilon, m).psi(w);
}

double psi_quantity_naive(Trajectory const& traj,
                          std::optional<double> epsilon,
                          EmbeddedManifold const& m,
                          ParabolicWindow const& w)
{
    w.require_valid(traj.final_time());
    double const r2 = w.radius * w.radius;
    double const a = w.t0 - 4 * r2;
    double const b = w.t0 - r2;
    int const dim = traj.grid().dim();
    int const n = traj.grid().nodes_per_axis();
    int const L = traj.ambient_dim();
    double const h = 1.0 / n;
    double const dv = dim == 2 ? h * h : h;
    int const rows = dim == 2 ? n : 1;

    // Point density straight from the stored values.
    auto density = [&](FieldState const& s, int i, int j) {
        auto value = [&](int ii, int jj, int c) {
            ii = (ii % n + n) % n;
            jj = (jj % n + n) % n;
            return s.values[static_cast<std::size_t>((ii + n * jj) * L + c)];
        };
        double g2 = 0;
        AmbientVector p(L);
        for (int c = 0; c < L; ++c)
        {
            double const dx = (value(i + 1, j, c) - value(i - 1, j, c)) / (2 * h);
            g2 += dx * dx;
            if (dim == 2)
            {
                double const dy
                    = (value(i, j + 1, c) - value(i, j - 1, c)) / (2 * h);
                g2 += dy * dy;
            }
            p[c] = value(i, j, c);
        }
        double e = 0.5 * g2;
        if (epsilon)
        {
            e += penalty_potential(m, p) / *epsilon;
        }
        return e;
    };

    std::vector<double> times{a};
    for (auto const& s : traj.states)
    {
        if (s.time > a && s.time < b)
        {
            times.push_back(s.time);
        }
    }
    times.push_back(b);

    std::size_t const last = traj.states.size() - 1;
    double total = 0;
    double prev_t = 0;
    double prev_f = 0;
    for (std::size_t k = 0; k < times.size(); ++k)
    {
        double const t = times[k];
        std::size_t lo = 0;
        double frac = 0;
        if (last > 0)
        {
            double const s = std::clamp(t / traj.record_spacing(), 0.0,
                                        static_cast<double>(last));
            lo = std::min(static_cast<std::size_t>(std::floor(s)), last - 1);
            frac = s - static_cast<double>(lo);
        }
        std::size_t const hi = std::min(lo + 1, last);
        double const tau = w.t0 - t;
        double slice = 0;
        for (int j = 0; j < rows; ++j)
        {
            for (int i = 0; i < n; ++i)
            {
                double d2 = 0;
                double const xs[2] = {static_cast<double>(i) / n,
                                      static_cast<double>(j) / n};
                for (int ax = 0; ax < dim; ++ax)
                {
                    double d = xs[ax] - w.x0[ax];
                    d -= std::round(d);
                    d2 += d * d;
                }
                double const r = std::sqrt(d2);
                double const u = std::clamp((r - 0.25) / 0.25, 0.0, 1.0);
                double const cut = 1 - u * u * u * (u * (6 * u - 15) + 10);
                if (cut == 0)
                {
                    continue;
                }
                double const rho = std::pow(2 * std::numbers::pi * tau, -0.5 * dim)
                                   * std::exp(-d2 / (2 * tau));
                double const e = (1 - frac) * density(traj.states[lo], i, j)
                                 + frac * density(traj.states[hi], i, j);
                slice += e * rho * cut * cut;
            }
        }
        slice *= dv;
        if (k > 0)
        {
            total += 0.5 * (t - prev_t) * (slice + prev_f);
        }
        prev_t = t;
        prev_f = slice;
    }
    return total;
}

//---------------------------------------------------------------------------//
std::vector<double> bochner_density(FieldState const& state,
                                    std::optional<double> epsilon,
                                    double r_scale,
                                    EmbeddedManifold const& m)
{
    auto const grad = discrete_gradient(state);
    std::vector<double> e(state.grid.size());
    for (std::size_t node = 0; node < e.size(); ++node)
    {
        e[node] = 0.5 * grad.at(node).squaredNorm();
        if (epsilon)
        {
            e[node] += r_scale * r_scale * penalty_potential(m, state.at(node))
                       / *epsilon;
        }
    }
    return e;
}

BochnerReport bochner_ratio(FieldState const& prev,
                            FieldState const& state,
                            std::optional<double> epsilon,
                            double r_scale,
                            EmbeddedManifold const& m)
{
    double const dt = state.time - prev.time;
    if (!(dt > 0) || !(prev.grid == state.grid))
    {
        throw Error(ErrorCode::grid_mismatch,
                    "previous state must precede on the same grid");
    }
    auto const e0 = bochner_density(prev, epsilon, r_scale, m);
    auto const e1 = bochner_density(state, epsilon, r_scale, m);
    auto const& grid = state.grid;
    double const inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
    double const r2 = r_scale * r_scale;
    BochnerReport out;
    out.max_ratio = -std::numeric_limits<double>::infinity();
    for (std::size_t node = 0; node < grid.size(); ++node)
    {
        if (!(e1[node] > 1e-10))
        {
            continue;
        }
        double lap = 0;
        for (int axis = 0; axis < grid.dim(); ++axis)
        {
            lap += (e1[grid.neighbor(node, axis, 1)] - 2 * e1[node]
                    + e1[grid.neighbor(node, axis, -1)])
                   * inv_h2;
        }
        double const lhs = (e1[node] - e0[node]) / dt - 0.5 * lap;
        out.max_ratio
            = std::max(out.max_ratio, lhs / (e1[node] * (r2 + e1[node])));
        ++out.nodes_counted;
    }
    if (out.nodes_counted == 0)
    {
        out.max_ratio = 0;
    }
    return out;
}

//---------------------------------------------------------------------------//
std::vector<ParabolicWindow>
scan_lattice(double final_time, int dim, double radius, int nt, int nx)
{
    std::vector<ParabolicWindow> out;
    int const ny = dim == 2 ? nx : 1;
    for (int k = 0; k < nt; ++k)
    {
        for (int j = 0; j < ny; ++j)
        {
            for (int i = 0; i < nx; ++i)
            {
                ParabolicWindow w;
                w.t0 = final_time * (k + 1) / nt;
                w.x0 = {static_cast<double>(i) / nx,
                        dim == 2 ? static_cast<double>(j) / nx : 0.0};
                w.radius = radius;
                out.push_back(w);
            }
        }
    }
    return out;
}

ScanReport regularity_scan(Trajectory const& traj,
                           std::optional<double> epsilon,
                           EmbeddedManifold const& m,
                           ScanOptions const& options)
{
    MonotonicityQuadrature const quad(traj, epsilon, m);
    double const T = traj.final_time();
    ScanReport out;
    for (auto const& w : scan_lattice(T, traj.grid().dim(), options.radius,
                                      options.time_points,
                                      options.space_points))
    {
        ScanEntry entry;
        entry.window = w;
        entry.valid = w.valid(T);
        if (entry.valid)
        {
            entry.psi = quad.psi(w);
            entry.local_sup = quad.local_sup(w, options.kappa * options.radius);
            if (entry.psi < options.theta0)
            {
                ++out.small_psi;
                if (entry.local_sup > options.cap)
                {
                    ++out.small_psi_above_cap;
                }
            }
            else
            {
                out.candidates.push_back(out.entries.size());
            }
        }
        out.entries.push_back(entry);
    }
    if (out.small_psi > 0)
    {
        out.fraction_bounded
            = 1
              - static_cast<double>(out.small_psi_above_cap)
                    / static_cast<double>(out.small_psi);
    }
    return out;
}

SingularSetReport
singular_set_detect(std::vector<Trajectory> const& family,
                    EmbeddedManifold const& m,
                    double theta0,
                    std::vector<double> const& radii,
                    int nt,
                    int nx)
{
    if (family.size() < 2)
    {
        throw Error(ErrorCode::config_invalid,
                    "singular-set detection needs at least two epsilon values");
    }
    // Smaller half of the ladder stands in for eps -> 0.
    std::vector<std::size_t> order(family.size());
    for (std::size_t i = 0; i < order.size(); ++i)
    {
        order[i] = i;
    }
    auto eps_of = [&family](std::size_t i) {
        return family[i].epsilon.value_or(0.0);
    };
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
        return eps_of(a) < eps_of(b);
    });
    order.resize((order.size() + 1) / 2);

    std::vector<MonotonicityQuadrature> quads;
    for (auto i : order)
    {
        quads.emplace_back(family[i], family[i].epsilon, m);
    }

    double const T = family.front().final_time();
    int const dim = family.front().grid().dim();
    SingularSetReport out;
    out.lattice = scan_lattice(T, dim, 0, nt, nx);
    out.mask.assign(out.lattice.size(), false);
    for (std::size_t z = 0; z < out.lattice.size(); ++z)
    {
        bool any = false;
        bool all = true;
        for (double r : radii)
        {
            ParabolicWindow w = out.lattice[z];
            w.radius = r;
            if (!w.valid(T))
            {
                continue;
            }
            any = true;
            double lim = std::numeric_limits<double>::infinity();
            for (auto const& q : quads)
            {
                lim = std::min(lim, q.psi(w));
            }
            if (!(lim >= theta0))
            {
                all = false;
                break;
            }
        }
        out.mask[z] = any && all;
        out.marked += out.mask[z] ? 1 : 0;
    }
    out.fraction = out.lattice.empty() ? 0.0
                                       : static_cast<double>(out.marked)
                                             / static_cast<double>(
                                                 out.lattice.size());
    out.measure = static_cast<double>(out.marked) * (T / nt)
                  * std::pow(1.0 / nx, dim);
    return out;
}

//---------------------------------------------------------------------------//
double fit_monotonicity_constant(std::vector<double> const& radii,
                                 std::vector<double> const& values)
{
    if (radii.empty() || radii.size() != values.size())
    {
        throw Error(ErrorCode::config_invalid, "radius ladder mismatch");
    }
    auto const top = std::max_element(radii.begin(), radii.end())
                     - radii.begin();
    double const r0 = radii[top];
    double const v0 = values[top];
    return min_positive_bisect([&](double c) {
        for (std::size_t i = 0; i < radii.size(); ++i)
        {
            double const gap = r0 - radii[i];
            if (values[i] > std::exp(c * gap) * v0 + c * gap + 1e-14)
            {
                return false;
            }
        }
        return true;
    });
}

double fit_energy_constant(std::vector<MonitorRecord> const& monitors)
{
    if (monitors.empty())
    {
        return 0;
    }
    double const e0 = monitors.front().total_energy();
    double const t0 = monitors.front().time;
    return min_positive_bisect([&](double c) {
        for (auto const& rec : monitors)
        {
            double const t = rec.time - t0;
            double const lhs = rec.total_energy() + rec.time_derivative_energy;
            if (lhs > std::exp(c * t) * (c * t + e0) * (1 + 1e-12) + 1e-14)
            {
                return false;
            }
        }
        return true;
    });
}

}  // namespace mbsde
