// SPDX-License-Identifier: Apache-2.0
//---------------------------------------------------------------------------//
//! \file field.cpp
//---------------------------------------------------------------------------//
#include "mbsde/field.hpp"

#include <algorithm>
#include <cmath>

namespace mbsde
{
//---------------------------------------------------------------------------//
TorusGrid::TorusGrid(int dim, int nodes_per_axis)
    : dim_(dim), n_(nodes_per_axis)
{
    if (dim < 1 || dim > kMaxTorusDim)
    {
        throw Error(ErrorCode::config_invalid, "torus dimension must be 1 or 2");
    }
    if (nodes_per_axis < 8)
    {
        throw Error(ErrorCode::config_invalid,
                    "at least 8 nodes per axis are required");
    }
    size_ = static_cast<std::size_t>(n_);
    if (dim_ == 2)
    {
        size_ *= static_cast<std::size_t>(n_);
    }
}

std::size_t TorusGrid::neighbor(std::size_t node, int axis, int offset) const
{
    auto const n = static_cast<std::size_t>(n_);
    auto wrap = [this, offset](std::size_t i) {
        return static_cast<std::size_t>((static_cast<int>(i) + offset + n_)
                                        % n_);
    };
    if (axis == 0)
    {
        std::size_t const i = node % n;
        return node - i + wrap(i);
    }
    return node % n + n * wrap(node / n);
}

std::array<int, kMaxTorusDim> TorusGrid::multi_index(std::size_t node) const
{
    std::array<int, kMaxTorusDim> idx{};
    idx[0] = static_cast<int>(node % static_cast<std::size_t>(n_));
    if (dim_ == 2)
    {
        idx[1] = static_cast<int>(node / static_cast<std::size_t>(n_));
    }
    return idx;
}

std::array<double, kMaxTorusDim> TorusGrid::coordinates(std::size_t node) const
{
    auto const idx = multi_index(node);
    std::array<double, kMaxTorusDim> x{};
    for (int a = 0; a < dim_; ++a)
    {
        x[a] = static_cast<double>(idx[a]) / n_;
    }
    return x;
}

//---------------------------------------------------------------------------//
FieldState::FieldState(double t, TorusGrid g, int dim)
    : time(t), grid(g), ambient_dim(dim), values(g.size() * dim, 0.0)
{
}

AmbientVector FieldState::at(std::size_t node) const
{
    return Eigen::Map<Eigen::VectorXd const>(data(node), ambient_dim);
}

void FieldState::set(std::size_t node, AmbientVector const& v)
{
    std::copy(v.data(), v.data() + ambient_dim,
              values.data() + node * ambient_dim);
}

GradientMatrix GradientField::at(std::size_t node) const
{
    int const m = grid.dim();
    return Eigen::Map<Eigen::MatrixXd const>(
        values.data() + node * m * ambient_dim, ambient_dim, m);
}

//---------------------------------------------------------------------------//
std::vector<double> discrete_laplacian(FieldState const& state)
{
    auto const& grid = state.grid;
    int const dim = state.ambient_dim;
    double const inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
    std::vector<double> out(state.values.size(), 0.0);
    for (std::size_t node = 0; node < grid.size(); ++node)
    {
        double const* center = state.data(node);
        double* dst = out.data() + node * dim;
        for (int axis = 0; axis < grid.dim(); ++axis)
        {
            double const* fwd = state.data(grid.neighbor(node, axis, 1));
            double const* bwd = state.data(grid.neighbor(node, axis, -1));
            for (int c = 0; c < dim; ++c)
            {
                dst[c] += (fwd[c] - 2 * center[c] + bwd[c]) * inv_h2;
            }
        }
    }
    return out;
}

GradientField discrete_gradient(FieldState const& state)
{
    auto const& grid = state.grid;
    int const dim = state.ambient_dim;
    int const m = grid.dim();
    double const inv_2h = 0.5 / grid.spacing();
    GradientField out{grid, dim, std::vector<double>(grid.size() * m * dim)};
    for (std::size_t node = 0; node < grid.size(); ++node)
    {
        for (int axis = 0; axis < m; ++axis)
        {
            double const* fwd = state.data(grid.neighbor(node, axis, 1));
            double const* bwd = state.data(grid.neighbor(node, axis, -1));
            double* dst = out.values.data() + (node * m + axis) * dim;
            for (int c = 0; c < dim; ++c)
            {
                dst[c] = (fwd[c] - bwd[c]) * inv_2h;
            }
        }
    }
    return out;
}

namespace
{
//! Cell index and fractional offset of a periodic coordinate.
void locate(double x, int n, int& cell, double& frac)
{
    double const s = (x - std::floor(x)) * n;
    double const base = std::floor(s);
    cell = static_cast<int>(base) % n;
    frac = s - base;
}

//! Multilinear interpolation as nested a + f (b - a), exact on constants.
template<class Fetch>
void lerp_cell(std::array<std::size_t, 4> const& nodes,
               int count,
               double f0,
               double f1,
               Fetch&& fetch,
               int len,
               double* out)
{
    double const* a = fetch(nodes[0]);
    double const* b = fetch(nodes[1]);
    if (count == 2)
    {
        for (int c = 0; c < len; ++c)
        {
            out[c] = a[c] + f0 * (b[c] - a[c]);
        }
        return;
    }
    double const* d = fetch(nodes[2]);
    double const* e = fetch(nodes[3]);
    for (int c = 0; c < len; ++c)
    {
        double const lower = a[c] + f0 * (b[c] - a[c]);
        double const upper = d[c] + f0 * (e[c] - d[c]);
        out[c] = lower + f1 * (upper - lower);
    }
}
}  // namespace

AmbientVector interpolate(FieldState const& state, std::span<double const> x)
{
    auto const& grid = state.grid;
    int const n = grid.nodes_per_axis();
    int const dim = state.ambient_dim;
    int c0 = 0;
    double f0 = 0;
    locate(x[0], n, c0, f0);
    std::array<std::size_t, 4> nodes{static_cast<std::size_t>(c0),
                                     static_cast<std::size_t>((c0 + 1) % n),
                                     0, 0};
    double f1 = 0;
    if (grid.dim() == 2)
    {
        int c1 = 0;
        locate(x[1], n, c1, f1);
        auto idx = [n](int i, int j) {
            return static_cast<std::size_t>(i % n + n * (j % n));
        };
        nodes = {idx(c0, c1), idx(c0 + 1, c1), idx(c0, c1 + 1),
                 idx(c0 + 1, c1 + 1)};
    }
    AmbientVector out(dim);
    lerp_cell(
        nodes, grid.dim() == 2 ? 4 : 2, f0, f1,
        [&state](std::size_t node) { return state.data(node); }, dim,
        out.data());
    return out;
}

//---------------------------------------------------------------------------//
SpaceTimeField::SpaceTimeField(Trajectory const& traj) : traj_(&traj)
{
    gradients_.reserve(traj.states.size());
    for (auto const& s : traj.states)
    {
        gradients_.push_back(discrete_gradient(s));
    }
}

SpaceTimeField::Stencil
SpaceTimeField::spatial_stencil(std::span<double const> x) const
{
    auto const& grid = traj_->grid();
    int const n = grid.nodes_per_axis();
    Stencil st;
    int c0 = 0;
    double f0 = 0;
    locate(x[0], n, c0, f0);
    if (grid.dim() == 1)
    {
        st.count = 2;
        st.nodes = {static_cast<std::size_t>(c0),
                    static_cast<std::size_t>((c0 + 1) % n), 0, 0};
        st.f0 = f0;
        return st;
    }
    int c1 = 0;
    double f1 = 0;
    locate(x[1], n, c1, f1);
    auto idx = [n](int i, int j) {
        return static_cast<std::size_t>(i % n + n * (j % n));
    };
    st.count = 4;
    st.nodes = {idx(c0, c1), idx(c0 + 1, c1), idx(c0, c1 + 1),
                idx(c0 + 1, c1 + 1)};
    st.f0 = f0;
    st.f1 = f1;
    return st;
}

void SpaceTimeField::time_bracket(double t, std::size_t& lo, double& frac) const
{
    std::size_t const last = traj_->states.size() - 1;
    if (last == 0)
    {
        lo = 0;
        frac = 0;
        return;
    }
    double const s = std::clamp(t / traj_->record_spacing(), 0.0,
                                static_cast<double>(last));
    double const base = std::floor(s);
    lo = std::min(static_cast<std::size_t>(base), last - 1);
    frac = s - static_cast<double>(lo);
}

AmbientVector SpaceTimeField::value(double t, std::span<double const> x) const
{
    Stencil const st = spatial_stencil(x);
    std::size_t lo = 0;
    double frac = 0;
    time_bracket(t, lo, frac);
    int const dim = ambient_dim();
    auto const& states = traj_->states;
    AmbientVector out(dim);
    lerp_cell(
        st.nodes, st.count, st.f0, st.f1,
        [&](std::size_t node) { return states[lo].data(node); }, dim,
        out.data());
    if (frac > 0)
    {
        AmbientVector hi(dim);
        lerp_cell(
            st.nodes, st.count, st.f0, st.f1,
            [&](std::size_t node) { return states[lo + 1].data(node); }, dim,
            hi.data());
        out += frac * (hi - out);
    }
    return out;
}

GradientMatrix
SpaceTimeField::gradient(double t, std::span<double const> x) const
{
    Stencil const st = spatial_stencil(x);
    std::size_t lo = 0;
    double frac = 0;
    time_bracket(t, lo, frac);
    int const dim = ambient_dim();
    int const m = this->dim();
    int const len = dim * m;
    auto fetch = [&](std::size_t k) {
        return [&, k](std::size_t node) {
            return gradients_[k].values.data() + node * len;
        };
    };
    // Storage is axis-major per node, the column-major layout of L x m.
    GradientMatrix out(dim, m);
    lerp_cell(st.nodes, st.count, st.f0, st.f1, fetch(lo), len, out.data());
    if (frac > 0)
    {
        GradientMatrix hi(dim, m);
        lerp_cell(st.nodes, st.count, st.f0, st.f1, fetch(lo + 1), len,
                  hi.data());
        out += frac * (hi - out);
    }
    return out;
}

}  // namespace mbsde
