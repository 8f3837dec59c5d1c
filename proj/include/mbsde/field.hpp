// SPDX-License-Identifier: Apache-2.0
//---------------------------------------------------------------------------//
//! \file mbsde/field.hpp
//! Periodic grids on T^m, grid fields v(t, .) and space-time trajectories.
//---------------------------------------------------------------------------//
#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "generator.hpp"
#include "types.hpp"

namespace mbsde
{
//---------------------------------------------------------------------------//
/*!
 * Uniform periodic grid of T^m = R^m / Z^m with n nodes per axis.
 *
 * Node (i_0, i_1) has flat index i_0 + n i_1 and sits at x = (i_0, i_1) / n.
 */
class TorusGrid
{
  public:
    TorusGrid(int dim, int nodes_per_axis);

    int dim() const { return dim_; }
    int nodes_per_axis() const { return n_; }
    double spacing() const { return 1.0 / n_; }
    std::size_t size() const { return size_; }

    //! Flat index of the neighbor offset by +/-1 along an axis, wrapping.
    std::size_t neighbor(std::size_t node, int axis, int offset) const;
    std::array<int, kMaxTorusDim> multi_index(std::size_t node) const;
    std::array<double, kMaxTorusDim> coordinates(std::size_t node) const;

    bool operator==(TorusGrid const&) const = default;

  private:
    int dim_;
    int n_;
    std::size_t size_;
};

//---------------------------------------------------------------------------//
//! v(t, x_i) in R^L at every node, stored node-major.
struct FieldState
{
    double time{0};
    TorusGrid grid{1, 8};
    int ambient_dim{3};
    std::vector<double> values;

    FieldState() = default;
    FieldState(double t, TorusGrid g, int dim);

    AmbientVector at(std::size_t node) const;
    void set(std::size_t node, AmbientVector const& v);
    double const* data(std::size_t node) const
    {
        return values.data() + node * ambient_dim;
    }
};

//! Per-state spatial gradient: for each node an L x m block, stored as
//! [node][axis][component].
struct GradientField
{
    TorusGrid grid{1, 8};
    int ambient_dim{3};
    std::vector<double> values;

    GradientMatrix at(std::size_t node) const;
};

//---------------------------------------------------------------------------//
//! Per-time diagnostics emitted by the solvers.
struct MonitorRecord
{
    double time{0};
    //! int 1/2 |grad v|^2 dx
    double dirichlet_energy{0};
    //! (1/eps) int G(v) dx; zero for intrinsic runs
    double penalty_energy{0};
    //! int_0^t int |d_t v|^2 dx ds accumulated up to this time
    double time_derivative_energy{0};
    double max_dist{0};
    double max_gradient_sq{0};

    double total_energy() const { return dirichlet_energy + penalty_energy; }
};

//---------------------------------------------------------------------------//
/*!
 * States at uniformly spaced times 0 = t_0 < ... < t_K = T.
 *
 * \c epsilon is empty for the intrinsic (projected) solver. \c step is the
 * solver step; stored states are \c stride steps apart.
 */
struct Trajectory
{
    std::vector<FieldState> states;
    std::optional<double> epsilon;
    double step{0};
    int stride{1};
    std::string generator;
    std::string manifold;
    std::vector<MonitorRecord> monitors;

    double final_time() const { return states.back().time; }
    double record_spacing() const { return step * stride; }
    TorusGrid const& grid() const { return states.front().grid; }
    int ambient_dim() const { return states.front().ambient_dim; }
};

//---------------------------------------------------------------------------//
// Stencils
//---------------------------------------------------------------------------//

//! Second-order central Laplacian with periodic wrap, node-major like values.
std::vector<double> discrete_laplacian(FieldState const& state);

//! Central-difference gradient with periodic wrap.
GradientField discrete_gradient(FieldState const& state);

//! Multilinear interpolant of a state at x (any real coordinates, wrapped).
AmbientVector interpolate(FieldState const& state, std::span<double const> x);

//---------------------------------------------------------------------------//
/*!
 * Continuous reading of a trajectory: linear in t, multilinear in x.
 *
 * Gradients of every stored state are computed once at construction, so
 * the object is immutable and safe to share between workers.
 */
class SpaceTimeField
{
  public:
    explicit SpaceTimeField(Trajectory const& traj);

    Trajectory const& trajectory() const { return *traj_; }
    double final_time() const { return traj_->final_time(); }
    int dim() const { return traj_->grid().dim(); }
    int ambient_dim() const { return traj_->ambient_dim(); }

    AmbientVector value(double t, std::span<double const> x) const;
    GradientMatrix gradient(double t, std::span<double const> x) const;

  private:
    //! Cell corners (c0, c0+1) x (c1, c1+1) and fractional offsets.
    struct Stencil
    {
        std::array<std::size_t, 4> nodes{};
        double f0{0};
        double f1{0};
        int count{0};
    };
    Stencil spatial_stencil(std::span<double const> x) const;
    void time_bracket(double t, std::size_t& lo, double& frac) const;

    Trajectory const* traj_;
    std::vector<GradientField> gradients_;
};

}  // namespace mbsde
