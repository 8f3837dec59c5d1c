// SPDX-License-Identifier: Apache-2.0
//---------------------------------------------------------------------------//
//! \file mbsde/brownian.hpp
//! Reproducible R^m Brownian paths on a uniform time grid.
//---------------------------------------------------------------------------//
#pragma once

#include <cstdint>
#include <vector>

namespace mbsde
{
//---------------------------------------------------------------------------//
/*!
 * Discrete Brownian path with B_0 = 0.
 *
 * increment(j, i) is B^i_{t_{j+1}} - B^i_{t_j}; position(j, i) is B^i_{t_j}.
 */
struct BrownianPath
{
    std::uint64_t seed{0};
    double dt{0};
    std::size_t steps{0};
    int dim{1};
    std::vector<double> increments;
    std::vector<double> positions;

    double time(std::size_t j) const { return static_cast<double>(j) * dt; }
    double increment(std::size_t j, int axis) const
    {
        return increments[j * dim + axis];
    }
    double position(std::size_t j, int axis) const
    {
        return positions[j * dim + axis];
    }
    double final_time() const { return time(steps); }
};

//! Standard normal variate determined by (seed, j, axis) alone.
double counter_normal(std::uint64_t seed, std::uint64_t j, int axis);

//! Path on t_j = j dt, j = 0..T/dt. Throws ConfigInvalid if dt does not
//! divide T.
BrownianPath
sample_brownian(std::uint64_t seed, double dt, double final_time, int dim);

//! Sum consecutive blocks of `factor` increments: the same Brownian motion
//! observed on a grid `factor` times coarser.
BrownianPath coarsen(BrownianPath const& fine, std::size_t factor);

//! The path restricted to [0, t_j].
BrownianPath truncate(BrownianPath const& path, std::size_t j);

}  // namespace mbsde
