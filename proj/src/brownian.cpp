// SPDX-License-Identifier: Apache-2.0
//---------------------------------------------------------------------------//
//! \file brownian.cpp
//---------------------------------------------------------------------------//
#include "mbsde/brownian.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mbsde/pde.hpp"
#include "mbsde/types.hpp"

namespace mbsde
{
namespace
{
std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

//! Uniform in (0, 1], 53 random bits.
double to_unit(std::uint64_t bits)
{
    return (static_cast<double>(bits >> 11) + 1) * 0x1.0p-53;
}

void accumulate_positions(BrownianPath& path)
{
    auto const m = static_cast<std::size_t>(path.dim);
    path.positions.assign((path.steps + 1) * m, 0.0);
    for (std::size_t j = 0; j < path.steps; ++j)
    {
        for (std::size_t i = 0; i < m; ++i)
        {
            path.positions[(j + 1) * m + i]
                = path.positions[j * m + i] + path.increments[j * m + i];
        }
    }
}
}  // namespace

double counter_normal(std::uint64_t seed, std::uint64_t j, int axis)
{
    std::uint64_t const key = splitmix64(
        splitmix64(seed) ^ (j * 4 + static_cast<std::uint64_t>(axis)));
    double const u1 = to_unit(splitmix64(key));
    double const u2 = to_unit(splitmix64(key ^ 0x5851f42d4c957f2dULL));
    return std::sqrt(-2 * std::log(u1))
           * std::cos(2 * std::numbers::pi * u2);
}

BrownianPath
sample_brownian(std::uint64_t seed, double dt, double final_time, int dim)
{
    if (dim < 1 || dim > 2)
    {
        throw Error(ErrorCode::config_invalid, "Brownian dimension must be 1 or 2");
    }
    BrownianPath path;
    path.seed = seed;
    path.dt = dt;
    path.dim = dim;
    path.steps = step_count(final_time, dt);
    path.increments.resize(path.steps * static_cast<std::size_t>(dim));
    double const scale = std::sqrt(dt);
    for (std::size_t j = 0; j < path.steps; ++j)
    {
        for (int i = 0; i < dim; ++i)
        {
            path.increments[j * dim + i] = scale * counter_normal(seed, j, i);
        }
    }
    accumulate_positions(path);
    return path;
}

BrownianPath coarsen(BrownianPath const& fine, std::size_t factor)
{
    if (factor == 0 || fine.steps % factor != 0)
    {
        throw Error(ErrorCode::grid_mismatch,
                    "coarsening factor must divide the step count");
    }
    BrownianPath out;
    out.seed = fine.seed;
    out.dt = fine.dt * static_cast<double>(factor);
    out.dim = fine.dim;
    out.steps = fine.steps / factor;
    auto const m = static_cast<std::size_t>(fine.dim);
    out.increments.assign(out.steps * m, 0.0);
    for (std::size_t j = 0; j < out.steps; ++j)
    {
        for (std::size_t i = 0; i < m; ++i)
        {
            double sum = 0;
            for (std::size_t k = 0; k < factor; ++k)
            {
                sum += fine.increments[(j * factor + k) * m + i];
            }
            out.increments[j * m + i] = sum;
        }
    }
    accumulate_positions(out);
    return out;
}

BrownianPath truncate(BrownianPath const& path, std::size_t j)
{
    BrownianPath out = path;
    out.steps = std::min(j, path.steps);
    auto const m = static_cast<std::size_t>(path.dim);
    out.increments.resize(out.steps * m);
    out.positions.resize((out.steps + 1) * m);
    return out;
}

}  // namespace mbsde
