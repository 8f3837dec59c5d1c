// SPDX-License-Identifier: Apache-2.0
//---------------------------------------------------------------------------//
//! \file trajectory_io.cpp
//---------------------------------------------------------------------------//
#include "mbsde/trajectory_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>

namespace mbsde
{
namespace
{
constexpr char kMagic[8] = {'N', 'B', 'S', 'D', 'T', 'R', 'J', '1'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little
                  || std::endian::native == std::endian::big,
              "mixed-endian platforms are not supported");

template<class T>
void put(std::ostream& os, T value)
{
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big)
    {
        std::reverse(bytes, bytes + sizeof(T));
    }
    os.write(reinterpret_cast<char const*>(bytes), sizeof(T));
}

template<class T>
T get(std::istream& is)
{
    unsigned char bytes[sizeof(T)];
    if (!is.read(reinterpret_cast<char*>(bytes), sizeof(T)))
    {
        throw Error(ErrorCode::io_failure, "truncated trajectory file");
    }
    if constexpr (std::endian::native == std::endian::big)
    {
        std::reverse(bytes, bytes + sizeof(T));
    }
    T value;
    std::memcpy(&value, bytes, sizeof(T));
    return value;
}
}  // namespace

void write_trajectory_binary(Trajectory const& traj, std::ostream& os)
{
    auto const& grid = traj.grid();
    os.write(kMagic, sizeof(kMagic));
    put<std::uint32_t>(os, kVersion);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(grid.dim()));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(grid.nodes_per_axis()));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(traj.ambient_dim()));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(traj.states.size()));
    put<double>(os, traj.epsilon.value_or(
                        std::numeric_limits<double>::quiet_NaN()));
    put<double>(os, traj.step);
    put<double>(os, traj.record_spacing());
    for (auto const& s : traj.states)
    {
        put<double>(os, s.time);
        for (double v : s.values)
        {
            put<double>(os, v);
        }
    }
    if (!os)
    {
        throw Error(ErrorCode::io_failure, "failed to write trajectory");
    }
}

void write_trajectory_binary(Trajectory const& traj,
                             std::filesystem::path const& path)
{
    std::ofstream os(path, std::ios::binary);
    if (!os)
    {
        throw Error(ErrorCode::io_failure, "cannot open " + path.string());
    }
    write_trajectory_binary(traj, os);
}

Trajectory read_trajectory_binary(std::istream& is)
{
    char magic[8];
    if (!is.read(magic, sizeof(magic))
        || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    {
        throw Error(ErrorCode::io_failure, "not a trajectory file");
    }
    if (get<std::uint32_t>(is) != kVersion)
    {
        throw Error(ErrorCode::io_failure, "unsupported trajectory version");
    }
    auto const m = static_cast<int>(get<std::uint32_t>(is));
    auto const n = static_cast<int>(get<std::uint32_t>(is));
    auto const dim = static_cast<int>(get<std::uint32_t>(is));
    auto const count = get<std::uint32_t>(is);
    double const eps = get<double>(is);
    double const step = get<double>(is);
    double const spacing = get<double>(is);

    TorusGrid const grid(m, n);
    Trajectory traj;
    if (!std::isnan(eps))
    {
        traj.epsilon = eps;
    }
    traj.step = step;
    traj.stride = step > 0 ? static_cast<int>(std::lround(spacing / step)) : 1;
    traj.states.reserve(count);
    for (std::uint32_t k = 0; k < count; ++k)
    {
        FieldState s(0, grid, dim);
        s.time = get<double>(is);
        for (double& v : s.values)
        {
            v = get<double>(is);
        }
        traj.states.push_back(std::move(s));
    }
    return traj;
}

Trajectory read_trajectory_binary(std::filesystem::path const& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
    {
        throw Error(ErrorCode::io_failure, "cannot open " + path.string());
    }
    return read_trajectory_binary(is);
}

void write_trajectory_csv(Trajectory const& traj, std::ostream& os)
{
    int const dim = traj.ambient_dim();
    os << "t,node";
    for (int c = 0; c < dim; ++c)
    {
        os << ",c" << c;
    }
    os << '\n' << std::setprecision(17);
    for (auto const& s : traj.states)
    {
        for (std::size_t node = 0; node < s.grid.size(); ++node)
        {
            os << s.time << ',' << node;
            double const* v = s.data(node);
            for (int c = 0; c < dim; ++c)
            {
                os << ',' << v[c];
            }
            os << '\n';
        }
    }
}

}  // namespace mbsde
